#include "rnmrf/estimators.hpp"

#include <cmath>
#include <string>

#include "rnmrf/mathutil.hpp"

namespace rnmrf {

namespace {

std::string variable_context(const GroundGraph& g, int i) {
  std::string s = "variable '" + g.variables[i].name + "' (factors";
  for (int fi : g.blanket[i]) s += " " + std::to_string(fi);
  s += ")";
  return s;
}

// Normalizes exp(log_w); throws when the whole vector is -inf or any entry
// is NaN.
Vec normalize_log_weights(const GroundGraph& g, int i, ConstVecRef log_w) {
  for (Eigen::Index n = 0; n < log_w.size(); ++n)
    if (std::isnan(log_w[n]))
      throw NumericError("NaN potential value while weighting " + variable_context(g, i));
  const double z = log_sum_exp(log_w);
  if (z == kNegInf)
    throw EstimatorError("all importance weights vanished for " + variable_context(g, i));
  return (log_w.array() - z).exp().matrix();
}

}  // namespace

Expectation importance_expectation(const GroundGraph& g, int i, ConstVecRef frame, int N,
                                   Rng& rng, bool force_sampling) {
  const DomainSpec& dom = g.variables[i].domain;
  Expectation e;

  if (dom.is_discrete() && dom.cardinality() <= kEnumerationThreshold && !force_sampling) {
    e.enumerated = true;
    e.candidates = Vec::LinSpaced(dom.cardinality(), 0.0, dom.cardinality() - 1.0);
    e.weights = normalize_log_weights(g, i, log_bi(g, i, frame, e.candidates));
    return e;
  }

  if (N < 2) throw UsageError("importance sampling needs N >= 2");
  const Proposal1D q = build_proposal(g, i, frame);
  e.candidates.resize(N);
  e.log_q.resize(N);
  for (int n = 0; n < N; ++n) {
    e.candidates[n] = q.sample(rng);
    e.log_q[n] = q.log_density(e.candidates[n]);
  }
  // b_i / Q reduces to the potential product: helper conditionals cancel
  // against Q and the leftover helper marginals do not depend on x_i.
  e.weights = normalize_log_weights(g, i, log_bi_potentials(g, i, frame, e.candidates));
  return e;
}

void shifted_riemann_grid(double lo, double hi, int N, double eps, Vec& points, Vec& spacings) {
  if (N < 2) throw UsageError("riemann grid needs N >= 2");
  const double h = (hi - lo) / static_cast<double>(N - 1);
  spacings.resize(N);
  spacings.setConstant(h);
  spacings[0] = eps * h;
  spacings[N - 1] = (1.0 - eps) * h;
  points.resize(N);
  points[0] = lo + 0.5 * spacings[0];
  for (int n = 1; n < N; ++n)
    points[n] = points[n - 1] + 0.5 * (spacings[n - 1] + spacings[n]);
}

Expectation riemann_expectation(const GroundGraph& g, int i, ConstVecRef frame, int N, Rng& rng) {
  const DomainSpec& dom = g.variables[i].domain;
  if (dom.is_discrete() || !dom.is_bounded())
    throw UsageError("riemann estimator requires a bounded continuous domain; use the "
                     "importance estimator for " + variable_context(g, i));
  Expectation e;
  const double eps = rng.uniform01();
  shifted_riemann_grid(dom.lower, dom.upper, N, eps, e.candidates, e.spacings);
  const Vec log_b = log_bi(g, i, frame, e.candidates);
  Vec log_w(N);
  for (int n = 0; n < N; ++n)
    log_w[n] = (e.spacings[n] > 0.0 ? std::log(e.spacings[n]) + log_b[n] : kNegInf);
  e.weights = normalize_log_weights(g, i, log_w);
  return e;
}

}  // namespace rnmrf
