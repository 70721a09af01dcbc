#include "rnmrf/inference.hpp"

#include <cmath>

#include "rnmrf/mathutil.hpp"

namespace rnmrf {

namespace {

int categorical_draw(ConstVecRef probs, Rng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    acc += probs[j];
    if (u < acc) return static_cast<int>(j);
  }
  return static_cast<int>(probs.size() - 1);
}

Vec tempered_probs(const GroundGraph& g, int i, ConstVecRef log_vals, double temperature) {
  Vec lv = log_vals / temperature;
  const double z = log_sum_exp(lv);
  if (z == kNegInf)
    throw EstimatorError("conditional for variable '" + g.variables[i].name +
                         "' has no support");
  return (lv.array() - z).exp().matrix();
}

const DomainSpec& var_domain_checked(const GroundGraph& g, int i) {
  if (i < 0 || i >= static_cast<int>(g.variables.size()))
    throw UsageError("variable index " + std::to_string(i) + " out of range");
  return g.variables[i].domain;
}

double sample_conditional_tempered(const GroundGraph& g, int i, ConstVecRef state, int N,
                                   Rng& rng, double temperature) {
  const DomainSpec& dom = var_domain_checked(g, i);
  if (dom.is_discrete()) {
    const Vec cands = Vec::LinSpaced(dom.cardinality(), 0.0, dom.cardinality() - 1.0);
    const Vec probs = tempered_probs(g, i, log_bi(g, i, state, cands), temperature);
    return cands[categorical_draw(probs, rng)];
  }
  const Proposal1D q = build_proposal(g, i, state);
  Vec cands(N);
  for (int n = 0; n < N; ++n) cands[n] = q.sample(rng);
  const Vec probs = tempered_probs(g, i, log_bi_potentials(g, i, state, cands), temperature);
  return cands[categorical_draw(probs, rng)];
}

}  // namespace

Vec discrete_conditional(const GroundGraph& g, int i, ConstVecRef state) {
  const DomainSpec& dom = var_domain_checked(g, i);
  if (!dom.is_discrete())
    throw UsageError("discrete_conditional on continuous variable '" + g.variables[i].name + "'");
  const Vec cands = Vec::LinSpaced(dom.cardinality(), 0.0, dom.cardinality() - 1.0);
  return tempered_probs(g, i, log_bi(g, i, state, cands), 1.0);
}

double sample_conditional(const GroundGraph& g, int i, ConstVecRef state, int N, Rng& rng) {
  return sample_conditional_tempered(g, i, state, N, rng, 1.0);
}

std::vector<Vec> gibbs_chain(const GroundGraph& g, Vec state, const GibbsConfig& cfg, Rng& rng) {
  if (cfg.sweeps < 1) throw UsageError("gibbs needs sweeps >= 1");
  if (cfg.thin < 1) throw UsageError("gibbs thinning must be >= 1");
  if (state.size() != static_cast<Eigen::Index>(g.variables.size()))
    throw UsageError("gibbs state does not cover the variable set");

  for (std::size_t i = 0; i < g.variables.size(); ++i)
    if (g.variables[i].has_evidence) state[i] = g.variables[i].evidence;

  const std::vector<int> free_vars = g.free_variables();
  std::vector<Vec> out;
  for (int s = 0; s < cfg.sweeps; ++s) {
    for (int i : free_vars) {
      if (g.blanket[i].empty()) continue;
      state[i] = sample_conditional(g, i, state, cfg.proposal_samples, rng);
    }
    if (s >= cfg.burn_in && (s - cfg.burn_in) % cfg.thin == 0) out.push_back(state);
  }
  return out;
}

void MapConfig::validate() const {
  if (sweeps < 1) throw UsageError("map needs sweeps >= 1");
  if (candidates < 2) throw UsageError("map needs candidates >= 2");
  if (anneal && (anneal_sweeps < 0 || !(anneal_t0 >= 1.0)))
    throw UsageError("anneal schedule needs t0 >= 1 and non-negative sweeps");
}

Vec default_init(const GroundGraph& g, Rng& rng) {
  Vec state(g.variables.size());
  for (std::size_t i = 0; i < g.variables.size(); ++i) {
    const GroundVariable& v = g.variables[i];
    if (v.has_evidence) {
      state[i] = v.evidence;
    } else if (v.domain.is_discrete()) {
      state[i] = static_cast<double>(rng.uniform_index(v.domain.cardinality()));
    } else if (v.domain.is_bounded()) {
      state[i] = rng.uniform(v.domain.lower, v.domain.upper);
    } else {
      state[i] = 0.0;
    }
  }
  return state;
}

MapResult map_estimate(const GroundGraph& g, const Vec& init, const MapConfig& cfg, Rng& rng) {
  cfg.validate();
  if (init.size() != static_cast<Eigen::Index>(g.variables.size()))
    throw UsageError("map init does not cover the variable set");

  Vec state = init;
  for (std::size_t i = 0; i < g.variables.size(); ++i)
    if (g.variables[i].has_evidence) state[i] = g.variables[i].evidence;

  const std::vector<int> free_vars = g.free_variables();

  if (cfg.anneal) {
    for (int s = 0; s < cfg.anneal_sweeps; ++s) {
      const double frac = cfg.anneal_sweeps > 1
                              ? static_cast<double>(s) / (cfg.anneal_sweeps - 1)
                              : 1.0;
      const double temperature = cfg.anneal_t0 + (1.0 - cfg.anneal_t0) * frac;
      for (int i : free_vars) {
        if (g.blanket[i].empty()) continue;
        state[i] = sample_conditional_tempered(g, i, state, cfg.candidates, rng, temperature);
      }
    }
  }

  MapResult res;
  for (int s = 0; s < cfg.sweeps; ++s) {
    bool moved = false;
    for (int i : free_vars) {
      if (g.blanket[i].empty()) continue;
      const DomainSpec& dom = g.variables[i].domain;
      Vec cands;
      if (dom.is_discrete()) {
        cands.resize(dom.cardinality() + 1);
        cands[0] = state[i];
        for (int j = 0; j < dom.cardinality(); ++j) cands[j + 1] = static_cast<double>(j);
      } else {
        const Proposal1D q = build_proposal(g, i, state);
        cands.resize(cfg.candidates + 1);
        cands[0] = state[i];
        for (int n = 0; n < cfg.candidates; ++n) cands[n + 1] = q.sample(rng);
      }
      const Vec lv = log_bi(g, i, state, cands);
      // Slot 0 holds the incumbent; strict improvement required to move.
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < lv.size(); ++j)
        if (lv[j] > lv[best]) best = j;
      if (best != 0 && cands[best] != state[i]) {
        state[i] = cands[best];
        moved = true;
      }
    }
    res.sweep_scores.push_back(joint_log_score(g, state));
    if (!moved) break;
  }
  res.assignment = std::move(state);
  res.log_score = res.sweep_scores.back();
  return res;
}

}  // namespace rnmrf
