#include "rnmrf/helpers.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "rnmrf/mathutil.hpp"

namespace rnmrf {

namespace {
constexpr double kVarFloor = 1e-6;

double mvn_log_pdf(ConstVecRef x, ConstVecRef mean, const Mat& cov) {
  const int d = static_cast<int>(x.size());
  if (d == 1) return log_normal_pdf(x(0), mean(0), cov(0, 0));
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericError("covariance not positive definite");
  const Vec diff = x - mean;
  const Vec z = llt.matrixL().solve(diff);
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += std::log(llt.matrixL()(i, i));
  return -0.5 * (d * kLogTwoPi + z.squaredNorm()) - logdet;
}

// Conditional N(x_t | x_rest) of a joint Gaussian, as (mean, var).
std::pair<double, double> gaussian_conditional(ConstVecRef mean, const Mat& cov, int t,
                                               ConstVecRef values,
                                               const std::vector<int>& slots) {
  const int d = static_cast<int>(mean.size());
  int ti = -1;
  std::vector<int> rest;
  for (int k = 0; k < d; ++k) {
    if (slots[k] == t)
      ti = k;
    else
      rest.push_back(k);
  }
  if (ti < 0) throw UsageError("gaussian_conditional: slot not part of the Gaussian");
  if (rest.empty()) return {mean(ti), cov(ti, ti)};

  const int r = static_cast<int>(rest.size());
  Vec mu_r(r), x_r(r), c_tr(r);
  Mat c_rr(r, r);
  for (int a = 0; a < r; ++a) {
    mu_r(a) = mean(rest[a]);
    x_r(a) = values(slots[rest[a]]);
    c_tr(a) = cov(ti, rest[a]);
    for (int b = 0; b < r; ++b) c_rr(a, b) = cov(rest[a], rest[b]);
  }
  Eigen::LDLT<Mat> ldlt(c_rr);
  const Vec w = ldlt.solve(c_tr);
  const double m = mean(ti) + w.dot(x_r - mu_r);
  const double v = std::max(cov(ti, ti) - w.dot(c_tr), kVarFloor);
  return {m, v};
}
}  // namespace

const char* helper_family_name(HelperFamily f) {
  switch (f) {
    case HelperFamily::Uniform: return "Uniform";
    case HelperFamily::Gaussian: return "Gaussian";
    case HelperFamily::LinearGaussian: return "LG";
    case HelperFamily::Categorical: return "Categorical";
    case HelperFamily::CategoricalGaussian: return "CG";
  }
  return "?";
}

std::vector<int> HelperDistribution::discrete_slots() const {
  std::vector<int> out;
  for (int i = 0; i < arity(); ++i)
    if (domains[i].is_discrete()) out.push_back(i);
  return out;
}

std::vector<int> HelperDistribution::continuous_slots() const {
  std::vector<int> out;
  for (int i = 0; i < arity(); ++i)
    if (!domains[i].is_discrete()) out.push_back(i);
  return out;
}

int HelperDistribution::joint_discrete_count() const {
  int n = 1;
  for (int s : discrete_slots()) n *= domains[s].cardinality();
  return n;
}

int HelperDistribution::joint_discrete_index(ConstVecRef values) const {
  int idx = 0;
  for (int s : discrete_slots()) {
    const int k = static_cast<int>(std::lround(values(s)));
    if (k < 0 || k >= domains[s].cardinality())
      throw DataError("discrete value out of domain in helper evaluation");
    idx = idx * domains[s].cardinality() + k;
  }
  return idx;
}

void HelperDistribution::validate(const std::string& ctx) const {
  const auto ds = discrete_slots();
  const auto cs = continuous_slots();
  switch (family) {
    case HelperFamily::Uniform:
      for (const DomainSpec& d : domains)
        if (d.requires_helper())
          throw ModelError(ctx + ": uniform helper over unbounded continuous domain "
                                 "(requires_helper)");
      break;
    case HelperFamily::Gaussian:
      if (!ds.empty()) throw ModelError(ctx + ": Gaussian helper needs an all-continuous clique");
      if (!fitted) break;
      if (mean.size() != arity() || cov.rows() != arity() || cov.cols() != arity())
        throw ModelError(ctx + ": Gaussian helper dimension mismatch");
      break;
    case HelperFamily::LinearGaussian:
      if (arity() != 2 || !ds.empty())
        throw ModelError(ctx + ": LG helper is defined over an ordered continuous pair");
      if (fitted && lg_var <= 0) throw ModelError(ctx + ": LG variance must be positive");
      break;
    case HelperFamily::Categorical:
      if (!cs.empty()) throw ModelError(ctx + ": Categorical helper needs an all-discrete clique");
      if (!fitted) break;
      if (cat_log_prob.size() != joint_discrete_count())
        throw ModelError(ctx + ": Categorical table size mismatch");
      break;
    case HelperFamily::CategoricalGaussian:
      if (ds.empty() || cs.empty())
        throw ModelError(ctx + ": CG helper needs discrete and continuous slots");
      if (!fitted) break;
      if (cg_log_w.size() != joint_discrete_count() ||
          static_cast<int>(cg_mean.size()) != joint_discrete_count())
        throw ModelError(ctx + ": CG component count mismatch");
      break;
  }
}

HelperDistribution make_uniform_helper(std::vector<DomainSpec> domains) {
  HelperDistribution h;
  h.family = HelperFamily::Uniform;
  h.domains = std::move(domains);
  return h;
}

HelperDistribution make_gaussian_helper(std::vector<DomainSpec> domains, Vec mean, Mat cov) {
  HelperDistribution h;
  h.family = HelperFamily::Gaussian;
  h.domains = std::move(domains);
  h.mean = std::move(mean);
  h.cov = std::move(cov);
  return h;
}

HelperDistribution make_linear_gaussian_helper(std::vector<DomainSpec> domains, double slope,
                                               double intercept, double var) {
  HelperDistribution h;
  h.family = HelperFamily::LinearGaussian;
  h.domains = std::move(domains);
  h.lg_slope = slope;
  h.lg_intercept = intercept;
  h.lg_var = var;
  return h;
}

HelperDistribution make_categorical_helper(std::vector<DomainSpec> domains, Vec probs) {
  HelperDistribution h;
  h.family = HelperFamily::Categorical;
  h.domains = std::move(domains);
  h.cat_log_prob = probs.array().log();
  return h;
}

double helper_log_density(const HelperDistribution& h, ConstVecRef values) {
  if (!h.fitted) throw UsageError("helper evaluated before helper_fit");
  if (values.size() != h.arity()) throw UsageError("helper arity mismatch");
  switch (h.family) {
    case HelperFamily::Uniform: {
      double lp = 0.0;
      for (int i = 0; i < h.arity(); ++i) {
        const DomainSpec& d = h.domains[i];
        if (!d.contains(values(i))) return kNegInf;
        lp -= d.is_discrete() ? std::log(static_cast<double>(d.cardinality()))
                              : std::log(d.upper - d.lower);
      }
      return lp;
    }
    case HelperFamily::Gaussian:
      return mvn_log_pdf(values, h.mean, h.cov);
    case HelperFamily::LinearGaussian:
      return log_normal_pdf(values(1), h.lg_slope * values(0) + h.lg_intercept, h.lg_var);
    case HelperFamily::Categorical:
      return h.cat_log_prob(h.joint_discrete_index(values));
    case HelperFamily::CategoricalGaussian: {
      const int d = h.joint_discrete_index(values);
      const auto cs = h.continuous_slots();
      Vec xc(cs.size());
      for (std::size_t k = 0; k < cs.size(); ++k) xc(k) = values(cs[k]);
      return h.cg_log_w(d) + mvn_log_pdf(xc, h.cg_mean[d], h.cg_cov[d]);
    }
  }
  return kNegInf;
}

Cond1D helper_conditional_1d(const HelperDistribution& h, int slot, ConstVecRef values) {
  if (!h.fitted) throw UsageError("helper used before helper_fit");
  if (slot < 0 || slot >= h.arity()) throw UsageError("helper conditional slot out of range");
  const DomainSpec& dom = h.domains[slot];
  Cond1D c;
  switch (h.family) {
    case HelperFamily::Uniform: {
      if (dom.is_discrete()) {
        c.kind = Cond1D::Kind::Flat;
      } else {
        c.kind = Cond1D::Kind::Bounds;
        c.lo = dom.lower;
        c.hi = dom.upper;
      }
      return c;
    }
    case HelperFamily::Gaussian: {
      std::vector<int> slots(h.arity());
      for (int i = 0; i < h.arity(); ++i) slots[i] = i;
      auto [m, v] = gaussian_conditional(h.mean, h.cov, slot, values, slots);
      c.kind = Cond1D::Kind::Gaussian;
      c.mean = m;
      c.var = v;
      return c;
    }
    case HelperFamily::LinearGaussian: {
      c.kind = Cond1D::Kind::Gaussian;
      if (slot == 1) {
        c.mean = h.lg_slope * values(0) + h.lg_intercept;
        c.var = h.lg_var;
      } else if (h.lg_slope == 0.0) {
        // N(x2; b, v) carries no information about x1.
        c.kind = Cond1D::Kind::Flat;
      } else {
        c.mean = (values(1) - h.lg_intercept) / h.lg_slope;
        c.var = h.lg_var / (h.lg_slope * h.lg_slope);
      }
      return c;
    }
    case HelperFamily::Categorical: {
      const int K = dom.cardinality();
      c.kind = Cond1D::Kind::Table;
      c.log_weight.resize(K);
      Vec v = values;
      for (int k = 0; k < K; ++k) {
        v(slot) = k;
        c.log_weight(k) = h.cat_log_prob(h.joint_discrete_index(v));
      }
      return c;
    }
    case HelperFamily::CategoricalGaussian: {
      const auto cs = h.continuous_slots();
      if (dom.is_discrete()) {
        const int K = dom.cardinality();
        c.kind = Cond1D::Kind::Table;
        c.log_weight.resize(K);
        Vec v = values;
        Vec xc(cs.size());
        for (std::size_t k = 0; k < cs.size(); ++k) xc(k) = values(cs[k]);
        for (int k = 0; k < K; ++k) {
          v(slot) = k;
          const int d = h.joint_discrete_index(v);
          c.log_weight(k) = h.cg_log_w(d) + mvn_log_pdf(xc, h.cg_mean[d], h.cg_cov[d]);
        }
      } else {
        const int d = h.joint_discrete_index(values);
        std::vector<int> slots(cs.begin(), cs.end());
        auto [m, v] = gaussian_conditional(h.cg_mean[d], h.cg_cov[d], slot, values, slots);
        c.kind = Cond1D::Kind::Gaussian;
        c.mean = m;
        c.var = v;
      }
      return c;
    }
  }
  return c;
}

double Proposal1D::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Table: {
      const double u = rng.uniform01();
      double acc = 0.0;
      for (Eigen::Index k = 0; k < log_prob.size(); ++k) {
        acc += std::exp(log_prob(k));
        if (u < acc) return static_cast<double>(k);
      }
      return static_cast<double>(log_prob.size() - 1);
    }
    case Kind::Gaussian:
      return rng.normal(mean, std::sqrt(var));
    case Kind::Uniform:
      return rng.uniform(lo, hi);
    case Kind::TruncGaussian: {
      const double sd = std::sqrt(var);
      const double a = normal_cdf((lo - mean) / sd);
      const double b = normal_cdf((hi - mean) / sd);
      const double u = a + (b - a) * rng.uniform01();
      double x = mean + sd * normal_quantile(u);
      return std::min(hi, std::max(lo, x));
    }
  }
  return mean;
}

double Proposal1D::log_density(double x) const {
  switch (kind) {
    case Kind::Table: {
      const int k = static_cast<int>(std::lround(x));
      if (k < 0 || k >= log_prob.size()) return kNegInf;
      return log_prob(k);
    }
    case Kind::Gaussian:
      return log_normal_pdf(x, mean, var);
    case Kind::Uniform:
      return (x >= lo && x <= hi) ? -std::log(hi - lo) : kNegInf;
    case Kind::TruncGaussian: {
      if (x < lo || x > hi) return kNegInf;
      const double sd = std::sqrt(var);
      const double z = normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
      if (z <= 0.0) throw EstimatorError("truncated proposal has vanishing mass inside bounds");
      return log_normal_pdf(x, mean, var) - std::log(z);
    }
  }
  return kNegInf;
}

Proposal1D combine_conditionals(const DomainSpec& domain, const std::vector<Cond1D>& parts,
                                const std::string& context) {
  Proposal1D q;
  if (domain.is_discrete()) {
    const int K = domain.cardinality();
    Vec lw = Vec::Zero(K);
    for (const Cond1D& c : parts) {
      if (c.kind == Cond1D::Kind::Flat) continue;
      if (c.kind != Cond1D::Kind::Table)
        throw UsageError(context + ": non-discrete conditional for a discrete variable");
      if (c.log_weight.size() != K)
        throw UsageError(context + ": conditional table cardinality mismatch");
      lw += c.log_weight;
    }
    const double z = log_sum_exp(lw);
    if (!std::isfinite(z))
      throw EstimatorError(context + ": zero-support product of helper conditionals");
    q.kind = Proposal1D::Kind::Table;
    q.log_prob = (lw.array() - z).matrix();
    return q;
  }

  double lo = domain.lower;
  double hi = domain.upper;
  double precision = 0.0;
  double mean_times_prec = 0.0;
  for (const Cond1D& c : parts) {
    switch (c.kind) {
      case Cond1D::Kind::Flat: break;
      case Cond1D::Kind::Bounds:
        lo = std::max(lo, c.lo);
        hi = std::min(hi, c.hi);
        break;
      case Cond1D::Kind::Gaussian:
        precision += 1.0 / c.var;
        mean_times_prec += c.mean / c.var;
        break;
      case Cond1D::Kind::Table:
        throw UsageError(context + ": discrete conditional for a continuous variable");
    }
  }
  if (lo >= hi) throw EstimatorError(context + ": empty support after bound intersection");

  if (precision > 0.0) {
    q.mean = mean_times_prec / precision;
    q.var = 1.0 / precision;
    if (std::isfinite(lo) || std::isfinite(hi)) {
      q.kind = Proposal1D::Kind::TruncGaussian;
      q.lo = lo;
      q.hi = hi;
      const double sd = std::sqrt(q.var);
      if (normal_cdf((hi - q.mean) / sd) - normal_cdf((lo - q.mean) / sd) <= 0.0)
        throw EstimatorError(context + ": proposal mass vanishes inside domain bounds");
    } else {
      q.kind = Proposal1D::Kind::Gaussian;
    }
    return q;
  }
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw EstimatorError(context +
                         ": unbounded variable with no Gaussian-family helper (requires_helper)");
  q.kind = Proposal1D::Kind::Uniform;
  q.lo = lo;
  q.hi = hi;
  return q;
}

namespace {
Mat sample_covariance(ConstMatRef rows, ConstVecRef mean, bool diag_only) {
  const int d = static_cast<int>(rows.cols());
  const Eigen::Index m = rows.rows();
  Mat centered = rows.rowwise() - mean.transpose();
  Mat cov;
  if (m >= 2)
    cov = (centered.transpose() * centered) / static_cast<double>(m - 1);
  else
    cov = Mat::Zero(d, d);
  if (diag_only) cov = cov.diagonal().asDiagonal();
  for (int i = 0; i < d; ++i) cov(i, i) = std::max(cov(i, i), kVarFloor);
  return cov;
}
}  // namespace

HelperDistribution helper_fit(HelperFamily family, const std::vector<DomainSpec>& domains,
                              ConstMatRef rows) {
  const Eigen::Index m = rows.rows();
  const int arity = static_cast<int>(domains.size());
  if (rows.cols() != arity) throw UsageError("helper_fit: column count != clique arity");

  HelperDistribution h;
  h.family = family;
  h.domains = domains;
  h.fitted = true;

  switch (family) {
    case HelperFamily::Uniform:
      return make_uniform_helper(domains);

    case HelperFamily::Gaussian: {
      if (m < 2) throw DataError("helper_fit Gaussian: need at least 2 rows");
      h.mean = rows.colwise().mean().transpose();
      h.cov = sample_covariance(rows, h.mean, arity > 4);
      return h;
    }

    case HelperFamily::LinearGaussian: {
      if (arity != 2) throw ModelError("helper_fit LG: clique must be a pair");
      if (m < 2) throw DataError("helper_fit LG: need at least 2 rows");
      const Vec x = rows.col(0);
      const Vec y = rows.col(1);
      const double mx = x.mean(), my = y.mean();
      const double sxx = (x.array() - mx).square().sum();
      double slope = sxx > 0 ? (x.array() - mx).cwiseProduct(y.array() - my).sum() / sxx : 0.0;
      const double intercept = my - slope * mx;
      const double ssr = (y.array() - slope * x.array() - intercept).square().sum();
      h.lg_slope = slope;
      h.lg_intercept = intercept;
      h.lg_var = std::max(ssr / static_cast<double>(m), kVarFloor);
      return h;
    }

    case HelperFamily::Categorical: {
      const int J = h.joint_discrete_count();
      Vec counts = Vec::Ones(J);  // add-one smoothing
      for (Eigen::Index r = 0; r < m; ++r) counts(h.joint_discrete_index(rows.row(r).transpose())) += 1.0;
      h.cat_log_prob = (counts / counts.sum()).array().log();
      return h;
    }

    case HelperFamily::CategoricalGaussian: {
      if (m < 2) throw DataError("helper_fit CG: need at least 2 rows");
      const auto cs = h.continuous_slots();
      const int dc = static_cast<int>(cs.size());
      const int J = h.joint_discrete_count();
      Mat xc(m, dc);
      for (int k = 0; k < dc; ++k) xc.col(k) = rows.col(cs[k]);
      std::vector<std::vector<int>> members(J);
      for (Eigen::Index r = 0; r < m; ++r) members[h.joint_discrete_index(rows.row(r).transpose())].push_back(static_cast<int>(r));

      Vec counts = Vec::Ones(J);
      for (int j = 0; j < J; ++j) counts(j) += static_cast<double>(members[j].size());
      h.cg_log_w = (counts / counts.sum()).array().log();

      const Vec global_mean = xc.colwise().mean().transpose();
      // Pooled covariance: residuals around the per-assignment means, used
      // whenever an assignment has fewer than 2 rows of its own.
      Mat pooled = Mat::Zero(dc, dc);
      double pooled_n = 0.0;
      std::vector<Vec> means(J);
      for (int j = 0; j < J; ++j) {
        if (members[j].empty()) {
          means[j] = global_mean;
          continue;
        }
        Vec mu = Vec::Zero(dc);
        for (int r : members[j]) mu += xc.row(r).transpose();
        mu /= static_cast<double>(members[j].size());
        means[j] = mu;
        for (int r : members[j]) {
          const Vec c = xc.row(r).transpose() - mu;
          pooled += c * c.transpose();
          pooled_n += 1.0;
        }
      }
      if (pooled_n >= 2.0)
        pooled /= (pooled_n - 1.0);
      else
        pooled = Mat::Identity(dc, dc);
      if (dc > 4) pooled = pooled.diagonal().asDiagonal();
      for (int i = 0; i < dc; ++i) pooled(i, i) = std::max(pooled(i, i), kVarFloor);

      for (int j = 0; j < J; ++j) {
        h.cg_mean.push_back(means[j]);
        if (members[j].size() >= 2) {
          Mat rows_j(members[j].size(), dc);
          for (std::size_t r = 0; r < members[j].size(); ++r) rows_j.row(r) = xc.row(members[j][r]);
          h.cg_cov.push_back(sample_covariance(rows_j, means[j], dc > 4));
        } else {
          h.cg_cov.push_back(pooled);
        }
      }
      return h;
    }
  }
  return h;
}

}  // namespace rnmrf
