#pragma once

#include <string>
#include <vector>

#include "rnmrf/domain.hpp"
#include "rnmrf/rng.hpp"
#include "rnmrf/types.hpp"

namespace rnmrf {

enum class HelperFamily { Uniform, Gaussian, LinearGaussian, Categorical, CategoricalGaussian };

const char* helper_family_name(HelperFamily f);

// Normalizable base density over a clique. Discrete slots carry label
// indices; Categorical and CategoricalGaussian tables are row-major over the
// discrete slots in clique order (first slot slowest).
struct HelperDistribution {
  HelperFamily family = HelperFamily::Uniform;
  std::vector<DomainSpec> domains;
  bool fitted = true;

  // Gaussian over the (all-continuous) clique.
  Vec mean;
  Mat cov;

  // LinearGaussian over an ordered pair: x2 ~ N(slope * x1 + intercept, var).
  double lg_slope = 1.0;
  double lg_intercept = 0.0;
  double lg_var = 1.0;

  // Categorical: log probability per joint discrete assignment.
  Vec cat_log_prob;

  // CategoricalGaussian: per joint discrete assignment d, a mixture weight
  // w_d and a Gaussian over the continuous slots.
  Vec cg_log_w;
  std::vector<Vec> cg_mean;
  std::vector<Mat> cg_cov;

  int arity() const { return static_cast<int>(domains.size()); }
  std::vector<int> discrete_slots() const;
  std::vector<int> continuous_slots() const;
  int joint_discrete_count() const;
  int joint_discrete_index(ConstVecRef values) const;

  void validate(const std::string& context) const;
};

HelperDistribution make_uniform_helper(std::vector<DomainSpec> domains);
HelperDistribution make_gaussian_helper(std::vector<DomainSpec> domains, Vec mean, Mat cov);
HelperDistribution make_linear_gaussian_helper(std::vector<DomainSpec> domains, double slope,
                                               double intercept, double var);
HelperDistribution make_categorical_helper(std::vector<DomainSpec> domains, Vec probs);

// Exact log density; values outside a bounded support give -inf.
double helper_log_density(const HelperDistribution& helper, ConstVecRef values);

// One helper restricted to a single slot, everything else held at `values`.
// This is the closed-form building block for proposal construction.
struct Cond1D {
  enum class Kind { Flat, Gaussian, Bounds, Table };
  Kind kind = Kind::Flat;
  double mean = 0.0, var = 1.0;
  double lo = kNegInf, hi = kPosInf;
  Vec log_weight;  // Table, unnormalized
};

Cond1D helper_conditional_1d(const HelperDistribution& helper, int slot, ConstVecRef values);

// Normalized 1-D distribution used as sampling proposal Q(x_i).
struct Proposal1D {
  enum class Kind { Table, Gaussian, Uniform, TruncGaussian };
  Kind kind = Kind::Uniform;
  Vec log_prob;  // Table, normalized
  double mean = 0.0, var = 1.0;
  double lo = 0.0, hi = 1.0;

  double sample(Rng& rng) const;
  double log_density(double x) const;
};

// Product of per-factor helper conditionals: Gaussian parts combine by
// precision addition, uniform parts tighten bounds, discrete tables multiply
// pointwise. `context` names the variable for error reporting.
Proposal1D combine_conditionals(const DomainSpec& domain, const std::vector<Cond1D>& parts,
                                const std::string& context);

// Closed-form moment-matching fit. `rows` is one clique tuple per data row.
HelperDistribution helper_fit(HelperFamily family, const std::vector<DomainSpec>& domains,
                              ConstMatRef rows);

}  // namespace rnmrf
