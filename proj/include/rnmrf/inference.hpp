#pragma once

#include <vector>

#include "rnmrf/factors.hpp"
#include "rnmrf/ground.hpp"
#include "rnmrf/rng.hpp"
#include "rnmrf/types.hpp"

namespace rnmrf {

// Normalized p(x_i = v | MB_i) over the labels of a discrete variable,
// computed by exact enumeration of b_i.
Vec discrete_conditional(const GroundGraph& g, int i, ConstVecRef state);

// Discrete: exact categorical draw from the normalized b_i. Continuous:
// sampling-importance-resampling with N proposal draws weighted by the
// potential product.
double sample_conditional(const GroundGraph& g, int i, ConstVecRef state, int N, Rng& rng);

struct GibbsConfig {
  int sweeps = 1000;
  int burn_in = 0;
  int thin = 1;
  int proposal_samples = 20;
};

// Systematic-scan Gibbs over the free variables; evidence values in `state`
// never move. Returns the states after each kept sweep.
std::vector<Vec> gibbs_chain(const GroundGraph& g, Vec state, const GibbsConfig& cfg, Rng& rng);

struct MapConfig {
  int sweeps = 10;
  int candidates = 20;                 // proposal draws per continuous variable
  bool anneal = false;
  double anneal_t0 = 5.0;
  int anneal_sweeps = 0;               // tempered-Gibbs warm start before ICM

  void validate() const;
};

struct MapResult {
  Vec assignment;
  double log_score = 0.0;
  std::vector<double> sweep_scores;  // joint log-score after each ICM sweep
};

// Candidate-set ICM: per variable, argmax of b_i over the incumbent, fresh
// proposal draws and (discrete) every label. Incumbent wins exact ties, so
// with anneal off the joint score never decreases.
MapResult map_estimate(const GroundGraph& g, const Vec& init, const MapConfig& cfg, Rng& rng);

// Starting assignment: evidence values where present, uniform draws on
// bounded domains, proposal-free fallback 0 for unbounded ones.
Vec default_init(const GroundGraph& g, Rng& rng);

}  // namespace rnmrf
