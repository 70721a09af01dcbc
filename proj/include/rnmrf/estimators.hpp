#pragma once

#include <vector>

#include "rnmrf/factors.hpp"
#include "rnmrf/ground.hpp"
#include "rnmrf/rng.hpp"
#include "rnmrf/types.hpp"

namespace rnmrf {

// Candidate values of one variable plus self-normalized weights: the
// discrete measure that replaces E_{p(x_i|MB_i)} in the gradient.
struct Expectation {
  Vec candidates;
  Vec weights;        // non-negative, sums to 1
  bool enumerated = false;
  Vec log_q;          // importance path: log proposal density per candidate
  Vec spacings;       // riemann path: cell widths
};

// Self-normalized importance sampling. Discrete domains with at most
// `enumeration_threshold` values are enumerated exactly (weights are the
// normalized full b_i) unless force_sampling is set.
constexpr int kEnumerationThreshold = 64;

Expectation importance_expectation(const GroundGraph& g, int i, ConstVecRef frame, int N,
                                   Rng& rng, bool force_sampling = false);

// Midpoint rule on a randomly shifted partition of the bounded domain of i.
// The end cells have widths eps*h and (1-eps)*h, interior cells h.
Expectation riemann_expectation(const GroundGraph& g, int i, ConstVecRef frame, int N, Rng& rng);

// Grid construction used by riemann_expectation, exposed for tests.
void shifted_riemann_grid(double lo, double hi, int N, double eps, Vec& points, Vec& spacings);

}  // namespace rnmrf
