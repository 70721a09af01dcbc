#pragma once

#include <vector>

#include "rnmrf/rng.hpp"
#include "rnmrf/types.hpp"

namespace rnmrf {

// Fully connected net with rectifier hidden activations and a single linear
// output unit. Weights are stored per layer as (out x in) matrices.
struct Mlp {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  // Bumped whenever parameters change; forward caches record the version they
  // were computed against so a backward pass on stale activations is rejected.
  std::uint64_t version = 0;

  // dims = [input, hidden..., 1], all-zero parameters.
  static Mlp make(const std::vector<int>& dims);

  int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
  int layer_count() const { return static_cast<int>(weights.size()); }
  int param_count() const;

  // Uniform(-r, r) with r = sqrt(6 / (fan_in + fan_out)), biases zero.
  void init_xavier(Rng& rng);
};

// Forward activations kept for the backward pass. `pre` holds hidden-layer
// pre-activations; `act` the rectified outputs.
struct MlpCache {
  Mat input;
  std::vector<Mat> pre;
  std::vector<Mat> act;
  Vec out;
  std::uint64_t version = 0;
};

struct MlpGrad {
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  static MlpGrad zeros_like(const Mlp& mlp);
  void set_zero();
  void add_scaled(const MlpGrad& other, double scale);
  double max_abs() const;
  bool all_finite() const;
};

// Batched forward: one row of X per evaluation point. Returns the scalar
// outputs; fills `cache` when non-null.
Vec mlp_forward(const Mlp& mlp, ConstMatRef X, MlpCache* cache = nullptr);
double mlp_forward1(const Mlp& mlp, ConstVecRef x);

// Accumulates into `grad` the gradient of sum_n upstream[n] * out[n] with
// respect to every weight and bias. Rectifier gradient is zero at
// non-positive pre-activations.
void mlp_backward(const Mlp& mlp, const MlpCache& cache, ConstVecRef upstream, MlpGrad& grad);

}  // namespace rnmrf
