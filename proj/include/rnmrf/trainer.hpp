#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnmrf/estimators.hpp"
#include "rnmrf/ground.hpp"
#include "rnmrf/mlp.hpp"
#include "rnmrf/relational.hpp"
#include "rnmrf/types.hpp"

namespace rnmrf {

struct TrainConfig {
  int iterations = 5000;
  int vars_per_iter = 100;  // k, size of the variable subset per iteration
  int samples = 20;         // N, samples per expectation
  int batch_frames = 1;
  enum class Opt { Sgd, Adam };
  Opt opt = Opt::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  enum class Estimator { Importance, Riemann };
  Estimator estimator = Estimator::Importance;
  std::uint64_t seed = 1;
  // Conditional mode: variables of these predicates are never conditioned on
  // their blankets (their values are always read from the data).
  std::vector<std::string> evidence_predicates;
  int trace_every = 100;  // 0 disables the trace

  void validate() const;
};

struct TraceRow {
  int iteration = 0;
  double log_pl = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<TraceRow> trace;
  int iterations_run = 0;
};

// Parameter-shaped gradient buffers, one per potential. Values produced by
// pmle_gradient are already normalized by the (frame, variable) pair count.
struct GradientAccumulator {
  std::vector<MlpGrad> neural;
  Vec mln;
  long pairs = 0;

  static GradientAccumulator zeros_like(const RelationalModel& model);
  void set_zero();
  bool all_finite() const;
};

// Pooled evaluation rows, one block per parfactor. Every potential of the
// parfactor consumes the same block, so each distinct net runs exactly one
// forward pass per batch.
struct AggregatedBatch {
  struct RowTag {
    int frame = 0;
    int var = 0;
    int factor = 0;
    int sample = -1;  // -1 marks the data row, n >= 0 the n-th sample row
  };
  struct Block {
    Mat rows;  // R x clique arity
    Vec coeff;  // +1 for data rows, -weight(n) for sample rows
    std::vector<RowTag> tags;
  };
  std::vector<Block> blocks;  // indexed by parfactor
  long pairs = 0;

  long rows_total() const;
};

// Variables eligible as the conditioned variable i: free, with a non-empty
// blanket, not owned by an evidence predicate.
std::vector<int> trainable_variables(const GroundGraph& g, const std::vector<int>& vars,
                                     const std::vector<std::string>& evidence_predicates);

// One data row plus N weighted sample rows per (frame m, variable i, factor
// c incident to i). `stream` seeds a fresh substream per (m, i) so repeated
// builds share randomness (common random numbers).
AggregatedBatch build_aggregated_batch(const GroundGraph& g, const std::vector<Vec>& frames,
                                       const std::vector<int>& frame_idx,
                                       const std::vector<int>& vars, int N,
                                       TrainConfig::Estimator est, std::uint64_t stream);

// Gradient of the estimated log-pseudolikelihood, ascent direction.
GradientAccumulator pmle_gradient(const GroundGraph& g, const AggregatedBatch& batch);
// Row-at-a-time reference implementation; used to pin the aggregated path.
GradientAccumulator pmle_gradient_naive(const GroundGraph& g, const AggregatedBatch& batch);

struct PlEstimate {
  double sum = 0.0;  // sum over (m, i) of [data term - log Zhat_i]
  long pairs = 0;
  double value() const { return pairs > 0 ? sum / static_cast<double>(pairs) : 0.0; }
};

// Estimated log-pseudolikelihood with the same substreams as
// build_aggregated_batch: with frozen helpers, pmle_gradient is the exact
// gradient of this function, which is what the finite-difference check
// relies on.
PlEstimate estimated_log_pl(const GroundGraph& g, const std::vector<Vec>& frames,
                            const std::vector<int>& frame_idx, const std::vector<int>& vars,
                            int N, TrainConfig::Estimator est, std::uint64_t stream);

// Per-frame total over all trainable variables (not averaged).
double log_pseudolikelihood(const GroundGraph& g, ConstVecRef frame, int N,
                            TrainConfig::Estimator est = TrainConfig::Estimator::Importance,
                            std::uint64_t seed = 0);

struct OptimizerState {
  std::vector<MlpGrad> m, v;
  Vec mln_m, mln_v;
  long t = 0;

  static OptimizerState zeros_like(const RelationalModel& model);
};

void optimizer_step(RelationalModel& model, const GradientAccumulator& grad,
                    OptimizerState& state, const TrainConfig& cfg);

// Moment-matches every helper whose parameters were not fixed in the model
// file, pooling clique rows of the parfactor's ground factors across frames.
void fit_helpers(RelationalModel& model, const GroundGraph& g, const std::vector<Vec>& frames);

TrainResult train(RelationalModel& model, GroundGraph& graph, const std::vector<Vec>& frames,
                  const TrainConfig& cfg);

struct GradCheckRow {
  std::string param;
  double analytic = 0.0;
  double fd = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  int params_checked = 0;
  double max_rel_err = 0.0;
  GradCheckRow worst;
  bool ok(double tol) const { return params_checked > 0 && max_rel_err <= tol; }
};

// Central finite differences of estimated_log_pl against pmle_gradient,
// sharing one sample stream across all evaluations.
GradCheckReport gradient_check(RelationalModel& model, const GroundGraph& g,
                               const std::vector<Vec>& frames, const TrainConfig& cfg,
                               double fd_eps = 1e-5);

}  // namespace rnmrf
