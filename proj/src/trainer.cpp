#include "rnmrf/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "rnmrf/factors.hpp"
#include "rnmrf/mathutil.hpp"
#include "rnmrf/potentials.hpp"

namespace rnmrf {

namespace {

// Substream tags keep the per-purpose random streams disjoint.
constexpr std::uint64_t kStreamIter = 0x69746572;
constexpr std::uint64_t kStreamBatch = 0x62617463;
constexpr std::uint64_t kStreamTrace = 0x74726163;

Expectation compute_expectation(const GroundGraph& g, int i, ConstVecRef frame, int N,
                                TrainConfig::Estimator est, Rng& rng) {
  const DomainSpec& dom = g.variables[i].domain;
  if (est == TrainConfig::Estimator::Riemann && !dom.is_discrete())
    return riemann_expectation(g, i, frame, N, rng);
  return importance_expectation(g, i, frame, N, rng);
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 0) throw UsageError("iterations must be >= 0");
  if (vars_per_iter < 1) throw UsageError("vars-per-iter must be >= 1");
  if (samples < 2) throw UsageError("samples must be >= 2");
  if (batch_frames < 1) throw UsageError("batch size must be >= 1");
  if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw UsageError("adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw UsageError("adam epsilon must be positive");
  if (trace_every < 0) throw UsageError("trace interval must be >= 0");
}

GradientAccumulator GradientAccumulator::zeros_like(const RelationalModel& model) {
  GradientAccumulator acc;
  acc.neural.reserve(model.neural.size());
  for (const NeuralPotential& np : model.neural) acc.neural.push_back(MlpGrad::zeros_like(np.mlp));
  acc.mln = Vec::Zero(model.mlns.size());
  return acc;
}

void GradientAccumulator::set_zero() {
  for (MlpGrad& gr : neural) gr.set_zero();
  mln.setZero();
  pairs = 0;
}

bool GradientAccumulator::all_finite() const {
  for (const MlpGrad& gr : neural)
    if (!gr.all_finite()) return false;
  return mln.allFinite();
}

long AggregatedBatch::rows_total() const {
  long total = 0;
  for (const Block& b : blocks) total += b.rows.rows();
  return total;
}

std::vector<int> trainable_variables(const GroundGraph& g, const std::vector<int>& vars,
                                     const std::vector<std::string>& evidence_predicates) {
  std::vector<int> out;
  out.reserve(vars.size());
  for (int i : vars) {
    const GroundVariable& v = g.variables[i];
    if (v.has_evidence || g.blanket[i].empty()) continue;
    const std::string& pred = g.model->predicates[v.predicate].name;
    if (std::find(evidence_predicates.begin(), evidence_predicates.end(), pred) !=
        evidence_predicates.end())
      continue;
    out.push_back(i);
  }
  return out;
}

AggregatedBatch build_aggregated_batch(const GroundGraph& g, const std::vector<Vec>& frames,
                                       const std::vector<int>& frame_idx,
                                       const std::vector<int>& vars, int N,
                                       TrainConfig::Estimator est, std::uint64_t stream) {
  struct Pending {
    std::vector<Vec> rows;
    std::vector<double> coeff;
    std::vector<AggregatedBatch::RowTag> tags;
  };
  std::vector<Pending> pending(g.model->parfactors.size());

  AggregatedBatch batch;
  for (int m : frame_idx) {
    if (m < 0 || m >= static_cast<int>(frames.size()))
      throw UsageError("frame index out of range");
    const Vec& frame = frames[m];
    for (int i : vars) {
      Rng rng(substream_seed(stream, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(i)));
      const Expectation e = compute_expectation(g, i, frame, N, est, rng);
      for (int fi : g.blanket[i]) {
        const GroundFactor& f = g.factors[fi];
        Pending& p = pending[f.parfactor];
        const Vec data_row = clique_values(g, f, frame);
        int slot = -1;
        for (std::size_t j = 0; j < f.vars.size(); ++j)
          if (f.vars[j] == i) slot = static_cast<int>(j);
        p.rows.push_back(data_row);
        p.coeff.push_back(1.0);
        p.tags.push_back({m, i, fi, -1});
        for (Eigen::Index n = 0; n < e.candidates.size(); ++n) {
          Vec row = data_row;
          row[slot] = e.candidates[n];
          p.rows.push_back(std::move(row));
          p.coeff.push_back(-e.weights[n]);
          p.tags.push_back({m, i, fi, static_cast<int>(n)});
        }
      }
      batch.pairs += 1;
    }
  }

  batch.blocks.resize(pending.size());
  for (std::size_t k = 0; k < pending.size(); ++k) {
    Pending& p = pending[k];
    AggregatedBatch::Block& b = batch.blocks[k];
    const int arity = g.model->parfactors[k].arity();
    b.rows.resize(static_cast<Eigen::Index>(p.rows.size()), arity);
    b.coeff.resize(static_cast<Eigen::Index>(p.rows.size()));
    for (std::size_t r = 0; r < p.rows.size(); ++r) {
      b.rows.row(static_cast<Eigen::Index>(r)) = p.rows[r].transpose();
      b.coeff[static_cast<Eigen::Index>(r)] = p.coeff[r];
    }
    b.tags = std::move(p.tags);
  }
  return batch;
}

namespace {

void check_gradient_finite(const GradientAccumulator& acc, const RelationalModel& model) {
  for (std::size_t p = 0; p < acc.neural.size(); ++p)
    if (!acc.neural[p].all_finite())
      throw NumericError("non-finite gradient for neural potential " + std::to_string(p));
  for (Eigen::Index j = 0; j < acc.mln.size(); ++j)
    if (!std::isfinite(acc.mln[j]))
      throw NumericError("non-finite gradient for MLN potential '" + model.mlns[j].text + "'");
}

}  // namespace

GradientAccumulator pmle_gradient(const GroundGraph& g, const AggregatedBatch& batch) {
  const RelationalModel& model = *g.model;
  GradientAccumulator acc = GradientAccumulator::zeros_like(model);
  acc.pairs = batch.pairs;
  if (batch.pairs == 0) return acc;
  const double scale = 1.0 / static_cast<double>(batch.pairs);

  for (std::size_t k = 0; k < batch.blocks.size(); ++k) {
    const AggregatedBatch::Block& b = batch.blocks[k];
    if (b.rows.rows() == 0) continue;
    const Parfactor& pf = model.parfactors[k];
    const Vec upstream = b.coeff * scale;
    for (int ni : pf.neural) {
      const NeuralEval ev = neural_log_potential(model.neural[ni], b.rows);
      neural_backward(model.neural[ni], ev, upstream, acc.neural[ni]);
    }
    for (int mi : pf.mlns) {
      const MlnPotential& rule = model.mlns[mi];
      double s = 0.0;
      for (Eigen::Index r = 0; r < b.rows.rows(); ++r)
        s += upstream[r] * mln_weight_gradient(rule, b.rows.row(r).transpose());
      acc.mln[mi] += s;
    }
  }
  check_gradient_finite(acc, model);
  return acc;
}

GradientAccumulator pmle_gradient_naive(const GroundGraph& g, const AggregatedBatch& batch) {
  const RelationalModel& model = *g.model;
  GradientAccumulator acc = GradientAccumulator::zeros_like(model);
  acc.pairs = batch.pairs;
  if (batch.pairs == 0) return acc;
  const double scale = 1.0 / static_cast<double>(batch.pairs);

  for (std::size_t k = 0; k < batch.blocks.size(); ++k) {
    const AggregatedBatch::Block& b = batch.blocks[k];
    const Parfactor& pf = model.parfactors[k];
    for (Eigen::Index r = 0; r < b.rows.rows(); ++r) {
      const Mat one = b.rows.row(r);
      Vec upstream(1);
      upstream[0] = b.coeff[r] * scale;
      for (int ni : pf.neural) {
        const NeuralEval ev = neural_log_potential(model.neural[ni], one);
        neural_backward(model.neural[ni], ev, upstream, acc.neural[ni]);
      }
      for (int mi : pf.mlns)
        acc.mln[mi] += upstream[0] * mln_weight_gradient(model.mlns[mi], b.rows.row(r).transpose());
    }
  }
  check_gradient_finite(acc, model);
  return acc;
}

PlEstimate estimated_log_pl(const GroundGraph& g, const std::vector<Vec>& frames,
                            const std::vector<int>& frame_idx, const std::vector<int>& vars,
                            int N, TrainConfig::Estimator est, std::uint64_t stream) {
  PlEstimate pl;
  for (int m : frame_idx) {
    const Vec& frame = frames[m];
    for (int i : vars) {
      Rng rng(substream_seed(stream, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(i)));
      const Expectation e = compute_expectation(g, i, frame, N, est, rng);

      double data_term = 0.0;
      for (int fi : g.blanket[i])
        data_term += factor_log_value(g, fi, clique_values(g, g.factors[fi], frame));

      const Vec log_b = log_bi(g, i, frame, e.candidates);
      double log_z;
      if (e.enumerated) {
        log_z = log_sum_exp(log_b);
      } else if (e.spacings.size() > 0) {
        Vec terms(log_b.size());
        for (Eigen::Index n = 0; n < log_b.size(); ++n)
          terms[n] = e.spacings[n] > 0.0 ? std::log(e.spacings[n]) + log_b[n] : kNegInf;
        log_z = log_sum_exp(terms);
      } else {
        log_z = log_sum_exp((log_b - e.log_q).eval()) - std::log(static_cast<double>(log_b.size()));
      }
      if (!std::isfinite(log_z))
        throw NumericError("pseudo-likelihood normalizer degenerate for variable '" +
                           g.variables[i].name + "'");
      pl.sum += data_term - log_z;
      pl.pairs += 1;
    }
  }
  return pl;
}

double log_pseudolikelihood(const GroundGraph& g, ConstVecRef frame, int N,
                            TrainConfig::Estimator est, std::uint64_t seed) {
  std::vector<int> all(g.variables.size());
  std::iota(all.begin(), all.end(), 0);
  const std::vector<int> vars = trainable_variables(g, all, {});
  const std::vector<Vec> frames{Vec(frame)};
  const std::vector<int> idx{0};
  return estimated_log_pl(g, frames, idx, vars, N, est, seed).sum;
}

OptimizerState OptimizerState::zeros_like(const RelationalModel& model) {
  OptimizerState s;
  s.m.reserve(model.neural.size());
  s.v.reserve(model.neural.size());
  for (const NeuralPotential& np : model.neural) {
    s.m.push_back(MlpGrad::zeros_like(np.mlp));
    s.v.push_back(MlpGrad::zeros_like(np.mlp));
  }
  s.mln_m = Vec::Zero(model.mlns.size());
  s.mln_v = Vec::Zero(model.mlns.size());
  return s;
}

namespace {

// Ascent update on one parameter tensor.
template <class T>
void adam_ascent(T& theta, const T& grad, T& m, T& v, const TrainConfig& cfg, double bc1,
                 double bc2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * grad.array().square()).matrix();
  theta.array() += cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
}

}  // namespace

void optimizer_step(RelationalModel& model, const GradientAccumulator& grad,
                    OptimizerState& state, const TrainConfig& cfg) {
  if (!grad.all_finite()) throw NumericError("optimizer received non-finite gradients");
  if (cfg.opt == TrainConfig::Opt::Sgd) {
    for (std::size_t p = 0; p < model.neural.size(); ++p) {
      Mlp& mlp = model.neural[p].mlp;
      for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
        mlp.weights[l] += cfg.lr * grad.neural[p].weights[l];
        mlp.biases[l] += cfg.lr * grad.neural[p].biases[l];
      }
      mlp.version += 1;
    }
    for (std::size_t j = 0; j < model.mlns.size(); ++j)
      model.mlns[j].weight += cfg.lr * grad.mln[static_cast<Eigen::Index>(j)];
    return;
  }

  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < model.neural.size(); ++p) {
    Mlp& mlp = model.neural[p].mlp;
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
      adam_ascent(mlp.weights[l], grad.neural[p].weights[l], state.m[p].weights[l],
                  state.v[p].weights[l], cfg, bc1, bc2);
      adam_ascent(mlp.biases[l], grad.neural[p].biases[l], state.m[p].biases[l],
                  state.v[p].biases[l], cfg, bc1, bc2);
    }
    mlp.version += 1;
  }
  for (std::size_t j = 0; j < model.mlns.size(); ++j) {
    const Eigen::Index je = static_cast<Eigen::Index>(j);
    double& mm = state.mln_m[je];
    double& vv = state.mln_v[je];
    mm = cfg.beta1 * mm + (1.0 - cfg.beta1) * grad.mln[je];
    vv = cfg.beta2 * vv + (1.0 - cfg.beta2) * grad.mln[je] * grad.mln[je];
    model.mlns[j].weight += cfg.lr * (mm / bc1) / (std::sqrt(vv / bc2) + cfg.eps);
  }
}

void fit_helpers(RelationalModel& model, const GroundGraph& g, const std::vector<Vec>& frames) {
  for (std::size_t k = 0; k < model.parfactors.size(); ++k) {
    const Parfactor& pf = model.parfactors[k];
    HelperDistribution& h = model.helpers[pf.helper];
    if (h.fitted) continue;
    const std::vector<int>& fids = g.factors_of_parfactor[k];
    const Eigen::Index rows_n =
        static_cast<Eigen::Index>(fids.size()) * static_cast<Eigen::Index>(frames.size());
    if (rows_n == 0)
      throw DataError("no data rows to fit the helper of parfactor '" + pf.id + "'");
    Mat rows(rows_n, pf.arity());
    Eigen::Index r = 0;
    for (int fi : fids)
      for (const Vec& frame : frames)
        rows.row(r++) = clique_values(g, g.factors[fi], frame).transpose();
    h = helper_fit(h.family, model.clique_domains(pf), rows);
  }
}

TrainResult train(RelationalModel& model, GroundGraph& graph, const std::vector<Vec>& frames,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (frames.empty()) throw DataError("training needs at least one data frame");
  for (const Vec& f : frames)
    if (f.size() != static_cast<Eigen::Index>(graph.variables.size()))
      throw DataError("data frame does not cover the variable set");
  model.validate();
  fit_helpers(model, graph, frames);

  std::vector<int> all(graph.variables.size());
  std::iota(all.begin(), all.end(), 0);
  const std::vector<int> all_trainable = trainable_variables(graph, all, cfg.evidence_predicates);
  if (all_trainable.empty())
    throw UsageError("no trainable variables: everything is evidence or unconnected");

  std::vector<int> all_frames(frames.size());
  std::iota(all_frames.begin(), all_frames.end(), 0);

  OptimizerState state = OptimizerState::zeros_like(model);
  TrainResult res;
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const auto trace_point = [&](int iter) {
    if (cfg.trace_every <= 0) return;
    const PlEstimate pl =
        estimated_log_pl(graph, frames, all_frames, all_trainable, cfg.samples, cfg.estimator,
                         substream_seed(cfg.seed, kStreamTrace));
    res.trace.push_back({iter, pl.value(), elapsed()});
  };

  for (int t = 0; t < cfg.iterations; ++t) {
    try {
      if (cfg.trace_every > 0 && t % cfg.trace_every == 0) trace_point(t);

      Rng iter_rng(substream_seed(cfg.seed, kStreamIter, static_cast<std::uint64_t>(t)));
      const GroundingSample gs = sample_groundings(graph, cfg.vars_per_iter, iter_rng);
      const std::vector<int> vars =
          trainable_variables(graph, gs.vars, cfg.evidence_predicates);

      std::vector<int> frame_idx(cfg.batch_frames);
      for (int& m : frame_idx) m = static_cast<int>(iter_rng.uniform_index(frames.size()));

      if (vars.empty()) continue;
      const AggregatedBatch batch =
          build_aggregated_batch(graph, frames, frame_idx, vars, cfg.samples, cfg.estimator,
                                 substream_seed(cfg.seed, kStreamBatch, static_cast<std::uint64_t>(t)));
      if (batch.pairs == 0) continue;
      const GradientAccumulator acc = pmle_gradient(graph, batch);
      optimizer_step(model, acc, state, cfg);
    } catch (const std::exception& e) {
      throw std::runtime_error("training aborted at iteration " + std::to_string(t) + ": " +
                               e.what());
    }
  }
  trace_point(cfg.iterations);
  res.iterations_run = cfg.iterations;
  return res;
}

GradCheckReport gradient_check(RelationalModel& model, const GroundGraph& g,
                               const std::vector<Vec>& frames, const TrainConfig& cfg,
                               double fd_eps) {
  model.validate();
  std::vector<int> all(g.variables.size());
  std::iota(all.begin(), all.end(), 0);
  const std::vector<int> vars = trainable_variables(g, all, cfg.evidence_predicates);
  std::vector<int> all_frames(frames.size());
  std::iota(all_frames.begin(), all_frames.end(), 0);
  const std::uint64_t stream = substream_seed(cfg.seed, kStreamBatch);

  const AggregatedBatch batch =
      build_aggregated_batch(g, frames, all_frames, vars, cfg.samples, cfg.estimator, stream);
  const GradientAccumulator acc = pmle_gradient(g, batch);

  const auto objective = [&]() {
    return estimated_log_pl(g, frames, all_frames, vars, cfg.samples, cfg.estimator, stream)
        .value();
  };

  GradCheckReport report;
  const auto check_one = [&](double& theta, double analytic, const std::string& name) {
    const double saved = theta;
    theta = saved + fd_eps;
    const double hi = objective();
    theta = saved - fd_eps;
    const double lo = objective();
    theta = saved;
    const double fd = (hi - lo) / (2.0 * fd_eps);
    const double rel = std::abs(analytic - fd) /
                       std::max({std::abs(analytic), std::abs(fd), 1e-6});
    report.params_checked += 1;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst = {name, analytic, fd, rel};
    }
  };

  for (std::size_t p = 0; p < model.neural.size(); ++p) {
    Mlp& mlp = model.neural[p].mlp;
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
      for (Eigen::Index r = 0; r < mlp.weights[l].rows(); ++r)
        for (Eigen::Index c = 0; c < mlp.weights[l].cols(); ++c)
          check_one(mlp.weights[l](r, c), acc.neural[p].weights[l](r, c),
                    "neural " + std::to_string(p) + " W" + std::to_string(l) + "(" +
                        std::to_string(r) + "," + std::to_string(c) + ")");
      for (Eigen::Index r = 0; r < mlp.biases[l].size(); ++r)
        check_one(mlp.biases[l][r], acc.neural[p].biases[l][r],
                  "neural " + std::to_string(p) + " b" + std::to_string(l) + "(" +
                      std::to_string(r) + ")");
    }
  }
  for (std::size_t j = 0; j < model.mlns.size(); ++j)
    check_one(model.mlns[j].weight, acc.mln[static_cast<Eigen::Index>(j)],
              "mln " + std::to_string(j) + " weight");
  return report;
}

}  // namespace rnmrf
