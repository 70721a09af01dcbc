#include <doctest.h>

#include <cmath>

#include "rnmrf/estimators.hpp"
#include "rnmrf/factors.hpp"
#include "rnmrf/ground.hpp"
#include "rnmrf/model_parser.hpp"
#include "rnmrf/trainer.hpp"
#include "test_util.hpp"

using namespace rnmrf;
using test::total_variation;

namespace {

// Two factors share each variable through nb, the conditional of x(b) mixes
// the helper table with the MLN agreement rule.
const char* kChainModel = R"__(
domain bin discrete {f, t}
predicate x(I:item) -> bin
relation nb
parfactor p: helper=Categorical potential=MLN(w0=0.7, "x(A) == x(B)") atoms=[x(A), x(B)] constraint=nb(A, B)
)__";

struct Chain {
  RelationalModel model;
  Universe universe;
  RelationStore relations;
  GroundGraph g;

  Chain() {
    model = parse_model(kChainModel);
    universe["item"] = {"a", "b", "c"};
    relations.add("nb", {"a", "b"});
    relations.add("nb", {"b", "c"});
    g = ground(model, universe, relations);
    std::vector<Vec> frames;
    Vec f(3);
    f << 0, 0, 1;
    frames.push_back(f);
    f << 1, 1, 1;
    frames.push_back(f);
    f << 0, 1, 0;
    frames.push_back(f);
    fit_helpers(model, g, frames);
  }
};

const char* kUnaryModel = R"__(
domain unit continuous [0, 1]
predicate y(I:item) -> unit
parfactor p: helper=Gaussian(0.4; 0.05) potential=NN(layers=[3], clamp=[-2, 2], fm=identity) atoms=[y(I)] constraint=none
)__";

struct Unary {
  RelationalModel model;
  GroundGraph g;

  Unary() {
    model = parse_model(kUnaryModel);
    Universe u;
    u["item"] = {"a"};
    g = ground(model, u, {});
    model.init_params(7);
  }
};

}  // namespace

TEST_CASE("shifted riemann grid tiles the interval") {
  Vec pts, sp;
  const double lo = -1.0, hi = 3.0;
  const int N = 7;
  shifted_riemann_grid(lo, hi, N, 0.37, pts, sp);
  const double h = (hi - lo) / (N - 1);
  CHECK(sp[0] == doctest::Approx(0.37 * h));
  CHECK(sp[N - 1] == doctest::Approx(0.63 * h));
  for (int n = 1; n + 1 < N; ++n) CHECK(sp[n] == doctest::Approx(h));
  CHECK(sp.sum() == doctest::Approx(hi - lo).epsilon(1e-12));
  // Cells abut: each point is the midpoint of its cell.
  CHECK(pts[0] - 0.5 * sp[0] == doctest::Approx(lo));
  for (int n = 0; n + 1 < N; ++n)
    CHECK(pts[n] + 0.5 * sp[n] == doctest::Approx(pts[n + 1] - 0.5 * sp[n + 1]));
  CHECK(pts[N - 1] + 0.5 * sp[N - 1] == doctest::Approx(hi));

  shifted_riemann_grid(lo, hi, N, 0.0, pts, sp);
  CHECK(sp[0] == 0.0);
  CHECK(pts[0] == doctest::Approx(lo));
  CHECK(sp.sum() == doctest::Approx(hi - lo));

  CHECK_THROWS_AS(shifted_riemann_grid(0.0, 1.0, 1, 0.5, pts, sp), UsageError);
}

TEST_CASE("discrete expectations enumerate exactly") {
  Chain c;
  Vec frame(3);
  frame << 0, 1, 0;
  const int i = c.g.var_index("x(b)");
  REQUIRE(i >= 0);

  Rng rng(11);
  const Expectation e = importance_expectation(c.g, i, frame, 8, rng);
  CHECK(e.enumerated);
  REQUIRE(e.candidates.size() == 2);
  CHECK(e.candidates[0] == 0.0);
  CHECK(e.candidates[1] == 1.0);
  CHECK(e.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));

  const test::JointTable joint = test::enumerate_joint(c.g);
  const Vec oracle = test::conditional_from_joint(c.g, joint, i, frame);
  CHECK(e.weights[0] == doctest::Approx(oracle[0]).epsilon(1e-10));
  CHECK(e.weights[1] == doctest::Approx(oracle[1]).epsilon(1e-10));
}

TEST_CASE("forced sampling converges to the enumerated conditional") {
  Chain c;
  Vec frame(3);
  frame << 1, 0, 1;
  const int i = c.g.var_index("x(b)");

  Rng rng(5);
  const Expectation exact = importance_expectation(c.g, i, frame, 8, rng);
  const Expectation mc = importance_expectation(c.g, i, frame, 50000, rng, true);
  CHECK_FALSE(mc.enumerated);
  REQUIRE(mc.candidates.size() == 50000);

  Vec agg = Vec::Zero(2);
  for (Eigen::Index n = 0; n < mc.candidates.size(); ++n)
    agg[static_cast<int>(mc.candidates[n])] += mc.weights[n];
  CHECK(total_variation(agg, exact.weights) <= 5e-3);
}

TEST_CASE("riemann expectation matches dense quadrature") {
  Unary u;
  Vec frame(1);
  frame << 0.5;

  // Oracle moments of b(x) on a fine uniform midpoint grid.
  const int M = 20001;
  Vec grid(M);
  const double h = 1.0 / M;
  for (int n = 0; n < M; ++n) grid[n] = (n + 0.5) * h;
  const Vec log_b = log_bi(u.g, 0, frame, grid);
  const Vec w = (log_b.array() - log_sum_exp(log_b)).exp().matrix();
  const double mean_oracle = (w.array() * grid.array()).sum();
  const double m2_oracle = (w.array() * grid.array().square()).sum();

  Rng rng(3);
  const Expectation e = riemann_expectation(u.g, 0, frame, 1000, rng);
  CHECK(e.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.spacings.size() == 1000);
  const double mean = (e.weights.array() * e.candidates.array()).sum();
  const double m2 = (e.weights.array() * e.candidates.array().square()).sum();
  CHECK(mean == doctest::Approx(mean_oracle).epsilon(1e-3));
  CHECK(m2 == doctest::Approx(m2_oracle).epsilon(1e-3));
}

TEST_CASE("riemann estimator rejects unsuitable domains") {
  Chain c;
  Vec frame(3);
  frame << 0, 0, 0;
  Rng rng(1);
  CHECK_THROWS_AS(riemann_expectation(c.g, 0, frame, 10, rng), UsageError);

  const char* text = R"__(
domain real continuous unbounded
predicate y(I:item) -> real
parfactor p: helper=Gaussian(0; 1) potential=none atoms=[y(I)] constraint=none
)__";
  RelationalModel model = parse_model(text);
  Universe u;
  u["item"] = {"a"};
  const GroundGraph g = ground(model, u, {});
  Vec f1(1);
  f1 << 0.0;
  CHECK_THROWS_AS(riemann_expectation(g, 0, f1, 10, rng), UsageError);

  // The importance path handles it instead: flat potentials, uniform weights.
  const Expectation e = importance_expectation(g, 0, f1, 64, rng);
  CHECK_FALSE(e.enumerated);
  for (Eigen::Index n = 0; n < e.weights.size(); ++n)
    CHECK(e.weights[n] == doctest::Approx(1.0 / 64).epsilon(1e-12));
}

TEST_CASE("importance sampling needs at least two draws") {
  Unary u;
  Vec frame(1);
  frame << 0.2;
  Rng rng(1);
  CHECK_THROWS_AS(importance_expectation(u.g, 0, frame, 1, rng), UsageError);
}

TEST_CASE("degenerate weights raise estimator errors") {
  const char* text = R"__(
domain unit continuous [0, 1]
predicate y(I:item) -> unit
relation nb
parfactor p: helper=Uniform potential=NN(layers=[3], clamp=[-2, 2], fm=identity) atoms=[y(A), y(B)] constraint=nb(A, B)
)__";
  RelationalModel model = parse_model(text);
  Universe u;
  u["item"] = {"a", "b"};
  RelationStore rel;
  rel.add("nb", {"a", "b"});
  GroundGraph g = ground(model, u, rel);
  model.init_params(2);
  std::vector<Vec> frames;
  Vec f(2);
  f << 0.2, 0.8;
  frames.push_back(f);
  fit_helpers(model, g, frames);

  // A neighbor outside the uniform box kills every grid weight.
  Vec bad(2);
  bad << 0.2, 5.0;
  Rng rng(1);
  CHECK_THROWS_AS(riemann_expectation(g, 0, bad, 16, rng), EstimatorError);

  // NaN potential output is reported as a numeric error, not silently eaten.
  model.neural[0].mlp.weights[0](0, 0) = std::nan("");
  model.neural[0].mlp.version += 1;
  CHECK_THROWS_AS(importance_expectation(g, 0, f, 16, rng), NumericError);
}

TEST_CASE("importance weights drop helper terms by cancellation") {
  // Mixed blanket: uniform pair, linear-Gaussian pair, categorical-Gaussian
  // unary clique. b/Q must reduce to the potential product alone.
  const char* text = R"__(
domain unit continuous [0, 1]
domain bin discrete {f, t}
predicate y(I:item) -> unit
predicate x(I:item) -> bin
relation nb
parfactor pu: helper=Uniform potential=NN(layers=[3], clamp=[-2, 2], fm=identity) atoms=[y(A), y(B)] constraint=nb(A, B)
parfactor pg: helper=LG(0.8, 0.1, 0.3) potential=NN(layers=[4], clamp=[-3, 3], fm=diff) atoms=[y(A), y(B)] constraint=nb(B, A)
parfactor pc: helper=CG potential=NN(layers=[3], clamp=[-2, 2], fm=identity) atoms=[x(I), y(I)] constraint=none
)__";
  RelationalModel model = parse_model(text);
  Universe u;
  u["item"] = {"a", "b", "c"};
  RelationStore rel;
  rel.add("nb", {"a", "b"});
  rel.add("nb", {"b", "c"});
  rel.add("nb", {"c", "b"});
  GroundGraph g = ground(model, u, rel);
  model.init_params(13);

  Rng data_rng(29);
  std::vector<Vec> frames;
  for (int m = 0; m < 8; ++m) {
    Vec f(6);
    for (int i = 0; i < 6; ++i) {
      const DomainSpec& dom = g.variables[i].domain;
      f[i] = dom.is_discrete() ? static_cast<double>(data_rng.uniform_index(2))
                               : data_rng.uniform01();
    }
    frames.push_back(f);
  }
  fit_helpers(model, g, frames);

  const int i = g.var_index("y(b)");
  REQUIRE(i >= 0);
  REQUIRE(g.blanket[i].size() >= 3);
  const Vec& frame = frames[0];

  const Proposal1D q = build_proposal(g, i, frame);
  Rng rng(4);
  const int N = 64;
  Vec cand(N), log_q(N);
  for (int n = 0; n < N; ++n) {
    cand[n] = q.sample(rng);
    log_q[n] = q.log_density(cand[n]);
  }
  const Vec full = log_bi(g, i, frame, cand);
  const Vec pot = log_bi_potentials(g, i, frame, cand);
  const Vec residual = full - log_q - pot;
  const double c0 = residual[0];
  for (int n = 0; n < N; ++n) CHECK(std::abs(residual[n] - c0) <= 1e-10);
}

TEST_CASE("aggregated batches carry one data row plus the weighted samples") {
  Unary u;
  std::vector<Vec> frames;
  Vec f(1);
  f << 0.3;
  frames.push_back(f);

  const AggregatedBatch batch = build_aggregated_batch(
      u.g, frames, {0}, {0}, 20, TrainConfig::Estimator::Riemann, 99);
  REQUIRE(batch.blocks.size() == 1);
  CHECK(batch.pairs == 1);
  const AggregatedBatch::Block& b = batch.blocks[0];
  REQUIRE(b.rows.rows() == 21);
  CHECK(b.rows.cols() == 1);
  CHECK(b.rows(0, 0) == 0.3);
  CHECK(b.coeff[0] == 1.0);
  CHECK(b.coeff.tail(20).sum() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(b.tags[0].sample == -1);
  CHECK(b.tags[1].sample == 0);
  CHECK(b.tags[20].sample == 19);
}

TEST_CASE("batch rows aggregate over frames and incident factors") {
  Chain c;
  std::vector<Vec> frames;
  Vec f(3);
  f << 0, 1, 0;
  frames.push_back(f);
  f << 1, 1, 1;
  frames.push_back(f);

  const int i = c.g.var_index("x(b)");
  REQUIRE(c.g.blanket[i].size() == 2);
  const AggregatedBatch batch = build_aggregated_batch(
      c.g, frames, {0, 1}, {i}, 5, TrainConfig::Estimator::Importance, 42);
  CHECK(batch.pairs == 2);
  // Enumerated binary domain: 1 data row + 2 candidate rows, per factor and
  // per frame.
  REQUIRE(batch.blocks.size() == 1);
  CHECK(batch.blocks[0].rows.rows() == 2 * 2 * 3);
  // Coefficients of every (frame, factor) group sum to zero.
  const auto& b = batch.blocks[0];
  for (int grp = 0; grp < 4; ++grp)
    CHECK(b.coeff.segment(3 * grp, 3).sum() == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(build_aggregated_batch(c.g, frames, {7}, {i}, 5,
                                         TrainConfig::Estimator::Importance, 42),
                  UsageError);
}

TEST_CASE("common random numbers make batches reproducible") {
  Unary u;
  std::vector<Vec> frames;
  Vec f(1);
  f << 0.6;
  frames.push_back(f);

  const AggregatedBatch b1 = build_aggregated_batch(
      u.g, frames, {0}, {0}, 12, TrainConfig::Estimator::Importance, 77);
  const AggregatedBatch b2 = build_aggregated_batch(
      u.g, frames, {0}, {0}, 12, TrainConfig::Estimator::Importance, 77);
  const AggregatedBatch b3 = build_aggregated_batch(
      u.g, frames, {0}, {0}, 12, TrainConfig::Estimator::Importance, 78);
  CHECK(b1.blocks[0].rows == b2.blocks[0].rows);
  CHECK(b1.blocks[0].coeff == b2.blocks[0].coeff);
  CHECK(b1.blocks[0].rows != b3.blocks[0].rows);
}
