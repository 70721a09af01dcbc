#include <doctest.h>

#include <cmath>

#include "rnmrf/estimators.hpp"
#include "rnmrf/ground.hpp"
#include "rnmrf/model_parser.hpp"
#include "rnmrf/trainer.hpp"
#include "test_util.hpp"

using namespace rnmrf;

namespace {

// Mixed clique shapes so both gradient paths and the finite-difference check
// exercise neural and MLN parameters together.
const char* kMixedModel = R"__(
domain unit continuous [0, 1]
domain bin discrete {f, t}
predicate y(I:item) -> unit
predicate x(I:item) -> bin
relation nb
parfactor pu: helper=LG(1, 0, 0.5) potential=NN(layers=[3], clamp=[-2, 2], fm=identity) atoms=[y(A), y(B)] constraint=nb(A, B)
parfactor pc: helper=CG potential=NN(layers=[3], clamp=[-2, 2], fm=identity), MLN(w0=0.4, "x(I) == 't'") atoms=[x(I), y(I)] constraint=none
)__";

struct Mixed {
  RelationalModel model;
  GroundGraph g;
  std::vector<Vec> frames;

  explicit Mixed(std::uint64_t seed = 17) {
    model = parse_model(kMixedModel);
    Universe u;
    u["item"] = {"a", "b", "c"};
    RelationStore rel;
    rel.add("nb", {"a", "b"});
    rel.add("nb", {"b", "c"});
    g = ground(model, u, rel);
    model.init_params(seed);
    Rng rng(seed + 1);
    for (int m = 0; m < 3; ++m) {
      Vec f(6);
      for (int i = 0; i < 6; ++i) {
        const DomainSpec& dom = g.variables[i].domain;
        f[i] = dom.is_discrete() ? static_cast<double>(rng.uniform_index(2)) : rng.uniform01();
      }
      frames.push_back(f);
    }
    fit_helpers(model, g, frames);
  }
};

}  // namespace

TEST_CASE("trainable variables exclude evidence and stranded nodes") {
  Mixed m;
  std::vector<int> all;
  for (std::size_t i = 0; i < m.g.variables.size(); ++i) all.push_back(static_cast<int>(i));

  CHECK(trainable_variables(m.g, all, {}).size() == 6);
  // Evidence predicates drop the whole predicate.
  CHECK(trainable_variables(m.g, all, {"x"}).size() == 3);
  // Per-variable evidence drops just that node.
  m.g.set_evidence("y(a)", 0.5);
  CHECK(trainable_variables(m.g, all, {}).size() == 5);
  m.g.clear_evidence();
}

TEST_CASE("aggregated gradient equals the row-at-a-time reference") {
  Mixed m;
  const AggregatedBatch batch = build_aggregated_batch(
      m.g, m.frames, {0, 1, 2}, {0, 1, 2, 3, 4, 5}, 8, TrainConfig::Estimator::Importance, 5);
  const GradientAccumulator fast = pmle_gradient(m.g, batch);
  const GradientAccumulator slow = pmle_gradient_naive(m.g, batch);

  REQUIRE(fast.neural.size() == slow.neural.size());
  for (std::size_t p = 0; p < fast.neural.size(); ++p) {
    for (std::size_t l = 0; l < fast.neural[p].weights.size(); ++l) {
      CHECK((fast.neural[p].weights[l] - slow.neural[p].weights[l]).cwiseAbs().maxCoeff() <=
            1e-12);
      CHECK((fast.neural[p].biases[l] - slow.neural[p].biases[l]).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  CHECK((fast.mln - slow.mln).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(fast.pairs == slow.pairs);
}

TEST_CASE("analytic gradient matches finite differences of the estimated objective") {
  Mixed m;
  TrainConfig cfg;
  cfg.samples = 12;
  cfg.seed = 303;

  SUBCASE("importance estimator") {
    cfg.estimator = TrainConfig::Estimator::Importance;
    const GradCheckReport rep = gradient_check(m.model, m.g, m.frames, cfg);
    CHECK(rep.params_checked >= 30);
    INFO("worst ", rep.worst.param, " analytic ", rep.worst.analytic, " fd ", rep.worst.fd);
    CHECK(rep.max_rel_err <= 1e-3);
  }
  SUBCASE("riemann estimator") {
    cfg.estimator = TrainConfig::Estimator::Riemann;
    const GradCheckReport rep = gradient_check(m.model, m.g, m.frames, cfg);
    INFO("worst ", rep.worst.param, " analytic ", rep.worst.analytic, " fd ", rep.worst.fd);
    CHECK(rep.max_rel_err <= 1e-3);
  }
  SUBCASE("conditional mode") {
    cfg.estimator = TrainConfig::Estimator::Riemann;
    cfg.evidence_predicates = {"x"};
    const GradCheckReport rep = gradient_check(m.model, m.g, m.frames, cfg);
    CHECK(rep.max_rel_err <= 1e-3);
  }
}

TEST_CASE("sgd steps are exactly lr times the gradient") {
  Mixed m;
  const AggregatedBatch batch = build_aggregated_batch(
      m.g, m.frames, {0}, {0, 1, 2}, 8, TrainConfig::Estimator::Importance, 5);
  const GradientAccumulator grad = pmle_gradient(m.g, batch);

  RelationalModel before = m.model;
  OptimizerState st = OptimizerState::zeros_like(m.model);
  TrainConfig cfg;
  cfg.opt = TrainConfig::Opt::Sgd;
  cfg.lr = 0.25;
  optimizer_step(m.model, grad, st, cfg);

  const Mat delta = m.model.neural[0].mlp.weights[0] - before.neural[0].mlp.weights[0];
  CHECK((delta - 0.25 * grad.neural[0].weights[0]).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(m.model.mlns[0].weight - before.mlns[0].weight ==
        doctest::Approx(0.25 * grad.mln[0]).epsilon(1e-12));
  CHECK(m.model.neural[0].mlp.version == before.neural[0].mlp.version + 1);
}

TEST_CASE("adam's first step has magnitude close to the learning rate") {
  Mixed m;
  const AggregatedBatch batch = build_aggregated_batch(
      m.g, m.frames, {0}, {0, 1, 2}, 8, TrainConfig::Estimator::Importance, 5);
  const GradientAccumulator grad = pmle_gradient(m.g, batch);

  RelationalModel before = m.model;
  OptimizerState st = OptimizerState::zeros_like(m.model);
  TrainConfig cfg;
  cfg.lr = 1e-2;
  optimizer_step(m.model, grad, st, cfg);
  CHECK(st.t == 1);

  // At t=1 the bias-corrected update is lr * g / (|g| + eps'), so every
  // coordinate with a non-negligible gradient moves by about lr.
  const Mat& g0 = grad.neural[0].weights[0];
  const Mat delta = m.model.neural[0].mlp.weights[0] - before.neural[0].mlp.weights[0];
  for (Eigen::Index r = 0; r < g0.rows(); ++r)
    for (Eigen::Index c = 0; c < g0.cols(); ++c)
      if (std::abs(g0(r, c)) > 1e-6) {
        CHECK(std::abs(delta(r, c)) == doctest::Approx(cfg.lr).epsilon(1e-3));
        CHECK(delta(r, c) * g0(r, c) > 0.0);
      }
}

TEST_CASE("fit_helpers only touches bare helpers") {
  Mixed m;
  // pu's helper came with explicit parameters.
  const HelperDistribution& lg = m.model.helpers[m.model.parfactors[0].helper];
  CHECK(lg.fitted);
  CHECK(lg.lg_slope == 1.0);
  CHECK(lg.lg_intercept == 0.0);
  CHECK(lg.lg_var == 0.5);
  // pc's helper was bare and is now moment-matched.
  const HelperDistribution& cg = m.model.helpers[m.model.parfactors[1].helper];
  CHECK(cg.fitted);
  CHECK(cg.cg_mean.size() == 2);

  // Refitting with different frames leaves both untouched.
  RelationalModel copy = m.model;
  std::vector<Vec> other(1, Vec::Constant(6, 0.0));
  fit_helpers(copy, m.g, other);
  CHECK(copy.helpers[1].cg_mean[0] == m.model.helpers[1].cg_mean[0]);
}

TEST_CASE("training raises the traced pseudo-likelihood on coupled data") {
  const char* text = R"__(
domain bin discrete {f, t}
predicate x(I:item) -> bin
relation nb
parfactor p: helper=Categorical potential=MLN(w0=0, "x(A) == x(B)") atoms=[x(A), x(B)] constraint=nb(A, B)
)__";
  RelationalModel model = parse_model(text);
  Universe u;
  u["item"] = {"a", "b", "c"};
  RelationStore rel;
  rel.add("nb", {"a", "b"});
  rel.add("nb", {"b", "c"});
  GroundGraph g = ground(model, u, rel);

  // Perfectly coupled frames: the agreement rule should gain weight.
  std::vector<Vec> frames;
  frames.push_back(Vec::Zero(3));
  frames.push_back(Vec::Ones(3));
  frames.push_back(Vec::Zero(3));

  TrainConfig cfg;
  cfg.iterations = 60;
  cfg.vars_per_iter = 3;
  cfg.samples = 4;
  cfg.lr = 0.05;
  cfg.seed = 9;
  cfg.trace_every = 30;
  const TrainResult res = train(model, g, frames, cfg);
  CHECK(res.iterations_run == 60);
  REQUIRE(res.trace.size() == 3);
  CHECK(res.trace[0].iteration == 0);
  CHECK(res.trace[2].iteration == 60);
  CHECK(model.mlns[0].weight > 0.2);
  CHECK(res.trace.back().log_pl > res.trace.front().log_pl);
  for (const TraceRow& row : res.trace) CHECK(std::isfinite(row.log_pl));
}

TEST_CASE("train validates its inputs") {
  Mixed m;
  TrainConfig cfg;
  cfg.iterations = 1;

  std::vector<Vec> empty;
  CHECK_THROWS_AS(train(m.model, m.g, empty, cfg), DataError);

  std::vector<Vec> wrong(1, Vec::Zero(2));
  CHECK_THROWS_AS(train(m.model, m.g, wrong, cfg), DataError);

  TrainConfig bad = cfg;
  bad.samples = 1;
  CHECK_THROWS_AS(train(m.model, m.g, m.frames, bad), UsageError);
  bad = cfg;
  bad.lr = 0.0;
  CHECK_THROWS_AS(train(m.model, m.g, m.frames, bad), UsageError);

  cfg.evidence_predicates = {"x", "y"};
  CHECK_THROWS_AS(train(m.model, m.g, m.frames, cfg), UsageError);
}
