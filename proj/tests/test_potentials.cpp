#include <doctest.h>

#include "rnmrf/model_parser.hpp"
#include "rnmrf/potentials.hpp"
#include "rnmrf/rng.hpp"

using namespace rnmrf;

namespace {

std::vector<DomainSpec> two_unit() {
  return {DomainSpec::continuous(0.0, 1.0), DomainSpec::continuous(0.0, 1.0)};
}

}  // namespace

TEST_CASE("clamping caps the log potential and kills the gradient") {
  NeuralPotential pot(two_unit(), FeatureMapKind::Identity, {}, -3.0, 3.0);
  // Single linear layer; zero weights and bias 5 put the raw output at 5.
  pot.mlp.weights[0].setZero();
  pot.mlp.biases[0](0) = 5.0;
  pot.mlp.version += 1;

  Vec x(2);
  x << 0.2, 0.8;
  ClampGate gate;
  CHECK(neural_log_potential1(pot, x, &gate) == doctest::Approx(3.0));
  CHECK(gate == ClampGate::ClampedHigh);

  Mat rows = x.transpose();
  const NeuralEval ev = neural_log_potential(pot, rows);
  CHECK(ev.value[0] == doctest::Approx(3.0));
  CHECK(ev.gate[0] == ClampGate::ClampedHigh);
  MlpGrad grad = MlpGrad::zeros_like(pot.mlp);
  neural_backward(pot, ev, Vec::Ones(1), grad);
  CHECK(grad.max_abs() == 0.0);

  pot.mlp.biases[0](0) = -5.0;
  pot.mlp.version += 1;
  CHECK(neural_log_potential1(pot, x, &gate) == doctest::Approx(-3.0));
  CHECK(gate == ClampGate::ClampedLow);

  pot.mlp.biases[0](0) = 1.5;
  pot.mlp.version += 1;
  CHECK(neural_log_potential1(pot, x, &gate) == doctest::Approx(1.5));
  CHECK(gate == ClampGate::Open);
  const NeuralEval open_ev = neural_log_potential(pot, rows);
  MlpGrad open_grad = MlpGrad::zeros_like(pot.mlp);
  neural_backward(pot, open_ev, Vec::Ones(1), open_grad);
  CHECK(open_grad.biases[0][0] == doctest::Approx(1.0));
}

TEST_CASE("input encoding: one-hot, rescale, raw") {
  const std::vector<DomainSpec> domains = {DomainSpec::discrete({"a", "b", "c"}),
                                           DomainSpec::continuous(0.0, 10.0),
                                           DomainSpec::continuous_unbounded()};
  NeuralPotential pot(domains, FeatureMapKind::Identity, {4});
  CHECK(pot.net_input_dim() == 5);  // 3 one-hot + 1 rescaled + 1 raw
  Vec x(3);
  x << 2.0, 2.5, -4.0;
  const Vec e = pot.encode(x);
  REQUIRE(e.size() == 5);
  CHECK(e[0] == 0.0);
  CHECK(e[1] == 0.0);
  CHECK(e[2] == 1.0);
  CHECK(e[3] == doctest::Approx(0.25));
  CHECK(e[4] == doctest::Approx(-4.0));

  const Mat rows = x.transpose();
  const Mat E = pot.encode_rows(rows);
  CHECK((E.row(0).transpose() - e).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feature maps") {
  const std::vector<DomainSpec> d3 = {DomainSpec::continuous(0.0, 1.0),
                                      DomainSpec::continuous(0.0, 1.0),
                                      DomainSpec::continuous(0.0, 2.0)};
  FeatureMap fm{FeatureMapKind::AbsDiff, d3};
  fm.validate();
  CHECK(fm.out_dim() == 2);
  Vec x(3);
  x << 0.2, 0.7, 1.5;
  Vec y = fm.apply(x);
  CHECK(y[0] == doctest::Approx(0.5));
  CHECK(y[1] == doctest::Approx(1.5));
  // Output interval of |x1-x2| over [0,1]x[0,1] is [0,1].
  const auto out = fm.out_domains();
  CHECK(out.size() == 2);
  CHECK(out[0].lower == doctest::Approx(0.0));
  CHECK(out[0].upper == doctest::Approx(1.0));

  FeatureMap diff{FeatureMapKind::Diff, d3};
  Vec z = diff.apply(x);
  CHECK(z[0] == doctest::Approx(-0.5));
  CHECK(z[1] == doctest::Approx(1.5));

  FeatureMap idty{FeatureMapKind::Identity, d3};
  CHECK(idty.out_dim() == 3);
  CHECK((idty.apply(x) - x).cwiseAbs().maxCoeff() == 0.0);

  FeatureMap bad{FeatureMapKind::AbsDiff, {DomainSpec::discrete({"a", "b"}),
                                           DomainSpec::continuous(0.0, 1.0)}};
  CHECK_THROWS_AS(bad.validate(), ModelError);
}

TEST_CASE("formula evaluation and gradient") {
  // slot 0: type in {W, D, O}; slot 1: angle.
  Formula f = Formula::implies(Formula::compare(1, Formula::CmpOp::Gt, 30.0),
                               Formula::lnot(Formula::compare(0, Formula::CmpOp::Eq, 0.0)));
  Vec x(2);
  x << 0.0, 40.0;  // premise holds, conclusion fails
  CHECK_FALSE(f.eval(x));
  x << 0.0, 10.0;  // premise fails
  CHECK(f.eval(x));
  x << 1.0, 40.0;
  CHECK(f.eval(x));

  MlnPotential rule;
  rule.weight = 2.0;
  rule.formula = f;
  rule.validate(2);
  x << 0.0, 40.0;
  CHECK(mln_log_potential(rule, x) == doctest::Approx(0.0));
  CHECK(mln_weight_gradient(rule, x) == doctest::Approx(0.0));
  x << 2.0, 40.0;
  CHECK(mln_log_potential(rule, x) == doctest::Approx(2.0));
  CHECK(mln_weight_gradient(rule, x) == doctest::Approx(1.0));

  MlnPotential overflow;
  overflow.formula = Formula::compare(5, Formula::CmpOp::Gt, 0.0);
  CHECK_THROWS_AS(overflow.validate(2), ModelError);
}

TEST_CASE("parsed formulas bind tighter right of || than &&, and => nests right") {
  const char* text = R"(
domain bin discrete {f, t}
predicate x(I:item) -> bin
parfactor p: helper=Categorical potential=MLN(w0=1, "x(A) == 't' || x(B) == 't' && x(C) == 't'"), MLN(w0=1, "x(A) == 't' => x(B) == 't' => x(C) == 't'") atoms=[x(A), x(B), x(C)] constraint=none
)";
  const RelationalModel model = parse_model(text);
  REQUIRE(model.mlns.size() == 2);
  Vec v(3);

  // a || (b && c): true for (t,f,f).
  v << 1.0, 0.0, 0.0;
  CHECK(model.mlns[0].formula.eval(v));
  v << 0.0, 1.0, 0.0;
  CHECK_FALSE(model.mlns[0].formula.eval(v));

  // a => (b => c): true for (f,t,f); left association would give false.
  v << 0.0, 1.0, 0.0;
  CHECK(model.mlns[1].formula.eval(v));
  v << 1.0, 1.0, 0.0;
  CHECK_FALSE(model.mlns[1].formula.eval(v));
}

TEST_CASE("slot-against-slot comparisons") {
  const char* text = R"__(
domain bin discrete {f, t}
predicate x(I:item) -> bin
parfactor p: helper=Categorical potential=MLN(w0=1, "x(A) == x(B)") atoms=[x(A), x(B)] constraint=A != B
)__";
  const RelationalModel model = parse_model(text);
  Vec v(2);
  v << 1.0, 1.0;
  CHECK(model.mlns[0].formula.eval(v));
  v << 1.0, 0.0;
  CHECK_FALSE(model.mlns[0].formula.eval(v));
}

TEST_CASE("gated rows zero only their own upstream") {
  NeuralPotential pot(two_unit(), FeatureMapKind::Identity, {}, -3.0, 3.0);
  pot.mlp.weights[0].setZero();
  pot.mlp.weights[0](0, 0) = 8.0;  // first input decides: 0 -> open, 1 -> clamped
  pot.mlp.biases[0](0) = 0.5;
  pot.mlp.version += 1;
  Mat rows(2, 2);
  rows << 0.0, 0.3, 1.0, 0.3;
  const NeuralEval ev = neural_log_potential(pot, rows);
  CHECK(ev.gate[0] == ClampGate::Open);
  CHECK(ev.gate[1] == ClampGate::ClampedHigh);
  MlpGrad grad = MlpGrad::zeros_like(pot.mlp);
  neural_backward(pot, ev, Vec::Ones(2), grad);
  // Only the open row contributes; its bias gradient is exactly 1.
  CHECK(grad.biases[0][0] == doctest::Approx(1.0));
}
