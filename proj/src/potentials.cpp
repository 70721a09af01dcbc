#include "rnmrf/potentials.hpp"

#include <algorithm>
#include <cmath>

namespace rnmrf {

const char* feature_map_name(FeatureMapKind k) {
  switch (k) {
    case FeatureMapKind::Identity: return "identity";
    case FeatureMapKind::AbsDiff: return "absdiff";
    case FeatureMapKind::Diff: return "diff";
  }
  return "?";
}

int FeatureMap::out_dim() const {
  return kind == FeatureMapKind::Identity ? in_dim() : in_dim() - 1;
}

void FeatureMap::validate() const {
  if (kind == FeatureMapKind::Identity) {
    if (in_dim() < 1) throw ModelError("feature map needs at least one input slot");
    return;
  }
  if (in_dim() < 2) throw ModelError("absdiff/diff feature maps need at least two slots");
  if (in_domains[0].is_discrete() || in_domains[1].is_discrete())
    throw ModelError("absdiff/diff feature maps require continuous first two slots");
}

std::vector<DomainSpec> FeatureMap::out_domains() const {
  if (kind == FeatureMapKind::Identity) return in_domains;
  std::vector<DomainSpec> out;
  const DomainSpec& d0 = in_domains[0];
  const DomainSpec& d1 = in_domains[1];
  DomainSpec head;
  head.kind = DomainSpec::Kind::Continuous;
  if (d0.is_bounded() && d1.is_bounded()) {
    const double span_hi = d0.upper - d1.lower;
    const double span_lo = d0.lower - d1.upper;
    if (kind == FeatureMapKind::AbsDiff) {
      head.lower = 0.0;
      head.upper = std::max(std::abs(span_lo), std::abs(span_hi));
    } else {
      head.lower = span_lo;
      head.upper = span_hi;
    }
  }
  out.push_back(head);
  for (std::size_t i = 2; i < in_domains.size(); ++i) out.push_back(in_domains[i]);
  return out;
}

Vec FeatureMap::apply(ConstVecRef x) const {
  if (x.size() != in_dim()) throw UsageError("feature map input arity mismatch");
  if (kind == FeatureMapKind::Identity) return x;
  Vec out(out_dim());
  out(0) = kind == FeatureMapKind::AbsDiff ? std::abs(x(0) - x(1)) : x(0) - x(1);
  for (int i = 2; i < in_dim(); ++i) out(i - 1) = x(i);
  return out;
}

Mat FeatureMap::apply_rows(ConstMatRef X) const {
  if (X.cols() != in_dim()) throw UsageError("feature map input arity mismatch");
  if (kind == FeatureMapKind::Identity) return X;
  Mat out(X.rows(), out_dim());
  if (kind == FeatureMapKind::AbsDiff)
    out.col(0) = (X.col(0) - X.col(1)).cwiseAbs();
  else
    out.col(0) = X.col(0) - X.col(1);
  for (int i = 2; i < in_dim(); ++i) out.col(i - 1) = X.col(i);
  return out;
}

NeuralPotential::NeuralPotential(std::vector<DomainSpec> clique_domains, FeatureMapKind fm_kind,
                                 std::vector<int> hidden_sizes, double a, double b)
    : clamp_lo(a), clamp_hi(b), hidden(std::move(hidden_sizes)) {
  if (!(a < b)) throw ModelError("clamp bounds need a < b");
  fm.kind = fm_kind;
  fm.in_domains = std::move(clique_domains);
  fm.validate();

  int net_in = 0;
  for (const DomainSpec& d : fm.out_domains()) {
    SlotEncoding e;
    if (d.is_discrete()) {
      e.onehot = true;
      e.cardinality = d.cardinality();
      net_in += e.cardinality;
    } else {
      if (d.is_bounded() && d.upper > d.lower) {
        e.shift = d.lower;
        e.scale = 1.0 / (d.upper - d.lower);
      }
      net_in += 1;
    }
    encoding.push_back(e);
  }

  std::vector<int> dims;
  dims.push_back(net_in);
  for (int h : hidden) dims.push_back(h);
  dims.push_back(1);
  mlp = Mlp::make(dims);
}

Vec NeuralPotential::encode(ConstVecRef clique_values) const {
  return encode_rows(clique_values.transpose()).row(0).transpose();
}

Mat NeuralPotential::encode_rows(ConstMatRef rows) const {
  Mat feat = fm.apply_rows(rows);
  Mat out = Mat::Zero(rows.rows(), net_input_dim());
  int col = 0;
  for (std::size_t s = 0; s < encoding.size(); ++s) {
    const SlotEncoding& e = encoding[s];
    if (e.onehot) {
      for (Eigen::Index r = 0; r < feat.rows(); ++r) {
        const int idx = static_cast<int>(std::lround(feat(r, s)));
        if (idx < 0 || idx >= e.cardinality)
          throw DataError("discrete value out of range for one-hot encoding");
        out(r, col + idx) = 1.0;
      }
      col += e.cardinality;
    } else {
      out.col(col) = (feat.col(s).array() - e.shift) * e.scale;
      ++col;
    }
  }
  return out;
}

NeuralEval neural_log_potential(const NeuralPotential& pot, ConstMatRef clique_rows) {
  NeuralEval ev;
  const Mat X = pot.encode_rows(clique_rows);
  Vec raw = mlp_forward(pot.mlp, X, &ev.cache);
  ev.value.resize(raw.size());
  ev.gate.resize(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    if (raw(i) > pot.clamp_hi) {
      ev.value(i) = pot.clamp_hi;
      ev.gate[i] = ClampGate::ClampedHigh;
    } else if (raw(i) < pot.clamp_lo) {
      ev.value(i) = pot.clamp_lo;
      ev.gate[i] = ClampGate::ClampedLow;
    } else {
      ev.value(i) = raw(i);
      ev.gate[i] = ClampGate::Open;
    }
  }
  return ev;
}

double neural_log_potential1(const NeuralPotential& pot, ConstVecRef clique_values,
                             ClampGate* gate) {
  NeuralEval ev = neural_log_potential(pot, clique_values.transpose());
  if (gate) *gate = ev.gate[0];
  return ev.value(0);
}

void neural_backward(const NeuralPotential& pot, const NeuralEval& eval, ConstVecRef upstream,
                     MlpGrad& grad) {
  if (upstream.size() != eval.value.size())
    throw UsageError("neural_backward: upstream size mismatch");
  Vec gated = upstream;
  for (Eigen::Index i = 0; i < gated.size(); ++i)
    if (eval.gate[i] != ClampGate::Open) gated(i) = 0.0;
  mlp_backward(pot.mlp, eval.cache, gated, grad);
}

Formula Formula::compare(int slot, CmpOp cmp, double rhs) {
  Formula f;
  f.op = Op::Cmp;
  f.slot = slot;
  f.cmp = cmp;
  f.rhs = rhs;
  return f;
}

Formula Formula::compare_slots(int slot, CmpOp cmp, int rhs_slot) {
  Formula f = compare(slot, cmp, 0.0);
  f.rhs_slot = rhs_slot;
  return f;
}

Formula Formula::lnot(Formula f) {
  Formula g;
  g.op = Op::Not;
  g.kids.push_back(std::move(f));
  return g;
}

static Formula binary(Formula::Op op, Formula a, Formula b) {
  Formula g;
  g.op = op;
  g.kids.push_back(std::move(a));
  g.kids.push_back(std::move(b));
  return g;
}

Formula Formula::land(Formula a, Formula b) { return binary(Op::And, std::move(a), std::move(b)); }
Formula Formula::lor(Formula a, Formula b) { return binary(Op::Or, std::move(a), std::move(b)); }
Formula Formula::implies(Formula a, Formula b) {
  return binary(Op::Implies, std::move(a), std::move(b));
}

bool Formula::eval(ConstVecRef x) const {
  switch (op) {
    case Op::Cmp: {
      if (slot < 0 || slot >= x.size())
        throw ModelError("formula references clique slot " + std::to_string(slot) +
                         " outside arity " + std::to_string(x.size()));
      const double lhs = x(slot);
      double r = rhs;
      if (rhs_slot >= 0) {
        if (rhs_slot >= x.size()) throw ModelError("formula rhs slot outside clique arity");
        r = x(rhs_slot);
      }
      switch (cmp) {
        case CmpOp::Lt: return lhs < r;
        case CmpOp::Le: return lhs <= r;
        case CmpOp::Gt: return lhs > r;
        case CmpOp::Ge: return lhs >= r;
        case CmpOp::Eq: return lhs == r;
        case CmpOp::Ne: return lhs != r;
      }
      return false;
    }
    case Op::Not: return !kids[0].eval(x);
    case Op::And: return kids[0].eval(x) && kids[1].eval(x);
    case Op::Or: return kids[0].eval(x) || kids[1].eval(x);
    case Op::Implies: return !kids[0].eval(x) || kids[1].eval(x);
  }
  return false;
}

int Formula::max_slot() const {
  int m = std::max(slot, rhs_slot);
  for (const Formula& k : kids) m = std::max(m, k.max_slot());
  return m;
}

void MlnPotential::validate(int clique_arity) const {
  if (formula.max_slot() >= clique_arity)
    throw ModelError("MLN formula references slot " + std::to_string(formula.max_slot()) +
                     " but clique arity is " + std::to_string(clique_arity));
  if (!std::isfinite(weight)) throw ModelError("MLN weight must be finite");
}

double mln_log_potential(const MlnPotential& rule, ConstVecRef clique_values) {
  return rule.formula.eval(clique_values) ? rule.weight : 0.0;
}

double mln_weight_gradient(const MlnPotential& rule, ConstVecRef clique_values) {
  return rule.formula.eval(clique_values) ? 1.0 : 0.0;
}

}  // namespace rnmrf
