#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rnmrf/domain.hpp"
#include "rnmrf/mlp.hpp"
#include "rnmrf/types.hpp"

namespace rnmrf {

// Built-in tuple-to-vector maps applied to a clique's values before the net.
//   Identity: pass through.
//   AbsDiff:  (|x1-x2|, x3, ..., xk)   -- first two slots must be continuous.
//   Diff:     (x1-x2, x3, ..., xk)
enum class FeatureMapKind { Identity, AbsDiff, Diff };

const char* feature_map_name(FeatureMapKind k);

struct FeatureMap {
  FeatureMapKind kind = FeatureMapKind::Identity;
  std::vector<DomainSpec> in_domains;

  int in_dim() const { return static_cast<int>(in_domains.size()); }
  int out_dim() const;
  // Interval/cardinality bounds of each output slot, derived from the inputs.
  std::vector<DomainSpec> out_domains() const;
  Vec apply(ConstVecRef x) const;
  Mat apply_rows(ConstMatRef X) const;
  void validate() const;
};

enum class ClampGate { Open, ClampedHigh, ClampedLow };

// exp(clamp(nn(fm(x)), a, b)): log-potential is the clamped network output.
// Discrete slots are one-hot encoded and bounded continuous slots rescaled to
// [0,1] before entering the net, so the net input dimension is derived, not
// user-specified.
struct NeuralPotential {
  FeatureMap fm;
  double clamp_lo = -10.0;
  double clamp_hi = 10.0;
  std::vector<int> hidden;
  Mlp mlp;

  struct SlotEncoding {
    bool onehot = false;
    int cardinality = 0;
    double shift = 0.0;
    double scale = 1.0;
  };
  std::vector<SlotEncoding> encoding;

  NeuralPotential() = default;
  NeuralPotential(std::vector<DomainSpec> clique_domains, FeatureMapKind fm_kind,
                  std::vector<int> hidden_sizes, double a = -10.0, double b = 10.0);

  int net_input_dim() const { return mlp.input_dim(); }
  Vec encode(ConstVecRef clique_values) const;
  Mat encode_rows(ConstMatRef rows) const;
};

struct NeuralEval {
  Vec value;                    // clamped log-potential per row
  std::vector<ClampGate> gate;  // which clamp branch applied per row
  MlpCache cache;
};

// Batched forward over raw clique rows; backward propagates zero upstream on
// gated rows.
NeuralEval neural_log_potential(const NeuralPotential& pot, ConstMatRef clique_rows);
double neural_log_potential1(const NeuralPotential& pot, ConstVecRef clique_values,
                             ClampGate* gate = nullptr);
void neural_backward(const NeuralPotential& pot, const NeuralEval& eval, ConstVecRef upstream,
                     MlpGrad& grad);

// Boolean formula over clique slots: comparisons of a slot against a constant
// or another slot, combined with !, &, | and =>.
struct Formula {
  enum class Op { Cmp, Not, And, Or, Implies };
  enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne };

  Op op = Op::Cmp;
  CmpOp cmp = CmpOp::Eq;
  int slot = -1;
  int rhs_slot = -1;  // >= 0: compare against another slot instead of rhs
  double rhs = 0.0;
  std::vector<Formula> kids;

  static Formula compare(int slot, CmpOp cmp, double rhs);
  static Formula compare_slots(int slot, CmpOp cmp, int rhs_slot);
  static Formula lnot(Formula f);
  static Formula land(Formula a, Formula b);
  static Formula lor(Formula a, Formula b);
  static Formula implies(Formula a, Formula b);

  bool eval(ConstVecRef clique_values) const;
  int max_slot() const;
};

// exp(w * logic(x)): log value is w when the formula holds, otherwise 0.
struct MlnPotential {
  double weight = 0.0;
  Formula formula;
  std::string text;  // source form, kept for printing

  void validate(int clique_arity) const;
};

double mln_log_potential(const MlnPotential& rule, ConstVecRef clique_values);
// d(w * logic)/dw = logic(x), 0 or 1.
double mln_weight_gradient(const MlnPotential& rule, ConstVecRef clique_values);

}  // namespace rnmrf
