#include "rnmrf/factors.hpp"

#include <cmath>

#include "rnmrf/potentials.hpp"

namespace rnmrf {

Vec clique_values(const GroundGraph& g, const GroundFactor& f, ConstVecRef assignment) {
  Vec v(f.vars.size());
  for (std::size_t j = 0; j < f.vars.size(); ++j) v[j] = assignment[f.vars[j]];
  (void)g;
  return v;
}

double factor_log_helper(const GroundGraph& g, int fi, ConstVecRef values) {
  const GroundFactor& f = g.factors[fi];
  const Parfactor& pf = g.model->parfactors[f.parfactor];
  return helper_log_density(g.model->helpers[pf.helper], values);
}

double factor_log_potential(const GroundGraph& g, int fi, ConstVecRef values) {
  const GroundFactor& f = g.factors[fi];
  const Parfactor& pf = g.model->parfactors[f.parfactor];
  double total = 0.0;
  for (int ni : pf.neural) total += neural_log_potential1(g.model->neural[ni], values);
  for (int mi : pf.mlns) total += mln_log_potential(g.model->mlns[mi], values);
  return total;
}

double factor_log_value(const GroundGraph& g, int fi, ConstVecRef values) {
  return factor_log_helper(g, fi, values) + factor_log_potential(g, fi, values);
}

double joint_log_score(const GroundGraph& g, ConstVecRef assignment) {
  double total = 0.0;
  for (std::size_t fi = 0; fi < g.factors.size(); ++fi)
    total += factor_log_value(g, static_cast<int>(fi), clique_values(g, g.factors[fi], assignment));
  return total;
}

namespace {

int slot_of(const GroundFactor& f, int var) {
  for (std::size_t j = 0; j < f.vars.size(); ++j)
    if (f.vars[j] == var) return static_cast<int>(j);
  throw UsageError("variable is not part of the factor");
}

// Clique rows for every candidate value of variable i, other slots frozen at
// the frame values.
Mat candidate_rows(const GroundGraph& g, const GroundFactor& f, int i, ConstVecRef frame,
                   ConstVecRef candidates) {
  const int slot = slot_of(f, i);
  Mat rows(candidates.size(), f.vars.size());
  for (std::size_t j = 0; j < f.vars.size(); ++j)
    rows.col(j).setConstant(frame[f.vars[j]]);
  rows.col(slot) = candidates;
  return rows;
}

Vec accumulate_bi(const GroundGraph& g, int i, ConstVecRef frame, ConstVecRef candidates,
                  bool with_helpers) {
  Vec total = Vec::Zero(candidates.size());
  for (int fi : g.blanket[i]) {
    const GroundFactor& f = g.factors[fi];
    const Parfactor& pf = g.model->parfactors[f.parfactor];
    const Mat rows = candidate_rows(g, f, i, frame, candidates);
    for (int ni : pf.neural) {
      const NeuralEval ev = neural_log_potential(g.model->neural[ni], rows);
      total += ev.value;
    }
    for (int mi : pf.mlns) {
      const MlnPotential& rule = g.model->mlns[mi];
      for (Eigen::Index r = 0; r < rows.rows(); ++r)
        total[r] += mln_log_potential(rule, rows.row(r).transpose());
    }
    if (with_helpers) {
      const HelperDistribution& h = g.model->helpers[pf.helper];
      for (Eigen::Index r = 0; r < rows.rows(); ++r)
        total[r] += helper_log_density(h, rows.row(r).transpose());
    }
  }
  return total;
}

}  // namespace

Vec log_bi(const GroundGraph& g, int i, ConstVecRef frame, ConstVecRef candidates) {
  return accumulate_bi(g, i, frame, candidates, true);
}

Vec log_bi_potentials(const GroundGraph& g, int i, ConstVecRef frame, ConstVecRef candidates) {
  return accumulate_bi(g, i, frame, candidates, false);
}

Proposal1D build_proposal(const GroundGraph& g, int i, ConstVecRef frame) {
  std::vector<Cond1D> parts;
  parts.reserve(g.blanket[i].size());
  for (int fi : g.blanket[i]) {
    const GroundFactor& f = g.factors[fi];
    const Parfactor& pf = g.model->parfactors[f.parfactor];
    const HelperDistribution& h = g.model->helpers[pf.helper];
    parts.push_back(
        helper_conditional_1d(h, slot_of(f, i), clique_values(g, f, frame)));
  }
  return combine_conditionals(g.variables[i].domain, parts,
                              "variable '" + g.variables[i].name + "'");
}

}  // namespace rnmrf
