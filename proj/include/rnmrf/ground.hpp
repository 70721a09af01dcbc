#pragma once

#include <map>
#include <string>
#include <vector>

#include "rnmrf/relational.hpp"
#include "rnmrf/rng.hpp"
#include "rnmrf/types.hpp"

namespace rnmrf {

struct GroundVariable {
  std::string name;  // pred(inst1,inst2,...)
  int predicate = -1;
  std::vector<std::string> args;
  DomainSpec domain;
  bool has_evidence = false;
  double evidence = 0.0;
};

struct GroundFactor {
  int parfactor = -1;
  Substitution subst;
  std::vector<int> vars;  // one per atom, in atom order
};

// Propositional factor graph. Immutable after construction; safe for
// concurrent reads.
struct GroundGraph {
  const RelationalModel* model = nullptr;
  std::vector<GroundVariable> variables;
  std::vector<GroundFactor> factors;
  std::vector<std::vector<int>> blanket;  // variable -> incident factor ids
  std::map<std::string, int> index_of;
  std::vector<std::vector<int>> factors_of_parfactor;

  int var_index(const std::string& name) const;  // -1 if absent
  std::vector<int> free_variables() const;
  void set_evidence(const std::string& name, double value);
  void clear_evidence();
};

// All substitutions admitted by the parfactor's constraint, in lexicographic
// order of the instance tuple (populations sorted first).
std::vector<Substitution> enumerate_substitutions(const RelationalModel& model,
                                                  const Parfactor& pf,
                                                  const Universe& universe,
                                                  const RelationStore& relations);

GroundGraph ground(const RelationalModel& model, const Universe& universe,
                   const RelationStore& relations,
                   const std::map<std::string, double>& evidence = {});

// Uniform subset of min(k, |variables|) variables plus every factor incident
// to the subset. Both lists come back sorted.
struct GroundingSample {
  std::vector<int> vars;
  std::vector<int> factors;
};
GroundingSample sample_groundings(const GroundGraph& graph, int k, Rng& rng);

struct MarkovBlanket {
  std::vector<int> factors;
  std::vector<int> neighbors;  // co-occurring variables, sorted, excludes var
};
MarkovBlanket markov_blanket(const GroundGraph& graph, int var);

}  // namespace rnmrf
