#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rnmrf/domain.hpp"
#include "rnmrf/helpers.hpp"
#include "rnmrf/potentials.hpp"
#include "rnmrf/types.hpp"

namespace rnmrf {

// Population name -> entity instances. Order of the stored list is not
// significant; enumeration sorts a copy so results are deterministic.
using Universe = std::map<std::string, std::vector<std::string>>;

// Extensional relations (for constraints such as nb). Tuples are ordered.
struct RelationStore {
  std::map<std::string, std::set<std::vector<std::string>>> tuples;

  bool has(const std::string& rel) const { return tuples.count(rel) != 0; }
  bool contains(const std::string& rel, const std::vector<std::string>& t) const;
  void add(const std::string& rel, std::vector<std::string> t);
};

struct Predicate {
  std::string name;
  std::vector<std::string> arg_vars;  // placeholder names from the declaration
  std::vector<std::string> arg_pops;  // population per argument
  std::string domain_name;            // value domain

  int arity() const { return static_cast<int>(arg_pops.size()); }
};

// Argument of an atom or constraint inside a parfactor: either a logical
// variable declared by the parfactor or a constant instance.
struct Term {
  bool is_var = true;
  std::string text;

  static Term var(std::string n) { return Term{true, std::move(n)}; }
  static Term constant(std::string n) { return Term{false, std::move(n)}; }
  bool operator==(const Term&) const = default;
};

struct AtomRef {
  int predicate = -1;
  std::vector<Term> args;
};

struct LogVar {
  std::string name;
  std::string population;
};

// Conjunction of atomic constraints over a substitution. Empty = always true.
struct Constraint {
  struct Item {
    enum class Kind { Eq, Ne, Rel };
    Kind kind = Kind::Rel;
    Term a, b;                   // Eq / Ne operands
    std::string relation;        // Rel
    std::vector<Term> args;      // Rel arguments
  };
  std::vector<Item> items;

  bool trivial() const { return items.empty(); }
};

// Substitution: one instance per logical variable, aligned with the owning
// parfactor's logvar list.
using Substitution = std::vector<std::string>;

struct Parfactor {
  std::string id;
  std::vector<LogVar> logvars;
  std::vector<AtomRef> atoms;
  Constraint constraint;
  int helper = -1;              // index into RelationalModel::helpers
  std::vector<int> neural;      // indices into RelationalModel::neural
  std::vector<int> mlns;        // indices into RelationalModel::mlns

  int arity() const { return static_cast<int>(atoms.size()); }
  int logvar_index(const std::string& name) const;  // -1 if absent
};

struct RelationalModel {
  std::map<std::string, DomainSpec> domains;
  std::vector<Predicate> predicates;
  std::vector<std::string> relations;            // declared extensional relations
  std::map<std::string, std::string> relation_files;  // optional data source per relation
  std::vector<Parfactor> parfactors;
  std::vector<HelperDistribution> helpers;       // one per parfactor
  std::vector<NeuralPotential> neural;
  std::vector<MlnPotential> mlns;

  int predicate_index(const std::string& name) const;  // -1 if absent
  bool has_relation(const std::string& name) const;
  const DomainSpec& value_domain(int predicate) const;
  std::vector<DomainSpec> clique_domains(const Parfactor& pf) const;

  void validate() const;
  // Seeds every neural potential; MLN weights and helper parameters keep
  // their declared values.
  void init_params(std::uint64_t seed);
};

std::string atom_instance_name(const std::string& pred,
                               const std::vector<std::string>& args);

}  // namespace rnmrf
