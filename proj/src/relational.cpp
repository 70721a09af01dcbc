#include "rnmrf/relational.hpp"

#include <algorithm>

#include "rnmrf/rng.hpp"

namespace rnmrf {

bool RelationStore::contains(const std::string& rel,
                             const std::vector<std::string>& t) const {
  const auto it = tuples.find(rel);
  if (it == tuples.end()) return false;
  return it->second.count(t) != 0;
}

void RelationStore::add(const std::string& rel, std::vector<std::string> t) {
  tuples[rel].insert(std::move(t));
}

int Parfactor::logvar_index(const std::string& name) const {
  for (std::size_t i = 0; i < logvars.size(); ++i)
    if (logvars[i].name == name) return static_cast<int>(i);
  return -1;
}

int RelationalModel::predicate_index(const std::string& name) const {
  for (std::size_t i = 0; i < predicates.size(); ++i)
    if (predicates[i].name == name) return static_cast<int>(i);
  return -1;
}

bool RelationalModel::has_relation(const std::string& name) const {
  return std::find(relations.begin(), relations.end(), name) != relations.end();
}

const DomainSpec& RelationalModel::value_domain(int predicate) const {
  if (predicate < 0 || predicate >= static_cast<int>(predicates.size()))
    throw UsageError("predicate index out of range");
  const auto it = domains.find(predicates[predicate].domain_name);
  if (it == domains.end())
    throw ModelError("predicate '" + predicates[predicate].name +
                     "' references unknown domain '" +
                     predicates[predicate].domain_name + "'");
  return it->second;
}

std::vector<DomainSpec> RelationalModel::clique_domains(const Parfactor& pf) const {
  std::vector<DomainSpec> out;
  out.reserve(pf.atoms.size());
  for (const AtomRef& a : pf.atoms) out.push_back(value_domain(a.predicate));
  return out;
}

namespace {

void validate_term(const RelationalModel& model, const Parfactor& pf,
                   const Term& t, const std::string& where) {
  if (t.text.empty())
    throw ModelError("parfactor '" + pf.id + "': empty term in " + where);
  if (t.is_var && pf.logvar_index(t.text) < 0)
    throw ModelError("parfactor '" + pf.id + "': logical variable '" + t.text +
                     "' in " + where + " is not declared");
  (void)model;
}

}  // namespace

void RelationalModel::validate() const {
  for (const auto& [name, dom] : domains) dom.validate(name);

  for (std::size_t i = 0; i < predicates.size(); ++i) {
    const Predicate& p = predicates[i];
    if (p.name.empty()) throw ModelError("predicate with empty name");
    for (std::size_t j = i + 1; j < predicates.size(); ++j)
      if (predicates[j].name == p.name)
        throw ModelError("duplicate predicate '" + p.name + "'");
    if (p.arg_pops.empty())
      throw ModelError("predicate '" + p.name + "' takes no arguments");
    for (const std::string& pop : p.arg_pops)
      if (pop.empty())
        throw ModelError("predicate '" + p.name + "' has an unnamed population");
    if (domains.find(p.domain_name) == domains.end())
      throw ModelError("predicate '" + p.name + "' references unknown domain '" +
                       p.domain_name + "'");
  }
  for (std::size_t i = 0; i < relations.size(); ++i)
    for (std::size_t j = i + 1; j < relations.size(); ++j)
      if (relations[i] == relations[j])
        throw ModelError("duplicate relation '" + relations[i] + "'");

  if (helpers.size() != parfactors.size())
    throw ModelError("expected one helper per parfactor");

  for (std::size_t k = 0; k < parfactors.size(); ++k) {
    const Parfactor& pf = parfactors[k];
    if (pf.atoms.empty())
      throw ModelError("parfactor '" + pf.id + "' has no atoms");
    for (std::size_t i = 0; i < pf.logvars.size(); ++i) {
      if (pf.logvars[i].name.empty() || pf.logvars[i].population.empty())
        throw ModelError("parfactor '" + pf.id + "' has an unnamed logical variable");
      for (std::size_t j = i + 1; j < pf.logvars.size(); ++j)
        if (pf.logvars[j].name == pf.logvars[i].name)
          throw ModelError("parfactor '" + pf.id + "' repeats logical variable '" +
                           pf.logvars[i].name + "'");
    }
    for (const AtomRef& a : pf.atoms) {
      if (a.predicate < 0 || a.predicate >= static_cast<int>(predicates.size()))
        throw ModelError("parfactor '" + pf.id + "' references unknown predicate");
      const Predicate& p = predicates[a.predicate];
      if (static_cast<int>(a.args.size()) != p.arity())
        throw ModelError("parfactor '" + pf.id + "': atom " + p.name +
                         " has wrong arity");
      for (std::size_t j = 0; j < a.args.size(); ++j) {
        validate_term(*this, pf, a.args[j], "atom " + p.name);
        if (a.args[j].is_var) {
          const int lv = pf.logvar_index(a.args[j].text);
          if (pf.logvars[lv].population != p.arg_pops[j])
            throw ModelError("parfactor '" + pf.id + "': variable '" +
                             a.args[j].text + "' has population '" +
                             pf.logvars[lv].population + "' but argument " +
                             std::to_string(j) + " of " + p.name + " expects '" +
                             p.arg_pops[j] + "'");
        }
      }
    }
    for (const Constraint::Item& item : pf.constraint.items) {
      if (item.kind == Constraint::Item::Kind::Rel) {
        if (!has_relation(item.relation))
          throw ModelError("parfactor '" + pf.id + "' constraint references " +
                           "undeclared relation '" + item.relation + "'");
        for (const Term& t : item.args) validate_term(*this, pf, t, "constraint");
      } else {
        validate_term(*this, pf, item.a, "constraint");
        validate_term(*this, pf, item.b, "constraint");
      }
    }

    if (pf.helper < 0 || pf.helper >= static_cast<int>(helpers.size()))
      throw ModelError("parfactor '" + pf.id + "' has no helper");
    const std::vector<DomainSpec> cd = clique_domains(pf);
    const HelperDistribution& h = helpers[pf.helper];
    if (h.domains.size() != cd.size())
      throw ModelError("parfactor '" + pf.id + "': helper arity " +
                       std::to_string(h.domains.size()) + " does not match clique arity " +
                       std::to_string(cd.size()));
    for (std::size_t j = 0; j < cd.size(); ++j)
      if (!(h.domains[j] == cd[j]))
        throw ModelError("parfactor '" + pf.id + "': helper domain mismatch at slot " +
                         std::to_string(j));
    h.validate("parfactor '" + pf.id + "'");

    for (int ni : pf.neural) {
      if (ni < 0 || ni >= static_cast<int>(neural.size()))
        throw ModelError("parfactor '" + pf.id + "' references unknown neural potential");
      const NeuralPotential& np = neural[ni];
      if (np.fm.in_domains.size() != cd.size())
        throw ModelError("parfactor '" + pf.id + "': neural potential arity mismatch");
      for (std::size_t j = 0; j < cd.size(); ++j)
        if (!(np.fm.in_domains[j] == cd[j]))
          throw ModelError("parfactor '" + pf.id +
                           "': neural potential domain mismatch at slot " +
                           std::to_string(j));
      np.fm.validate();
      if (!(np.clamp_lo < np.clamp_hi))
        throw ModelError("parfactor '" + pf.id + "': clamp bounds must satisfy a < b");
    }
    for (int mi : pf.mlns) {
      if (mi < 0 || mi >= static_cast<int>(mlns.size()))
        throw ModelError("parfactor '" + pf.id + "' references unknown MLN potential");
      mlns[mi].validate(static_cast<int>(cd.size()));
    }
  }

  std::vector<bool> neural_used(neural.size(), false), mln_used(mlns.size(), false);
  std::vector<bool> helper_used(helpers.size(), false);
  for (const Parfactor& pf : parfactors) {
    if (pf.helper >= 0) {
      if (helper_used[pf.helper])
        throw ModelError("helper shared between parfactors");
      helper_used[pf.helper] = true;
    }
    for (int ni : pf.neural) neural_used[ni] = true;
    for (int mi : pf.mlns) mln_used[mi] = true;
  }
  for (std::size_t i = 0; i < neural_used.size(); ++i)
    if (!neural_used[i]) throw ModelError("orphan neural potential " + std::to_string(i));
  for (std::size_t i = 0; i < mln_used.size(); ++i)
    if (!mln_used[i]) throw ModelError("orphan MLN potential " + std::to_string(i));
}

void RelationalModel::init_params(std::uint64_t seed) {
  for (std::size_t i = 0; i < neural.size(); ++i) {
    Rng rng(substream_seed(seed, 0x6e6e, i));
    neural[i].mlp.init_xavier(rng);
  }
}

std::string atom_instance_name(const std::string& pred,
                               const std::vector<std::string>& args) {
  std::string out = pred;
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ',';
    out += args[i];
  }
  out += ')';
  return out;
}

}  // namespace rnmrf
