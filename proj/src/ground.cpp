#include "rnmrf/ground.hpp"

#include <algorithm>

namespace rnmrf {

int GroundGraph::var_index(const std::string& name) const {
  const auto it = index_of.find(name);
  return it == index_of.end() ? -1 : it->second;
}

std::vector<int> GroundGraph::free_variables() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (!variables[i].has_evidence) out.push_back(static_cast<int>(i));
  return out;
}

void GroundGraph::set_evidence(const std::string& name, double value) {
  const int v = var_index(name);
  if (v < 0) throw DataError("evidence names unknown variable '" + name + "'");
  if (!variables[v].domain.contains(value))
    throw DataError("evidence value for '" + name + "' is outside its domain");
  variables[v].has_evidence = true;
  variables[v].evidence = value;
}

void GroundGraph::clear_evidence() {
  for (GroundVariable& v : variables) v.has_evidence = false;
}

namespace {

std::string resolve(const Term& t, const Parfactor& pf, const Substitution& sub) {
  if (!t.is_var) return t.text;
  const int lv = pf.logvar_index(t.text);
  return sub[lv];
}

bool admits(const RelationalModel& model, const Parfactor& pf,
            const Constraint& c, const Substitution& sub,
            const RelationStore& relations) {
  for (const Constraint::Item& item : c.items) {
    switch (item.kind) {
      case Constraint::Item::Kind::Eq:
        if (resolve(item.a, pf, sub) != resolve(item.b, pf, sub)) return false;
        break;
      case Constraint::Item::Kind::Ne:
        if (resolve(item.a, pf, sub) == resolve(item.b, pf, sub)) return false;
        break;
      case Constraint::Item::Kind::Rel: {
        std::vector<std::string> t;
        t.reserve(item.args.size());
        for (const Term& a : item.args) t.push_back(resolve(a, pf, sub));
        if (!relations.contains(item.relation, t)) return false;
        break;
      }
    }
  }
  (void)model;
  return true;
}

}  // namespace

std::vector<Substitution> enumerate_substitutions(const RelationalModel& model,
                                                  const Parfactor& pf,
                                                  const Universe& universe,
                                                  const RelationStore& relations) {
  for (const Constraint::Item& item : pf.constraint.items)
    if (item.kind == Constraint::Item::Kind::Rel && !model.has_relation(item.relation))
      throw ModelError("constraint references undeclared relation '" + item.relation + "'");

  std::vector<std::vector<std::string>> pools;
  pools.reserve(pf.logvars.size());
  for (const LogVar& lv : pf.logvars) {
    const auto it = universe.find(lv.population);
    if (it == universe.end())
      throw ModelError("unknown population '" + lv.population + "' for logical variable '" +
                       lv.name + "'");
    std::vector<std::string> pool = it->second;
    std::sort(pool.begin(), pool.end());
    for (std::size_t i = 1; i < pool.size(); ++i)
      if (pool[i] == pool[i - 1])
        throw ModelError("population '" + lv.population + "' repeats entity '" + pool[i] + "'");
    pools.push_back(std::move(pool));
  }

  std::vector<Substitution> out;
  if (pf.logvars.empty()) {
    Substitution empty;
    if (admits(model, pf, pf.constraint, empty, relations)) out.push_back(empty);
    return out;
  }
  for (const auto& pool : pools)
    if (pool.empty()) return out;

  // Odometer with the last variable fastest: output is lexicographic in the
  // substitution tuple because each pool is sorted.
  std::vector<std::size_t> idx(pools.size(), 0);
  Substitution sub(pools.size());
  while (true) {
    for (std::size_t i = 0; i < pools.size(); ++i) sub[i] = pools[i][idx[i]];
    if (admits(model, pf, pf.constraint, sub, relations)) out.push_back(sub);
    std::size_t p = pools.size();
    while (p > 0) {
      --p;
      if (++idx[p] < pools[p].size()) break;
      idx[p] = 0;
      if (p == 0) return out;
    }
  }
}

GroundGraph ground(const RelationalModel& model, const Universe& universe,
                   const RelationStore& relations,
                   const std::map<std::string, double>& evidence) {
  GroundGraph g;
  g.model = &model;
  g.factors_of_parfactor.resize(model.parfactors.size());

  for (std::size_t k = 0; k < model.parfactors.size(); ++k) {
    const Parfactor& pf = model.parfactors[k];
    const std::vector<Substitution> subs =
        enumerate_substitutions(model, pf, universe, relations);
    for (const Substitution& sub : subs) {
      GroundFactor f;
      f.parfactor = static_cast<int>(k);
      f.subst = sub;
      f.vars.reserve(pf.atoms.size());
      for (const AtomRef& atom : pf.atoms) {
        std::vector<std::string> inst;
        inst.reserve(atom.args.size());
        for (const Term& t : atom.args) inst.push_back(resolve(t, pf, sub));
        const std::string name =
            atom_instance_name(model.predicates[atom.predicate].name, inst);
        int vi = g.var_index(name);
        if (vi < 0) {
          vi = static_cast<int>(g.variables.size());
          GroundVariable v;
          v.name = name;
          v.predicate = atom.predicate;
          v.args = std::move(inst);
          v.domain = model.value_domain(atom.predicate);
          g.variables.push_back(std::move(v));
          g.index_of.emplace(name, vi);
        }
        if (std::find(f.vars.begin(), f.vars.end(), vi) != f.vars.end())
          throw ModelError("parfactor '" + pf.id + "' grounds to a factor mentioning '" +
                           name + "' twice");
        f.vars.push_back(vi);
      }
      g.factors_of_parfactor[k].push_back(static_cast<int>(g.factors.size()));
      g.factors.push_back(std::move(f));
    }
  }

  g.blanket.assign(g.variables.size(), {});
  for (std::size_t fi = 0; fi < g.factors.size(); ++fi)
    for (int vi : g.factors[fi].vars) g.blanket[vi].push_back(static_cast<int>(fi));

  for (const auto& [name, value] : evidence) g.set_evidence(name, value);
  return g;
}

GroundingSample sample_groundings(const GroundGraph& graph, int k, Rng& rng) {
  if (k < 1) throw UsageError("sample_groundings requires k >= 1");
  const int n = static_cast<int>(graph.variables.size());
  const int take = std::min(k, n);

  // Partial Fisher-Yates; only the first `take` slots are materialized.
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  GroundingSample s;
  s.vars.reserve(take);
  for (int i = 0; i < take; ++i) {
    const int j = i + static_cast<int>(rng.uniform_index(n - i));
    std::swap(pool[i], pool[j]);
    s.vars.push_back(pool[i]);
  }
  std::sort(s.vars.begin(), s.vars.end());

  std::vector<char> seen(graph.factors.size(), 0);
  for (int vi : s.vars)
    for (int fi : graph.blanket[vi]) seen[fi] = 1;
  for (std::size_t fi = 0; fi < seen.size(); ++fi)
    if (seen[fi]) s.factors.push_back(static_cast<int>(fi));
  return s;
}

MarkovBlanket markov_blanket(const GroundGraph& graph, int var) {
  if (var < 0 || var >= static_cast<int>(graph.variables.size()))
    throw UsageError("markov_blanket: variable index out of range");
  MarkovBlanket mb;
  mb.factors = graph.blanket[var];
  for (int fi : mb.factors)
    for (int vi : graph.factors[fi].vars)
      if (vi != var) mb.neighbors.push_back(vi);
  std::sort(mb.neighbors.begin(), mb.neighbors.end());
  mb.neighbors.erase(std::unique(mb.neighbors.begin(), mb.neighbors.end()),
                     mb.neighbors.end());
  return mb;
}

}  // namespace rnmrf
