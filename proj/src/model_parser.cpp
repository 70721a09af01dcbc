#include "rnmrf/model_parser.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "rnmrf/mathutil.hpp"

namespace rnmrf {

namespace {

std::string fmt_double(double v) {
  if (v == kPosInf) return "inf";
  if (v == kNegInf) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void fail(int line, std::size_t col, const std::string& msg) {
  throw ModelError("syntax error at line " + std::to_string(line) + ", col " +
                   std::to_string(col + 1) + ": " + msg);
}

struct Cursor {
  std::string s;
  int line = 0;
  std::size_t pos = 0;

  bool eof() const { return pos >= s.size(); }
  char peek() const { return eof() ? '\0' : s[pos]; }
  void skip_ws() {
    while (!eof() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
  bool try_eat(char c) {
    skip_ws();
    if (peek() != c) return false;
    ++pos;
    return true;
  }
  void expect(char c, const std::string& what) {
    if (!try_eat(c)) fail(line, pos, "expected '" + std::string(1, c) + "' " + what);
  }
  bool try_word(const std::string& w) {
    skip_ws();
    if (s.compare(pos, w.size(), w) != 0) return false;
    const std::size_t after = pos + w.size();
    if (after < s.size() && (std::isalnum(static_cast<unsigned char>(s[after])) || s[after] == '_'))
      return false;
    pos = after;
    return true;
  }
  std::string ident() {
    skip_ws();
    const std::size_t start = pos;
    if (!eof() && (std::isalpha(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) {
      ++pos;
      while (!eof() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
    }
    if (start == pos) fail(line, pos, "expected an identifier");
    return s.substr(start, pos - start);
  }
  double number() {
    skip_ws();
    const char* begin = s.c_str() + pos;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail(line, pos, "expected a number");
    pos += static_cast<std::size_t>(end - begin);
    return v;
  }
  std::string quoted() {
    skip_ws();
    if (peek() != '"') fail(line, pos, "expected a double-quoted string");
    const std::size_t start = ++pos;
    while (!eof() && s[pos] != '"') ++pos;
    if (eof()) fail(line, pos, "unterminated string");
    const std::string out = s.substr(start, pos - start);
    ++pos;
    return out;
  }
  void end_of_line(const std::string& what) {
    skip_ws();
    if (!eof()) fail(line, pos, "unexpected trailing text after " + what);
  }
};

bool is_logvar_name(const std::string& t) {
  return !t.empty() && std::isupper(static_cast<unsigned char>(t[0]));
}

Term parse_term(Cursor& c) {
  const std::string t = c.ident();
  return is_logvar_name(t) ? Term::var(t) : Term::constant(t);
}

// --- parfactor intermediate specs; objects are assembled once atoms are known

struct HelperSpec {
  std::string family;
  bool has_params = false;
  std::vector<double> a, b, c;  // family-specific parameter groups
};

struct PotSpec {
  enum class Kind { None, Nn, Mln };
  Kind kind = Kind::None;
  std::vector<int> layers;
  double clamp_lo = -10.0, clamp_hi = 10.0;
  FeatureMapKind fm = FeatureMapKind::Identity;
  double w0 = 0.0;
  std::string formula;
};

std::vector<double> parse_number_list(Cursor& c, char open, char close) {
  std::vector<double> out;
  c.expect(open, "to open a list");
  c.skip_ws();
  if (c.peek() != close) {
    out.push_back(c.number());
    while (c.try_eat(',')) out.push_back(c.number());
  }
  c.expect(close, "to close the list");
  return out;
}

HelperSpec parse_helper_spec(Cursor& c) {
  HelperSpec h;
  h.family = c.ident();
  if (h.family != "Uniform" && h.family != "Gaussian" && h.family != "LG" &&
      h.family != "Categorical" && h.family != "CG")
    fail(c.line, c.pos, "unknown helper family '" + h.family + "'");
  c.skip_ws();
  if (c.peek() != '(') return h;
  h.has_params = true;
  if (h.family == "LG") {
    c.expect('(', "");
    h.a.push_back(c.number());
    c.expect(',', "between LG parameters");
    h.b.push_back(c.number());
    c.expect(',', "between LG parameters");
    h.c.push_back(c.number());
    c.expect(')', "after LG parameters");
  } else if (h.family == "Gaussian") {
    c.expect('(', "");
    h.a.push_back(c.number());
    while (c.try_eat(',')) h.a.push_back(c.number());
    c.expect(';', "between Gaussian means and variances");
    h.b.push_back(c.number());
    while (c.try_eat(',')) h.b.push_back(c.number());
    c.expect(')', "after Gaussian parameters");
  } else {
    fail(c.line, c.pos, "helper family '" + h.family + "' takes no parameters");
  }
  return h;
}

PotSpec parse_pot_spec(Cursor& c) {
  PotSpec p;
  const std::string kind = c.ident();
  if (kind == "none") {
    p.kind = PotSpec::Kind::None;
    return p;
  }
  if (kind == "NN") {
    p.kind = PotSpec::Kind::Nn;
    c.expect('(', "after NN");
    bool first = true;
    while (true) {
      c.skip_ws();
      if (c.peek() == ')') break;
      if (!first) c.expect(',', "between NN arguments");
      first = false;
      const std::string key = c.ident();
      c.expect('=', "after NN argument name");
      if (key == "layers") {
        for (double v : parse_number_list(c, '[', ']')) {
          if (v < 1 || v != std::floor(v)) fail(c.line, c.pos, "layer sizes must be positive integers");
          p.layers.push_back(static_cast<int>(v));
        }
      } else if (key == "clamp") {
        const std::vector<double> cl = parse_number_list(c, '[', ']');
        if (cl.size() != 2) fail(c.line, c.pos, "clamp takes [a, b]");
        p.clamp_lo = cl[0];
        p.clamp_hi = cl[1];
      } else if (key == "fm") {
        const std::string fm = c.ident();
        if (fm == "identity") p.fm = FeatureMapKind::Identity;
        else if (fm == "absdiff") p.fm = FeatureMapKind::AbsDiff;
        else if (fm == "diff") p.fm = FeatureMapKind::Diff;
        else fail(c.line, c.pos, "unknown feature map '" + fm + "'");
      } else {
        fail(c.line, c.pos, "unknown NN argument '" + key + "'");
      }
    }
    c.expect(')', "after NN arguments");
    return p;
  }
  if (kind == "MLN") {
    p.kind = PotSpec::Kind::Mln;
    c.expect('(', "after MLN");
    const std::string key = c.ident();
    if (key != "w0") fail(c.line, c.pos, "MLN expects w0=<value>");
    c.expect('=', "after w0");
    p.w0 = c.number();
    c.expect(',', "between MLN weight and formula");
    p.formula = c.quoted();
    c.expect(')', "after MLN formula");
    return p;
  }
  fail(c.line, c.pos, "unknown potential kind '" + kind + "'");
}

// --- formula parsing

struct FormulaParser {
  Cursor c;
  const RelationalModel& model;
  const Parfactor& pf;
  std::vector<std::string> atom_texts;

  FormulaParser(const std::string& text, const RelationalModel& m, const Parfactor& p)
      : model(m), pf(p) {
    c.s = text;
    c.line = 0;
    for (const AtomRef& a : pf.atoms) {
      std::vector<std::string> args;
      for (const Term& t : a.args) args.push_back(t.text);
      atom_texts.push_back(atom_instance_name(model.predicates[a.predicate].name, args));
    }
  }

  [[noreturn]] void err(const std::string& msg) {
    throw ModelError("in formula '" + c.s + "': " + msg);
  }

  int parse_atom_slot() {
    const std::string name = c.ident();
    std::string text = name + "(";
    c.expect('(', "after predicate in formula");
    bool first = true;
    while (true) {
      c.skip_ws();
      if (c.peek() == ')') break;
      if (!first) {
        c.expect(',', "between atom arguments");
        text += ',';
      }
      first = false;
      text += c.ident();
    }
    c.expect(')', "after atom arguments");
    text += ')';
    for (std::size_t j = 0; j < atom_texts.size(); ++j)
      if (atom_texts[j] == text) return static_cast<int>(j);
    err("atom " + text + " is not part of the parfactor's clique");
  }

  Formula::CmpOp parse_cmp_op() {
    c.skip_ws();
    auto two = [&](char a, char b) {
      return c.peek() == a && c.pos + 1 < c.s.size() && c.s[c.pos + 1] == b;
    };
    if (two('>', '=')) { c.pos += 2; return Formula::CmpOp::Ge; }
    if (two('<', '=')) { c.pos += 2; return Formula::CmpOp::Le; }
    if (two('=', '=')) { c.pos += 2; return Formula::CmpOp::Eq; }
    if (two('!', '=')) { c.pos += 2; return Formula::CmpOp::Ne; }
    if (c.try_eat('>')) return Formula::CmpOp::Gt;
    if (c.try_eat('<')) return Formula::CmpOp::Lt;
    err("expected a comparison operator");
  }

  double parse_label(int slot) {
    const DomainSpec& dom = model.value_domain(pf.atoms[slot].predicate);
    c.skip_ws();
    ++c.pos;  // opening quote, checked by caller
    const std::size_t start = c.pos;
    while (!c.eof() && c.s[c.pos] != '\'') ++c.pos;
    if (c.eof()) err("unterminated label");
    const std::string label = c.s.substr(start, c.pos - start);
    ++c.pos;
    if (!dom.is_discrete()) err("label '" + label + "' compared against a continuous slot");
    const int li = dom.label_index(label);
    if (li < 0) err("label '" + label + "' is not in the slot's domain");
    return static_cast<double>(li);
  }

  Formula parse_cmp() {
    const int slot = parse_atom_slot();
    const Formula::CmpOp op = parse_cmp_op();
    c.skip_ws();
    if (c.peek() == '\'') return Formula::compare(slot, op, parse_label(slot));
    if (std::isalpha(static_cast<unsigned char>(c.peek())) || c.peek() == '_')
      return Formula::compare_slots(slot, op, parse_atom_slot());
    return Formula::compare(slot, op, c.number());
  }

  Formula parse_unary() {
    c.skip_ws();
    if (c.try_eat('!')) return Formula::lnot(parse_unary());
    if (c.peek() == '(') {
      c.expect('(', "");
      Formula f = parse_implies();
      c.expect(')', "to close the group");
      return f;
    }
    return parse_cmp();
  }

  Formula parse_and() {
    Formula f = parse_unary();
    while (true) {
      c.skip_ws();
      if (c.peek() == '&' && c.pos + 1 < c.s.size() && c.s[c.pos + 1] == '&') {
        c.pos += 2;
        f = Formula::land(std::move(f), parse_unary());
      } else {
        return f;
      }
    }
  }

  Formula parse_or() {
    Formula f = parse_and();
    while (true) {
      c.skip_ws();
      if (c.peek() == '|' && c.pos + 1 < c.s.size() && c.s[c.pos + 1] == '|') {
        c.pos += 2;
        f = Formula::lor(std::move(f), parse_and());
      } else {
        return f;
      }
    }
  }

  Formula parse_implies() {
    Formula f = parse_or();
    c.skip_ws();
    if (c.peek() == '=' && c.pos + 1 < c.s.size() && c.s[c.pos + 1] == '>') {
      c.pos += 2;
      return Formula::implies(std::move(f), parse_implies());
    }
    return f;
  }

  Formula run() {
    Formula f = parse_implies();
    c.skip_ws();
    if (!c.eof()) err("unexpected trailing text");
    return f;
  }
};

}  // namespace

Formula parse_formula_text(const std::string& text, const RelationalModel& model,
                           const Parfactor& pf) {
  return FormulaParser(text, model, pf).run();
}

namespace {

void parse_domain_line(Cursor& c, RelationalModel& m) {
  const std::string name = c.ident();
  if (m.domains.count(name)) fail(c.line, c.pos, "domain '" + name + "' declared twice");
  const std::string kind = c.ident();
  if (kind == "discrete") {
    c.expect('{', "to open the label list");
    std::vector<std::string> labels;
    labels.push_back(c.ident());
    while (c.try_eat(',')) labels.push_back(c.ident());
    c.expect('}', "to close the label list");
    c.end_of_line("the domain declaration");
    m.domains.emplace(name, DomainSpec::discrete(std::move(labels)));
    return;
  }
  if (kind != "continuous") fail(c.line, c.pos, "expected 'discrete' or 'continuous'");
  c.skip_ws();
  if (c.try_word("unbounded")) {
    c.end_of_line("the domain declaration");
    m.domains.emplace(name, DomainSpec::continuous_unbounded());
    return;
  }
  c.expect('[', "to open the interval");
  const double lo = c.number();
  c.expect(',', "between interval bounds");
  const double hi = c.number();
  c.expect(']', "to close the interval");
  c.end_of_line("the domain declaration");
  m.domains.emplace(name, DomainSpec::continuous(lo, hi));
}

void parse_predicate_line(Cursor& c, RelationalModel& m) {
  Predicate p;
  p.name = c.ident();
  if (m.predicate_index(p.name) >= 0)
    fail(c.line, c.pos, "predicate '" + p.name + "' declared twice");
  c.expect('(', "after the predicate name");
  while (true) {
    p.arg_vars.push_back(c.ident());
    c.expect(':', "between argument variable and population");
    p.arg_pops.push_back(c.ident());
    if (!c.try_eat(',')) break;
  }
  c.expect(')', "after the argument list");
  c.expect('-', "in '->'");
  c.expect('>', "in '->'");
  p.domain_name = c.ident();
  if (!m.domains.count(p.domain_name))
    fail(c.line, c.pos, "predicate '" + p.name + "' references unknown domain '" +
                            p.domain_name + "'");
  c.end_of_line("the predicate declaration");
  m.predicates.push_back(std::move(p));
}

void parse_relation_line(Cursor& c, RelationalModel& m) {
  const std::string name = c.ident();
  if (m.has_relation(name)) fail(c.line, c.pos, "relation '" + name + "' declared twice");
  m.relations.push_back(name);
  c.skip_ws();
  if (c.eof()) return;
  if (!c.try_word("from")) fail(c.line, c.pos, "expected 'from <file>' or end of line");
  c.skip_ws();
  if (c.eof()) fail(c.line, c.pos, "expected a file path after 'from'");
  std::string path = c.s.substr(c.pos);
  while (!path.empty() && (path.back() == ' ' || path.back() == '\t')) path.pop_back();
  c.pos = c.s.size();
  m.relation_files[name] = path;
}

void parse_parfactor_line(Cursor& c, RelationalModel& m) {
  Parfactor pf;
  pf.id = c.ident();
  c.expect(':', "after the parfactor id");

  if (!c.try_word("helper")) fail(c.line, c.pos, "expected helper=...");
  c.expect('=', "after 'helper'");
  const HelperSpec hs = parse_helper_spec(c);

  if (!c.try_word("potential")) fail(c.line, c.pos, "expected potential=...");
  c.expect('=', "after 'potential'");
  std::vector<PotSpec> pots;
  pots.push_back(parse_pot_spec(c));
  while (c.try_eat(',')) pots.push_back(parse_pot_spec(c));

  if (!c.try_word("atoms")) fail(c.line, c.pos, "expected atoms=[...]");
  c.expect('=', "after 'atoms'");
  c.expect('[', "to open the atom list");
  while (true) {
    AtomRef a;
    const std::string pred = c.ident();
    a.predicate = m.predicate_index(pred);
    if (a.predicate < 0) fail(c.line, c.pos, "unknown predicate '" + pred + "'");
    c.expect('(', "after the atom's predicate");
    while (true) {
      a.args.push_back(parse_term(c));
      if (!c.try_eat(',')) break;
    }
    c.expect(')', "after the atom's arguments");
    const Predicate& p = m.predicates[a.predicate];
    if (static_cast<int>(a.args.size()) != p.arity())
      fail(c.line, c.pos, "atom " + pred + " has wrong arity");
    for (std::size_t j = 0; j < a.args.size(); ++j) {
      if (!a.args[j].is_var) continue;
      const int lv = pf.logvar_index(a.args[j].text);
      if (lv < 0) {
        pf.logvars.push_back({a.args[j].text, p.arg_pops[j]});
      } else if (pf.logvars[lv].population != p.arg_pops[j]) {
        fail(c.line, c.pos, "logical variable '" + a.args[j].text +
                                "' used with two different populations");
      }
    }
    pf.atoms.push_back(std::move(a));
    if (!c.try_eat(',')) break;
  }
  c.expect(']', "to close the atom list");

  if (!c.try_word("constraint")) fail(c.line, c.pos, "expected constraint=...");
  c.expect('=', "after 'constraint'");
  if (!c.try_word("none")) {
    while (true) {
      Constraint::Item item;
      const std::size_t mark = c.pos;
      const std::string first = c.ident();
      c.skip_ws();
      if (c.peek() == '(') {
        item.kind = Constraint::Item::Kind::Rel;
        item.relation = first;
        c.expect('(', "");
        while (true) {
          item.args.push_back(parse_term(c));
          if (!c.try_eat(',')) break;
        }
        c.expect(')', "after the relation arguments");
      } else {
        c.pos = mark;
        item.a = parse_term(c);
        c.skip_ws();
        if (c.peek() == '!' && c.pos + 1 < c.s.size() && c.s[c.pos + 1] == '=') {
          c.pos += 2;
          item.kind = Constraint::Item::Kind::Ne;
        } else if (c.peek() == '=' && c.pos + 1 < c.s.size() && c.s[c.pos + 1] == '=') {
          c.pos += 2;
          item.kind = Constraint::Item::Kind::Eq;
        } else {
          fail(c.line, c.pos, "expected '==' or '!=' in the constraint");
        }
        item.b = parse_term(c);
      }
      pf.constraint.items.push_back(std::move(item));
      c.skip_ws();
      if (c.peek() == '&' && c.pos + 1 < c.s.size() && c.s[c.pos + 1] == '&') {
        c.pos += 2;
      } else {
        break;
      }
    }
  }
  c.end_of_line("the parfactor declaration");

  // Assemble the helper and potentials now that the clique is known.
  const std::vector<DomainSpec> cd = m.clique_domains(pf);
  HelperDistribution helper;
  if (hs.family == "Uniform") {
    helper = make_uniform_helper(cd);
  } else if (hs.family == "Gaussian") {
    if (hs.has_params) {
      const std::size_t d = cd.size();
      if (hs.a.size() != d || hs.b.size() != d)
        throw ModelError("line " + std::to_string(c.line) + ": Gaussian parameters must list " +
                         std::to_string(d) + " means and variances");
      Vec mean(d);
      Mat cov = Mat::Zero(d, d);
      for (std::size_t j = 0; j < d; ++j) {
        mean[j] = hs.a[j];
        cov(j, j) = hs.b[j];
      }
      helper = make_gaussian_helper(cd, mean, cov);
    } else {
      helper.family = HelperFamily::Gaussian;
      helper.domains = cd;
      helper.fitted = false;
    }
  } else if (hs.family == "LG") {
    if (hs.has_params) {
      helper = make_linear_gaussian_helper(cd, hs.a[0], hs.b[0], hs.c[0]);
    } else {
      helper.family = HelperFamily::LinearGaussian;
      helper.domains = cd;
      helper.fitted = false;
    }
  } else if (hs.family == "Categorical") {
    helper.family = HelperFamily::Categorical;
    helper.domains = cd;
    helper.fitted = false;
  } else {
    helper.family = HelperFamily::CategoricalGaussian;
    helper.domains = cd;
    helper.fitted = false;
  }
  pf.helper = static_cast<int>(m.helpers.size());
  m.helpers.push_back(std::move(helper));

  for (const PotSpec& ps : pots) {
    if (ps.kind == PotSpec::Kind::None) {
      if (pots.size() != 1)
        throw ModelError("line " + std::to_string(c.line) +
                         ": 'none' cannot be combined with other potentials");
    } else if (ps.kind == PotSpec::Kind::Nn) {
      if (!(ps.clamp_lo < ps.clamp_hi))
        throw ModelError("line " + std::to_string(c.line) + ": clamp bounds must satisfy a < b");
      pf.neural.push_back(static_cast<int>(m.neural.size()));
      m.neural.emplace_back(cd, ps.fm, ps.layers, ps.clamp_lo, ps.clamp_hi);
    } else {
      MlnPotential rule;
      rule.weight = ps.w0;
      rule.text = ps.formula;
      rule.formula = parse_formula_text(ps.formula, m, pf);
      pf.mlns.push_back(static_cast<int>(m.mlns.size()));
      m.mlns.push_back(std::move(rule));
    }
  }

  m.parfactors.push_back(std::move(pf));
}

}  // namespace

RelationalModel parse_model(const std::string& text) {
  RelationalModel m;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    Cursor c;
    c.s = raw;
    c.line = line_no;
    c.skip_ws();
    if (c.eof()) continue;
    const std::string head = c.ident();
    if (head == "domain") parse_domain_line(c, m);
    else if (head == "predicate") parse_predicate_line(c, m);
    else if (head == "relation") parse_relation_line(c, m);
    else if (head == "parfactor") parse_parfactor_line(c, m);
    else fail(line_no, 0, "unknown declaration '" + head + "'");
  }
  m.validate();
  return m;
}

namespace {

std::string term_text(const Term& t) { return t.text; }

std::string helper_text(const HelperDistribution& h) {
  switch (h.family) {
    case HelperFamily::Uniform:
      return "Uniform";
    case HelperFamily::Gaussian: {
      if (!h.fitted) return "Gaussian";
      bool diagonal = true;
      for (Eigen::Index r = 0; r < h.cov.rows(); ++r)
        for (Eigen::Index cc = 0; cc < h.cov.cols(); ++cc)
          if (r != cc && h.cov(r, cc) != 0.0) diagonal = false;
      if (!diagonal) return "Gaussian";
      std::string out = "Gaussian(";
      for (Eigen::Index j = 0; j < h.mean.size(); ++j)
        out += (j ? ", " : "") + fmt_double(h.mean[j]);
      out += "; ";
      for (Eigen::Index j = 0; j < h.mean.size(); ++j)
        out += (j ? ", " : "") + fmt_double(h.cov(j, j));
      return out + ")";
    }
    case HelperFamily::LinearGaussian:
      if (!h.fitted) return "LG";
      return "LG(" + fmt_double(h.lg_slope) + ", " + fmt_double(h.lg_intercept) + ", " +
             fmt_double(h.lg_var) + ")";
    case HelperFamily::Categorical:
      return "Categorical";
    case HelperFamily::CategoricalGaussian:
      return "CG";
  }
  return "Uniform";
}

}  // namespace

std::string print_model(const RelationalModel& model) {
  std::string out;
  for (const auto& [name, dom] : model.domains) {
    out += "domain " + name + " ";
    if (dom.is_discrete()) {
      out += "discrete {";
      for (std::size_t j = 0; j < dom.labels.size(); ++j)
        out += (j ? ", " : "") + dom.labels[j];
      out += "}\n";
    } else if (dom.is_bounded()) {
      out += "continuous [" + fmt_double(dom.lower) + ", " + fmt_double(dom.upper) + "]\n";
    } else {
      out += "continuous unbounded\n";
    }
  }
  for (const Predicate& p : model.predicates) {
    out += "predicate " + p.name + "(";
    for (int j = 0; j < p.arity(); ++j) {
      if (j) out += ", ";
      out += (j < static_cast<int>(p.arg_vars.size()) ? p.arg_vars[j] : "X") + ":" + p.arg_pops[j];
    }
    out += ") -> " + p.domain_name + "\n";
  }
  for (const std::string& rel : model.relations) {
    out += "relation " + rel;
    const auto it = model.relation_files.find(rel);
    if (it != model.relation_files.end()) out += " from " + it->second;
    out += "\n";
  }
  for (const Parfactor& pf : model.parfactors) {
    out += "parfactor " + pf.id + ": helper=" + helper_text(model.helpers[pf.helper]);
    out += " potential=";
    if (pf.neural.empty() && pf.mlns.empty()) out += "none";
    bool first = true;
    for (int ni : pf.neural) {
      const NeuralPotential& np = model.neural[ni];
      if (!first) out += ", ";
      first = false;
      out += "NN(layers=[";
      for (std::size_t j = 0; j < np.hidden.size(); ++j)
        out += (j ? ", " : "") + std::to_string(np.hidden[j]);
      out += "], clamp=[" + fmt_double(np.clamp_lo) + ", " + fmt_double(np.clamp_hi) +
             "], fm=" + feature_map_name(np.fm.kind) + ")";
    }
    for (int mi : pf.mlns) {
      if (!first) out += ", ";
      first = false;
      out += "MLN(w0=" + fmt_double(model.mlns[mi].weight) + ", \"" + model.mlns[mi].text + "\")";
    }
    out += " atoms=[";
    for (std::size_t j = 0; j < pf.atoms.size(); ++j) {
      if (j) out += ", ";
      const AtomRef& a = pf.atoms[j];
      out += model.predicates[a.predicate].name + "(";
      for (std::size_t t = 0; t < a.args.size(); ++t)
        out += (t ? ", " : "") + term_text(a.args[t]);
      out += ")";
    }
    out += "] constraint=";
    if (pf.constraint.trivial()) {
      out += "none";
    } else {
      for (std::size_t j = 0; j < pf.constraint.items.size(); ++j) {
        if (j) out += " && ";
        const Constraint::Item& item = pf.constraint.items[j];
        if (item.kind == Constraint::Item::Kind::Rel) {
          out += item.relation + "(";
          for (std::size_t t = 0; t < item.args.size(); ++t)
            out += (t ? ", " : "") + term_text(item.args[t]);
          out += ")";
        } else {
          out += term_text(item.a) +
                 (item.kind == Constraint::Item::Kind::Ne ? " != " : " == ") +
                 term_text(item.b);
        }
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace rnmrf
