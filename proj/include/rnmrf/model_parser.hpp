#pragma once

#include <string>

#include "rnmrf/relational.hpp"

namespace rnmrf {

// Line-oriented model language:
//   domain <name> discrete {v1, v2, ...}
//   domain <name> continuous [lo, hi] | continuous unbounded
//   predicate <name>(<Var:pop>, ...) -> <domain>
//   relation <name> [from <file>]
//   parfactor <id>: helper=<spec> potential=<spec>[, <spec>...]
//       atoms=[pred(T, ...), ...] constraint=<expr|none>
// Helper specs: Uniform | Gaussian | Gaussian(m1,..;v1,..) | LG | LG(s,b,v)
//   | Categorical | CG. Unparameterized families are moment-fitted from data.
// Potential specs: none | NN(layers=[..], clamp=[a,b], fm=<map>)
//   | MLN(w0=<r>, "<formula>").
// Terms starting with an upper-case letter are logical variables, everything
// else is a constant instance. '#' starts a comment.
RelationalModel parse_model(const std::string& text);

// Canonical text form; parse(print_model(m)) is structurally equal to m.
std::string print_model(const RelationalModel& model);

// Formula text -> AST, resolving atom references against the parfactor's
// atom list. Exposed for tests.
Formula parse_formula_text(const std::string& text, const RelationalModel& model,
                           const Parfactor& pf);

}  // namespace rnmrf
