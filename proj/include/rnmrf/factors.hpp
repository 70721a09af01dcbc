#pragma once

#include <string>
#include <vector>

#include "rnmrf/ground.hpp"
#include "rnmrf/helpers.hpp"
#include "rnmrf/types.hpp"

namespace rnmrf {

// A full assignment is a Vec over graph.variables (label indices for
// discrete variables).

Vec clique_values(const GroundGraph& g, const GroundFactor& f, ConstVecRef assignment);

// Log helper density of the factor's parfactor at the clique values.
double factor_log_helper(const GroundGraph& g, int fi, ConstVecRef values);
// Sum of neural and MLN log-potentials (no helper).
double factor_log_potential(const GroundGraph& g, int fi, ConstVecRef values);
// helper + potentials.
double factor_log_value(const GroundGraph& g, int fi, ConstVecRef values);

// Sum of factor_log_value over all factors; the joint log-score up to log Z.
double joint_log_score(const GroundGraph& g, ConstVecRef assignment);

// log b_i(x) = sum over factors incident to i of factor log values, with the
// rest of the frame held fixed, evaluated at each candidate x. The
// `potentials_only` variant drops helper terms; by the cancellation identity
// it equals log(b_i/Q) up to an x-independent constant.
Vec log_bi(const GroundGraph& g, int i, ConstVecRef frame, ConstVecRef candidates);
Vec log_bi_potentials(const GroundGraph& g, int i, ConstVecRef frame, ConstVecRef candidates);

// Product of the helper conditionals of every factor incident to i.
Proposal1D build_proposal(const GroundGraph& g, int i, ConstVecRef frame);

}  // namespace rnmrf
