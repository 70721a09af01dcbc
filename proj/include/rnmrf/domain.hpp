#pragma once

#include <string>
#include <vector>

#include "rnmrf/mathutil.hpp"
#include "rnmrf/types.hpp"

namespace rnmrf {

// Value domain of a single variable. Discrete domains are ordered label
// lists; values are carried as the label index stored in a double. Continuous
// domains are intervals, possibly unbounded on either side.
struct DomainSpec {
  enum class Kind { Discrete, Continuous };

  Kind kind = Kind::Continuous;
  std::vector<std::string> labels;
  double lower = kNegInf;
  double upper = kPosInf;

  static DomainSpec discrete(std::vector<std::string> labels);
  static DomainSpec continuous(double lo, double hi);
  static DomainSpec continuous_unbounded() { return DomainSpec{}; }

  bool is_discrete() const { return kind == Kind::Discrete; }
  bool is_bounded() const {
    return is_discrete() || (std::isfinite(lower) && std::isfinite(upper));
  }
  // Unbounded continuous domains need a normalizing helper distribution.
  bool requires_helper() const { return !is_discrete() && !is_bounded(); }

  int cardinality() const { return static_cast<int>(labels.size()); }

  bool contains(double v) const;
  int label_index(const std::string& label) const;  // -1 if absent
  const std::string& label_of(double v) const;

  void validate(const std::string& name) const;

  bool operator==(const DomainSpec&) const = default;
};

}  // namespace rnmrf
