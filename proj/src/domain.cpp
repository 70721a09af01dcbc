#include "rnmrf/domain.hpp"

#include <algorithm>
#include <cmath>

namespace rnmrf {

DomainSpec DomainSpec::discrete(std::vector<std::string> labels) {
  DomainSpec d;
  d.kind = Kind::Discrete;
  d.labels = std::move(labels);
  d.lower = 0.0;
  d.upper = static_cast<double>(d.labels.size()) - 1.0;
  return d;
}

DomainSpec DomainSpec::continuous(double lo, double hi) {
  DomainSpec d;
  d.kind = Kind::Continuous;
  d.lower = lo;
  d.upper = hi;
  return d;
}

bool DomainSpec::contains(double v) const {
  if (!std::isfinite(v)) return false;
  if (is_discrete()) {
    const double r = std::nearbyint(v);
    return r == v && r >= 0.0 && r < static_cast<double>(labels.size());
  }
  return v >= lower && v <= upper;
}

int DomainSpec::label_index(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return -1;
  return static_cast<int>(it - labels.begin());
}

const std::string& DomainSpec::label_of(double v) const {
  if (!contains(v)) throw ModelError("value is not a member of the discrete domain");
  return labels[static_cast<int>(std::nearbyint(v))];
}

void DomainSpec::validate(const std::string& name) const {
  if (is_discrete()) {
    if (labels.empty()) throw ModelError("domain '" + name + "' has no labels");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].empty()) throw ModelError("domain '" + name + "' has an empty label");
      for (std::size_t j = i + 1; j < labels.size(); ++j)
        if (labels[i] == labels[j])
          throw ModelError("domain '" + name + "' repeats label '" + labels[i] + "'");
    }
    return;
  }
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper))
    throw ModelError("domain '" + name + "' has an empty interval");
}

}  // namespace rnmrf
