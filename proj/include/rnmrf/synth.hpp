#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnmrf/relational.hpp"
#include "rnmrf/types.hpp"

namespace rnmrf {

// Piecewise-constant clean images plus Gaussian-corrupted copies. The
// pre-clip copy is kept so the injected noise variance stays checkable.
struct DenoisePair {
  Mat clean;
  Mat noisy;          // clipped to [0,1]
  Mat noisy_preclip;
};
std::vector<DenoisePair> synth_denoise(int size, int images, double noise_var,
                                       std::uint64_t seed);

// Synthetic hallway segments on a chain. Types W/D/O with type-conditional
// feature distributions; a small fraction of segments are rule-binding edge
// cases (door-like geometry, wide angle) so hard rules carry signal the
// smooth potentials underfit.
struct SegmentData {
  std::vector<int> type;  // 0 = W, 1 = D, 2 = O
  std::vector<double> length;
  std::vector<double> depth;
  std::vector<double> angle;
  RelationStore nb;       // chain adjacency over segment names
};
SegmentData synth_segments(int n, std::uint64_t seed);

std::string segment_name(int i);

}  // namespace rnmrf
