#include "rnmrf/synth.hpp"

#include <algorithm>
#include <cmath>

#include "rnmrf/rng.hpp"

namespace rnmrf {

std::vector<DenoisePair> synth_denoise(int size, int images, double noise_var,
                                       std::uint64_t seed) {
  if (size < 2 || images < 1 || noise_var < 0.0)
    throw UsageError("synth_denoise requires size >= 2, images >= 1, noise_var >= 0");
  const double stddev = std::sqrt(noise_var);
  std::vector<DenoisePair> out;
  out.reserve(images);
  for (int m = 0; m < images; ++m) {
    Rng rng(substream_seed(seed, 0x696d67, m));
    DenoisePair pair;
    pair.clean = Mat::Constant(size, size, 0.15 + 0.25 * rng.uniform01());
    const int rects = 2 + static_cast<int>(rng.uniform_index(3));
    for (int k = 0; k < rects; ++k) {
      const int h = 2 + static_cast<int>(rng.uniform_index(size / 2));
      const int w = 2 + static_cast<int>(rng.uniform_index(size / 2));
      const int r0 = static_cast<int>(rng.uniform_index(size - h + 1));
      const int c0 = static_cast<int>(rng.uniform_index(size - w + 1));
      pair.clean.block(r0, c0, h, w).setConstant(0.4 + 0.55 * rng.uniform01());
    }
    pair.noisy_preclip = pair.clean;
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c)
        pair.noisy_preclip(r, c) += rng.normal(0.0, stddev);
    pair.noisy = pair.noisy_preclip.cwiseMax(0.0).cwiseMin(1.0);
    out.push_back(std::move(pair));
  }
  return out;
}

std::string segment_name(int i) { return "s" + std::to_string(i); }

namespace {

double clipped_normal(Rng& rng, double mean, double stddev, double lo, double hi) {
  return std::min(hi, std::max(lo, rng.normal(mean, stddev)));
}

}  // namespace

SegmentData synth_segments(int n, std::uint64_t seed) {
  if (n < 2) throw UsageError("synth_segments requires n >= 2");
  Rng rng(substream_seed(seed, 0x736567));
  SegmentData d;
  d.type.resize(n);
  d.length.resize(n);
  d.depth.resize(n);
  d.angle.resize(n);

  for (int i = 0; i < n; ++i) {
    // Doors never neighbor doors; the chain draw respects that so the
    // neighbor rule is consistent with every generated dataset.
    double u = rng.uniform01();
    int t;
    if (i > 0 && d.type[i - 1] == 1)
      t = u < 0.6 ? 0 : 2;
    else
      t = u < 0.45 ? 0 : (u < 0.70 ? 1 : 2);
    d.type[i] = t;

    if (t == 0) {
      // Walls: long, shallow, nearly straight. Angle stays <= 30.
      d.length[i] = clipped_normal(rng, 6.0, 1.2, 2.5, 10.0);
      d.depth[i] = clipped_normal(rng, 0.25, 0.10, 0.0, 3.0);
      d.angle[i] = clipped_normal(rng, 8.0, 7.0, 0.0, 30.0);
    } else if (t == 1) {
      // Doors: short, recessed, angled but never past 89 degrees.
      d.length[i] = clipped_normal(rng, 1.0, 0.25, 0.3, 10.0);
      d.depth[i] = clipped_normal(rng, 0.55, 0.15, 0.0, 3.0);
      d.angle[i] = clipped_normal(rng, 35.0, 15.0, 0.0, 89.0);
    } else if (i > 0 && d.type[i - 1] == 1 && rng.uniform01() < 0.6) {
      // Door mimics: alcoves right after a door whose geometry sits inside
      // the door cluster, nudged only slightly toward the open-space shape.
      // Attributes alone rank these as doors; only the door-adjacency rule
      // can veto the second door.
      d.length[i] = clipped_normal(rng, 1.25, 0.25, 0.3, 10.0);
      d.depth[i] = clipped_normal(rng, 0.70, 0.15, 0.0, 3.0);
      d.angle[i] = clipped_normal(rng, 48.0, 15.0, 0.0, 88.0);
    } else {
      d.length[i] = clipped_normal(rng, 2.2, 1.0, 0.3, 10.0);
      d.depth[i] = clipped_normal(rng, 1.4, 0.6, 0.0, 3.0);
      d.angle[i] = 31.0 + 149.0 * rng.uniform01();
    }
  }

  // Edge cases: some non-wall-adjacent segments become door lookalikes with
  // wide angles. Geometry says door, the angle rule says otherwise.
  for (int i = 0; i < n; ++i) {
    if (d.type[i] != 2) continue;
    if (rng.uniform01() >= 0.35) continue;
    const bool door_neighbor = (i > 0 && d.type[i - 1] == 1) || (i + 1 < n && d.type[i + 1] == 1);
    if (door_neighbor) continue;
    d.length[i] = clipped_normal(rng, 1.0, 0.25, 0.3, 10.0);
    d.depth[i] = clipped_normal(rng, 0.55, 0.15, 0.0, 3.0);
    d.angle[i] = 90.0 + 85.0 * rng.uniform01();
  }

  for (int i = 0; i + 1 < n; ++i) d.nb.add("nb", {segment_name(i), segment_name(i + 1)});
  return d;
}

}  // namespace rnmrf
