#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnmrf/types.hpp"

namespace rnmrf {

// Experiment drivers behind the eval command. Each one reads its model files
// from `models_dir`, runs the full pipeline for one seed, and returns the
// metrics the command prints.

struct DenoiseOptions {
  int size = 16;
  int images = 6;
  double noise_var = 0.3;
  int train_iters = 800;
  int samples = 16;
  int vars_per_iter = 48;
  double lr = 1e-2;
  int gibbs_sweeps = 300;
  int gibbs_burn = 100;
  int gibbs_proposals = 24;
};

struct DenoiseReport {
  double l1_rnmrf = 0.0, l2_rnmrf = 0.0;  // trained model, posterior mean per image
  double l1_gauss = 0.0, l2_gauss = 0.0;  // moment-fitted Gaussian baseline
  double l1_noisy = 0.0, l2_noisy = 0.0;  // noisy input as-is
};

DenoiseReport run_denoise(const std::string& models_dir, const DenoiseOptions& opt,
                          std::uint64_t seed);

struct IrisOptions {
  int folds = 5;
  int train_iters = 500;
  int samples = 16;
  int vars_per_iter = 80;
  double lr = 5e-3;
  int grid_points = 400;  // dense argmax grid for the continuous target
};

struct IrisReport {
  double accuracy = 0.0;  // pooled over all held-out folds
  double macro_f1 = 0.0;
  double pw_mse = 0.0;
};

IrisReport run_iris_cv(const std::string& models_dir, const std::string& csv_path,
                       const IrisOptions& opt, std::uint64_t seed);

struct SegmentsOptions {
  int train_segments = 150;
  int test_segments = 150;
  int train_iters = 300;
  int samples = 16;
  int vars_per_iter = 60;
  double lr = 1e-2;
  int map_sweeps = 8;
};

struct SegmentsReport {
  double acc_with_rules = 0.0;
  double acc_without_rules = 0.0;
};

SegmentsReport run_segments(const std::string& models_dir, const SegmentsOptions& opt,
                            std::uint64_t seed);

// Fold id per row; rows of each class are shuffled with the seed and dealt
// round-robin so folds stay stratified.
std::vector<int> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed);

}  // namespace rnmrf
