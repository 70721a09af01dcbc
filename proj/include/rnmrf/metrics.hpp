#pragma once

#include <vector>

#include "rnmrf/types.hpp"

namespace rnmrf {

// Per-image error totals: sum of absolute / squared pixel differences.
double image_l1(const Mat& a, const Mat& b);
double image_l2(const Mat& a, const Mat& b);

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

// One-vs-rest F1 = 2TP / (2TP + FP + FN); a class absent from both pred and
// truth scores 1.0.
double f1_score(const std::vector<int>& pred, const std::vector<int>& truth, int cls);
double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth, int num_classes);

double mse(ConstVecRef pred, ConstVecRef truth);

}  // namespace rnmrf
