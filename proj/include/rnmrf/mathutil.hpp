#pragma once

#include <cmath>
#include <limits>

#include "rnmrf/types.hpp"

namespace rnmrf {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454836;

inline double log_sum_exp(ConstVecRef v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a nan/inf propagates)
  return m + std::log((v.array() - m).exp().sum());
}

// log N(x; mean, var), var > 0
inline double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// log Phi(x), stable in the left tail via erfc scaling.
inline double log_normal_cdf(double x) {
  if (x > -8.0) return std::log(normal_cdf(x));
  // Phi(x) = erfc(-x/sqrt(2))/2; use asymptotic expansion of erfc.
  const double t = -x;
  return -0.5 * t * t - 0.5 * kLogTwoPi - std::log(t) + std::log1p(-1.0 / (t * t));
}

// Inverse standard normal CDF (Acklam's rational approximation, then one
// Halley refinement step). Accurate to ~1e-15 over (0, 1).
inline double normal_quantile(double p) {
  if (p <= 0.0) return kNegInf;
  if (p >= 1.0) return kPosInf;
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement against the erfc-based CDF.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace rnmrf
