#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace rnmrf {

using Scalar = double;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecRef = Eigen::Ref<Eigen::VectorXd>;
using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;
using MatRef = Eigen::Ref<Eigen::MatrixXd>;
using ConstMatRef = Eigen::Ref<const Eigen::MatrixXd>;

// Error taxonomy. Model/Data errors are caused by bad inputs, UsageError by
// incorrect calls, EstimatorError by degenerate sampling configurations, and
// NumericError by non-finite values showing up mid-computation.
struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& msg) : std::runtime_error("model error: " + msg) {}
};
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error("data error: " + msg) {}
};
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error("usage error: " + msg) {}
};
struct EstimatorError : std::runtime_error {
  explicit EstimatorError(const std::string& msg) : std::runtime_error("estimator error: " + msg) {}
};
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error("numeric error: " + msg) {}
};

}  // namespace rnmrf
