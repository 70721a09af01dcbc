#include "rnmrf/mlp.hpp"

#include <cmath>

namespace rnmrf {

Mlp Mlp::make(const std::vector<int>& dims) {
  if (dims.size() < 2) throw UsageError("mlp needs at least input and output dims");
  if (dims.back() != 1) throw UsageError("mlp output dim must be 1");
  for (int d : dims)
    if (d <= 0) throw UsageError("mlp layer dims must be positive");
  Mlp m;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    m.weights.push_back(Mat::Zero(dims[l], dims[l - 1]));
    m.biases.push_back(Vec::Zero(dims[l]));
  }
  return m;
}

int Mlp::param_count() const {
  int n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<int>(weights[l].size() + biases[l].size());
  return n;
}

void Mlp::init_xavier(Rng& rng) {
  for (auto& W : weights) {
    const double r = std::sqrt(6.0 / static_cast<double>(W.rows() + W.cols()));
    for (Eigen::Index j = 0; j < W.cols(); ++j)
      for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = rng.uniform(-r, r);
  }
  for (auto& b : biases) b.setZero();
  ++version;
}

MlpGrad MlpGrad::zeros_like(const Mlp& mlp) {
  MlpGrad g;
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    g.weights.push_back(Mat::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
    g.biases.push_back(Vec::Zero(mlp.biases[l].size()));
  }
  return g;
}

void MlpGrad::set_zero() {
  for (auto& W : weights) W.setZero();
  for (auto& b : biases) b.setZero();
}

void MlpGrad::add_scaled(const MlpGrad& other, double scale) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += scale * other.weights[l];
    biases[l] += scale * other.biases[l];
  }
}

double MlpGrad::max_abs() const {
  double m = 0.0;
  for (const auto& W : weights) m = std::max(m, W.cwiseAbs().maxCoeff());
  for (const auto& b : biases)
    if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

bool MlpGrad::all_finite() const {
  for (const auto& W : weights)
    if (!W.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

Vec mlp_forward(const Mlp& mlp, ConstMatRef X, MlpCache* cache) {
  if (mlp.weights.empty()) throw UsageError("mlp_forward on empty mlp");
  if (X.cols() != mlp.input_dim())
    throw UsageError("mlp_forward: input has " + std::to_string(X.cols()) +
                     " columns, net expects " + std::to_string(mlp.input_dim()));
  if (!X.allFinite()) throw DataError("mlp_forward: non-finite input");

  const int L = mlp.layer_count();
  if (cache) {
    cache->input = X;
    cache->pre.assign(L - 1, Mat());
    cache->act.assign(L - 1, Mat());
    cache->version = mlp.version;
  }

  Mat a = X;
  for (int l = 0; l < L - 1; ++l) {
    Mat z = (a * mlp.weights[l].transpose()).rowwise() + mlp.biases[l].transpose();
    Mat h = z.cwiseMax(0.0);
    if (cache) {
      cache->pre[l] = z;
      cache->act[l] = h;
    }
    a = std::move(h);
  }
  Vec out = a * mlp.weights[L - 1].transpose().col(0);
  out.array() += mlp.biases[L - 1](0);
  if (cache) cache->out = out;
  return out;
}

double mlp_forward1(const Mlp& mlp, ConstVecRef x) {
  return mlp_forward(mlp, x.transpose(), nullptr)(0);
}

void mlp_backward(const Mlp& mlp, const MlpCache& cache, ConstVecRef upstream, MlpGrad& grad) {
  if (cache.version != mlp.version)
    throw UsageError("mlp_backward: cache is stale (parameters changed since forward)");
  const int L = mlp.layer_count();
  if (static_cast<int>(cache.pre.size()) != L - 1)
    throw UsageError("mlp_backward: cache does not match network shape");
  if (upstream.size() != cache.out.size())
    throw UsageError("mlp_backward: upstream size mismatch");

  // delta: gradient w.r.t. the current layer's pre-activation, one row per
  // evaluation point.
  Mat delta = upstream;  // output layer is linear, n x 1
  for (int l = L - 1; l >= 0; --l) {
    const Mat& below = (l == 0) ? cache.input : cache.act[l - 1];
    grad.weights[l].noalias() += delta.transpose() * below;
    grad.biases[l] += delta.colwise().sum().transpose();
    if (l > 0) {
      Mat mask = (cache.pre[l - 1].array() > 0.0).cast<double>();
      delta = (delta * mlp.weights[l]).cwiseProduct(mask);
    }
  }
}

}  // namespace rnmrf
