#pragma once

// Deep kernel
//   k(x, y) = [(1 - eps) * kappa(phi(x), phi(y)) + eps] * q(x, y)
// with kappa, q Gaussian kernels of bandwidth sigma_phi, sigma_q. Rows of a
// SampleSet are the extractor outputs; phi is the trainable featurizer.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mmdmp/error.hpp"
#include "mmdmp/estimators.hpp"
#include "mmdmp/featurizer.hpp"
#include "mmdmp/sample_set.hpp"

namespace mmdmp {

/// Which parameter groups receive gradient updates.
struct TrainableMask {
  bool epsilon = false;
  bool sigma_phi = false;
  bool sigma_q = false;
  bool featurizer = true;

  [[nodiscard]] bool any() const { return epsilon || sigma_phi || sigma_q || featurizer; }
  friend bool operator==(const TrainableMask&, const TrainableMask&) = default;
};

/// Unconstrained parameterization: eps = sigmoid(epsilon_raw),
/// sigma = exp(log_sigma).
struct KernelParams {
  double epsilon_raw = 0.0;
  double log_sigma_phi = 0.0;
  double log_sigma_q = 0.0;
  FeaturizerParams featurizer;
  TrainableMask trainable;

  static constexpr double max_epsilon = 1.0 - 1e-12;

  [[nodiscard]] double epsilon() const {
    return std::clamp(detail::logistic(epsilon_raw), std::numeric_limits<double>::min(), max_epsilon);
  }
  [[nodiscard]] double sigma_phi() const { return std::exp(log_sigma_phi); }
  [[nodiscard]] double sigma_q() const { return std::exp(log_sigma_q); }

  void set_epsilon(double eps) {
    detail::require(eps > 0.0 && eps < 1.0, "epsilon must lie in (0, 1)");
    epsilon_raw = std::log(eps) - std::log1p(-eps);
  }
  void set_sigma_phi(double s) {
    detail::require(s > 0.0, "sigma_phi must be positive");
    log_sigma_phi = std::log(s);
  }
  void set_sigma_q(double s) {
    detail::require(s > 0.0, "sigma_q must be positive");
    log_sigma_q = std::log(s);
  }

  void validate() const {
    detail::require(std::isfinite(epsilon_raw) || epsilon_raw == std::numeric_limits<double>::infinity(),
                    "epsilon_raw must not be NaN or -inf");
    detail::require(std::isfinite(log_sigma_phi) && std::isfinite(log_sigma_q), "log bandwidths must be finite");
    featurizer.validate();
  }
};

/// Fixed kernel constants used when building a fresh KernelParams.
struct KernelConstants {
  double epsilon = 1e-10;
  double sigma_phi = 45.0;
  double sigma_q = 30.0;
};

inline KernelParams make_kernel(const KernelConstants& c, FeaturizerParams featurizer,
                                TrainableMask mask = {}) {
  KernelParams p;
  p.set_epsilon(c.epsilon);
  p.set_sigma_phi(c.sigma_phi);
  p.set_sigma_q(c.sigma_q);
  p.featurizer = std::move(featurizer);
  p.trainable = mask;
  return p;
}

inline double gaussian_kernel(const Vector& a, const Vector& b, double sigma) {
  detail::require(sigma > 0.0, "Gaussian bandwidth must be positive");
  detail::require(a.size() == b.size(), "Gaussian kernel arguments differ in dimension");
  return std::exp(-(a - b).squaredNorm() / (2.0 * sigma * sigma));
}

/// Squared Euclidean distances between all row pairs of `a`, computed from
/// explicit differences so that the result is exactly symmetric with a zero
/// diagonal.
inline Matrix pairwise_sq_dist(const Matrix& a) {
  const Eigen::Index n = a.rows();
  Matrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (a.row(i) - a.row(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

inline Matrix cross_sq_dist(const Matrix& a, const Matrix& b) {
  Matrix d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return d;
}

/// Kernel over the rows of one pooled matrix, with every intermediate the
/// gradient computation needs.
struct PooledKernel {
  Matrix k;
  Matrix kappa;
  Matrix q;
  Matrix dist_phi;
  Matrix dist_raw;
  Matrix features;
  FeaturizerTape tape;
};

inline PooledKernel pooled_kernel(const KernelParams& omega, const Matrix& z, bool keep_tape = false) {
  PooledKernel out;
  out.features = featurize(omega.featurizer, z, keep_tape ? &out.tape : nullptr);
  out.dist_phi = pairwise_sq_dist(out.features);
  out.dist_raw = pairwise_sq_dist(z);
  const double eps = omega.epsilon();
  const double sp = omega.sigma_phi();
  const double sq = omega.sigma_q();
  out.kappa = (-out.dist_phi.array() / (2.0 * sp * sp)).exp().matrix();
  out.q = (-out.dist_raw.array() / (2.0 * sq * sq)).exp().matrix();
  out.k = (((1.0 - eps) * out.kappa.array() + eps) * out.q.array()).matrix();
  if (!out.k.allFinite()) throw TrainingError("kernel evaluation produced non-finite values");
  return out;
}

/// Splits a 2n x 2n pooled kernel into the three blocks for the index sets
/// `ix` (first sample) and `iy` (second sample).
template <typename Index>
KernelMatrices gather_blocks(const Matrix& pooled, const std::vector<Index>& ix, const std::vector<Index>& iy) {
  KernelMatrices k;
  const auto n = static_cast<Eigen::Index>(ix.size());
  const auto m = static_cast<Eigen::Index>(iy.size());
  k.kxx.resize(n, n);
  k.kxy.resize(n, m);
  k.kyy.resize(m, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) k.kxx(i, j) = pooled(ix[i], ix[j]);
    for (Eigen::Index j = 0; j < m; ++j) k.kxy(i, j) = pooled(ix[i], iy[j]);
  }
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) k.kyy(i, j) = pooled(iy[i], iy[j]);
  return k;
}

inline KernelMatrices split_blocks(const Matrix& pooled, Eigen::Index n) {
  const Eigen::Index m = pooled.rows() - n;
  return {pooled.topLeftCorner(n, n), pooled.topRightCorner(n, m), pooled.bottomRightCorner(m, m)};
}

inline KernelMatrices kernel_matrix(const KernelParams& omega, const SampleSet& x, const SampleSet& y) {
  detail::require(x.dim() == y.dim(), "kernel_matrix: samples differ in feature dimension");
  Matrix z(x.size() + y.size(), x.dim());
  z << x.data, y.data;
  return split_blocks(pooled_kernel(omega, z).k, x.size());
}

/// k(a_i, b_j) for every row pair.
inline Matrix cross_kernel(const KernelParams& omega, const Matrix& a, const Matrix& b) {
  detail::require(a.cols() == b.cols(), "cross_kernel: inputs differ in feature dimension");
  const Matrix fa = featurize(omega.featurizer, a);
  const Matrix fb = featurize(omega.featurizer, b);
  const double eps = omega.epsilon();
  const double sp = omega.sigma_phi();
  const double sq = omega.sigma_q();
  const Matrix kappa = (-cross_sq_dist(fa, fb).array() / (2.0 * sp * sp)).exp().matrix();
  const Matrix q = (-cross_sq_dist(a, b).array() / (2.0 * sq * sq)).exp().matrix();
  return (((1.0 - eps) * kappa.array() + eps) * q.array()).matrix();
}

}  // namespace mmdmp
