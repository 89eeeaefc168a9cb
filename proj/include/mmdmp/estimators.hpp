#pragma once

// U-statistic estimators of MMD and of the multi-population proxy (MPP),
// their plug-in variances, and the biased single-instance MMD.
//
// Everything here is a pure function of precomputed kernel blocks.
// With H_ij = kxx_ij - kxy_ij - kxy_ji + kyy_ij:
//   mmd_u  = 1/(n(n-1)) sum_{i!=j} H_ij
//   mpp_u  = same with the kyy term dropped (H*)
//   r_term = off-diagonal mean of kyy, so mmd_u = mpp_u + r_term
//   var    = 4/n^3 sum_i (sum_j H_ij)^2 - 4/n^4 (sum_ij H_ij)^2  (j runs over all of 1..n)

#include <algorithm>
#include <string>

#include "mmdmp/error.hpp"
#include "mmdmp/sample_set.hpp"

namespace mmdmp {

/// Pairwise kernel blocks evaluated under one set of kernel parameters.
struct KernelMatrices {
  Matrix kxx;  // n x n
  Matrix kxy;  // n x m, kxy(i, j) = k(x_i, y_j)
  Matrix kyy;  // m x m
};

/// Which pair function a statistic averages.
enum class PairForm {
  mmd,       // kxx - kxy - kyx + kyy
  mpp,       // kxx - kxy - kyx
  mpp_star,  // kyy - kxy - kyx  (intra-class term of the reference population dropped)
};

struct EstimateReport {
  double mmd_u = 0.0;
  double mpp_u = 0.0;
  double r_term = 0.0;
  double var_h1 = 0.0;
  double var_h1_star = 0.0;
};

namespace detail {

inline void check_square(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw InvalidInput(std::string(name) + " must be square, got " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()));
  }
}

inline Eigen::Index check_two_sample(const KernelMatrices& k) {
  check_square(k.kxx, "kxx");
  check_square(k.kyy, "kyy");
  const Eigen::Index n = k.kxx.rows();
  const Eigen::Index m = k.kyy.rows();
  if (n != m) {
    throw InvalidInput("two-sample estimators need n == m, got n=" + std::to_string(n) +
                       ", m=" + std::to_string(m));
  }
  if (k.kxy.rows() != n || k.kxy.cols() != m) throw InvalidInput("kxy shape does not match kxx/kyy");
  require(n >= 2, "U-statistics need at least 2 instances per sample");
  return n;
}

inline double offdiag_mean(const Matrix& a) {
  const auto n = static_cast<double>(a.rows());
  return (a.sum() - a.diagonal().sum()) / (n * (n - 1.0));
}

}  // namespace detail

/// The n x n matrix of pair terms for `form`, diagonal included.
inline Matrix pair_matrix(const KernelMatrices& k, PairForm form) {
  detail::check_two_sample(k);
  Matrix h = -(k.kxy + k.kxy.transpose());
  switch (form) {
    case PairForm::mmd: h += k.kxx + k.kyy; break;
    case PairForm::mpp: h += k.kxx; break;
    case PairForm::mpp_star: h += k.kyy; break;
  }
  return h;
}

/// Off-diagonal mean of a pair matrix.
inline double u_statistic(const Matrix& h) {
  detail::check_square(h, "pair matrix");
  detail::require(h.rows() >= 2, "U-statistics need at least 2 instances per sample");
  return detail::offdiag_mean(h);
}

/// Plug-in variance of the U-statistic built on `h`. Computed as 4 times the
/// population variance of the row means, which is the same quantity as the
/// two-sum form but cannot go negative through cancellation.
inline double plugin_variance(const Matrix& h) {
  detail::check_square(h, "pair matrix");
  detail::require(h.rows() >= 2, "U-statistics need at least 2 instances per sample");
  const auto n = static_cast<double>(h.rows());
  const Vector row_mean = h.rowwise().sum() / n;
  const double centre = row_mean.mean();
  return 4.0 * (row_mean.array() - centre).square().mean();
}

inline double mmd_u(const KernelMatrices& k) { return u_statistic(pair_matrix(k, PairForm::mmd)); }
inline double mpp_u(const KernelMatrices& k) { return u_statistic(pair_matrix(k, PairForm::mpp)); }

inline double r_term(const KernelMatrices& k) {
  detail::check_square(k.kyy, "kyy");
  detail::require(k.kyy.rows() >= 2, "r_term needs at least 2 instances");
  return detail::offdiag_mean(k.kyy);
}

inline double var_h1(const KernelMatrices& k) { return plugin_variance(pair_matrix(k, PairForm::mmd)); }
inline double var_h1_star(const KernelMatrices& k) { return plugin_variance(pair_matrix(k, PairForm::mpp)); }

/// Biased (V-statistic) squared MMD between a reference set and one test
/// instance: mean(ref_kxx) - 2 mean(kx_tilde) + k_tilde_tilde.
inline double mmd_b(const Matrix& ref_kxx, const Vector& kx_tilde, double k_tilde_tilde) {
  detail::check_square(ref_kxx, "ref_kxx");
  detail::require(ref_kxx.rows() >= 1, "mmd_b needs a non-empty reference set");
  detail::require(kx_tilde.size() == ref_kxx.rows(), "kx_tilde length must match the reference set");
  return ref_kxx.mean() - 2.0 * kx_tilde.mean() + k_tilde_tilde;
}

inline EstimateReport estimate(const KernelMatrices& k) {
  EstimateReport r;
  const Matrix h = pair_matrix(k, PairForm::mmd);
  const Matrix h_star = pair_matrix(k, PairForm::mpp);
  r.mmd_u = u_statistic(h);
  r.mpp_u = u_statistic(h_star);
  r.r_term = detail::offdiag_mean(k.kyy);
  r.var_h1 = plugin_variance(h);
  r.var_h1_star = plugin_variance(h_star);
  return r;
}

}  // namespace mmdmp
