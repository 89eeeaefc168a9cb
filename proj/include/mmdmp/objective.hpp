#pragma once

// Training objectives over one batch pair and their exact gradients.
//
//   mmd_d        M = mmd_u,        V = var_h1,       J = M / sqrt(V + lambda)
//   mmd_mp       M = mpp_u,        V = var_h1_star,  J = M / sqrt(V + lambda)
//   mpp_only     M = mpp_u,                          J = M
//   mmd_mp_star  M, V built on H** = kyy - kxy - kyx, J = M / sqrt(V + lambda)
//
// The gradient is a hand-written reverse pass over the fixed graph
// featurizer -> Gaussian kernels -> pair matrix -> (M, V) -> J.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmdmp/deep_kernel.hpp"
#include "mmdmp/error.hpp"
#include "mmdmp/estimators.hpp"

namespace mmdmp {

enum class Objective { mmd_d, mmd_mp, mpp_only, mmd_mp_star };

inline std::string to_string(Objective o) {
  switch (o) {
    case Objective::mmd_d: return "mmd-d";
    case Objective::mmd_mp: return "mmd-mp";
    case Objective::mpp_only: return "mpp-only";
    case Objective::mmd_mp_star: return "mmd-mp-star";
  }
  return "?";
}

/// Accepts both dash and underscore spellings.
inline Objective parse_objective(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  if (s == "mmd-d") return Objective::mmd_d;
  if (s == "mmd-mp") return Objective::mmd_mp;
  if (s == "mpp-only") return Objective::mpp_only;
  if (s == "mmd-mp-star") return Objective::mmd_mp_star;
  throw InvalidInput("unknown objective '" + s + "' (expected mmd-d, mmd-mp, mpp-only or mmd-mp-star)");
}

inline PairForm pair_form(Objective o) {
  switch (o) {
    case Objective::mmd_d: return PairForm::mmd;
    case Objective::mmd_mp_star: return PairForm::mpp_star;
    default: return PairForm::mpp;
  }
}

inline bool uses_variance(Objective o) { return o != Objective::mpp_only; }

struct ObjectiveValue {
  double value = 0.0;     // J
  double estimate = 0.0;  // M
  double variance = 0.0;  // V, clamped at 0 (0 for mpp_only)
};

inline ObjectiveValue evaluate_objective(const KernelMatrices& k, Objective obj, double lambda) {
  detail::require(lambda > 0.0, "lambda must be positive");
  const Matrix h = pair_matrix(k, pair_form(obj));
  ObjectiveValue v;
  v.estimate = u_statistic(h);
  if (!uses_variance(obj)) {
    v.value = v.estimate;
    return v;
  }
  v.variance = std::max(0.0, plugin_variance(h));
  v.value = v.estimate / std::sqrt(v.variance + lambda);
  return v;
}

inline double objective(const KernelParams& omega, const SampleSet& sp, const SampleSet& sq, Objective obj,
                        double lambda) {
  return evaluate_objective(kernel_matrix(omega, sp, sq), obj, lambda).value;
}

// ---------------------------------------------------------------------------
// Flat view of the trainable parameters. Order: epsilon_raw, log_sigma_phi,
// log_sigma_q, then each featurizer layer's weight (row-major) and bias.

struct ParamGroup {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index length = 0;
};

inline std::vector<ParamGroup> trainable_groups(const KernelParams& p) {
  std::vector<ParamGroup> g;
  Eigen::Index at = 0;
  auto add = [&](std::string name, Eigen::Index len) {
    g.push_back({std::move(name), at, len});
    at += len;
  };
  if (p.trainable.epsilon) add("epsilon_raw", 1);
  if (p.trainable.sigma_phi) add("log_sigma_phi", 1);
  if (p.trainable.sigma_q) add("log_sigma_q", 1);
  if (p.trainable.featurizer) {
    for (std::size_t i = 0; i < p.featurizer.layers.size(); ++i) {
      add("layer" + std::to_string(i) + ".weight", p.featurizer.layers[i].weight.size());
      add("layer" + std::to_string(i) + ".bias", p.featurizer.layers[i].bias.size());
    }
  }
  return g;
}

inline Eigen::Index trainable_count(const KernelParams& p) {
  Eigen::Index c = 0;
  for (const auto& g : trainable_groups(p)) c += g.length;
  return c;
}

namespace detail {

/// Visits scalar slots in packing order: f(double& slot).
template <typename Params, typename F>
void for_each_trainable(Params& p, F&& f) {
  if (p.trainable.epsilon) f(p.epsilon_raw);
  if (p.trainable.sigma_phi) f(p.log_sigma_phi);
  if (p.trainable.sigma_q) f(p.log_sigma_q);
  if (p.trainable.featurizer) {
    for (auto& l : p.featurizer.layers) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) f(l.weight(r, c));
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) f(l.bias(r));
    }
  }
}

}  // namespace detail

inline Vector pack_trainable(const KernelParams& p) {
  Vector v(trainable_count(p));
  Eigen::Index at = 0;
  detail::for_each_trainable(p, [&](const double& x) { v(at++) = x; });
  return v;
}

inline void unpack_trainable(KernelParams& p, const Vector& v) {
  detail::require(v.size() == trainable_count(p), "parameter vector length does not match trainable groups");
  Eigen::Index at = 0;
  detail::for_each_trainable(p, [&](double& x) { x = v(at++); });
}

// ---------------------------------------------------------------------------

struct ObjectiveGradient {
  ObjectiveValue value;
  Vector gradient;  // packed like pack_trainable
};

namespace detail {

/// dJ/dH for the pair matrix h (n x n).
inline Matrix pair_adjoint(const Matrix& h, Objective obj, double lambda, ObjectiveValue& out) {
  const Eigen::Index n = h.rows();
  const auto nd = static_cast<double>(n);
  out.estimate = u_statistic(h);
  double d_m = 1.0;
  double d_v = 0.0;
  Vector centred_rows = Vector::Zero(n);
  if (uses_variance(obj)) {
    const Vector row_mean = h.rowwise().sum() / nd;
    centred_rows = row_mean.array() - row_mean.mean();
    out.variance = std::max(0.0, 4.0 * centred_rows.squaredNorm() / nd);
    const double s = std::sqrt(out.variance + lambda);
    out.value = out.estimate / s;
    d_m = 1.0 / s;
    d_v = -out.estimate / (2.0 * s * s * s);
  } else {
    out.value = out.estimate;
  }
  Matrix g = Matrix::Constant(n, n, d_m / (nd * (nd - 1.0)));
  g.diagonal().setZero();
  // dV/dH_ij = 8/n^2 (rowmean_i - mean of rowmeans)
  if (d_v != 0.0) g.colwise() += (d_v * 8.0 / (nd * nd)) * centred_rows;
  return g;
}

}  // namespace detail

/// Objective value and its gradient with respect to every trainable
/// parameter of `omega`, on the batch pair (sp, sq). The batch kernel blocks
/// are copied to `blocks` when it is non-null.
inline ObjectiveGradient objective_gradient(const KernelParams& omega, const SampleSet& sp, const SampleSet& sq,
                                            Objective obj, double lambda, KernelMatrices* blocks = nullptr) {
  detail::require(lambda > 0.0, "lambda must be positive");
  detail::require(sp.dim() == sq.dim(), "objective: samples differ in feature dimension");
  detail::require(sp.size() == sq.size(), "objective: batch sizes differ");
  const Eigen::Index n = sp.size();
  detail::require(n >= 2, "objective: batches need at least 2 instances");

  Matrix z(2 * n, sp.dim());
  z << sp.data, sq.data;
  const bool need_features = omega.trainable.featurizer;
  const PooledKernel pk = pooled_kernel(omega, z, need_features);
  const KernelMatrices k = split_blocks(pk.k, n);
  const PairForm form = pair_form(obj);

  ObjectiveGradient out;
  const Matrix gh = detail::pair_adjoint(pair_matrix(k, form), obj, lambda, out.value);
  if (!std::isfinite(out.value.value)) throw TrainingError("objective is not finite");

  // Adjoint of the pooled kernel matrix. The lower-left block is unused.
  Matrix g = Matrix::Zero(2 * n, 2 * n);
  if (form != PairForm::mpp_star) g.topLeftCorner(n, n) = gh;
  if (form != PairForm::mpp) g.bottomRightCorner(n, n) = gh;
  g.topRightCorner(n, n) = -(gh + gh.transpose());

  const double eps_raw_sigmoid = detail::logistic(omega.epsilon_raw);
  const double eps = omega.epsilon();
  const double sp2 = omega.sigma_phi() * omega.sigma_phi();
  const double sq2 = omega.sigma_q() * omega.sigma_q();

  out.gradient.resize(trainable_count(omega));
  Eigen::Index at = 0;
  if (omega.trainable.epsilon) {
    const double dk_deps = (g.array() * (1.0 - pk.kappa.array()) * pk.q.array()).sum();
    out.gradient(at++) = dk_deps * eps_raw_sigmoid * (1.0 - eps_raw_sigmoid);
  }
  // (1 - eps) * q * kappa appears in both the bandwidth and feature terms.
  const Matrix qk = ((1.0 - eps) * pk.q.array() * pk.kappa.array()).matrix();
  if (omega.trainable.sigma_phi) {
    out.gradient(at++) = (g.array() * qk.array() * pk.dist_phi.array()).sum() / sp2;
  }
  if (omega.trainable.sigma_q) {
    out.gradient(at++) = (g.array() * pk.k.array() * pk.dist_raw.array()).sum() / sq2;
  }
  if (omega.trainable.featurizer) {
    const Matrix s = ((g + g.transpose()).array() * qk.array() / sp2).matrix();
    Matrix d_features = s * pk.features;
    d_features -= s.rowwise().sum().asDiagonal() * pk.features;
    const FeaturizerParams gf = featurizer_backward(omega.featurizer, pk.tape, std::move(d_features));
    for (const auto& l : gf.layers) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.gradient(at++) = l.weight(r, c);
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.gradient(at++) = l.bias(r);
    }
  }

  if (blocks) *blocks = k;
  if (!out.gradient.allFinite()) {
    std::string bad;
    for (const auto& grp : trainable_groups(omega)) {
      if (!out.gradient.segment(grp.offset, grp.length).allFinite()) bad += (bad.empty() ? "" : ", ") + grp.name;
    }
    throw TrainingError("non-finite gradient in parameter groups: " + bad);
  }
  return out;
}

}  // namespace mmdmp
