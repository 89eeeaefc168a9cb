#pragma once

// Per-batch kernel statistics and the decomposition of the batch-mean MMD
// proxy's variance across resampled batches:
//   Var(E kxx - 2 E kxy + E kyy)
//     = Var(E H*) + Var(E kyy) + 2 Cov(E H*, E kyy),
//   Var(E H*) = Var(E kxx) - 2 Cov(E kxx, 2 E kxy) + Var(2 E kxy).
// The proxy uses the full-block mean of kxy and off-diagonal means of kxx and
// kyy, so it is close to but not the same as the U-statistic mmd_value; both
// variances are reported.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "mmdmp/deep_kernel.hpp"
#include "mmdmp/error.hpp"
#include "mmdmp/estimators.hpp"
#include "mmdmp/parallel.hpp"
#include "mmdmp/rng.hpp"

namespace mmdmp {

struct KernelStatsRecord {
  int step = 0;
  double e_kxx = 0.0;
  double e_kyy = 0.0;
  double e_kxy = 0.0;
  double mmd_value = 0.0;
};

inline KernelStatsRecord kernel_stats(const KernelMatrices& k, int step = 0) {
  KernelStatsRecord r;
  r.step = step;
  r.mmd_value = mmd_u(k);  // validates shapes
  r.e_kxx = detail::offdiag_mean(k.kxx);
  r.e_kyy = detail::offdiag_mean(k.kyy);
  r.e_kxy = k.kxy.mean();
  return r;
}

inline KernelStatsRecord batch_kernel_stats(const KernelParams& omega, const SampleSet& sp_batch,
                                            const SampleSet& sq_batch, int step = 0) {
  detail::require(sp_batch.size() >= 2 && sq_batch.size() >= 2, "batch_kernel_stats needs batches of at least 2");
  return kernel_stats(kernel_matrix(omega, sp_batch, sq_batch), step);
}

struct VarianceDecomposition {
  int batches = 0;
  double mean_kxx = 0.0;
  double mean_kyy = 0.0;
  double mean_kxy = 0.0;
  double mean_mmd = 0.0;
  double var_kxx = 0.0;
  double var_2kxy = 0.0;
  double cov_kxx_2kxy = 0.0;
  double var_hstar = 0.0;  // Var(E kxx - 2 E kxy), from the three terms above
  double var_kyy = 0.0;
  double cov_hstar_kyy = 0.0;
  double component_sum = 0.0;   // var_hstar + var_kyy + 2 cov_hstar_kyy
  double proxy_variance = 0.0;  // Var(E kxx - 2 E kxy + E kyy), computed directly
  double mmd_variance = 0.0;    // Var(mmd_value), computed directly
};

namespace detail {

/// Sample covariance with 1/(B-1) normalization.
inline double sample_cov(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / (n - 1.0);
}

inline double sample_mean(const std::vector<double>& a) {
  return std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
}

}  // namespace detail

inline VarianceDecomposition variance_decomposition(const std::vector<KernelStatsRecord>& records) {
  detail::require(records.size() >= 2, "variance_decomposition needs at least 2 batches");
  std::vector<double> kxx, kyy, two_kxy, hstar, proxy, mmd;
  for (const auto& r : records) {
    kxx.push_back(r.e_kxx);
    kyy.push_back(r.e_kyy);
    two_kxy.push_back(2.0 * r.e_kxy);
    hstar.push_back(r.e_kxx - 2.0 * r.e_kxy);
    proxy.push_back(r.e_kxx - 2.0 * r.e_kxy + r.e_kyy);
    mmd.push_back(r.mmd_value);
  }
  using detail::sample_cov;
  VarianceDecomposition d;
  d.batches = static_cast<int>(records.size());
  d.mean_kxx = detail::sample_mean(kxx);
  d.mean_kyy = detail::sample_mean(kyy);
  d.mean_kxy = detail::sample_mean(two_kxy) / 2.0;
  d.mean_mmd = detail::sample_mean(mmd);
  d.var_kxx = sample_cov(kxx, kxx);
  d.var_2kxy = sample_cov(two_kxy, two_kxy);
  d.cov_kxx_2kxy = sample_cov(kxx, two_kxy);
  d.var_hstar = d.var_kxx - 2.0 * d.cov_kxx_2kxy + d.var_2kxy;
  d.var_kyy = sample_cov(kyy, kyy);
  d.cov_hstar_kyy = sample_cov(hstar, kyy);
  d.component_sum = d.var_hstar + d.var_kyy + 2.0 * d.cov_hstar_kyy;
  d.proxy_variance = sample_cov(proxy, proxy);
  d.mmd_variance = sample_cov(mmd, mmd);
  return d;
}

/// Kernel statistics on `batches` batch pairs, each drawn without
/// replacement from the two pools. Batch b uses its own random stream.
inline std::vector<KernelStatsRecord> collect_kernel_stats(const KernelParams& omega, const SampleSet& pool_p,
                                                           const SampleSet& pool_q, int batches, int batch_size,
                                                           std::uint64_t seed, int step = 0) {
  detail::require(batches >= 1, "need at least one batch");
  detail::require(batch_size >= 2, "batch size must be at least 2");
  detail::require(batch_size <= pool_p.size() && batch_size <= pool_q.size(), "batch size exceeds a pool");
  std::vector<KernelStatsRecord> out(static_cast<std::size_t>(batches));
  parallel_for(out.size(), [&](std::size_t b) {
    Philox4x32 gen(seed, stream_id(streams::diagnostics, static_cast<std::uint64_t>(step), b));
    auto draw = [&](Eigen::Index pool) {
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(pool));
      std::iota(idx.begin(), idx.end(), Eigen::Index{0});
      std::shuffle(idx.begin(), idx.end(), gen);
      idx.resize(static_cast<std::size_t>(batch_size));
      return idx;
    };
    const auto ip = draw(pool_p.size());
    const auto iq = draw(pool_q.size());
    out[b] = batch_kernel_stats(omega, pool_p.subset(ip), pool_q.subset(iq), step);
  });
  return out;
}

}  // namespace mmdmp
