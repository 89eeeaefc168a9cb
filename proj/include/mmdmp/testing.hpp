#pragma once

// Permutation two-sample test, repeated-trial power, and single-instance
// detection scores with AUROC.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "mmdmp/deep_kernel.hpp"
#include "mmdmp/error.hpp"
#include "mmdmp/estimators.hpp"
#include "mmdmp/parallel.hpp"
#include "mmdmp/rng.hpp"

namespace mmdmp {

enum class Statistic { mmd, mpp };

inline std::string to_string(Statistic s) { return s == Statistic::mmd ? "mmd" : "mpp"; }

inline Statistic parse_statistic(const std::string& s) {
  if (s == "mmd") return Statistic::mmd;
  if (s == "mpp") return Statistic::mpp;
  throw InvalidInput("unknown statistic '" + s + "' (expected mmd or mpp)");
}

struct TestConfig {
  double alpha = 0.05;
  int n_perm = 200;
  Statistic statistic = Statistic::mmd;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
    detail::require(n_perm >= 1, "n_perm must be at least 1");
  }
};

struct TestOutcome {
  double est = 0.0;
  std::vector<double> perm_values;
  double p_value = 1.0;
  bool reject = false;
};

inline double statistic_value(const KernelMatrices& k, Statistic s) {
  return s == Statistic::mmd ? mmd_u(k) : mpp_u(k);
}

/// p = #{perm >= est} / n_perm, reject iff p <= alpha.
inline TestOutcome make_outcome(double est, std::vector<double> perms, double alpha) {
  detail::require(!perms.empty(), "at least one permutation value is required");
  TestOutcome o;
  o.est = est;
  const auto ge = std::count_if(perms.begin(), perms.end(), [est](double v) { return v >= est; });
  o.p_value = static_cast<double>(ge) / static_cast<double>(perms.size());
  o.reject = o.p_value <= alpha;
  o.perm_values = std::move(perms);
  return o;
}

/// Permutation test on a pooled 2n x 2n kernel matrix whose first n rows are
/// the first sample. `trial` selects the permutation stream.
inline TestOutcome permutation_test(const Matrix& pooled, Eigen::Index n, const TestConfig& cfg,
                                    std::uint64_t trial = 0) {
  cfg.validate();
  detail::require(pooled.rows() == 2 * n && pooled.cols() == 2 * n, "pooled kernel must be 2n x 2n");
  detail::require(n >= 2, "two-sample test needs at least 2 instances per sample");
  const double est = statistic_value(split_blocks(pooled, n), cfg.statistic);

  Philox4x32 gen(cfg.seed, stream_id(streams::permutations, trial));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(2 * n));
  std::vector<double> perms(static_cast<std::size_t>(cfg.n_perm));
  for (auto& value : perms) {
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::shuffle(idx.begin(), idx.end(), gen);
    const std::vector<Eigen::Index> ix(idx.begin(), idx.begin() + n);
    const std::vector<Eigen::Index> iy(idx.begin() + n, idx.end());
    value = statistic_value(gather_blocks(pooled, ix, iy), cfg.statistic);
  }
  return make_outcome(est, std::move(perms), cfg.alpha);
}

inline Matrix pooled_kernel_matrix(const KernelParams& omega, const SampleSet& sp, const SampleSet& sq) {
  detail::require(sp.dim() == sq.dim(), "samples differ in feature dimension");
  Matrix z(sp.size() + sq.size(), sp.dim());
  z << sp.data, sq.data;
  return pooled_kernel(omega, z).k;
}

inline TestOutcome two_sample_test(const SampleSet& sp_te, const SampleSet& sq_te, const KernelParams& omega,
                                   const TestConfig& cfg, std::uint64_t trial = 0) {
  if (sp_te.size() != sq_te.size()) {
    throw InvalidInput("two_sample_test needs equal sample sizes, got " + std::to_string(sp_te.size()) + " and " +
                       std::to_string(sq_te.size()));
  }
  return permutation_test(pooled_kernel_matrix(omega, sp_te, sq_te), sp_te.size(), cfg, trial);
}

using SamplePair = std::pair<SampleSet, SampleSet>;

/// One outcome per pair; pair i uses permutation stream i.
inline std::vector<TestOutcome> run_trials(const std::vector<SamplePair>& pairs, const KernelParams& omega,
                                           const TestConfig& cfg) {
  cfg.validate();
  detail::require(!pairs.empty(), "at least one test pair is required");
  std::vector<TestOutcome> out(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    out[i] = two_sample_test(pairs[i].first, pairs[i].second, omega, cfg, i);
  });
  return out;
}

/// `repeats` test pairs, each holding set_size rows drawn without replacement
/// from each pool. Pair r depends only on (seed, r).
inline std::vector<SamplePair> draw_test_pairs(const SampleSet& pool_p, const SampleSet& pool_q, Eigen::Index set_size,
                                               int repeats, std::uint64_t seed) {
  detail::require(set_size >= 2, "set_size must be at least 2");
  detail::require(repeats >= 1, "repeats must be at least 1");
  if (set_size > pool_p.size() || set_size > pool_q.size()) {
    throw InvalidInput("set_size " + std::to_string(set_size) + " exceeds a test pool (" +
                       std::to_string(pool_p.size()) + " and " + std::to_string(pool_q.size()) + " rows)");
  }
  std::vector<SamplePair> pairs;
  pairs.reserve(static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) {
    Philox4x32 gen(seed, stream_id(streams::test_sets, static_cast<std::uint64_t>(r)));
    auto draw = [&](const SampleSet& pool) {
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(pool.size()));
      std::iota(idx.begin(), idx.end(), Eigen::Index{0});
      std::shuffle(idx.begin(), idx.end(), gen);
      idx.resize(static_cast<std::size_t>(set_size));
      return pool.subset(idx);
    };
    SampleSet a = draw(pool_p);
    SampleSet b = draw(pool_q);
    pairs.emplace_back(std::move(a), std::move(b));
  }
  return pairs;
}

inline double rejection_rate(const std::vector<TestOutcome>& outcomes) {
  detail::require(!outcomes.empty(), "no outcomes");
  const auto r = std::count_if(outcomes.begin(), outcomes.end(), [](const TestOutcome& o) { return o.reject; });
  return static_cast<double>(r) / static_cast<double>(outcomes.size());
}

inline double test_power(const std::vector<SamplePair>& pairs, const KernelParams& omega, const TestConfig& cfg) {
  return rejection_rate(run_trials(pairs, omega, cfg));
}

/// Biased MMD between the reference set and each instance on its own.
/// Larger means further from the reference population.
inline std::vector<double> sid_scores(const SampleSet& sp_ref, const SampleSet& instances,
                                      const KernelParams& omega) {
  detail::require(sp_ref.size() >= 1, "sid_scores: reference set is empty");
  detail::require(sp_ref.dim() == instances.dim(), "sid_scores: reference and instances differ in dimension");
  const Matrix ref_k = pooled_kernel(omega, sp_ref.data).k;
  const Matrix cross = cross_kernel(omega, sp_ref.data, instances.data);
  const double eps = omega.epsilon();
  const double self = ((1.0 - eps) * 1.0 + eps) * 1.0;
  std::vector<double> scores(static_cast<std::size_t>(instances.size()));
  for (Eigen::Index j = 0; j < instances.size(); ++j) {
    scores[static_cast<std::size_t>(j)] = mmd_b(ref_k, cross.col(j), self);
  }
  return scores;
}

/// Area under the ROC curve with scores_q as the positive class; ties get
/// half credit. Rank-sum form, O((n + m) log(n + m)).
inline double auroc(const std::vector<double>& scores_p, const std::vector<double>& scores_q) {
  detail::require(!scores_p.empty() && !scores_q.empty(), "auroc needs two non-empty score lists");
  const std::size_t n = scores_p.size();
  const std::size_t m = scores_q.size();
  std::vector<std::pair<double, bool>> all;
  all.reserve(n + m);
  for (double s : scores_p) all.emplace_back(s, false);
  for (double s : scores_q) all.emplace_back(s, true);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  double rank_sum_q = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    // ranks i+1 .. j share their mean
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (all[t].second) rank_sum_q += mid_rank;
    i = j;
  }
  const double u = rank_sum_q - 0.5 * static_cast<double>(m) * static_cast<double>(m + 1);
  return u / (static_cast<double>(n) * static_cast<double>(m));
}

}  // namespace mmdmp
