#pragma once

// Kernel training loop: each step draws an equal-size batch from the HWT
// pool and from the union of all MGT populations, evaluates the selected
// objective and its gradient, and takes one Adam ascent step.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "mmdmp/adam.hpp"
#include "mmdmp/deep_kernel.hpp"
#include "mmdmp/error.hpp"
#include "mmdmp/objective.hpp"
#include "mmdmp/rng.hpp"

namespace mmdmp {

enum class SubsamplePolicy {
  subsample,  // draw batch_size from each pool, whatever their sizes
  reject,     // require equally sized pools
};

inline SubsamplePolicy parse_subsample_policy(const std::string& s) {
  if (s == "subsample") return SubsamplePolicy::subsample;
  if (s == "reject") return SubsamplePolicy::reject;
  throw InvalidInput("unknown subsample policy '" + s + "' (expected subsample or reject)");
}

inline std::string to_string(SubsamplePolicy p) { return p == SubsamplePolicy::subsample ? "subsample" : "reject"; }

struct TrainConfig {
  Objective objective = Objective::mmd_mp;
  double lambda = 1e-8;
  double learning_rate = 5e-5;
  int max_steps = 1000;
  int batch_size = 200;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  SubsamplePolicy subsample = SubsamplePolicy::subsample;

  void validate() const {
    detail::require(lambda > 0.0, "lambda must be positive");
    detail::require(learning_rate > 0.0, "learning_rate must be positive");
    detail::require(batch_size >= 2, "batch_size must be at least 2");
    detail::require(max_steps >= 0, "max_steps must be non-negative");
  }
};

struct TrainRecord {
  int step = 0;
  double objective = 0.0;  // J
  double estimate = 0.0;   // M
  double variance = 0.0;   // V
  double mmd_u = 0.0;      // MMD U-statistic on the same batch, whatever the objective
  double e_kxx = 0.0;
  double e_kyy = 0.0;
  double e_kxy = 0.0;
  double elapsed_ms = 0.0;  // wall clock since training began; not reproducible
};

struct TrainTrace {
  std::vector<TrainRecord> records;
  KernelParams final_params;
};

/// Called with (steps completed, current parameters): once before the first
/// update and after every update.
using TrainObserver = std::function<void(int, const KernelParams&)>;

namespace detail {

/// Without-replacement batches from one pool: shuffle, walk, reshuffle when
/// fewer than batch_size unseen rows remain.
class EpochSampler {
 public:
  EpochSampler(Eigen::Index pool, std::uint64_t seed, std::uint64_t tag)
      : order_(static_cast<std::size_t>(pool)), gen_(seed, stream_id(streams::batches, tag)) {
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    reshuffle();
  }

  std::vector<Eigen::Index> next(std::size_t batch) {
    if (at_ + batch > order_.size()) reshuffle();
    std::vector<Eigen::Index> out(order_.begin() + static_cast<std::ptrdiff_t>(at_),
                                  order_.begin() + static_cast<std::ptrdiff_t>(at_ + batch));
    at_ += batch;
    return out;
  }

 private:
  void reshuffle() {
    std::shuffle(order_.begin(), order_.end(), gen_);
    at_ = 0;
  }

  std::vector<Eigen::Index> order_;
  Philox4x32 gen_;
  std::size_t at_ = 0;
};

}  // namespace detail

inline TrainTrace train(const SampleSet& sp_train, const std::vector<SampleSet>& sq_train_list, KernelParams omega,
                        const TrainConfig& cfg, const TrainObserver& observer = {}) {
  cfg.validate();
  omega.validate();
  validate(sp_train);
  detail::require(!sq_train_list.empty(), "train: at least one MGT population is required");
  for (const auto& s : sq_train_list) validate(s);
  const SampleSet sq_train = concatenate(sq_train_list, "mgt");
  detail::require(sp_train.dim() == sq_train.dim(), "train: populations differ in feature dimension");
  detail::require(sp_train.dim() == omega.featurizer.in_dim(), "train: featurizer input width does not match data");
  if (cfg.subsample == SubsamplePolicy::reject) {
    detail::require(sp_train.size() == sq_train.size(),
                    "train: populations are unbalanced and subsample_policy = reject");
  }
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  if (cfg.batch_size > sp_train.size() || cfg.batch_size > sq_train.size()) {
    throw InvalidInput("batch_size " + std::to_string(cfg.batch_size) + " exceeds a training population (" +
                       std::to_string(sp_train.size()) + " HWT, " + std::to_string(sq_train.size()) + " MGT)");
  }

  detail::EpochSampler draw_p(sp_train.size(), cfg.seed, 0);
  detail::EpochSampler draw_q(sq_train.size(), cfg.seed, 1);
  Adam adam({cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps}, trainable_count(omega));
  Vector theta = pack_trainable(omega);

  TrainTrace trace;
  trace.records.reserve(static_cast<std::size_t>(cfg.max_steps));
  const auto start = std::chrono::steady_clock::now();
  if (observer) observer(0, omega);

  for (int step = 0; step < cfg.max_steps; ++step) {
    const SampleSet bp = sp_train.subset(draw_p.next(batch));
    const SampleSet bq = sq_train.subset(draw_q.next(batch));
    ObjectiveGradient og;
    KernelMatrices k;
    try {
      og = objective_gradient(omega, bp, bq, cfg.objective, cfg.lambda, &k);
    } catch (const TrainingError& e) {
      throw TrainingError("step " + std::to_string(step) + ": " + e.what());
    }

    TrainRecord rec;
    rec.step = step;
    rec.objective = og.value.value;
    rec.estimate = og.value.estimate;
    rec.variance = og.value.variance;
    rec.mmd_u = mmd_u(k);
    rec.e_kxx = detail::offdiag_mean(k.kxx);
    rec.e_kyy = detail::offdiag_mean(k.kyy);
    rec.e_kxy = k.kxy.mean();
    rec.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    trace.records.push_back(rec);

    if (theta.size() > 0) {
      adam.ascend(theta, og.gradient);
      unpack_trainable(omega, theta);
    }
    if (observer) observer(step + 1, omega);
  }
  trace.final_params = std::move(omega);
  return trace;
}

}  // namespace mmdmp
