#pragma once

// End-to-end pipelines built from the library pieces: synthetic power runs
// and kernel construction from a RunConfig.

#include <cstdint>
#include <vector>

#include "mmdmp/deep_kernel.hpp"
#include "mmdmp/run_config.hpp"
#include "mmdmp/synthetic.hpp"
#include "mmdmp/testing.hpp"
#include "mmdmp/training.hpp"

namespace mmdmp {

/// Fresh kernel for d-dimensional inputs: MLP d -> h -> h -> d with
/// h = hidden_width (or 2d), kernel constants and trainable mask from cfg.
inline KernelParams initial_kernel(const RunConfig& cfg, Eigen::Index d) {
  const Eigen::Index h = cfg.hidden_width > 0 ? cfg.hidden_width : 2 * d;
  return make_kernel(cfg.kernel, make_mlp({d, h, h, d}, cfg.seed()), cfg.trainable);
}

/// RunConfig for the synthetic mixture runs. Featurizer outputs on 100-d
/// Gaussian inputs sit about 13 apart, so sigma_phi = 45 would make kappa
/// nearly constant; 10 keeps it informative.
inline RunConfig synthetic_defaults() {
  RunConfig c;
  c.kernel.sigma_phi = 10.0;
  return c;
}

// Stream indices for synthetic data within one seed: training pools use 0,
// held-out pools 1, test set t uses first_test_index + t.
namespace synth_index {
inline constexpr std::uint64_t train = 0;
inline constexpr std::uint64_t held_out = 1;
inline constexpr std::uint64_t first_test = 1000;
}  // namespace synth_index

struct SynthPowerResult {
  double mu = 0.0;
  double power = 0.0;
  double q_variance_norm = 0.0;  // of the training mixture sample
  double final_objective = 0.0;
  TrainTrace trace;
};

/// Test pairs: set_size draws from P against set_size draws from the single
/// designated mixture component.
inline std::vector<SamplePair> synthetic_test_pairs(const RunConfig& cfg) {
  std::vector<SamplePair> pairs;
  pairs.reserve(static_cast<std::size_t>(cfg.test_sets));
  for (int t = 0; t < cfg.test_sets; ++t) {
    const std::uint64_t idx = synth_index::first_test + static_cast<std::uint64_t>(t);
    pairs.emplace_back(sample_p(cfg.set_size, cfg.mixture.d, cfg.seed(), idx),
                       sample_q_centre(cfg.set_size, cfg.mixture, cfg.test_center, idx));
  }
  return pairs;
}

/// Trains a kernel on train_n draws of P and of the full mixture, then
/// estimates power on test_sets single-centre test pairs.
inline SynthPowerResult run_synth_power(const RunConfig& cfg) {
  cfg.validate();
  const SampleSet p = sample_p(cfg.train_n, cfg.mixture.d, cfg.seed(), synth_index::train);
  const SampleSet q = sample_q(cfg.train_n, cfg.mixture, synth_index::train);
  TrainConfig tc = cfg.train;
  tc.batch_size = std::min(tc.batch_size, cfg.train_n);
  SynthPowerResult r;
  r.mu = cfg.mixture.mu;
  r.q_variance_norm = variance_norm(q);
  r.trace = train(p, {q}, initial_kernel(cfg, cfg.mixture.d), tc);
  if (!r.trace.records.empty()) r.final_objective = r.trace.records.back().objective;
  r.power = test_power(synthetic_test_pairs(cfg), r.trace.final_params, cfg.test);
  return r;
}

/// The mu grid {0.22, 0.24, ..., 0.40}.
inline std::vector<double> mu_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 10; ++i) g.push_back(0.2 + 0.02 * i);
  return g;
}

}  // namespace mmdmp
