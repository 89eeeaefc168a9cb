#pragma once

// Flat `key = value` run configuration. One key per line, '#' starts a
// comment, unknown keys are errors. Recognized keys:
//
//   training     objective lambda learning_rate max_steps batch_size seed
//                adam_beta1 adam_beta2 adam_eps subsample_policy
//   testing      alpha n_perm statistic repeats
//   kernel       epsilon sigma_phi sigma_q hidden_width
//                train_epsilon train_sigma_phi train_sigma_q train_featurizer
//   synthetic    mu delta dim q_centers test_center train_n test_sets set_size
//   diagnostics  batches diag_every
//
// `seed` drives every random stream of a run (featurizer init, batches,
// permutations, synthetic data).

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mmdmp/deep_kernel.hpp"
#include "mmdmp/error.hpp"
#include "mmdmp/synthetic.hpp"
#include "mmdmp/testing.hpp"
#include "mmdmp/training.hpp"

namespace mmdmp {

struct RunConfig {
  TrainConfig train;
  TestConfig test;
  MixtureSpec mixture;
  KernelConstants kernel;
  TrainableMask trainable;
  int hidden_width = 0;  // 0: twice the input dimension
  int test_center = 0;
  int train_n = 200;
  int test_sets = 1000;
  int set_size = 10;
  int repeats = 100;
  int batches = 100;
  int diag_every = 0;  // 0: only before and after training

  [[nodiscard]] std::uint64_t seed() const { return train.seed; }

  void set_seed(std::uint64_t s) {
    train.seed = s;
    test.seed = s;
    mixture.seed = s;
  }

  void validate() const {
    train.validate();
    test.validate();
    mixture.validate();
    detail::require(kernel.epsilon > 0.0 && kernel.epsilon < 1.0, "epsilon must lie in (0, 1)");
    detail::require(kernel.sigma_phi > 0.0 && kernel.sigma_q > 0.0, "bandwidths must be positive");
    detail::require(hidden_width >= 0, "hidden_width must be non-negative");
    detail::require(test_center >= 0 && test_center < 4, "test_center must be in 0..3");
    detail::require(train_n >= 2, "train_n must be at least 2");
    detail::require(test_sets >= 1, "test_sets must be at least 1");
    detail::require(set_size >= 2, "set_size must be at least 2");
    detail::require(repeats >= 1, "repeats must be at least 1");
    detail::require(batches >= 2, "batches must be at least 2");
    detail::require(diag_every >= 0, "diag_every must be non-negative");
  }

  /// Assigns one key from its textual value.
  void set(const std::string& key, const std::string& value);

  /// Every key with its current value, in a stable order.
  [[nodiscard]] std::vector<std::pair<std::string, std::string>> entries() const;

  [[nodiscard]] std::string to_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : entries()) os << k << " = " << v << '\n';
    return os.str();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw InvalidInput("config key '" + key + "': '" + v + "' is not a number");
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw InvalidInput("config key '" + key + "': '" + v + "' is not an integer");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInput("config key '" + key + "': '" + v + "' is not a boolean");
}

/// Shortest text that reads back to the same double.
inline std::string fmt_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_int;
  using detail::parse_real;
  const std::string& v = value;
  static const std::map<std::string, std::function<void(RunConfig&, const std::string&, const std::string&)>>
      setters = {
          {"objective", [](RunConfig& c, auto&, auto& s) { c.train.objective = parse_objective(s); }},
          {"lambda", [](RunConfig& c, auto& k, auto& s) { c.train.lambda = parse_real(k, s); }},
          {"learning_rate", [](RunConfig& c, auto& k, auto& s) { c.train.learning_rate = parse_real(k, s); }},
          {"max_steps", [](RunConfig& c, auto& k, auto& s) { c.train.max_steps = int(parse_int(k, s)); }},
          {"batch_size", [](RunConfig& c, auto& k, auto& s) { c.train.batch_size = int(parse_int(k, s)); }},
          {"seed", [](RunConfig& c, auto& k, auto& s) { c.set_seed(std::uint64_t(parse_int(k, s))); }},
          {"adam_beta1", [](RunConfig& c, auto& k, auto& s) { c.train.adam_beta1 = parse_real(k, s); }},
          {"adam_beta2", [](RunConfig& c, auto& k, auto& s) { c.train.adam_beta2 = parse_real(k, s); }},
          {"adam_eps", [](RunConfig& c, auto& k, auto& s) { c.train.adam_eps = parse_real(k, s); }},
          {"subsample_policy", [](RunConfig& c, auto&, auto& s) { c.train.subsample = parse_subsample_policy(s); }},
          {"alpha", [](RunConfig& c, auto& k, auto& s) { c.test.alpha = parse_real(k, s); }},
          {"n_perm", [](RunConfig& c, auto& k, auto& s) { c.test.n_perm = int(parse_int(k, s)); }},
          {"statistic", [](RunConfig& c, auto&, auto& s) { c.test.statistic = parse_statistic(s); }},
          {"repeats", [](RunConfig& c, auto& k, auto& s) { c.repeats = int(parse_int(k, s)); }},
          {"epsilon", [](RunConfig& c, auto& k, auto& s) { c.kernel.epsilon = parse_real(k, s); }},
          {"sigma_phi", [](RunConfig& c, auto& k, auto& s) { c.kernel.sigma_phi = parse_real(k, s); }},
          {"sigma_q", [](RunConfig& c, auto& k, auto& s) { c.kernel.sigma_q = parse_real(k, s); }},
          {"hidden_width", [](RunConfig& c, auto& k, auto& s) { c.hidden_width = int(parse_int(k, s)); }},
          {"train_epsilon", [](RunConfig& c, auto& k, auto& s) { c.trainable.epsilon = parse_bool(k, s); }},
          {"train_sigma_phi", [](RunConfig& c, auto& k, auto& s) { c.trainable.sigma_phi = parse_bool(k, s); }},
          {"train_sigma_q", [](RunConfig& c, auto& k, auto& s) { c.trainable.sigma_q = parse_bool(k, s); }},
          {"train_featurizer", [](RunConfig& c, auto& k, auto& s) { c.trainable.featurizer = parse_bool(k, s); }},
          {"mu", [](RunConfig& c, auto& k, auto& s) { c.mixture.mu = parse_real(k, s); }},
          {"delta", [](RunConfig& c, auto& k, auto& s) { c.mixture.delta = parse_real(k, s); }},
          {"dim", [](RunConfig& c, auto& k, auto& s) { c.mixture.d = int(parse_int(k, s)); }},
          {"q_centers", [](RunConfig& c, auto& k, auto& s) { c.mixture.q_centers = int(parse_int(k, s)); }},
          {"test_center", [](RunConfig& c, auto& k, auto& s) { c.test_center = int(parse_int(k, s)); }},
          {"train_n", [](RunConfig& c, auto& k, auto& s) { c.train_n = int(parse_int(k, s)); }},
          {"test_sets", [](RunConfig& c, auto& k, auto& s) { c.test_sets = int(parse_int(k, s)); }},
          {"set_size", [](RunConfig& c, auto& k, auto& s) { c.set_size = int(parse_int(k, s)); }},
          {"batches", [](RunConfig& c, auto& k, auto& s) { c.batches = int(parse_int(k, s)); }},
          {"diag_every", [](RunConfig& c, auto& k, auto& s) { c.diag_every = int(parse_int(k, s)); }},
      };
  const auto it = setters.find(key);
  if (it == setters.end()) throw InvalidInput("unknown config key '" + key + "'");
  it->second(*this, key, v);
}

inline std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  using detail::fmt_real;
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  return {
      {"objective", to_string(train.objective)},
      {"lambda", fmt_real(train.lambda)},
      {"learning_rate", fmt_real(train.learning_rate)},
      {"max_steps", std::to_string(train.max_steps)},
      {"batch_size", std::to_string(train.batch_size)},
      {"seed", std::to_string(train.seed)},
      {"adam_beta1", fmt_real(train.adam_beta1)},
      {"adam_beta2", fmt_real(train.adam_beta2)},
      {"adam_eps", fmt_real(train.adam_eps)},
      {"subsample_policy", to_string(train.subsample)},
      {"alpha", fmt_real(test.alpha)},
      {"n_perm", std::to_string(test.n_perm)},
      {"statistic", to_string(test.statistic)},
      {"repeats", std::to_string(repeats)},
      {"epsilon", fmt_real(kernel.epsilon)},
      {"sigma_phi", fmt_real(kernel.sigma_phi)},
      {"sigma_q", fmt_real(kernel.sigma_q)},
      {"hidden_width", std::to_string(hidden_width)},
      {"train_epsilon", b(trainable.epsilon)},
      {"train_sigma_phi", b(trainable.sigma_phi)},
      {"train_sigma_q", b(trainable.sigma_q)},
      {"train_featurizer", b(trainable.featurizer)},
      {"mu", fmt_real(mixture.mu)},
      {"delta", fmt_real(mixture.delta)},
      {"dim", std::to_string(mixture.d)},
      {"q_centers", std::to_string(mixture.q_centers)},
      {"test_center", std::to_string(test_center)},
      {"train_n", std::to_string(train_n)},
      {"test_sets", std::to_string(test_sets)},
      {"set_size", std::to_string(set_size)},
      {"batches", std::to_string(batches)},
      {"diag_every", std::to_string(diag_every)},
  };
}

/// Applies every `key = value` line of `text` on top of `base`.
inline RunConfig parse_run_config(const std::string& text, RunConfig base = {}, const std::string& what = "config") {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput(what + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      base.set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const InvalidInput& e) {
      throw InvalidInput(what + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

inline RunConfig load_run_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), std::move(base), path);
}

}  // namespace mmdmp
