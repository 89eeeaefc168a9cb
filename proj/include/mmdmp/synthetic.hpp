#pragma once

// P = N(0, I_d) and the four-centre Gaussian mixture
//   Q(mu, delta) = 1/4 sum_c N(mu * [s1 * 1; s2 * 1], delta * I_d)
// with sign patterns (s1, s2) in the order (+,+), (-,+), (+,-), (-,-).

#include <cmath>
#include <cstdint>
#include <random>

#include "mmdmp/error.hpp"
#include "mmdmp/rng.hpp"
#include "mmdmp/sample_set.hpp"

namespace mmdmp {

struct MixtureSpec {
  double mu = 0.4;
  double delta = 1.3;
  int d = 100;
  int q_centers = 4;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(mu >= 0.0, "mu must be non-negative");
    detail::require(delta > 0.0, "delta must be positive");
    detail::require(d >= 2 && d % 2 == 0, "mixture dimension must be even and at least 2, got " + std::to_string(d));
    detail::require(q_centers >= 1 && q_centers <= 4, "q_centers must be in 1..4");
  }
};

/// Mean of mixture component `centre` (0..3).
inline Vector mixture_centre(const MixtureSpec& spec, int centre) {
  detail::require(centre >= 0 && centre < 4, "centre index must be in 0..3");
  const Eigen::Index half = spec.d / 2;
  Vector m(spec.d);
  m.head(half).setConstant((centre & 1) ? -spec.mu : spec.mu);
  m.tail(spec.d - half).setConstant((centre & 2) ? -spec.mu : spec.mu);
  return m;
}

/// n draws from N(0, I_d). `index` picks an independent stream for the same seed.
inline SampleSet sample_p(Eigen::Index n, Eigen::Index d, std::uint64_t seed, std::uint64_t index = 0) {
  detail::require(n >= 1 && d >= 1, "sample_p needs n >= 1 and d >= 1");
  Philox4x32 gen(seed, stream_id(streams::sample_p, index));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(gen);
  return SampleSet(std::move(x), "P");
}

namespace detail {

template <typename PickCentre>
SampleSet sample_mixture(Eigen::Index n, const MixtureSpec& spec, std::uint64_t index, PickCentre&& pick) {
  spec.validate();
  detail::require(n >= 1, "sample_q needs n >= 1");
  Philox4x32 gen(spec.seed, stream_id(streams::sample_q, index));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(spec.delta);
  Vector centres[4];
  for (int c = 0; c < 4; ++c) centres[c] = mixture_centre(spec, c);
  Matrix y(n, spec.d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = pick(gen);
    for (Eigen::Index j = 0; j < spec.d; ++j) y(i, j) = centres[c](j) + sd * normal(gen);
  }
  return SampleSet(std::move(y), "Q");
}

}  // namespace detail

/// n draws from the mixture using its first q_centers components, equally weighted.
inline SampleSet sample_q(Eigen::Index n, const MixtureSpec& spec, std::uint64_t index = 0) {
  std::uniform_int_distribution<int> which(0, spec.q_centers - 1);
  return detail::sample_mixture(n, spec, index, [&](Philox4x32& g) { return which(g); });
}

/// n draws from a single mixture component (test-time protocol).
inline SampleSet sample_q_centre(Eigen::Index n, const MixtureSpec& spec, int centre, std::uint64_t index = 0) {
  detail::require(centre >= 0 && centre < 4, "centre index must be in 0..3");
  return detail::sample_mixture(n, spec, index, [centre](Philox4x32&) { return centre; });
}

/// Euclidean norm of the per-coordinate sample variances (1/(n-1) normalization).
inline double variance_norm(const SampleSet& s) {
  detail::require(s.size() >= 2, "variance_norm needs at least 2 instances");
  const auto n = static_cast<double>(s.size());
  const Matrix centred = s.data.rowwise() - s.data.colwise().mean();
  const Vector var = centred.colwise().squaredNorm().transpose() / (n - 1.0);
  return var.norm();
}

}  // namespace mmdmp
