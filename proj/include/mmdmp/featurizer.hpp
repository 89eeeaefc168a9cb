#pragma once

// Fully connected featurizer: a stack of dense layers with softplus between
// them and a linear output layer. Rows are instances.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mmdmp/error.hpp"
#include "mmdmp/rng.hpp"
#include "mmdmp/sample_set.hpp"

namespace mmdmp {

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out

  [[nodiscard]] Eigen::Index in_dim() const { return weight.cols(); }
  [[nodiscard]] Eigen::Index out_dim() const { return weight.rows(); }
};

struct FeaturizerParams {
  std::vector<DenseLayer> layers;

  [[nodiscard]] Eigen::Index in_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  [[nodiscard]] Eigen::Index out_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  [[nodiscard]] Eigen::Index parameter_count() const {
    Eigen::Index c = 0;
    for (const auto& l : layers) c += l.weight.size() + l.bias.size();
    return c;
  }

  /// Throws unless consecutive layer shapes chain and all values are finite.
  void validate() const {
    detail::require(!layers.empty(), "featurizer has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      detail::require(l.bias.size() == l.out_dim(),
                      "featurizer layer " + std::to_string(i) + ": bias length does not match weight rows");
      if (i > 0) {
        detail::require(l.in_dim() == layers[i - 1].out_dim(),
                        "featurizer layer " + std::to_string(i) + ": input width does not match previous layer");
      }
      detail::require(l.weight.allFinite() && l.bias.allFinite(),
                      "featurizer layer " + std::to_string(i) + " has non-finite parameters");
    }
  }
};

namespace detail {

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

/// MLP with widths {in, hidden..., out}; weights ~ N(0, 2/fan_in), zero biases.
inline FeaturizerParams make_mlp(const std::vector<Eigen::Index>& widths, std::uint64_t seed) {
  detail::require(widths.size() >= 2, "an MLP needs at least an input and an output width");
  FeaturizerParams p;
  Philox4x32 gen(seed, stream_id(streams::featurizer_init));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    detail::require(widths[i] >= 1 && widths[i + 1] >= 1, "MLP widths must be positive");
    DenseLayer l;
    l.weight.resize(widths[i + 1], widths[i]);
    const double scale = std::sqrt(2.0 / static_cast<double>(widths[i]));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = scale * normal(gen);
    l.bias = Vector::Zero(widths[i + 1]);
    p.layers.push_back(std::move(l));
  }
  return p;
}

/// The default featurizer shape d -> 2d -> 2d -> d.
inline FeaturizerParams make_default_featurizer(Eigen::Index d, std::uint64_t seed) {
  return make_mlp({d, 2 * d, 2 * d, d}, seed);
}

/// Intermediate values kept for the backward pass.
struct FeaturizerTape {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each hidden layer
};

inline Matrix featurize(const FeaturizerParams& phi, const Matrix& x, FeaturizerTape* tape = nullptr) {
  detail::require(!phi.layers.empty(), "featurizer has no layers");
  if (x.cols() != phi.in_dim()) {
    throw InvalidInput("featurizer expects " + std::to_string(phi.in_dim()) + " input columns, got " +
                       std::to_string(x.cols()));
  }
  if (tape) {
    tape->inputs.clear();
    tape->pre.clear();
  }
  Matrix a = x;
  for (std::size_t i = 0; i < phi.layers.size(); ++i) {
    const auto& l = phi.layers[i];
    Matrix z = a * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    if (tape) tape->inputs.push_back(std::move(a));
    if (i + 1 < phi.layers.size()) {
      if (tape) tape->pre.push_back(z);
      a = z.unaryExpr([](double v) { return detail::softplus(v); });
    } else {
      a = std::move(z);
    }
  }
  return a;
}

inline Matrix featurize(const FeaturizerParams& phi, const SampleSet& x) { return featurize(phi, x.data); }

/// Gradient of sum(grad_out .* featurize(x)) with respect to every layer,
/// laid out like FeaturizerParams.
inline FeaturizerParams featurizer_backward(const FeaturizerParams& phi, const FeaturizerTape& tape,
                                            Matrix grad_out) {
  FeaturizerParams g;
  g.layers.resize(phi.layers.size());
  for (std::size_t k = phi.layers.size(); k-- > 0;) {
    if (k + 1 < phi.layers.size()) {
      grad_out.array() *= tape.pre[k].unaryExpr([](double v) { return detail::logistic(v); }).array();
    }
    g.layers[k].weight = grad_out.transpose() * tape.inputs[k];
    g.layers[k].bias = grad_out.colwise().sum().transpose();
    if (k > 0) grad_out = grad_out * phi.layers[k].weight;
  }
  return g;
}

}  // namespace mmdmp
