#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mmdmp/error.hpp"

namespace mmdmp {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// One population of feature vectors: n rows (instances) by d columns.
struct SampleSet {
  Matrix data;
  std::string label;

  SampleSet() = default;
  explicit SampleSet(Matrix m, std::string tag = {}) : data(std::move(m)), label(std::move(tag)) {}

  [[nodiscard]] Eigen::Index size() const { return data.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return data.cols(); }

  /// Rows selected by `idx`, in the given order.
  [[nodiscard]] SampleSet subset(const std::vector<Eigen::Index>& idx) const {
    Matrix out(static_cast<Eigen::Index>(idx.size()), dim());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = data.row(idx[r]);
    return SampleSet(std::move(out), label);
  }
};

/// Throws InvalidInput unless every entry is finite and d >= 1.
inline void validate(const SampleSet& s) {
  detail::require(s.dim() >= 1, "sample set '" + s.label + "' has zero feature dimension");
  for (Eigen::Index i = 0; i < s.data.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.data.cols(); ++j) {
      if (!std::isfinite(s.data(i, j))) {
        throw InvalidInput("sample set '" + s.label + "' has a non-finite value at row " +
                           std::to_string(i) + ", column " + std::to_string(j));
      }
    }
  }
}

/// Stack several populations into one sample set (rows in argument order).
inline SampleSet concatenate(const std::vector<SampleSet>& parts, std::string label = {}) {
  detail::require(!parts.empty(), "concatenate: no sample sets given");
  Eigen::Index rows = 0;
  const Eigen::Index d = parts.front().dim();
  for (const auto& p : parts) {
    detail::require(p.dim() == d, "concatenate: feature dimensions differ");
    rows += p.size();
  }
  Matrix out(rows, d);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.size()) = p.data;
    at += p.size();
  }
  return SampleSet(std::move(out), std::move(label));
}

}  // namespace mmdmp
