#pragma once

// EMB1 embedding files:
//   "EMB1" | u32 version = 1 | u32 n | u32 d | n*d float32, row-major
// All integers and floats little-endian. Values are stored as 32-bit and
// widened to 64-bit on load. An optional sidecar "<path>.labels" holds one
// population label per row.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmdmp/binary_io.hpp"
#include "mmdmp/error.hpp"
#include "mmdmp/rng.hpp"
#include "mmdmp/sample_set.hpp"

namespace mmdmp {

inline constexpr std::uint32_t emb1_version = 1;

inline detail::Bytes encode_embeddings(const SampleSet& s) {
  detail::require(s.size() >= 1 && s.dim() >= 1, "EMB1 needs n >= 1 and d >= 1");
  detail::Bytes out{'E', 'M', 'B', '1'};
  detail::put_u32(out, emb1_version);
  detail::put_u32(out, static_cast<std::uint32_t>(s.size()));
  detail::put_u32(out, static_cast<std::uint32_t>(s.dim()));
  out.reserve(out.size() + static_cast<std::size_t>(s.data.size()) * 4);
  for (Eigen::Index i = 0; i < s.size(); ++i)
    for (Eigen::Index j = 0; j < s.dim(); ++j) detail::put_f32(out, static_cast<float>(s.data(i, j)));
  return out;
}

inline SampleSet decode_embeddings(const detail::Bytes& bytes, const std::string& what = "EMB1 data") {
  detail::Reader r(bytes, what);
  if (r.text(4, "magic") != "EMB1") throw FormatError(what + ": bad magic (expected EMB1)");
  const auto version = r.u32("version");
  if (version != emb1_version) throw FormatError(what + ": unsupported version " + std::to_string(version));
  const auto n = r.u32("n");
  const auto d = r.u32("d");
  if (n == 0) throw FormatError(what + ": n = 0 (at least one row required)");
  if (d == 0) throw FormatError(what + ": d = 0 (at least one column required)");
  const std::size_t expected = static_cast<std::size_t>(n) * d * 4;
  if (r.remaining() != expected) {
    throw FormatError(what + ": payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(expected) + " for n=" + std::to_string(n) + ", d=" + std::to_string(d));
  }
  Matrix m(n, d);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) {
      const float v = r.f32("payload");
      if (!std::isfinite(v)) {
        throw FormatError(what + ": non-finite value at row " + std::to_string(i) + ", column " + std::to_string(j));
      }
      m(i, j) = static_cast<double>(v);
    }
  }
  return SampleSet(std::move(m));
}

inline std::string labels_path(const std::string& path) { return path + ".labels"; }

inline SampleSet load_embeddings(const std::string& path) {
  SampleSet s = decode_embeddings(detail::read_file(path), path);
  s.label = std::filesystem::path(path).stem().string();
  return s;
}

/// Per-row labels from the sidecar file, if one exists.
inline std::optional<std::vector<std::string>> load_row_labels(const std::string& path, Eigen::Index expected_rows) {
  std::ifstream in(labels_path(path));
  if (!in) return std::nullopt;
  std::vector<std::string> labels;
  for (std::string line; std::getline(in, line);) labels.push_back(line);
  if (static_cast<Eigen::Index>(labels.size()) != expected_rows) {
    throw FormatError(labels_path(path) + ": has " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(expected_rows) + " rows");
  }
  return labels;
}

inline void save_embeddings(const std::string& path, const SampleSet& s,
                            const std::vector<std::string>* row_labels = nullptr) {
  validate(s);
  detail::write_file(path, encode_embeddings(s));
  if (row_labels) {
    detail::require(static_cast<Eigen::Index>(row_labels->size()) == s.size(), "one label per row required");
    std::ofstream out(labels_path(path), std::ios::trunc);
    for (const auto& l : *row_labels) out << l << '\n';
  }
}

/// Seeded uniform shuffle, then the first round(train_fraction * n) rows go
/// to the training part and the rest to the test part.
inline std::pair<SampleSet, SampleSet> split(const SampleSet& s, double train_fraction, double test_fraction,
                                             std::uint64_t seed) {
  detail::require(train_fraction >= 0.0 && test_fraction >= 0.0, "split fractions must be non-negative");
  detail::require(std::abs(train_fraction + test_fraction - 1.0) <= 1e-9, "split fractions must sum to 1");
  const Eigen::Index n = s.size();
  const auto n_train = static_cast<Eigen::Index>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train < 1 || n - n_train < 1) {
    throw InvalidInput("split of " + std::to_string(n) + " rows would leave an empty part");
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Philox4x32 gen(seed, stream_id(streams::split));
  std::shuffle(idx.begin(), idx.end(), gen);
  const std::vector<Eigen::Index> a(idx.begin(), idx.begin() + n_train);
  const std::vector<Eigen::Index> b(idx.begin() + n_train, idx.end());
  return {s.subset(a), s.subset(b)};
}

}  // namespace mmdmp
