#pragma once

// MMDK model files:
//   "MMDK" | u32 version
//   then, until end of file, one record per parameter group:
//   u32 name length | name bytes | u32 rank | rank x u32 dims | prod(dims) float64 values
// Little-endian throughout; matrices row-major; rank 0 holds one value.
//
// Groups: epsilon_raw, log_sigma_phi, log_sigma_q (rank 0), trainable_mask
// (rank 1, four 0/1 values for epsilon / sigma_phi / sigma_q / featurizer),
// then layer<i>.weight (out x in) and layer<i>.bias (out) for each layer.
// Every layer but the last is followed by softplus.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mmdmp/binary_io.hpp"
#include "mmdmp/deep_kernel.hpp"
#include "mmdmp/error.hpp"

namespace mmdmp {

inline constexpr std::uint32_t mmdk_version = 1;

namespace detail {

inline void put_group(Bytes& out, const std::string& name, const std::vector<std::uint32_t>& dims,
                      const double* values, std::size_t count) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put_u32(out, d);
  for (std::size_t i = 0; i < count; ++i) put_f64(out, values[i]);
}

struct Group {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

}  // namespace detail

inline detail::Bytes encode_model(const KernelParams& p) {
  detail::Bytes out{'M', 'M', 'D', 'K'};
  detail::put_u32(out, mmdk_version);
  detail::put_group(out, "epsilon_raw", {}, &p.epsilon_raw, 1);
  detail::put_group(out, "log_sigma_phi", {}, &p.log_sigma_phi, 1);
  detail::put_group(out, "log_sigma_q", {}, &p.log_sigma_q, 1);
  const double mask[4] = {double(p.trainable.epsilon), double(p.trainable.sigma_phi), double(p.trainable.sigma_q),
                          double(p.trainable.featurizer)};
  detail::put_group(out, "trainable_mask", {4}, mask, 4);
  for (std::size_t i = 0; i < p.featurizer.layers.size(); ++i) {
    const auto& l = p.featurizer.layers[i];
    const std::string base = "layer" + std::to_string(i);
    detail::put_group(out, base + ".weight",
                      {static_cast<std::uint32_t>(l.weight.rows()), static_cast<std::uint32_t>(l.weight.cols())},
                      l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    detail::put_group(out, base + ".bias", {static_cast<std::uint32_t>(l.bias.size())}, l.bias.data(),
                      static_cast<std::size_t>(l.bias.size()));
  }
  return out;
}

inline KernelParams decode_model(const detail::Bytes& bytes, const std::string& what = "MMDK data") {
  detail::Reader r(bytes, what);
  if (r.text(4, "magic") != "MMDK") throw FormatError(what + ": bad magic (expected MMDK)");
  const auto version = r.u32("version");
  if (version != mmdk_version) throw FormatError(what + ": unsupported version " + std::to_string(version));

  std::map<std::string, detail::Group> groups;
  while (r.remaining() > 0) {
    const auto len = r.u32("group name length");
    const std::string name = r.text(len, "group name");
    detail::Group g;
    const auto rank = r.u32(name + " rank");
    if (rank > 2) throw FormatError(what + ": group '" + name + "' has unsupported rank " + std::to_string(rank));
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      g.dims.push_back(r.u32(name + " shape"));
      count *= g.dims.back();
    }
    r.need(count * 8, name + " values");
    for (std::uint64_t i = 0; i < count; ++i) g.values.push_back(r.f64(name + " values"));
    if (!groups.emplace(name, std::move(g)).second) throw FormatError(what + ": duplicate group '" + name + "'");
  }

  auto take = [&](const std::string& name, std::size_t rank) -> detail::Group {
    const auto it = groups.find(name);
    if (it == groups.end()) throw FormatError(what + ": missing group '" + name + "'");
    if (it->second.dims.size() != rank) throw FormatError(what + ": group '" + name + "' has the wrong rank");
    detail::Group g = std::move(it->second);
    groups.erase(it);
    return g;
  };

  KernelParams p;
  p.epsilon_raw = take("epsilon_raw", 0).values[0];
  p.log_sigma_phi = take("log_sigma_phi", 0).values[0];
  p.log_sigma_q = take("log_sigma_q", 0).values[0];
  const auto mask = take("trainable_mask", 1);
  if (mask.values.size() != 4) throw FormatError(what + ": trainable_mask must hold 4 values");
  p.trainable = {mask.values[0] != 0.0, mask.values[1] != 0.0, mask.values[2] != 0.0, mask.values[3] != 0.0};
  for (std::size_t i = 0; groups.count("layer" + std::to_string(i) + ".weight") > 0; ++i) {
    const std::string base = "layer" + std::to_string(i);
    const auto w = take(base + ".weight", 2);
    const auto b = take(base + ".bias", 1);
    DenseLayer l;
    l.weight = Eigen::Map<const Matrix>(w.values.data(), w.dims[0], w.dims[1]);
    l.bias = Eigen::Map<const Vector>(b.values.data(), b.dims[0]);
    p.featurizer.layers.push_back(std::move(l));
  }
  if (!groups.empty()) throw FormatError(what + ": unexpected group '" + groups.begin()->first + "'");
  try {
    p.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(what + ": " + e.what());
  }
  return p;
}

inline void save_model(const std::string& path, const KernelParams& p) { detail::write_file(path, encode_model(p)); }

inline KernelParams load_model(const std::string& path) { return decode_model(detail::read_file(path), path); }

}  // namespace mmdmp
