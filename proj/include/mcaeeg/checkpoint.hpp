#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "mcaeeg/binary_io.hpp"
#include "mcaeeg/cnn3d.hpp"
#include "mcaeeg/error.hpp"

namespace mcaeeg::cnn {

/// Model checkpoint, little-endian:
///   char[8] "MCA3DCNN", u32 version (1), u64 rng seed, u32 n_tensors,
///   per tensor: u32 name length, name bytes, u32 rank, u32 dims[rank],
///   then every tensor's values as f64 in table order.
inline constexpr char kCheckpointMagic[8] = {'M', 'C', 'A', '3', 'D', 'C', 'N', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_checkpoint(std::ostream& os, const ModelParams& params) {
  os.write(kCheckpointMagic, 8);
  io::write_le<std::uint32_t>(os, kCheckpointVersion);
  io::write_le<std::uint64_t>(os, params.seed);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& p : params.tensors) {
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  }
  for (const auto& p : params.tensors)
    for (double v : p.value.data()) io::write_le<double>(os, v);
  if (!os) throw Error("checkpoint: write failed");
}

inline ModelParams read_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw FormatError("checkpoint: bad magic (expected \"MCA3DCNN\")");
  }
  const auto version = io::read_le<std::uint32_t>(is, "checkpoint version");
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  ModelParams params;
  params.seed = io::read_le<std::uint64_t>(is, "seed");
  const auto n = io::read_le<std::uint32_t>(is, "tensor count");
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto len = io::read_le<std::uint32_t>(is, "name length");
    if (len > 4096) throw FormatError("checkpoint: implausible name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw FormatError("checkpoint: truncated tensor name");
    const auto rank = io::read_le<std::uint32_t>(is, "rank");
    if (rank == 0 || rank > 8) throw FormatError("checkpoint: invalid rank for " + name);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(io::read_le<std::uint32_t>(is, "dimension"));
    params.tensors.push_back({name, Tensor(shape), Tensor(shape)});
  }
  for (auto& p : params.tensors)
    for (double& v : p.value.data()) v = io::read_le<double>(is, "parameter payload");
  return params;
}

inline void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("checkpoint: cannot open " + path.string());
  write_checkpoint(os, params);
}

inline ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("checkpoint: cannot open " + path.string());
  return read_checkpoint(is);
}

}  // namespace mcaeeg::cnn
