#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mcaeeg/binary_io.hpp"
#include "mcaeeg/error.hpp"
#include "mcaeeg/preprocess.hpp"
#include "mcaeeg/tensor.hpp"

namespace mcaeeg {

/// One subject/video recording with its self-assessment ratings.
struct EegTrial {
  std::uint32_t subject_id = 0;
  std::uint32_t trial_id = 0;
  double valence = 5.0;  // 1..9
  double arousal = 5.0;  // 1..9
  RawRecording recording;

  /// FNV-1a over the little-endian float32 payload as stored on disk.
  std::uint64_t checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : recording.samples.data()) {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      const unsigned char le[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                   static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
      h = io::fnv1a(le, 4, h);
    }
    return h;
  }
};

/// EEGC container.
///
/// Layout, little-endian throughout:
///   char[4]  magic "EEGC"
///   u16      version (1)
///   u32      n_trials
///   per trial:
///     u32 subject_id, u32 trial_id, u32 channels, f64 sample_rate_hz,
///     u32 n_samples, f64 valence, f64 arousal,
///     f32[channels * n_samples] samples, channel-major
struct EegContainer {
  static constexpr char kMagic[4] = {'E', 'E', 'G', 'C'};
  static constexpr std::uint16_t kVersion = 1;

  std::vector<EegTrial> trials;

  void write(std::ostream& os) const {
    os.write(kMagic, 4);
    io::write_le<std::uint16_t>(os, kVersion);
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(trials.size()));
    for (const auto& t : trials) {
      validate_ratings(t);
      const auto& s = t.recording.samples;
      io::write_le<std::uint32_t>(os, t.subject_id);
      io::write_le<std::uint32_t>(os, t.trial_id);
      io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.dim(0)));
      io::write_le<double>(os, t.recording.sample_rate_hz);
      io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.dim(1)));
      io::write_le<double>(os, t.valence);
      io::write_le<double>(os, t.arousal);
      std::vector<char> payload(s.size() * 4);
      for (std::size_t k = 0; k < s.size(); ++k) {
        const float f = static_cast<float>(s[k]);
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof bits);
        for (int b = 0; b < 4; ++b) payload[4 * k + static_cast<std::size_t>(b)] = static_cast<char>(bits >> (8 * b));
      }
      os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    }
    if (!os) throw Error("EEGC: write failed");
  }

  static EegContainer read(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4)) throw FormatError("EEGC: file too short for magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("EEGC: bad magic (expected \"EEGC\")");
    const auto version = io::read_le<std::uint16_t>(is, "version");
    if (version != kVersion) {
      throw FormatError("EEGC: unsupported version " + std::to_string(version));
    }
    const auto n_trials = io::read_le<std::uint32_t>(is, "trial count");
    EegContainer c;
    for (std::uint32_t i = 0; i < n_trials; ++i) {
      const std::string at = " (trial " + std::to_string(i) + ")";
      EegTrial t;
      t.subject_id = io::read_le<std::uint32_t>(is, "subject id");
      t.trial_id = io::read_le<std::uint32_t>(is, "trial id");
      const auto channels = io::read_le<std::uint32_t>(is, "channel count");
      t.recording.sample_rate_hz = io::read_le<double>(is, "sample rate");
      const auto n_samples = io::read_le<std::uint32_t>(is, "sample count");
      t.valence = io::read_le<double>(is, "valence");
      t.arousal = io::read_le<double>(is, "arousal");
      if (channels == 0 || n_samples == 0) throw FormatError("EEGC: empty trial" + at);
      if (!(t.recording.sample_rate_hz > 0.0)) throw FormatError("EEGC: invalid sample rate" + at);
      validate_ratings(t);
      const std::size_t n = static_cast<std::size_t>(channels) * n_samples;
      std::vector<char> raw(n * 4);
      if (!is.read(raw.data(), static_cast<std::streamsize>(raw.size()))) {
        throw FormatError("EEGC: truncated sample payload" + at + ", expected " + std::to_string(raw.size()) +
                          " bytes");
      }
      std::vector<double> values(n);
      for (std::size_t k = 0; k < n; ++k) {
        std::uint32_t bits = static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * k])) |
                             static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * k + 1])) << 8 |
                             static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * k + 2])) << 16 |
                             static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * k + 3])) << 24;
        float f;
        std::memcpy(&f, &bits, sizeof f);
        values[k] = f;
      }
      t.recording.samples = Tensor({channels, n_samples}, std::move(values));
      c.trials.push_back(std::move(t));
    }
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("EEGC: trailing bytes after last trial");
    return c;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("EEGC: cannot open " + path.string() + " for writing");
    write(os);
  }

  static EegContainer load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("EEGC: cannot open " + path.string());
    return read(is);
  }

  const EegTrial* find(std::uint32_t subject, std::uint32_t trial) const {
    for (const auto& t : trials)
      if (t.subject_id == subject && t.trial_id == trial) return &t;
    return nullptr;
  }

 private:
  static void validate_ratings(const EegTrial& t) {
    auto ok = [](double r) { return r >= 1.0 && r <= 9.0; };
    if (!ok(t.valence) || !ok(t.arousal)) {
      throw FormatError("EEGC: ratings must lie in [1, 9] (subject " + std::to_string(t.subject_id) + ", trial " +
                        std::to_string(t.trial_id) + ")");
    }
  }
};

}  // namespace mcaeeg
