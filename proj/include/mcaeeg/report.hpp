#pragma once

#include <charconv>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcaeeg/eegc.hpp"
#include "mcaeeg/features.hpp"
#include "mcaeeg/pipeline.hpp"

namespace mcaeeg {

using nlohmann::json;

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline json metrics_json(const cnn::Metrics& m) {
  return {{"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"confusion", {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}, {"tn", m.confusion.tn}}}};
}

inline json config_json(const ExperimentConfig& c) {
  const auto& p = c.preprocess;
  return {{"target", to_string(c.target)},
          {"feature_mode", to_string(c.feature_mode)},
          {"zscore_before_fusion", c.zscore_before_fusion},
          {"rating_threshold", c.rating_threshold},
          {"standardize_inputs", c.standardize_inputs},
          {"preprocess",
           {{"notch", p.notch},
            {"notch_hz", p.notch_hz},
            {"bandpass", p.bandpass},
            {"bandpass_hz", {p.bandpass_lo_hz, p.bandpass_hi_hz}},
            {"bandpass_order", p.bandpass_order},
            {"ica", p.ica},
            {"downsample", p.downsample},
            {"target_hz", p.target_hz}}},
          {"frames",
           {{"window_s", c.frames.window_s},
            {"hop_s", c.frames.hop_s},
            {"frames_per_trial", c.frames.frames_per_trial},
            {"frames_per_segment", c.frames_per_segment}}},
          {"train",
           {{"epochs", c.train.epochs},
            {"batch_size", c.train.batch_size},
            {"lr", c.train.adam.lr},
            {"train_fraction", c.train.train_fraction},
            {"seed", c.train.seed}}}};
}

/// Metrics report for one run. Wall-clock figures are only included on
/// request so that reports from identical runs compare byte for byte.
inline json run_json(const RunResult& r, const ExperimentConfig& cfg, bool include_timing = false) {
  json history = json::array();
  for (const auto& e : r.history) history.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"train_accuracy", e.accuracy}});
  json j = {{"config", config_json(cfg)},
            {"target", to_string(r.target)},
            {"feature_mode", to_string(r.mode)},
            {"seed", r.seed},
            {"n_train", r.n_train},
            {"n_test", r.n_test},
            {"split_hash", hex64(r.split_hash)},
            {"metrics", metrics_json(r.metrics)},
            {"history", history}};
  if (include_timing) j["inference_ms_per_segment"] = r.inference_ms_per_segment;
  return j;
}

inline json ablation_json(const AblationResult& a, const ExperimentConfig& cfg) {
  const double sum_mean = a.row(FeatureMode::sum).mean;
  json rows = json::array();
  for (const auto& row : a.rows) {
    json hashes = json::array();
    for (auto h : row.split_hashes) hashes.push_back(hex64(h));
    json jr = {{"feature_mode", to_string(row.mode)},
               {"accuracy", row.accuracies},
               {"mean", row.mean},
               {"std", row.stddev},
               {"split_hashes", hashes}};
    if (row.mode == FeatureMode::mca) jr["beats_sum_baseline"] = row.mean >= sum_mean;
    rows.push_back(jr);
  }
  json runs = json::array();
  for (const auto& r : a.runs) runs.push_back({{"feature_mode", to_string(r.mode)}, {"seed", r.seed}, {"metrics", metrics_json(r.metrics)}});
  return {{"config", config_json(cfg)}, {"target", to_string(a.target)}, {"seeds", a.seeds}, {"rows", rows}, {"runs", runs}};
}

inline std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v;
  return os.str();
}

inline std::string run_table(const RunResult& r) {
  std::ostringstream os;
  os << "target   mode  accuracy  precision  recall     f1\n";
  os << std::left << std::setw(9) << to_string(r.target) << std::setw(6) << to_string(r.mode) << std::right
     << std::setw(8) << pct(r.metrics.accuracy) << std::setw(11) << pct(r.metrics.precision) << std::setw(8)
     << pct(r.metrics.recall) << std::setw(7) << pct(r.metrics.f1) << "\n";
  return os.str();
}

inline std::string ablation_table(const AblationResult& a) {
  const double sum_mean = a.row(FeatureMode::sum).mean;
  std::ostringstream os;
  os << "feature   " << to_string(a.target) << " accuracy (mean +- std, " << a.seeds.size() << " seeds)\n";
  for (const auto& row : a.rows) {
    std::string name = row.mode == FeatureMode::sum ? "DE+PSD" : to_string(row.mode);
    os << std::left << std::setw(10) << name << std::right << std::setw(6) << pct(row.mean) << " +- "
       << pct(row.stddev);
    if (row.mode == FeatureMode::mca) os << (row.mean >= sum_mean ? "   >= DE+PSD" : "   <  DE+PSD");
    os << "\n";
  }
  return os.str();
}

/// PSD curves of one trial on a regular frequency grid.
struct PsdCurves {
  std::vector<double> freq_hz;
  std::vector<std::vector<double>> channel_psd;  // [channel][row]
  std::vector<double> mean_psd;
};

/// Welch PSD per channel with 2 s Hann segments (0.5 Hz bins), kept on
/// [lo_hz, hi_hz].
inline PsdCurves psd_curves(const RawRecording& rec, double lo_hz = 4.0, double hi_hz = 45.0) {
  rec.validate();
  const double fs = rec.sample_rate_hz;
  const auto seg = static_cast<std::size_t>(std::llround(2.0 * fs));
  if (!is_power_of_two(seg)) throw InvalidArgument("psd_curves: 2 s at this sample rate is not a power of two");
  const WelchConfig wc{seg, seg / 2, seg};
  const std::size_t ch = rec.samples.dim(0), n = rec.samples.dim(1);
  PsdCurves out;
  out.channel_psd.resize(ch);
  std::vector<std::size_t> rows;
  for (std::size_t c = 0; c < ch; ++c) {
    const Spectrum s = welch_psd(std::span<const double>(rec.samples.data().data() + c * n, n), fs, wc);
    if (c == 0) {
      for (std::size_t k = 0; k < s.freq_hz.size(); ++k) {
        if (s.freq_hz[k] >= lo_hz - 1e-9 && s.freq_hz[k] <= hi_hz + 1e-9) {
          rows.push_back(k);
          out.freq_hz.push_back(s.freq_hz[k]);
        }
      }
    }
    for (std::size_t k : rows) out.channel_psd[c].push_back(s.psd[k]);
  }
  out.mean_psd.assign(rows.size(), 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < ch; ++c) out.mean_psd[r] += out.channel_psd[c][r];
    out.mean_psd[r] /= static_cast<double>(ch);
  }
  return out;
}

/// Shortest decimal that parses back to exactly v.
inline std::string exact_decimal(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_psd_csv(std::ostream& os, const PsdCurves& p) {
  os << "frequency_hz";
  for (std::size_t c = 0; c < p.channel_psd.size(); ++c) os << ",ch" << (c + 1);
  os << ",mean\n";
  for (std::size_t r = 0; r < p.freq_hz.size(); ++r) {
    os << exact_decimal(p.freq_hz[r]);
    for (const auto& col : p.channel_psd) os << ',' << exact_decimal(col[r]);
    os << ',' << exact_decimal(p.mean_psd[r]) << '\n';
  }
}

inline PsdCurves read_psd_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("frequency_hz", 0) != 0) throw FormatError("psd csv: missing header");
  const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (cols < 2) throw FormatError("psd csv: expected channel and mean columns");
  PsdCurves p;
  p.channel_psd.resize(cols - 1);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    const char* b = line.data();
    const char* e = b + line.size();
    while (b < e) {
      double v;
      auto res = std::from_chars(b, e, v);
      if (res.ec != std::errc()) throw FormatError("psd csv: bad number in line '" + line + "'");
      vals.push_back(v);
      b = res.ptr;
      if (b < e && *b == ',') ++b;
    }
    if (vals.size() != cols + 1) throw FormatError("psd csv: wrong column count");
    p.freq_hz.push_back(vals[0]);
    for (std::size_t c = 0; c + 1 < cols; ++c) p.channel_psd[c].push_back(vals[c + 1]);
    p.mean_psd.push_back(vals[cols]);
  }
  return p;
}

}  // namespace mcaeeg
