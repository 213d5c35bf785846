#pragma once

#include <algorithm>
#include <chrono>
#include <exception>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mcaeeg/binary_io.hpp"
#include "mcaeeg/eegc.hpp"
#include "mcaeeg/error.hpp"
#include "mcaeeg/features.hpp"
#include "mcaeeg/mca.hpp"
#include "mcaeeg/preprocess.hpp"
#include "mcaeeg/random.hpp"
#include "mcaeeg/train.hpp"

namespace mcaeeg {

enum class Target { valence, arousal };
enum class FeatureMode { de, psd, sum, mca };

inline const char* to_string(Target t) { return t == Target::valence ? "valence" : "arousal"; }

inline const char* to_string(FeatureMode m) {
  switch (m) {
    case FeatureMode::de: return "DE";
    case FeatureMode::psd: return "PSD";
    case FeatureMode::sum: return "SUM";
    case FeatureMode::mca: return "MCA";
  }
  return "?";
}

inline Target parse_target(const std::string& s) {
  if (s == "valence") return Target::valence;
  if (s == "arousal") return Target::arousal;
  throw ConfigError("unknown target '" + s + "' (expected valence or arousal)");
}

inline FeatureMode parse_feature_mode(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (s == "DE") return FeatureMode::de;
  if (s == "PSD") return FeatureMode::psd;
  if (s == "SUM") return FeatureMode::sum;
  if (s == "MCA") return FeatureMode::mca;
  throw ConfigError("unknown feature mode '" + s + "' (expected DE, PSD, SUM or MCA)");
}

inline const std::vector<FeatureMode>& all_feature_modes() {
  static const std::vector<FeatureMode> modes{FeatureMode::de, FeatureMode::psd, FeatureMode::sum, FeatureMode::mca};
  return modes;
}

struct ExperimentConfig {
  Target target = Target::valence;
  FeatureMode feature_mode = FeatureMode::mca;
  PreprocessOptions preprocess{};
  FrameSpec frames{};
  BandTable bands{};
  cnn::TrainConfig train{};
  bool zscore_before_fusion = false;
  /// Ratings strictly above this are the "high" (positive) class.
  double rating_threshold = 5.0;
  std::size_t frames_per_segment = 3;
  /// Standardize every (channel, band) input cell with training-set
  /// statistics before the classifier.
  bool standardize_inputs = true;

  void validate() const {
    train.validate();
    bands.validate();
    if (frames_per_segment == 0 || frames.frames_per_trial % frames_per_segment != 0) {
      throw ConfigError("frames_per_trial must be a multiple of frames_per_segment");
    }
  }
};

/// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads. Every
/// index is handled exactly once; results must be written by index.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Per-trial DE and PSD cubes after preprocessing.
struct TrialFeatures {
  std::uint32_t subject_id = 0, trial_id = 0;
  double valence = 0.0, arousal = 0.0;
  FeatureCube de, psd;
  PreprocessReport preprocess;
};

inline std::vector<TrialFeatures> extract_features(const EegContainer& data, const ExperimentConfig& cfg) {
  std::vector<TrialFeatures> out(data.trials.size());
  parallel_for(data.trials.size(), [&](std::size_t i) {
    const auto& t = data.trials[i];
    TrialFeatures& f = out[i];
    f.subject_id = t.subject_id;
    f.trial_id = t.trial_id;
    f.valence = t.valence;
    f.arousal = t.arousal;
    PreprocessOptions popt = cfg.preprocess;
    popt.seed = cfg.preprocess.seed + i;
    const RawRecording clean = preprocess(t.recording, popt, &f.preprocess);
    f.de = extract_cube(clean, FeatureKind::de, cfg.bands, cfg.frames);
    f.psd = extract_cube(clean, FeatureKind::psd, cfg.bands, cfg.frames);
  });
  return out;
}

/// The classifier input cube for one feature mode.
inline FeatureCube combine(const TrialFeatures& f, FeatureMode mode, bool zscore_first) {
  switch (mode) {
    case FeatureMode::de: return f.de;
    case FeatureMode::psd: return f.psd;
    case FeatureMode::sum:
      return zscore_first ? sum_cubes(zscore(f.de), zscore(f.psd)) : sum_cubes(f.de, f.psd);
    case FeatureMode::mca:
      return zscore_first ? fuse_cubes(zscore(f.de), zscore(f.psd)) : fuse_cubes(f.de, f.psd);
  }
  throw ConfigError("unknown feature mode");
}

inline int binarize(double rating, double threshold) { return rating > threshold ? 1 : 0; }

/// Segments of every trial in trial order, labelled from the target rating.
inline cnn::Dataset build_dataset(const std::vector<TrialFeatures>& feats, const ExperimentConfig& cfg,
                                  FeatureMode mode) {
  std::vector<std::vector<Tensor>> per_trial(feats.size());
  parallel_for(feats.size(), [&](std::size_t i) {
    per_trial[i] = segment_cube(combine(feats[i], mode, cfg.zscore_before_fusion), cfg.frames_per_segment,
                                cfg.frames.frames_per_trial);
  });
  cnn::Dataset ds;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const double rating = cfg.target == Target::valence ? feats[i].valence : feats[i].arousal;
    const int label = binarize(rating, cfg.rating_threshold);
    for (auto& seg : per_trial[i]) ds.push_back(std::move(seg), label);
  }
  return ds;
}

struct Split {
  std::vector<std::size_t> train, test;
  std::uint64_t hash = 0;
};

/// Stratified segment-level split. Depends only on the labels and seed.
inline Split stratified_split(const std::vector<int>& labels, double train_fraction, std::uint64_t seed) {
  Rng rng(seed ^ 0x5eed5eed5eedULL);
  Split s;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    rng.shuffle(idx);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
    s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.insert(s.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i : s.train) {
    const auto v = static_cast<std::uint64_t>(i);
    h = io::fnv1a(&v, sizeof v, h);
  }
  s.hash = h;
  return s;
}

inline cnn::Dataset subset(const cnn::Dataset& ds, const std::vector<std::size_t>& idx) {
  cnn::Dataset out;
  for (std::size_t i : idx) out.push_back(ds.inputs[i], ds.labels[i]);
  return out;
}

/// Per-(channel, band) mean and standard deviation over all frames of a
/// set of segments.
struct Standardizer {
  Tensor mean, stddev;  // [channels, bands]

  static Standardizer fit(const cnn::Dataset& ds) {
    if (ds.size() == 0) throw InvalidArgument("Standardizer: empty dataset");
    const Tensor& first = ds.inputs.front();
    detail::require_rank(first, 3, "Standardizer");
    const std::size_t ch = first.dim(0), bands = first.dim(1), frames = first.dim(2);
    Standardizer s{Tensor({ch, bands}), Tensor({ch, bands})};
    const double n = static_cast<double>(ds.size() * frames);
    for (const auto& x : ds.inputs)
      for (std::size_t c = 0; c < ch; ++c)
        for (std::size_t b = 0; b < bands; ++b)
          for (std::size_t t = 0; t < frames; ++t) s.mean.at(c, b) += x.at(c, b, t);
    for (double& v : s.mean.data()) v /= n;
    for (const auto& x : ds.inputs)
      for (std::size_t c = 0; c < ch; ++c)
        for (std::size_t b = 0; b < bands; ++b)
          for (std::size_t t = 0; t < frames; ++t) {
            const double d = x.at(c, b, t) - s.mean.at(c, b);
            s.stddev.at(c, b) += d * d;
          }
    for (double& v : s.stddev.data()) {
      v = std::sqrt(v / n);
      if (!(v > 1e-12)) v = 1.0;
    }
    return s;
  }

  void apply(Tensor& x) const {
    for (std::size_t c = 0; c < x.dim(0); ++c)
      for (std::size_t b = 0; b < x.dim(1); ++b)
        for (std::size_t t = 0; t < x.dim(2); ++t) x.at(c, b, t) = (x.at(c, b, t) - mean.at(c, b)) / stddev.at(c, b);
  }

  void apply(cnn::Dataset& ds) const {
    for (auto& x : ds.inputs) apply(x);
  }
};

struct RunResult {
  Target target;
  FeatureMode mode;
  std::uint64_t seed;
  std::size_t n_train = 0, n_test = 0;
  std::uint64_t split_hash = 0;
  cnn::Metrics metrics;
  std::vector<cnn::EpochStats> history;
  cnn::ModelParams params;
  double inference_ms_per_segment = 0.0;  // wall-clock; not part of the deterministic report
};

/// Split, train and evaluate one feature mode on precomputed features.
inline RunResult run_mode(const std::vector<TrialFeatures>& feats, const ExperimentConfig& cfg, FeatureMode mode) {
  const cnn::Dataset ds = build_dataset(feats, cfg, mode);
  const Split split = stratified_split(ds.labels, cfg.train.train_fraction, cfg.train.seed);
  cnn::Dataset train_set = subset(ds, split.train);
  cnn::Dataset test_set = subset(ds, split.test);
  if (test_set.size() == 0) throw InvalidArgument("run: test split is empty");
  std::optional<Standardizer> norm;
  if (cfg.standardize_inputs) {
    norm = Standardizer::fit(train_set);
    norm->apply(train_set);
    norm->apply(test_set);
  }

  cnn::Network net(cnn::NetworkSpec::standard(), cfg.train.seed);
  RunResult r{cfg.target, mode, cfg.train.seed};
  r.history = cnn::train(net, train_set, cfg.train).history;
  const auto t0 = std::chrono::steady_clock::now();
  r.metrics = cnn::evaluate(net, test_set);
  const auto t1 = std::chrono::steady_clock::now();
  r.inference_ms_per_segment =
      std::chrono::duration<double, std::milli>(t1 - t0).count() / static_cast<double>(test_set.size());
  r.n_train = train_set.size();
  r.n_test = test_set.size();
  r.split_hash = split.hash;
  r.params = net.params();
  if (norm) {
    r.params.tensors.push_back({"input.mean", norm->mean, zeros_like(norm->mean)});
    r.params.tensors.push_back({"input.std", norm->stddev, zeros_like(norm->stddev)});
  }
  return r;
}

inline RunResult run_experiment(const EegContainer& data, const ExperimentConfig& cfg) {
  cfg.validate();
  if (data.trials.empty()) throw InvalidArgument("run: container has no trials");
  return run_mode(extract_features(data, cfg), cfg, cfg.feature_mode);
}

struct AblationRow {
  FeatureMode mode;
  std::vector<double> accuracies;  // one per seed
  std::vector<std::uint64_t> split_hashes;
  double mean = 0.0, stddev = 0.0;
};

struct AblationResult {
  Target target;
  std::vector<std::uint64_t> seeds;
  std::vector<AblationRow> rows;
  std::vector<RunResult> runs;

  const AblationRow& row(FeatureMode m) const {
    for (const auto& r : rows)
      if (r.mode == m) return r;
    throw InvalidArgument("ablation: mode not present");
  }
};

/// Every mode under every seed, sharing preprocessing and features. The
/// split for a seed is identical across modes.
inline AblationResult run_ablation(const EegContainer& data, const ExperimentConfig& base,
                                   const std::vector<std::uint64_t>& seeds,
                                   const std::vector<FeatureMode>& modes = all_feature_modes()) {
  base.validate();
  if (seeds.empty()) throw ConfigError("ablate: at least one seed is required");
  const auto feats = extract_features(data, base);
  AblationResult res{base.target, seeds, {}, {}};
  for (FeatureMode m : modes) {
    AblationRow row{m, {}, {}};
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = base;
      cfg.feature_mode = m;
      cfg.train.seed = seed;
      RunResult r = run_mode(feats, cfg, m);
      row.accuracies.push_back(r.metrics.accuracy);
      row.split_hashes.push_back(r.split_hash);
      res.runs.push_back(std::move(r));
    }
    double sum = 0.0;
    for (double a : row.accuracies) sum += a;
    row.mean = sum / static_cast<double>(row.accuracies.size());
    double ss = 0.0;
    for (double a : row.accuracies) ss += (a - row.mean) * (a - row.mean);
    row.stddev = row.accuracies.size() > 1 ? std::sqrt(ss / static_cast<double>(row.accuracies.size() - 1)) : 0.0;
    res.rows.push_back(std::move(row));
  }
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    for (const auto& row : res.rows) {
      if (row.split_hashes[s] != res.rows.front().split_hashes[s]) {
        throw Error("ablate: feature modes saw different splits for seed " + std::to_string(seeds[s]));
      }
    }
  }
  return res;
}

}  // namespace mcaeeg
