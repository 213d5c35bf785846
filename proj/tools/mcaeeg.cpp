// mcaeeg command-line tool: synthetic data, end-to-end runs, ablations,
// PSD export and container inspection.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcaeeg/checkpoint.hpp"
#include "mcaeeg/eegc.hpp"
#include "mcaeeg/pipeline.hpp"
#include "mcaeeg/report.hpp"
#include "mcaeeg/synth.hpp"

namespace {

enum ExitCode { kOk = 0, kBadInput = 2, kConfig = 3, kPipeline = 4 };

struct ExperimentFlags {
  std::string input;
  std::string target = "valence";
  std::string mode = "MCA";
  std::uint64_t seed = 0;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double train_fraction = 0.8;
  double threshold = 5.0;
  bool zscore = false;
  bool no_standardize = false;
  bool no_notch = false, no_bandpass = false, no_ica = false, no_downsample = false;
  std::string report;
  bool timing = false;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f, bool with_mode) {
  cmd->add_option("-i,--input", f.input, "EEGC container")->required();
  cmd->add_option("--target", f.target, "valence or arousal")->capture_default_str();
  if (with_mode) cmd->add_option("--mode", f.mode, "DE, PSD, SUM or MCA")->capture_default_str();
  cmd->add_option("--seed", f.seed, "seed for preprocessing, split, init and shuffling")->capture_default_str();
  cmd->add_option("--epochs", f.epochs)->capture_default_str();
  cmd->add_option("--batch-size", f.batch_size)->capture_default_str();
  cmd->add_option("--lr", f.lr)->capture_default_str();
  cmd->add_option("--train-fraction", f.train_fraction)->capture_default_str();
  cmd->add_option("--threshold", f.threshold, "ratings above this are the high class")->capture_default_str();
  cmd->add_flag("--zscore", f.zscore, "standardize DE and PSD cubes before fusion");
  cmd->add_flag("--no-standardize", f.no_standardize, "feed raw feature values to the classifier");
  cmd->add_flag("--no-notch", f.no_notch);
  cmd->add_flag("--no-bandpass", f.no_bandpass);
  cmd->add_flag("--no-ica", f.no_ica);
  cmd->add_flag("--no-downsample", f.no_downsample);
  cmd->add_option("--report", f.report, "write the JSON report here");
  cmd->add_flag("--timing", f.timing, "include wall-clock inference timing in the JSON report");
}

mcaeeg::ExperimentConfig to_config(const ExperimentFlags& f) {
  mcaeeg::ExperimentConfig c;
  c.target = mcaeeg::parse_target(f.target);
  c.feature_mode = mcaeeg::parse_feature_mode(f.mode);
  c.preprocess.notch = !f.no_notch;
  c.preprocess.bandpass = !f.no_bandpass;
  c.preprocess.ica = !f.no_ica;
  c.preprocess.downsample = !f.no_downsample;
  c.preprocess.seed = f.seed;
  c.train.seed = f.seed;
  c.train.epochs = f.epochs;
  c.train.batch_size = f.batch_size;
  c.train.adam.lr = f.lr;
  c.train.train_fraction = f.train_fraction;
  c.rating_threshold = f.threshold;
  c.zscore_before_fusion = f.zscore;
  c.standardize_inputs = !f.no_standardize;
  c.validate();
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw mcaeeg::Error("cannot open " + path + " for writing");
  os << text;
  if (!os) throw mcaeeg::Error("write failed for " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG emotion recognition with mutual-cross-attention feature fusion"};
  app.set_config("--config", "", "read options from a TOML/INI file");
  app.require_subcommand(1);

  mcaeeg::SynthConfig synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic EEGC container");
  synth->add_option("-o,--out", synth_out)->required();
  synth->add_option("--seed", synth_cfg.seed)->capture_default_str();
  synth->add_option("--subjects", synth_cfg.n_subjects)->capture_default_str();
  synth->add_option("--trials", synth_cfg.trials_per_subject, "trials per subject")->capture_default_str();
  synth->add_option("--duration", synth_cfg.duration_s, "seconds per trial")->capture_default_str();
  synth->add_option("--power-factor", synth_cfg.power_factor, "band power ratio of high to low trials")
      ->capture_default_str();
  synth->add_option("--nuisance", synth_cfg.nuisance_log2_power, "per-trial broadband log2 power jitter")
      ->capture_default_str();
  synth->add_flag("--complementary", synth_cfg.complementary,
                  "mark high arousal with a DE-only tone in half the trials and a PSD-only tone in the rest");

  ExperimentFlags run_flags;
  std::string checkpoint;
  auto* run = app.add_subcommand("run", "preprocess, extract, train and evaluate one feature mode");
  add_experiment_flags(run, run_flags, true);
  run->add_option("--checkpoint", checkpoint, "write the trained model here");

  ExperimentFlags abl_flags;
  std::vector<std::uint64_t> abl_seeds;
  auto* ablate = app.add_subcommand("ablate", "DE / PSD / SUM / MCA over several seeds");
  add_experiment_flags(ablate, abl_flags, false);
  ablate->add_option("--seeds", abl_seeds, "training seeds (default: --seed, --seed+1, --seed+2)");

  std::string psd_input, psd_out;
  std::uint32_t psd_subject = 1, psd_trial = 1;
  auto* psd = app.add_subcommand("psd-export", "write per-channel Welch PSD of one trial as CSV");
  psd->add_option("-i,--input", psd_input)->required();
  psd->add_option("--subject", psd_subject)->capture_default_str();
  psd->add_option("--trial", psd_trial)->capture_default_str();
  psd->add_option("-o,--out", psd_out)->required();
  std::uint64_t unused_seed = 0;
  psd->add_option("--seed", unused_seed, "accepted for uniformity; the export is deterministic");

  std::string info_input;
  auto* info = app.add_subcommand("convert-info", "print container metadata and checksums");
  info->add_option("input", info_input)->required();
  info->add_option("--seed", unused_seed, "accepted for uniformity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*synth) {
      mcaeeg::synthesize(synth_cfg).save(synth_out);
      std::cout << "wrote " << synth_cfg.n_subjects * synth_cfg.trials_per_subject << " trials to " << synth_out
                << "\n";
    } else if (*run) {
      const auto cfg = to_config(run_flags);
      const auto data = mcaeeg::EegContainer::load(run_flags.input);
      const auto result = mcaeeg::run_experiment(data, cfg);
      std::cout << mcaeeg::run_table(result);
      std::cout << "inference: " << result.inference_ms_per_segment << " ms per segment\n";
      if (!run_flags.report.empty()) write_text(run_flags.report, mcaeeg::run_json(result, cfg, run_flags.timing).dump(2) + "\n");
      if (!checkpoint.empty()) mcaeeg::cnn::save_checkpoint(checkpoint, result.params);
    } else if (*ablate) {
      const auto cfg = to_config(abl_flags);
      if (abl_seeds.empty()) abl_seeds = {abl_flags.seed, abl_flags.seed + 1, abl_flags.seed + 2};
      const auto data = mcaeeg::EegContainer::load(abl_flags.input);
      const auto result = mcaeeg::run_ablation(data, cfg, abl_seeds);
      std::cout << mcaeeg::ablation_table(result);
      if (!abl_flags.report.empty()) write_text(abl_flags.report, mcaeeg::ablation_json(result, cfg).dump(2) + "\n");
    } else if (*psd) {
      const auto data = mcaeeg::EegContainer::load(psd_input);
      const auto* t = data.find(psd_subject, psd_trial);
      if (!t) {
        std::cerr << "error: no trial " << psd_trial << " for subject " << psd_subject << " in " << psd_input << "\n";
        return kBadInput;
      }
      std::ostringstream os;
      mcaeeg::write_psd_csv(os, mcaeeg::psd_curves(t->recording));
      write_text(psd_out, os.str());
    } else if (*info) {
      const auto data = mcaeeg::EegContainer::load(info_input);
      std::cout << "trials: " << data.trials.size() << "\n";
      std::cout << "subject trial channels fs_hz n_samples valence arousal checksum\n";
      for (const auto& t : data.trials) {
        std::cout << t.subject_id << ' ' << t.trial_id << ' ' << t.recording.samples.dim(0) << ' '
                  << t.recording.sample_rate_hz << ' ' << t.recording.samples.dim(1) << ' ' << t.valence << ' '
                  << t.arousal << ' ' << mcaeeg::hex64(t.checksum()) << "\n";
      }
    }
  } catch (const mcaeeg::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const mcaeeg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "pipeline error: " << e.what() << "\n";
    return kPipeline;
  }
  return kOk;
}
