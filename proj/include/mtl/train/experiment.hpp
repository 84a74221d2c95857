#pragma once

// Experiment config file and the run directory layout:
//   <out>/{checkpoint.mtlc, stages.json, eval.json, report.md, vocab.txt}

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "mtl/data/dataset.hpp"
#include "mtl/encoder/encoder.hpp"
#include "mtl/train/regime.hpp"
#include "mtl/train/trainer.hpp"

namespace mtl::train {

struct ExperimentConfig {
  std::string preset = "base-sim";
  nlohmann::ordered_json encoder = nlohmann::ordered_json::object();  // overrides on the preset
  std::optional<Regime> regime;
  TrainSettings train;
  std::map<TaskId, double> aux_weights;
  std::string input;               // annotation JSONL
  std::optional<std::string> test_input;
  std::optional<std::string> vocab;  // fixed vocabulary file
  data::DataOptions data;
  bool case_fold_explicit = false;  // otherwise data.case_fold follows the preset
};

// The same experiment under another encoder preset.
ExperimentConfig with_preset(ExperimentConfig config, const std::string& preset);

// Unknown keys, a missing train.seed or data.input, and invalid values are
// ConfigErrors. Relative paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& config);

// Throws ConfigError if a referenced input file is missing.
void check_paths(const ExperimentConfig& config);

data::DatasetBundle load_bundle(const ExperimentConfig& config);

// The preset with overrides applied; vocab_size and max_len follow the
// bundle unless set explicitly, and must cover it.
encoder::EncoderPreset resolve_preset(const ExperimentConfig& config, const data::DatasetBundle& bundle);

RunRecord run_experiment(const ExperimentConfig& config, const data::DatasetBundle& bundle, Regime regime,
                         std::uint64_t seed);

// Every file is written atomically.
void write_run_dir(const std::filesystem::path& dir, const RunRecord& record, const data::DatasetBundle& bundle,
                   const std::string& preset_name);

}  // namespace mtl::train
