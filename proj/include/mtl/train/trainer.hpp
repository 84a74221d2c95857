#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "mtl/data/dataset.hpp"
#include "mtl/encoder/encoder.hpp"
#include "mtl/eval/metrics.hpp"
#include "mtl/model/model.hpp"
#include "mtl/train/checkpoint.hpp"
#include "mtl/train/regime.hpp"

namespace mtl::train {

struct StageResult {
  double initial_train_loss = 0.0;
  double initial_val_f1 = 0.0;
  std::vector<double> train_loss;  // per epoch, sample-weighted mean
  std::vector<double> val_f1;      // per epoch, hard-task macro-F1
  std::size_t best_epoch = 0;      // 1-based
  double best_val_f1 = 0.0;
  ParameterStore best_params;
};

// Sets trainable flags for the stage, runs mini-batch Adam for
// stage.epochs with per-epoch shuffling drawn from `rng`, and leaves the model
// holding the epoch with the best validation macro-F1 (earliest on ties).
StageResult train_stage(model::MultitaskModel& model, const StageSpec& stage,
                        const std::vector<data::LabeledExample>& train_set,
                        const std::vector<data::LabeledExample>& validation_set, std::mt19937_64& rng);

// Mean loss over `examples` without updating anything.
double dataset_loss(const model::MultitaskModel& model, const std::vector<data::LabeledExample>& examples,
                    std::span<const model::HeadSpec> active, std::size_t batch_size);

struct RunOptions {
  TrainSettings settings;
  std::map<TaskId, double> aux_weights;  // missing tasks weigh 1.0
  nlohmann::ordered_json config_snapshot = nlohmann::ordered_json::object();
  std::string model_id;                  // defaults to "<regime>/<preset>"
};

struct RunRecord {
  RegimeSpec spec;
  std::vector<StageResult> stages;
  ParameterStore initial_params;
  model::MultitaskModel model;  // final (best) parameters
  Checkpoint checkpoint;
  eval::EvalReport test_report;
};

// Builds the model from (preset, seed), runs every stage in order (stage 2
// starts from stage 1's best parameters and keeps its `hard` head), then
// evaluates on the bundle's test split.
RunRecord run_regime(const RegimeSpec& spec, const data::DatasetBundle& bundle,
                     const encoder::EncoderPreset& preset, const RunOptions& options);

nlohmann::ordered_json stages_to_json(const RunRecord& record);

}  // namespace mtl::train
