#include "mtl/train/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "mtl/error.hpp"
#include "mtl/numerics/adam.hpp"
#include "mtl/numerics/random.hpp"

namespace mtl::train {
namespace {

std::vector<model::HeadSpec> active_heads(model::MultitaskModel& model, const StageSpec& stage) {
  std::vector<model::HeadSpec> out;
  for (TaskId t : stage.active_tasks) {
    if (!model.has_head(t)) throw ConfigError("stage activates task without a head: " + std::string(task_name(t)));
    out.push_back(model.head(t));
  }
  return out;
}

void apply_trainable(model::MultitaskModel& model, const StageSpec& stage) {
  encoder::set_trainable(model.params, stage.encoder_trainable);
  for (const auto& h : model.heads) {
    const bool on = std::find(stage.trainable_heads.begin(), stage.trainable_heads.end(), h.task) !=
                    stage.trainable_heads.end();
    model.params.set_trainable(model::head_weight_name(h.task), on);
    model.params.set_trainable(model::head_bias_name(h.task), on);
  }
  const bool any = std::any_of(model.params.entries().begin(), model.params.entries().end(),
                               [](const auto& e) { return e.trainable; });
  if (!any) throw ConfigError("stage leaves no trainable parameter");
}

}  // namespace

double dataset_loss(const model::MultitaskModel& model, const std::vector<data::LabeledExample>& examples,
                    std::span<const model::HeadSpec> active, std::size_t batch_size) {
  double total = 0.0;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, examples.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const auto logits = model::forward_logits(model, data::make_batch(examples, idx));
    const auto labels = data::batch_labels(examples, idx);
    total += model::multitask_loss(logits, labels, active).item() * static_cast<double>(idx.size());
  }
  return examples.empty() ? 0.0 : total / static_cast<double>(examples.size());
}

StageResult train_stage(model::MultitaskModel& model, const StageSpec& stage,
                        const std::vector<data::LabeledExample>& train_set,
                        const std::vector<data::LabeledExample>& validation_set, std::mt19937_64& rng) {
  if (train_set.empty()) throw TrainingError("training set is empty");
  if (validation_set.empty()) throw TrainingError("validation set is empty");
  if (stage.batch_size == 0 || stage.epochs == 0) throw ConfigError("stage needs positive epochs and batch size");
  apply_trainable(model, stage);
  const auto active = active_heads(model, stage);

  for (const auto& h : active) {
    if (h.weight == 0.0) continue;
    const bool covered = std::any_of(train_set.begin(), train_set.end(),
                                     [&](const auto& ex) { return ex.labels.get(h.task).has_value(); });
    if (!covered) {
      throw TrainingError("task " + std::string(task_name(h.task)) + " has no labels in the training set");
    }
  }

  StageResult result;
  result.initial_train_loss = dataset_loss(model, train_set, active, 64);
  result.initial_val_f1 = eval::hard_macro_f1(model, validation_set);

  AdamState adam(AdamConfig{stage.lr});
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const encoder::ForwardOptions fwd{true, &rng};

  for (std::size_t epoch = 1; epoch <= stage.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += stage.batch_size) {
      const std::size_t end = std::min(order.size(), start + stage.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const auto logits = model::forward_logits(model, data::make_batch(train_set, idx), fwd);
      const auto labels = data::batch_labels(train_set, idx);
      const Tensor loss = model::multitask_loss(logits, labels, active);
      backward(loss);
      adam_step(model.params, adam);
      loss_sum += loss.item() * static_cast<double>(idx.size());
    }
    result.train_loss.push_back(loss_sum / static_cast<double>(order.size()));
    const double f1 = eval::hard_macro_f1(model, validation_set);
    result.val_f1.push_back(f1);
    if (epoch == 1 || f1 > result.best_val_f1) {
      result.best_val_f1 = f1;
      result.best_epoch = epoch;
      result.best_params = model.params.clone();
    }
  }
  model.params.copy_values_from(result.best_params);
  return result;
}

RunRecord run_regime(const RegimeSpec& spec, const data::DatasetBundle& bundle,
                     const encoder::EncoderPreset& preset, const RunOptions& options) {
  RunRecord rec;
  rec.spec = spec;
  rec.model = model::build_model(preset.config, spec.head_set, mix_seed(options.settings.seed, preset.seed_salt));
  for (auto& h : rec.model.heads) {
    if (h.task == TaskId::Hard) continue;
    if (auto it = options.aux_weights.find(h.task); it != options.aux_weights.end()) h.weight = it->second;
  }
  rec.initial_params = rec.model.params.clone();

  for (const auto& stage : spec.stages) {
    std::mt19937_64 rng(stage.seed);
    rec.stages.push_back(train_stage(rec.model, stage, bundle.train, bundle.validation, rng));
  }

  const std::string model_id =
      options.model_id.empty() ? std::string(regime_name(spec.regime)) + "/" + preset.name : options.model_id;
  rec.test_report = eval::evaluate_model(rec.model, bundle.test, model_id);

  nlohmann::ordered_json meta{{"regime", regime_name(spec.regime)},
                              {"preset", preset.name},
                              {"seed", options.settings.seed},
                              {"stage_index", spec.stages.size() - 1},
                              {"epoch", rec.stages.back().best_epoch},
                              {"final_losses", nlohmann::ordered_json::array()}};
  for (const auto& s : rec.stages) meta["final_losses"].push_back(s.train_loss.back());
  rec.checkpoint = make_checkpoint(rec.model, options.config_snapshot, std::move(meta));
  return rec;
}

nlohmann::ordered_json stages_to_json(const RunRecord& record) {
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < record.stages.size(); ++i) {
    const auto& spec = record.spec.stages[i];
    const auto& res = record.stages[i];
    nlohmann::ordered_json active = nlohmann::ordered_json::array();
    for (TaskId t : spec.active_tasks) active.push_back(task_name(t));
    nlohmann::ordered_json heads = nlohmann::ordered_json::array();
    for (TaskId t : spec.trainable_heads) heads.push_back(task_name(t));
    stages.push_back(nlohmann::ordered_json{{"stage", i + 1},
                                            {"active_tasks", std::move(active)},
                                            {"encoder_trainable", spec.encoder_trainable},
                                            {"trainable_heads", std::move(heads)},
                                            {"epochs", spec.epochs},
                                            {"lr", spec.lr},
                                            {"batch_size", spec.batch_size},
                                            {"initial_train_loss", res.initial_train_loss},
                                            {"initial_val_f1", res.initial_val_f1},
                                            {"train_loss", res.train_loss},
                                            {"val_f1", res.val_f1},
                                            {"best_epoch", res.best_epoch},
                                            {"best_val_f1", res.best_val_f1}});
  }
  return nlohmann::ordered_json{{"regime", regime_name(record.spec.regime)},
                                {"head_set", model::head_set_name(record.spec.head_set)},
                                {"stages", std::move(stages)}};
}

}  // namespace mtl::train
