#include "mtl/model/model.hpp"

#include <algorithm>
#include <random>

#include "mtl/error.hpp"
#include "mtl/numerics/ops.hpp"
#include "mtl/numerics/random.hpp"

namespace mtl::model {

std::string_view head_set_name(HeadSet set) {
  switch (set) {
    case HeadSet::HardOnly: return "hard-only";
    case HeadSet::HardSix: return "hard+six";
    case HeadSet::HardTwo: return "hard+two";
  }
  return "?";
}

HeadSet parse_head_set(std::string_view name) {
  for (HeadSet s : {HeadSet::HardOnly, HeadSet::HardSix, HeadSet::HardTwo}) {
    if (head_set_name(s) == name) return s;
  }
  throw ConfigError("unknown head set '" + std::string(name) + "' (expected hard-only, hard+six or hard+two)");
}

std::vector<TaskId> head_set_tasks(HeadSet set) {
  std::vector<TaskId> tasks{TaskId::Hard};
  if (set == HeadSet::HardSix) tasks.insert(tasks.end(), kProfileTasks.begin(), kProfileTasks.end());
  if (set == HeadSet::HardTwo) tasks.insert(tasks.end(), kGenderTasks.begin(), kGenderTasks.end());
  return tasks;
}

std::string head_weight_name(TaskId task) { return "head." + std::string(task_name(task)) + ".weight"; }
std::string head_bias_name(TaskId task) { return "head." + std::string(task_name(task)) + ".bias"; }

bool MultitaskModel::has_head(TaskId task) const {
  return std::any_of(heads.begin(), heads.end(), [task](const HeadSpec& h) { return h.task == task; });
}

HeadSpec& MultitaskModel::head(TaskId task) {
  for (HeadSpec& h : heads) {
    if (h.task == task) return h;
  }
  throw ConfigError("model has no head '" + std::string(task_name(task)) + "'");
}

std::vector<TaskId> MultitaskModel::tasks() const {
  std::vector<TaskId> out;
  for (const HeadSpec& h : heads) out.push_back(h.task);
  return out;
}

MultitaskModel build_model(const encoder::EncoderConfig& config, HeadSet head_set, std::uint64_t seed) {
  MultitaskModel m;
  m.config = config;
  encoder::init_encoder(config, seed, m.params);
  for (TaskId task : head_set_tasks(head_set)) {
    std::mt19937_64 rng(mix_seed(seed, 1000 + static_cast<std::uint64_t>(task)));
    std::normal_distribution<double> normal(0.0, config.init_std);
    std::vector<double> w(config.d_model * kNumClasses);
    for (double& v : w) v = normal(rng);
    m.params.add(head_weight_name(task), Tensor({config.d_model, kNumClasses}, std::move(w)));
    m.params.add(head_bias_name(task), Tensor({kNumClasses}));
    m.heads.push_back(HeadSpec{task, 1.0});
  }
  return m;
}

TaskLogits forward_logits(const MultitaskModel& model, const encoder::TokenBatch& batch,
                          const encoder::ForwardOptions& options) {
  const Tensor pooled = encoder::encode_forward(model.params, model.config, batch, options);
  TaskLogits out;
  for (const HeadSpec& h : model.heads) {
    out.emplace(h.task, ops::linear(pooled, model.params.get(head_weight_name(h.task)),
                                    model.params.get(head_bias_name(h.task))));
  }
  return out;
}

Tensor multitask_loss(const TaskLogits& logits, std::span<const TaskLabelSet> labels,
                      std::span<const HeadSpec> weights) {
  Tensor total;
  bool any = false;
  for (const HeadSpec& spec : weights) {
    if (spec.weight < 0.0) {
      throw ConfigError("negative loss weight for task " + std::string(task_name(spec.task)));
    }
    if (spec.weight == 0.0) continue;
    auto it = logits.find(spec.task);
    if (it == logits.end()) {
      throw ConfigError("no logits for task " + std::string(task_name(spec.task)));
    }
    const Tensor& lg = it->second;
    if (lg.rows() != labels.size()) {
      throw DimensionError("multitask_loss: " + std::to_string(labels.size()) + " label sets for logits " +
                           shape_string(lg.shape()));
    }
    std::vector<int> targets(labels.size(), 0);
    std::vector<std::uint8_t> present(labels.size(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const MaybeLabel y = labels[i].get(spec.task);
      if (!y) continue;
      if (*y != 0 && *y != 1) {
        throw LabelError("label " + std::to_string(*y) + " for task " + std::string(task_name(spec.task)) +
                             " at row " + std::to_string(i) + " is not 0 or 1",
                         i);
      }
      targets[i] = *y;
      present[i] = 1;
    }
    Tensor term = ops::scale(ops::cross_entropy(lg, targets, present), spec.weight);
    total = any ? ops::add(total, term) : term;
    any = true;
  }
  return any ? total : Tensor::scalar(0.0);
}

HardPrediction predict_from_logits(const Tensor& hard_logits) {
  const Tensor probs = ops::softmax_rows(hard_logits);
  HardPrediction out;
  const std::size_t n = hard_logits.rows();
  out.labels.resize(n);
  out.probabilities.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.probabilities[i] = {probs.at(i, 0), probs.at(i, 1)};
    out.labels[i] = hard_logits.at(i, 1) > hard_logits.at(i, 0) ? 1 : 0;
  }
  return out;
}

HardPrediction predict_hard(const MultitaskModel& model, const encoder::TokenBatch& batch) {
  const Tensor pooled = encoder::encode_forward(model.params, model.config, batch);
  const Tensor logits = ops::linear(pooled, model.params.get(head_weight_name(TaskId::Hard)),
                                    model.params.get(head_bias_name(TaskId::Hard)));
  return predict_from_logits(logits);
}

}  // namespace mtl::model
