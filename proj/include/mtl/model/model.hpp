#pragma once

// Shared encoder plus one linear d_model -> 2 head per task.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mtl/encoder/encoder.hpp"
#include "mtl/model/task.hpp"
#include "mtl/numerics/parameter_store.hpp"

namespace mtl::model {

enum class HeadSet { HardOnly, HardSix, HardTwo };

std::string_view head_set_name(HeadSet set);
HeadSet parse_head_set(std::string_view name);  // "hard-only" | "hard+six" | "hard+two"
std::vector<TaskId> head_set_tasks(HeadSet set);

struct HeadSpec {
  TaskId task = TaskId::Hard;
  double weight = 1.0;  // loss coefficient; tasks at 0 are skipped entirely
};

std::string head_weight_name(TaskId task);  // head.<task>.weight
std::string head_bias_name(TaskId task);     // head.<task>.bias

struct MultitaskModel {
  encoder::EncoderConfig config;
  std::vector<HeadSpec> heads;  // `hard` first
  ParameterStore params;

  bool has_head(TaskId task) const;
  HeadSpec& head(TaskId task);
  std::vector<TaskId> tasks() const;
};

// Encoder from `seed`; each head drawn from its own generator derived from
// (seed, task), so adding heads never changes the others' initialization.
MultitaskModel build_model(const encoder::EncoderConfig& config, HeadSet head_set, std::uint64_t seed);

using TaskLogits = std::map<TaskId, Tensor>;

// One encoder pass shared by every head; logits are [batch, 2] per task.
TaskLogits forward_logits(const MultitaskModel& model, const encoder::TokenBatch& batch,
                          const encoder::ForwardOptions& options = {});

// sum_i w_i * CE_i over the listed tasks, each cross-entropy averaged over
// the rows where that task's label is present. Tasks with w_i == 0
// contribute nothing to the value or the graph.
Tensor multitask_loss(const TaskLogits& logits, std::span<const TaskLabelSet> labels,
                      std::span<const HeadSpec> weights);

struct HardPrediction {
  std::vector<int> labels;
  std::vector<std::array<double, 2>> probabilities;
};

// Argmax of softmax over the `hard` head; exact ties go to class 0.
HardPrediction predict_hard(const MultitaskModel& model, const encoder::TokenBatch& batch);
HardPrediction predict_from_logits(const Tensor& hard_logits);

}  // namespace mtl::model
