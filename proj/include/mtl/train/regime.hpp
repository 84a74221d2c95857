#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mtl/model/model.hpp"
#include "mtl/model/task.hpp"

namespace mtl::train {

// Listed in report row order.
enum class Regime {
  StlFullFt,
  StlFreeze,
  MtlSixAux,
  MtlTwoAux,
  MtlSixFullFt,
  MtlSixFreeze,
  MtlTwoFullFt,
  MtlTwoFreeze,
};

std::string_view regime_name(Regime regime);
// Case-insensitive; throws ConfigError listing the valid names.
Regime parse_regime(std::string_view name);
std::vector<Regime> all_regimes();

struct StageSpec {
  std::vector<TaskId> active_tasks;
  bool encoder_trainable = true;
  std::vector<TaskId> trainable_heads;
  std::size_t epochs = 10;
  double lr = 5e-5;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  bool operator==(const StageSpec&) const = default;
};

struct RegimeSpec {
  Regime regime = Regime::StlFullFt;
  model::HeadSet head_set = model::HeadSet::HardOnly;
  std::vector<StageSpec> stages;
};

struct TrainSettings {
  std::size_t epochs = 10;
  double lr = 5e-5;
  std::size_t batch_size = 32;
  std::uint64_t seed = 13;
  // Freeze the encoder in the multitask stage of the *-freeze regimes too.
  bool freeze_stage1 = false;
};

RegimeSpec expand_regime(Regime regime, const TrainSettings& settings = {});
RegimeSpec expand_regime(std::string_view name, const TrainSettings& settings = {});

}  // namespace mtl::train
