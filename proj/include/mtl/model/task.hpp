#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace mtl {

// Every task is binary. `Hard` is the majority-vote main task; the six
// profile tasks are gender x age annotator cells; F_agg / M_agg are the
// per-gender majority labels.
enum class TaskId : std::uint8_t {
  Hard,
  F18_22,
  F23_45,
  F46Plus,
  M18_22,
  M23_45,
  M46Plus,
  FAgg,
  MAgg,
};

inline constexpr std::array<TaskId, 6> kProfileTasks{TaskId::F18_22, TaskId::F23_45, TaskId::F46Plus,
                                                     TaskId::M18_22, TaskId::M23_45, TaskId::M46Plus};
inline constexpr std::array<TaskId, 2> kGenderTasks{TaskId::FAgg, TaskId::MAgg};
inline constexpr std::size_t kNumClasses = 2;

std::string_view task_name(TaskId task);
TaskId parse_task(std::string_view name);  // throws ConfigError

// Index 0..5 of a profile task in kProfileTasks.
std::size_t profile_slot(TaskId task);

using MaybeLabel = std::optional<int>;

struct TaskLabelSet {
  MaybeLabel hard;
  std::array<MaybeLabel, 6> profiles;  // kProfileTasks order
  MaybeLabel f_agg;
  MaybeLabel m_agg;

  MaybeLabel get(TaskId task) const;
  bool operator==(const TaskLabelSet&) const = default;
};

}  // namespace mtl
