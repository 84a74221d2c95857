#include "mtl/model/task.hpp"

#include <string>

#include "mtl/error.hpp"

namespace mtl {

std::string_view task_name(TaskId task) {
  switch (task) {
    case TaskId::Hard: return "hard";
    case TaskId::F18_22: return "F_18-22";
    case TaskId::F23_45: return "F_23-45";
    case TaskId::F46Plus: return "F_46+";
    case TaskId::M18_22: return "M_18-22";
    case TaskId::M23_45: return "M_23-45";
    case TaskId::M46Plus: return "M_46+";
    case TaskId::FAgg: return "F_agg";
    case TaskId::MAgg: return "M_agg";
  }
  return "?";
}

TaskId parse_task(std::string_view name) {
  for (TaskId t : {TaskId::Hard, TaskId::F18_22, TaskId::F23_45, TaskId::F46Plus, TaskId::M18_22,
                   TaskId::M23_45, TaskId::M46Plus, TaskId::FAgg, TaskId::MAgg}) {
    if (task_name(t) == name) return t;
  }
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

std::size_t profile_slot(TaskId task) {
  for (std::size_t i = 0; i < kProfileTasks.size(); ++i) {
    if (kProfileTasks[i] == task) return i;
  }
  throw ConfigError("not a profile task: " + std::string(task_name(task)));
}

MaybeLabel TaskLabelSet::get(TaskId task) const {
  switch (task) {
    case TaskId::Hard: return hard;
    case TaskId::FAgg: return f_agg;
    case TaskId::MAgg: return m_agg;
    default: return profiles[profile_slot(task)];
  }
}

}  // namespace mtl
