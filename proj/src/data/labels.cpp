#include "mtl/data/labels.hpp"

#include "mtl/error.hpp"

namespace mtl::data {
namespace {

MaybeLabel majority(int ones, int zeros) {
  if (ones > zeros) return 1;
  if (zeros > ones) return 0;
  return std::nullopt;
}

nlohmann::ordered_json label_json(const MaybeLabel& y) {
  return y ? nlohmann::ordered_json(*y) : nlohmann::ordered_json(nullptr);
}

}  // namespace

MaybeLabel derive_hard_label(const AnnotationRecord& record) {
  if (record.annotations.empty()) throw DataError("record " + record.id + " has no annotations");
  int ones = 0, zeros = 0;
  for (const auto& a : record.annotations) (a.label ? ones : zeros) += 1;
  return majority(ones, zeros);
}

std::pair<MaybeLabel, MaybeLabel> derive_gender_labels(const AnnotationRecord& record) {
  std::array<int, 2> ones{}, zeros{};
  for (const auto& a : record.annotations) {
    const auto g = static_cast<std::size_t>(a.gender);
    (a.label ? ones[g] : zeros[g]) += 1;
  }
  const auto f = static_cast<std::size_t>(Gender::Female);
  const auto m = static_cast<std::size_t>(Gender::Male);
  return {majority(ones[f], zeros[f]), majority(ones[m], zeros[m])};
}

std::array<MaybeLabel, 6> derive_profile_labels(const AnnotationRecord& record) {
  std::array<MaybeLabel, 6> out{};
  for (const auto& a : record.annotations) out[profile_slot(profile_task(a.gender, a.age))] = a.label;
  return out;
}

TaskLabelSet derive_labels(const AnnotationRecord& record) {
  TaskLabelSet s;
  s.hard = derive_hard_label(record);
  s.profiles = derive_profile_labels(record);
  std::tie(s.f_agg, s.m_agg) = derive_gender_labels(record);
  return s;
}

nlohmann::ordered_json derived_to_json(const std::string& id, const TaskLabelSet& labels) {
  nlohmann::ordered_json profiles = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < kProfileTasks.size(); ++i) {
    profiles[std::string(task_name(kProfileTasks[i]))] = label_json(labels.profiles[i]);
  }
  return nlohmann::ordered_json{{"id", id},
          {"hard", label_json(labels.hard)},
          {"profiles", std::move(profiles)},
          {"F_agg", label_json(labels.f_agg)},
          {"M_agg", label_json(labels.m_agg)}};
}

}  // namespace mtl::data
