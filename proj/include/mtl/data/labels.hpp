#pragma once

#include <array>
#include <utility>

#include <json.hpp>

#include "mtl/data/annotations.hpp"
#include "mtl/model/task.hpp"

namespace mtl::data {

// Strict majority over the present annotations; absent on a tie. Throws
// DataError when the record has no annotations.
MaybeLabel derive_hard_label(const AnnotationRecord& record);

// (F_agg, M_agg): strict majority within each gender; absent when that
// gender has no annotations or an even count splits evenly.
std::pair<MaybeLabel, MaybeLabel> derive_gender_labels(const AnnotationRecord& record);

// One slot per profile cell in kProfileTasks order, absent if unannotated.
std::array<MaybeLabel, 6> derive_profile_labels(const AnnotationRecord& record);

TaskLabelSet derive_labels(const AnnotationRecord& record);

// {"id", "hard", "profiles": {...}, "F_agg", "M_agg"} with null for absent.
nlohmann::ordered_json derived_to_json(const std::string& id, const TaskLabelSet& labels);

}  // namespace mtl::data
