#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtl/model/task.hpp"

namespace mtl::data {

enum class Gender { Female, Male };
enum class AgeGroup { Age18_22, Age23_45, Age46Plus };

std::string_view gender_code(Gender g);   // "F" | "M"
std::string_view age_code(AgeGroup a);    // "18-22" | "23-45" | "46+"

struct Annotation {
  Gender gender = Gender::Female;
  AgeGroup age = AgeGroup::Age18_22;
  int label = 0;
};

// Profile cell of an annotation, as the matching TaskId.
TaskId profile_task(Gender g, AgeGroup a);

struct AnnotationRecord {
  std::string id;
  std::string text;  // raw, untouched
  std::vector<Annotation> annotations;  // at most one per profile cell
};

// One JSON object per line; blank lines are skipped. Throws ParseError for
// malformed JSON and SchemaError (with line number and field path) for
// schema violations, including a repeated profile cell.
std::vector<AnnotationRecord> parse_annotations(std::istream& in);
std::vector<AnnotationRecord> read_annotations_file(const std::string& path);

void write_annotations(std::ostream& out, const std::vector<AnnotationRecord>& records);

}  // namespace mtl::data
