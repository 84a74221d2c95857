#include "mtl/data/annotations.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "mtl/error.hpp"

namespace mtl::data {
namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(std::size_t line, const std::string& path, const std::string& what) {
  throw SchemaError("line " + std::to_string(line) + ": " + path + ": " + what);
}

AnnotationRecord parse_record(const json& obj, std::size_t line) {
  if (!obj.is_object()) schema_fail(line, "$", "expected an object");
  AnnotationRecord rec;

  auto id = obj.find("id");
  if (id == obj.end() || !id->is_string()) schema_fail(line, "id", "must be a string");
  rec.id = id->get<std::string>();
  if (rec.id.empty()) schema_fail(line, "id", "must be non-empty");

  auto text = obj.find("text");
  if (text == obj.end() || !text->is_string()) schema_fail(line, "text", "must be a string");
  rec.text = text->get<std::string>();
  if (rec.text.empty()) schema_fail(line, "text", "must be non-empty");

  auto anns = obj.find("annotations");
  if (anns == obj.end() || !anns->is_array()) schema_fail(line, "annotations", "must be an array");
  if (anns->size() > 6) schema_fail(line, "annotations", "at most 6 entries allowed");

  std::array<bool, 6> seen{};
  for (std::size_t i = 0; i < anns->size(); ++i) {
    const json& a = (*anns)[i];
    const std::string base = "annotations[" + std::to_string(i) + "]";
    if (!a.is_object()) schema_fail(line, base, "expected an object");
    Annotation ann;

    auto g = a.find("gender");
    if (g == a.end() || !g->is_string()) schema_fail(line, base + ".gender", "must be \"M\" or \"F\"");
    const auto gs = g->get<std::string>();
    if (gs == "F") ann.gender = Gender::Female;
    else if (gs == "M") ann.gender = Gender::Male;
    else schema_fail(line, base + ".gender", "must be \"M\" or \"F\"");

    auto age = a.find("age");
    if (age == a.end() || !age->is_string()) {
      schema_fail(line, base + ".age", "must be one of \"18-22\", \"23-45\", \"46+\"");
    }
    const auto as = age->get<std::string>();
    if (as == "18-22") ann.age = AgeGroup::Age18_22;
    else if (as == "23-45") ann.age = AgeGroup::Age23_45;
    else if (as == "46+") ann.age = AgeGroup::Age46Plus;
    else schema_fail(line, base + ".age", "must be one of \"18-22\", \"23-45\", \"46+\"");

    auto label = a.find("label");
    if (label == a.end() || !label->is_number_integer() ||
        (label->get<long long>() != 0 && label->get<long long>() != 1)) {
      schema_fail(line, base + ".label", "label must be 0 or 1");
    }
    ann.label = static_cast<int>(label->get<long long>());

    const std::size_t slot = profile_slot(profile_task(ann.gender, ann.age));
    if (seen[slot]) {
      schema_fail(line, base, "duplicate annotation for profile " + std::string(gender_code(ann.gender)) + "/" +
                                  std::string(age_code(ann.age)));
    }
    seen[slot] = true;
    rec.annotations.push_back(ann);
  }
  return rec;
}

}  // namespace

std::string_view gender_code(Gender g) { return g == Gender::Female ? "F" : "M"; }

std::string_view age_code(AgeGroup a) {
  switch (a) {
    case AgeGroup::Age18_22: return "18-22";
    case AgeGroup::Age23_45: return "23-45";
    case AgeGroup::Age46Plus: return "46+";
  }
  return "?";
}

TaskId profile_task(Gender g, AgeGroup a) {
  const std::size_t offset = g == Gender::Female ? 0 : 3;
  return kProfileTasks[offset + static_cast<std::size_t>(a)];
}

std::vector<AnnotationRecord> parse_annotations(std::istream& in) {
  std::vector<AnnotationRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(lineno) + ": malformed JSON: " + e.what(), lineno);
    }
    out.push_back(parse_record(obj, lineno));
  }
  return out;
}

std::vector<AnnotationRecord> read_annotations_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotation file: " + path);
  return parse_annotations(in);
}

void write_annotations(std::ostream& out, const std::vector<AnnotationRecord>& records) {
  for (const auto& r : records) {
    nlohmann::ordered_json anns = nlohmann::ordered_json::array();
    for (const auto& a : r.annotations) {
      anns.push_back(nlohmann::ordered_json{
          {"gender", gender_code(a.gender)}, {"age", age_code(a.age)}, {"label", a.label}});
    }
    out << nlohmann::ordered_json{{"id", r.id}, {"text", r.text}, {"annotations", std::move(anns)}}.dump()
        << '\n';
  }
}

}  // namespace mtl::data
