#include "mtl/eval/error_analysis.hpp"

#include <fstream>
#include <unordered_map>

#include "mtl/error.hpp"

namespace mtl::eval {

std::vector<std::string> error_intersection(std::span<const EvalReport> reports) {
  if (reports.size() < 2) throw AlignmentError("error intersection needs at least two reports");
  std::unordered_map<std::string, int> first_labels;
  for (const auto& s : reports[0].samples) {
    if (!first_labels.emplace(s.id, s.label).second) {
      throw AlignmentError("report " + reports[0].model + " lists id " + s.id + " twice");
    }
  }
  std::unordered_map<std::string, std::size_t> wrong;
  for (const auto& report : reports) {
    if (report.samples.size() != first_labels.size()) {
      throw AlignmentError("report " + report.model + " covers " + std::to_string(report.samples.size()) +
                           " samples, expected " + std::to_string(first_labels.size()));
    }
    std::unordered_map<std::string, bool> seen;
    for (const auto& s : report.samples) {
      auto it = first_labels.find(s.id);
      if (it == first_labels.end()) throw AlignmentError("report " + report.model + " has unknown id " + s.id);
      if (it->second != s.label) throw AlignmentError("reports disagree on the hard label of " + s.id);
      if (!seen.emplace(s.id, true).second) throw AlignmentError("report " + report.model + " lists id " + s.id + " twice");
      if (s.pred != s.label) ++wrong[s.id];
    }
  }
  std::vector<std::string> out;
  for (const auto& s : reports[0].samples) {
    auto it = wrong.find(s.id);
    if (it != wrong.end() && it->second == reports.size()) out.push_back(s.id);
  }
  return out;
}

std::vector<ErrorCase> analyze_errors(std::span<const EvalReport> reports,
                                      const std::map<std::string, std::string>& texts,
                                      const std::map<std::string, std::string>& categories) {
  const auto ids = error_intersection(reports);
  std::vector<ErrorCase> out;
  for (const auto& id : ids) {
    ErrorCase c;
    c.id = id;
    if (auto t = texts.find(id); t != texts.end()) c.text = t->second;
    if (auto k = categories.find(id); k != categories.end()) c.category = k->second;
    for (const auto& r : reports) {
      for (const auto& s : r.samples) {
        if (s.id != id) continue;
        c.hard = s.label;
        c.predictions.emplace_back(r.model, s.pred);
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string errors_to_jsonl(const std::vector<ErrorCase>& cases) {
  std::string out;
  for (const auto& c : cases) {
    nlohmann::ordered_json preds = nlohmann::ordered_json::object();
    for (const auto& [model, pred] : c.predictions) preds[model] = pred;
    nlohmann::ordered_json line{{"id", c.id},
                                {"text", c.text ? nlohmann::ordered_json(*c.text) : nlohmann::ordered_json(nullptr)},
                                {"hard", c.hard},
                                {"predictions", std::move(preds)},
                                {"category", c.category ? nlohmann::ordered_json(*c.category)
                                                        : nlohmann::ordered_json(nullptr)}};
    out += line.dump() + "\n";
  }
  return out;
}

std::map<std::string, std::string> load_categories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open category file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out[j.at("id").get<std::string>()] = j.at("category").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("category file line " + std::to_string(lineno) + ": " + e.what(), lineno);
    }
  }
  return out;
}

}  // namespace mtl::eval
