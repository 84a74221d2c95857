#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtl/eval/metrics.hpp"

namespace mtl::eval {

// Ids misclassified by every report, in the first report's sample order.
// Throws AlignmentError unless all reports cover the same ids with the same
// hard labels. Needs at least two reports.
std::vector<std::string> error_intersection(std::span<const EvalReport> reports);

struct ErrorCase {
  std::string id;
  std::optional<std::string> text;
  int hard = 0;
  std::vector<std::pair<std::string, int>> predictions;  // (model, pred)
  std::optional<std::string> category;
};

std::vector<ErrorCase> analyze_errors(std::span<const EvalReport> reports,
                                      const std::map<std::string, std::string>& texts,
                                      const std::map<std::string, std::string>& categories);

// JSON Lines: {"id", "text", "hard", "predictions": {model: pred}, "category"}.
std::string errors_to_jsonl(const std::vector<ErrorCase>& cases);

// Category tags: JSON Lines of {"id", "category"}.
std::map<std::string, std::string> load_categories(const std::string& path);

}  // namespace mtl::eval
