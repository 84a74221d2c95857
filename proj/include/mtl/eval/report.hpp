#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace mtl::eval {

struct MetricTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ReportRow {
  std::string architecture;
  std::vector<MetricTriple> metrics;  // one per encoder column group
};

struct ReportTable {
  std::vector<std::string> encoders;
  std::vector<ReportRow> rows;
};

enum class ReportFormat { Markdown, Json };

// Three decimals. Rounding follows the exact binary value; exact binary
// halfway cases go to the even digit.
std::string format_metric(double value);

// Architectures as rows; (Precision, Recall, F1-score) per encoder as
// columns. In markdown, the best displayed value of each column is bold
// (every tied cell). Throws LayoutError on inconsistent rows.
std::string render_report(const ReportTable& table, ReportFormat format);

ReportTable report_table_from_json(const nlohmann::json& j);
nlohmann::ordered_json report_table_to_json(const ReportTable& table);

}  // namespace mtl::eval
