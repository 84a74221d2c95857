#include "mtl/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

#include "mtl/error.hpp"

namespace mtl::eval {
namespace {

const char* const kColumnNames[3] = {"Precision", "Recall", "F1-score"};

double pick(const MetricTriple& m, std::size_t which) {
  return which == 0 ? m.precision : which == 1 ? m.recall : m.f1;
}

void validate(const ReportTable& table) {
  if (table.encoders.empty()) throw LayoutError("report needs at least one encoder column group");
  for (const auto& row : table.rows) {
    if (row.metrics.size() != table.encoders.size()) {
      throw LayoutError("row '" + row.architecture + "' has " + std::to_string(row.metrics.size()) +
                        " metric groups, expected " + std::to_string(table.encoders.size()));
    }
  }
}

}  // namespace

std::string format_metric(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", value);
  return buf;
}

std::string render_report(const ReportTable& table, ReportFormat format) {
  validate(table);
  if (format == ReportFormat::Json) return report_table_to_json(table).dump(2) + "\n";

  const std::size_t groups = table.encoders.size();
  // Bolding compares what is displayed, so ties after rounding all bold.
  std::vector<std::vector<std::string>> cells(table.rows.size());
  std::vector<long> best(groups * 3, -1);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t c = 0; c < 3; ++c) {
        std::string s = format_metric(pick(table.rows[r].metrics[g], c));
        const long thousandths = std::lround(std::strtod(s.c_str(), nullptr) * 1000.0);
        best[g * 3 + c] = std::max(best[g * 3 + c], thousandths);
        cells[r].push_back(std::move(s));
      }
    }
  }

  std::string out = "| Architecture |";
  for (const auto& enc : table.encoders) {
    for (const char* col : kColumnNames) out += " " + enc + " " + col + " |";
  }
  out += "\n|:---|";
  for (std::size_t i = 0; i < groups * 3; ++i) out += "---:|";
  out += "\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out += "| " + table.rows[r].architecture + " |";
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      const long thousandths = std::lround(std::strtod(cells[r][i].c_str(), nullptr) * 1000.0);
      const bool bold = table.rows.size() > 1 && thousandths == best[i];
      out += bold ? " **" + cells[r][i] + "** |" : " " + cells[r][i] + " |";
    }
    out += "\n";
  }
  return out;
}

ReportTable report_table_from_json(const nlohmann::json& j) {
  try {
    ReportTable t;
    t.encoders = j.at("encoders").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
      ReportRow r;
      r.architecture = row.at("architecture").get<std::string>();
      const auto& metrics = row.at("metrics");
      if (metrics.is_array()) {
        for (const auto& m : metrics) {
          r.metrics.push_back({m.at("precision").get<double>(), m.at("recall").get<double>(), m.at("f1").get<double>()});
        }
      } else {
        for (const auto& enc : t.encoders) {
          if (!metrics.contains(enc)) throw LayoutError("row '" + r.architecture + "' lacks encoder '" + enc + "'");
          const auto& m = metrics.at(enc);
          r.metrics.push_back({m.at("precision").get<double>(), m.at("recall").get<double>(), m.at("f1").get<double>()});
        }
      }
      t.rows.push_back(std::move(r));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("report table: ") + e.what());
  }
}

nlohmann::ordered_json report_table_to_json(const ReportTable& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    for (std::size_t g = 0; g < table.encoders.size() && g < row.metrics.size(); ++g) {
      const auto& m = row.metrics[g];
      metrics[table.encoders[g]] =
          nlohmann::ordered_json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
    }
    rows.push_back(nlohmann::ordered_json{{"architecture", row.architecture}, {"metrics", std::move(metrics)}});
  }
  return nlohmann::ordered_json{{"encoders", table.encoders}, {"rows", std::move(rows)}};
}

}  // namespace mtl::eval
