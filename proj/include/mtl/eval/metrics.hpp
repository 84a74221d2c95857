#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtl/data/dataset.hpp"
#include "mtl/model/model.hpp"

namespace mtl::eval {

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct ConfusionCounts {
  std::array<ClassCounts, 2> per_class{};
  std::size_t total = 0;
};

struct Metrics {
  ConfusionCounts counts;
  std::array<double, 2> class_precision{};
  std::array<double, 2> class_recall{};
  std::array<double, 2> class_f1{};
  double precision = 0.0;  // macro over both classes
  double recall = 0.0;
  double f1 = 0.0;
};

// Per-class P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); a zero
// denominator scores that quantity 0. Macro values average the two classes.
Metrics compute_metrics(std::span<const int> labels, std::span<const int> predictions);

struct SampleRecord {
  std::string id;
  int label = 0;
  int pred = 0;
  double prob = 0.0;  // predicted probability of class 1
};

struct EvalReport {
  std::string model;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<SampleRecord> samples;
};

// Hard-label predictions over `examples` in batches. Throws EvaluationError
// on an empty set and CompatibilityError when an example does not fit the
// model's vocabulary or length.
EvalReport evaluate_model(const model::MultitaskModel& model,
                          const std::vector<data::LabeledExample>& examples, std::string model_id,
                          std::size_t batch_size = 64);

// Macro-F1 on the hard task only; used for model selection.
double hard_macro_f1(const model::MultitaskModel& model, const std::vector<data::LabeledExample>& examples,
                     std::size_t batch_size = 64);

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
EvalReport load_report(const std::string& path);

}  // namespace mtl::eval
