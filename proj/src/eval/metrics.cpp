#include "mtl/eval/metrics.hpp"

#include <fstream>

#include "mtl/error.hpp"

namespace mtl::eval {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_compatible(const model::MultitaskModel& model, const std::vector<data::LabeledExample>& examples) {
  for (const auto& ex : examples) {
    if (!ex.labels.hard) throw EvaluationError("example " + ex.id + " has no hard label");
    if (ex.ids.size() > model.config.max_len) {
      throw CompatibilityError("example " + ex.id + " has " + std::to_string(ex.ids.size()) +
                               " positions but the model accepts " + std::to_string(model.config.max_len));
    }
    for (auto id : ex.ids) {
      if (id >= model.config.vocab_size) {
        throw CompatibilityError("example " + ex.id + " uses token id " + std::to_string(id) +
                                 " beyond the model vocabulary of " + std::to_string(model.config.vocab_size));
      }
    }
  }
}

}  // namespace

Metrics compute_metrics(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) {
    throw EvaluationError("compute_metrics: " + std::to_string(labels.size()) + " labels vs " +
                          std::to_string(predictions.size()) + " predictions");
  }
  if (labels.empty()) throw EvaluationError("compute_metrics: no samples");
  Metrics m;
  m.counts.total = labels.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i], p = predictions[i];
    if ((y != 0 && y != 1) || (p != 0 && p != 1)) {
      throw EvaluationError("compute_metrics: non-binary value at index " + std::to_string(i));
    }
    if (y == p) {
      ++m.counts.per_class[y].tp;
    } else {
      ++m.counts.per_class[p].fp;
      ++m.counts.per_class[y].fn;
    }
  }
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& k = m.counts.per_class[c];
    const double p = ratio(k.tp, k.tp + k.fp);
    const double r = ratio(k.tp, k.tp + k.fn);
    m.class_precision[c] = p;
    m.class_recall[c] = r;
    m.class_f1[c] = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  m.precision = 0.5 * (m.class_precision[0] + m.class_precision[1]);
  m.recall = 0.5 * (m.class_recall[0] + m.class_recall[1]);
  m.f1 = 0.5 * (m.class_f1[0] + m.class_f1[1]);
  return m;
}

EvalReport evaluate_model(const model::MultitaskModel& model,
                          const std::vector<data::LabeledExample>& examples, std::string model_id,
                          std::size_t batch_size) {
  if (examples.empty()) throw EvaluationError("evaluation set is empty");
  check_compatible(model, examples);
  EvalReport report;
  report.model = std::move(model_id);
  std::vector<int> labels, preds;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(examples.size(), start + batch_size); ++i) idx.push_back(i);
    const auto pred = model::predict_hard(model, data::make_batch(examples, idx));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& ex = examples[idx[j]];
      report.samples.push_back({ex.id, *ex.labels.hard, pred.labels[j], pred.probabilities[j][1]});
      labels.push_back(*ex.labels.hard);
      preds.push_back(pred.labels[j]);
    }
  }
  const Metrics m = compute_metrics(labels, preds);
  report.precision = m.precision;
  report.recall = m.recall;
  report.f1 = m.f1;
  return report;
}

double hard_macro_f1(const model::MultitaskModel& model, const std::vector<data::LabeledExample>& examples,
                     std::size_t batch_size) {
  return evaluate_model(model, examples, "", batch_size).f1;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json samples = nlohmann::ordered_json::array();
  for (const auto& s : report.samples) {
    samples.push_back(nlohmann::ordered_json{{"id", s.id}, {"label", s.label}, {"pred", s.pred}, {"prob", s.prob}});
  }
  return nlohmann::ordered_json{{"model", report.model},
                                {"precision", report.precision},
                                {"recall", report.recall},
                                {"f1", report.f1},
                                {"samples", std::move(samples)}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.model = j.at("model").get<std::string>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    for (const auto& s : j.at("samples")) {
      r.samples.push_back({s.at("id").get<std::string>(), s.at("label").get<int>(), s.at("pred").get<int>(),
                           s.at("prob").get<double>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("evaluation report: ") + e.what());
  }
}

EvalReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("report " + path + ": " + e.what(), 0);
  }
  return report_from_json(j);
}

}  // namespace mtl::eval
