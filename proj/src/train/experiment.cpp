#include "mtl/train/experiment.hpp"

#include <fstream>
#include <set>

#include "mtl/error.hpp"
#include "mtl/eval/report.hpp"

namespace mtl::train {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key " + where + "." + it.key());
  }
}

std::size_t positive_size(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
    throw ConfigError(where + "." + key + " must be a positive integer");
  }
  return v.get<std::size_t>();
}

double number(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

double open_fraction(const json& obj, const char* key, const std::string& where) {
  const double f = number(obj, key, where);
  if (!(f > 0.0 && f < 1.0)) throw ConfigError(where + "." + key + " must lie in (0, 1)");
  return f;
}

std::uint64_t seed_value(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned()) throw ConfigError(where + "." + key + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string path_value(const json& obj, const char* key, const fs::path& base) {
  const auto& v = obj.at(key);
  if (!v.is_string() || v.get<std::string>().empty()) {
    throw ConfigError(std::string("data.") + key + " must be a non-empty path");
  }
  fs::path p(v.get<std::string>());
  return (p.is_absolute() ? p : base / p).lexically_normal().string();
}

std::vector<TaskId> auxiliary_tasks() {
  std::vector<TaskId> out(kProfileTasks.begin(), kProfileTasks.end());
  out.push_back(TaskId::FAgg);
  out.push_back(TaskId::MAgg);
  return out;
}

double weight_value(const json& v, const std::string& where) {
  if (!v.is_number() || v.get<double>() < 0.0) throw ConfigError(where + " must be a non-negative number");
  return v.get<double>();
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j, const fs::path& base_dir) {
  reject_unknown(j, {"preset", "encoder", "regime", "train", "data"}, "config");
  ExperimentConfig c;
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) throw ConfigError("config.preset must be a string");
    c.preset = j["preset"].get<std::string>();
  }
  const auto preset = encoder::preset(c.preset);
  c.data.case_fold = preset.case_fold;
  if (j.contains("encoder")) {
    c.encoder = j["encoder"];
    encoder_config_from_json(c.encoder, preset.config);  // validates types early
  }
  if (j.contains("regime")) {
    if (!j["regime"].is_string()) throw ConfigError("config.regime must be a string");
    c.regime = parse_regime(j["regime"].get<std::string>());
  }

  if (!j.contains("train")) throw ConfigError("config.train is required (train.seed must be explicit)");
  const json& t = j["train"];
  reject_unknown(t, {"lr", "epochs", "batch_size", "seed", "aux_weights", "freeze_stage1"}, "train");
  if (!t.contains("seed")) throw ConfigError("train.seed is required");
  c.train.seed = seed_value(t, "seed", "train");
  if (t.contains("lr")) {
    c.train.lr = number(t, "lr", "train");
    if (!(c.train.lr > 0.0)) throw ConfigError("train.lr must be positive");
  }
  if (t.contains("epochs")) c.train.epochs = positive_size(t, "epochs", "train");
  if (t.contains("batch_size")) c.train.batch_size = positive_size(t, "batch_size", "train");
  if (t.contains("freeze_stage1")) {
    if (!t["freeze_stage1"].is_boolean()) throw ConfigError("train.freeze_stage1 must be a boolean");
    c.train.freeze_stage1 = t["freeze_stage1"].get<bool>();
  }
  if (t.contains("aux_weights")) {
    const json& w = t["aux_weights"];
    if (w.is_number()) {
      const double v = weight_value(w, "train.aux_weights");
      for (TaskId task : auxiliary_tasks()) c.aux_weights[task] = v;
    } else if (w.is_object()) {
      for (auto it = w.begin(); it != w.end(); ++it) {
        const TaskId task = parse_task(it.key());
        if (task == TaskId::Hard) throw ConfigError("train.aux_weights cannot weight the hard task");
        c.aux_weights[task] = weight_value(it.value(), "train.aux_weights." + it.key());
      }
    } else {
      throw ConfigError("train.aux_weights must be a number or an object keyed by task");
    }
  }

  if (!j.contains("data")) throw ConfigError("config.data is required");
  const json& d = j["data"];
  reject_unknown(d,
                 {"input", "test_input", "vocab", "val_fraction", "test_fraction", "vocab_size", "max_len", "seed",
                  "case_fold"},
                 "data");
  if (!d.contains("input")) throw ConfigError("data.input is required");
  c.input = path_value(d, "input", base_dir);
  if (d.contains("test_input")) c.test_input = path_value(d, "test_input", base_dir);
  if (d.contains("vocab")) c.vocab = path_value(d, "vocab", base_dir);
  if (d.contains("val_fraction")) c.data.val_fraction = open_fraction(d, "val_fraction", "data");
  if (d.contains("test_fraction")) c.data.test_fraction = open_fraction(d, "test_fraction", "data");
  if (d.contains("vocab_size")) c.data.vocab_size = positive_size(d, "vocab_size", "data");
  if (d.contains("max_len")) {
    c.data.max_len = positive_size(d, "max_len", "data");
    if (c.data.max_len < 2) throw ConfigError("data.max_len must be at least 2");
  }
  if (d.contains("seed")) c.data.seed = seed_value(d, "seed", "data");
  if (d.contains("case_fold")) {
    if (!d["case_fold"].is_boolean()) throw ConfigError("data.case_fold must be a boolean");
    c.data.case_fold = d["case_fold"].get<bool>();
    c.case_fold_explicit = true;
  }
  return c;
}

ExperimentConfig with_preset(ExperimentConfig c, const std::string& preset) {
  const auto p = encoder::preset(preset);
  c.preset = p.name;
  if (!c.case_fold_explicit) c.data.case_fold = p.case_fold;
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_experiment_config(j, fs::absolute(fs::path(path)).parent_path());
}

ordered_json experiment_config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["preset"] = c.preset;
  j["encoder"] = c.encoder;
  if (c.regime) j["regime"] = regime_name(*c.regime);
  ordered_json weights = ordered_json::object();
  for (const auto& [task, w] : c.aux_weights) weights[std::string(task_name(task))] = w;
  j["train"] = ordered_json{{"lr", c.train.lr},
                            {"epochs", c.train.epochs},
                            {"batch_size", c.train.batch_size},
                            {"seed", c.train.seed},
                            {"aux_weights", std::move(weights)},
                            {"freeze_stage1", c.train.freeze_stage1}};
  ordered_json d;
  d["input"] = c.input;
  if (c.test_input) d["test_input"] = *c.test_input;
  if (c.vocab) d["vocab"] = *c.vocab;
  d["val_fraction"] = c.data.val_fraction;
  d["test_fraction"] = c.data.test_fraction;
  d["vocab_size"] = c.data.vocab_size;
  d["max_len"] = c.data.max_len;
  d["seed"] = c.data.seed;
  d["case_fold"] = c.data.case_fold;
  j["data"] = std::move(d);
  return j;
}

void check_paths(const ExperimentConfig& c) {
  auto need = [](const std::string& p, const char* what) {
    if (!fs::is_regular_file(p)) throw ConfigError(std::string(what) + " not found: " + p);
  };
  need(c.input, "data.input");
  if (c.test_input) need(*c.test_input, "data.test_input");
  if (c.vocab) need(*c.vocab, "data.vocab");
}

data::DatasetBundle load_bundle(const ExperimentConfig& c) {
  check_paths(c);
  const auto pool = data::read_annotations_file(c.input);
  std::optional<std::vector<data::AnnotationRecord>> test;
  if (c.test_input) test = data::read_annotations_file(*c.test_input);
  data::DataOptions opts = c.data;
  if (c.vocab) opts.vocab = data::Vocabulary::load(*c.vocab, c.data.case_fold);
  return data::prepare_bundle(pool, test, opts);
}

encoder::EncoderPreset resolve_preset(const ExperimentConfig& c, const data::DatasetBundle& bundle) {
  encoder::EncoderPreset p = encoder::preset(c.preset);
  p.config.vocab_size = bundle.vocab.size();
  p.config.max_len = bundle.max_len;
  p.config = encoder_config_from_json(c.encoder, p.config);
  if (p.config.vocab_size < bundle.vocab.size()) {
    throw ConfigError("encoder.vocab_size " + std::to_string(p.config.vocab_size) + " is smaller than the vocabulary (" +
                      std::to_string(bundle.vocab.size()) + ")");
  }
  if (p.config.max_len < bundle.max_len) {
    throw ConfigError("encoder.max_len " + std::to_string(p.config.max_len) + " is shorter than data.max_len (" +
                      std::to_string(bundle.max_len) + ")");
  }
  p.config.validate();
  return p;
}

RunRecord run_experiment(const ExperimentConfig& c, const data::DatasetBundle& bundle, Regime regime,
                         std::uint64_t seed) {
  const auto preset = resolve_preset(c, bundle);
  RunOptions opts;
  opts.settings = c.train;
  opts.settings.seed = seed;
  opts.aux_weights = c.aux_weights;
  ExperimentConfig snapshot = c;
  snapshot.regime = regime;
  snapshot.train.seed = seed;
  opts.config_snapshot = ordered_json{{"experiment", experiment_config_to_json(snapshot)}};
  return run_regime(expand_regime(regime, opts.settings), bundle, preset, opts);
}

void write_run_dir(const fs::path& dir, const RunRecord& record, const data::DatasetBundle& bundle,
                   const std::string& preset_name) {
  fs::create_directories(dir);
  save_checkpoint(record.checkpoint, (dir / "checkpoint.mtlc").string());
  write_file_atomic((dir / "stages.json").string(), stages_to_json(record).dump(2) + "\n");
  write_file_atomic((dir / "eval.json").string(), eval::report_to_json(record.test_report).dump(2) + "\n");
  write_file_atomic((dir / "vocab.txt").string(), bundle.vocab.serialize());
  const eval::ReportTable table{{preset_name},
                                {{std::string(regime_name(record.spec.regime)),
                                  {{record.test_report.precision, record.test_report.recall, record.test_report.f1}}}}};
  write_file_atomic((dir / "report.md").string(), eval::render_report(table, eval::ReportFormat::Markdown));
}

}  // namespace mtl::train
