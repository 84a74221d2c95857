#include "mtl/cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtl/data/annotations.hpp"
#include "mtl/data/dataset.hpp"
#include "mtl/data/labels.hpp"
#include "mtl/data/synthetic.hpp"
#include "mtl/error.hpp"
#include "mtl/eval/error_analysis.hpp"
#include "mtl/eval/metrics.hpp"
#include "mtl/eval/report.hpp"
#include "mtl/train/checkpoint.hpp"
#include "mtl/train/experiment.hpp"
#include "mtl/train/gradcheck_suite.hpp"

namespace mtl::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::uint64_t parse_seed(const std::string& s) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || s[0] == '-') throw ConfigError("invalid seed: " + s);
  return v;
}

// Writes to `path`, or to `out` when path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    train::write_file_atomic(path, text);
  }
}

std::map<std::string, std::string> texts_of(const std::vector<data::AnnotationRecord>& records) {
  std::map<std::string, std::string> m;
  for (const auto& r : records) m.emplace(r.id, r.text);
  return m;
}

// ---- prepare ---------------------------------------------------------------

struct PrepareArgs {
  std::string input, test, out;
  std::size_t vocab_size = 8000, max_len = 64;
  double val_frac = 0.1, test_frac = 0.15;
  std::uint64_t seed = 13;
  bool no_case_fold = false;
};

int run_prepare(const PrepareArgs& a, std::ostream& out) {
  const auto pool = data::read_annotations_file(a.input);
  std::optional<std::vector<data::AnnotationRecord>> test;
  if (!a.test.empty()) test = data::read_annotations_file(a.test);
  data::DataOptions opts;
  opts.vocab_size = a.vocab_size;
  opts.max_len = a.max_len;
  opts.val_fraction = a.val_frac;
  opts.test_fraction = a.test_frac;
  opts.case_fold = !a.no_case_fold;
  opts.seed = a.seed;
  const auto bundle = data::prepare_bundle(pool, test, opts);

  std::string derived;
  auto add_derived = [&](const std::vector<data::AnnotationRecord>& records) {
    for (const auto& r : records) derived += data::derived_to_json(r.id, data::derive_labels(r)).dump() + "\n";
  };
  add_derived(pool);
  if (test) add_derived(*test);

  auto ids = [](const std::vector<data::LabeledExample>& xs) {
    ordered_json arr = ordered_json::array();
    for (const auto& x : xs) arr.push_back(x.id);
    return arr;
  };
  ordered_json manifest;
  manifest["input"] = a.input;
  if (test) manifest["test_input"] = a.test;
  manifest["seed"] = a.seed;
  manifest["val_fraction"] = a.val_frac;
  if (!test) manifest["test_fraction"] = a.test_frac;
  manifest["vocab_size"] = bundle.vocab.size();
  manifest["max_len"] = a.max_len;
  manifest["case_fold"] = opts.case_fold;
  manifest["dropped_ties"] = bundle.dropped_ties;
  manifest["train"] = ids(bundle.train);
  manifest["validation"] = ids(bundle.validation);
  manifest["test"] = ids(bundle.test);

  fs::create_directories(a.out);
  const fs::path dir(a.out);
  train::write_file_atomic((dir / "derived.jsonl").string(), derived);
  train::write_file_atomic((dir / "vocab.txt").string(), bundle.vocab.serialize());
  train::write_file_atomic((dir / "split.json").string(), manifest.dump(2) + "\n");
  out << "excluded " << bundle.dropped_ties << " tied samples\n";
  out << "train " << bundle.train.size() << ", validation " << bundle.validation.size() << ", test "
      << bundle.test.size() << ", vocabulary " << bundle.vocab.size() << "\n";
  return kExitOk;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::size_t n = 1000;
  std::string flip = "0";
  std::uint64_t seed = 0;
  std::string out, latent;
  data::SyntheticThemes themes;
  std::string id_prefix = "s";
};

int run_synth(const SynthArgs& a, std::ostream& out) {
  data::SyntheticSpec spec;
  spec.n = a.n;
  spec.seed = a.seed;
  spec.themes = a.themes;
  spec.id_prefix = a.id_prefix;
  const auto parts = split_list(a.flip);
  if (parts.size() != 1 && parts.size() != 6) throw ConfigError("--flip takes one value or six comma-separated values");
  for (std::size_t i = 0; i < 6; ++i) {
    const std::string& s = parts.size() == 1 ? parts[0] : parts[i];
    try {
      std::size_t used = 0;
      spec.flip[i] = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ConfigError("invalid flip probability: " + s);
    }
  }
  const auto synthetic = data::generate_synthetic(spec);
  std::ostringstream records;
  data::write_annotations(records, data::records_of(synthetic));
  emit(a.out, records.str(), out);
  if (!a.latent.empty()) {
    std::string lines;
    for (const auto& s : synthetic) {
      lines += ordered_json{{"id", s.record.id}, {"latent", s.latent}}.dump() + "\n";
    }
    train::write_file_atomic(a.latent, lines);
  }
  return kExitOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string config, regime, out, seed;
};

int run_train(const TrainArgs& a, std::ostream& out) {
  auto config = train::load_experiment_config(a.config);
  if (!a.regime.empty()) config.regime = train::parse_regime(a.regime);
  if (!config.regime) throw ConfigError("no regime given (use --regime or the config's \"regime\")");
  if (!a.seed.empty()) config.train.seed = parse_seed(a.seed);
  const auto bundle = train::load_bundle(config);
  const auto record = train::run_experiment(config, bundle, *config.regime, config.train.seed);
  train::write_run_dir(a.out, record, bundle, config.preset);
  out << train::regime_name(*config.regime) << " seed " << config.train.seed << ": test precision "
      << fmt("%.4f", record.test_report.precision) << ", recall " << fmt("%.4f", record.test_report.recall)
      << ", macro-F1 " << fmt("%.4f", record.test_report.f1) << " -> " << a.out << "\n";
  return kExitOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string checkpoint, input, vocab, out, model_id;
  std::size_t max_len = 0;
  std::string case_fold;  // "", "true" or "false"
};

int run_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const auto ck = train::load_checkpoint(a.checkpoint);
  const auto model = train::model_from_checkpoint(ck);
  const json snapshot = ck.config.contains("experiment") ? json(ck.config["experiment"]) : json::object();
  const json data_cfg = snapshot.value("data", json::object());

  bool case_fold = data_cfg.value("case_fold", true);
  if (a.case_fold == "true") case_fold = true;
  if (a.case_fold == "false") case_fold = false;
  std::size_t max_len = a.max_len ? a.max_len : data_cfg.value("max_len", model.config.max_len);

  std::string vocab_path = a.vocab;
  if (vocab_path.empty()) {
    vocab_path = (fs::path(a.checkpoint).parent_path() / "vocab.txt").string();
    if (!fs::exists(vocab_path)) throw ConfigError("no --vocab given and no vocab.txt beside the checkpoint");
  }
  const auto vocab = data::Vocabulary::load(vocab_path, case_fold);
  if (vocab.size() > model.config.vocab_size) {
    throw CompatibilityError("vocabulary has " + std::to_string(vocab.size()) + " ids but the checkpoint embeds " +
                             std::to_string(model.config.vocab_size));
  }

  std::vector<data::LabeledExample> examples;
  std::size_t ties = 0;
  for (const auto& r : data::read_annotations_file(a.input)) {
    auto ex = data::make_example(r, vocab, max_len);
    if (ex.labels.hard) examples.push_back(std::move(ex));
    else ++ties;
  }
  std::string id = a.model_id;
  if (id.empty()) {
    id = ck.metadata.value("regime", std::string("model")) + "/" + ck.metadata.value("preset", std::string("unknown"));
  }
  const auto report = eval::evaluate_model(model, examples, id);
  err << "evaluated " << report.samples.size() << " samples (" << ties << " tied excluded)\n";
  emit(a.out, eval::report_to_json(report).dump(2) + "\n", out);
  return kExitOk;
}

// ---- gradcheck -------------------------------------------------------------

struct GradcheckArgs {
  std::size_t trials = 20;
  std::uint64_t seed = 7;
  double h = 1e-6, rtol = 1e-6, floor = kGradCheckFloor;
};

int run_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  if (a.trials == 0) throw ConfigError("--trials must be positive");
  bool ok = true;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.trials; ++i) {
    auto trial = train::make_grad_trial(i, a.seed);
    const auto report = finite_diff_gradcheck(trial.loss, trial.params, a.h, a.rtol, a.floor);
    worst = std::max(worst, report.max_rel_error());
    out << "trial " << i << " " << trial.name << ": " << report.scalars_checked << " scalars, max rel error "
        << fmt("%.3e", report.max_rel_error()) << (report.passed() ? " ok" : " FAIL") << "\n";
    if (!report.passed()) {
      ok = false;
      for (const auto& e : report.entries) {
        if (e.max_rel_error > a.rtol) {
          err << "  " << e.name << "[" << e.worst_index << "]: analytic " << fmt("%.12e", e.analytic) << " numeric "
              << fmt("%.12e", e.numeric) << "\n";
        }
      }
    }
  }
  out << (ok ? "all " : "not all ") << a.trials << " trials within rtol " << fmt("%.1e", a.rtol) << " (worst "
      << fmt("%.3e", worst) << ")\n";
  return ok ? kExitOk : kExitRuntime;
}

// ---- matrix ----------------------------------------------------------------

struct MatrixArgs {
  std::string config, regimes, seeds, presets, out;
  std::size_t jobs = 1;
};

struct Cell {
  std::size_t preset = 0;
  train::Regime regime{};
  std::uint64_t seed = 0;
  std::string name;
  eval::EvalReport report;
  bool done = false;
};

int run_matrix(const MatrixArgs& a, std::ostream& out, std::ostream& err) {
  const auto base = train::load_experiment_config(a.config);
  if (a.jobs == 0) throw ConfigError("--jobs must be positive");

  std::vector<train::Regime> regimes;
  if (a.regimes.empty()) {
    if (base.regime) regimes.push_back(*base.regime);
    else regimes = train::all_regimes();
  } else if (a.regimes == "all") {
    regimes = train::all_regimes();
  } else {
    for (const auto& r : split_list(a.regimes)) regimes.push_back(train::parse_regime(r));
  }
  std::sort(regimes.begin(), regimes.end());
  regimes.erase(std::unique(regimes.begin(), regimes.end()), regimes.end());

  std::vector<std::uint64_t> seeds;
  if (a.seeds.empty()) seeds.push_back(base.train.seed);
  for (const auto& s : split_list(a.seeds)) seeds.push_back(parse_seed(s));
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  std::vector<std::string> presets = a.presets.empty() ? std::vector<std::string>{base.preset} : split_list(a.presets);
  std::vector<train::ExperimentConfig> configs;
  std::vector<data::DatasetBundle> bundles;
  for (auto& p : presets) {
    configs.push_back(train::with_preset(base, p));
    p = configs.back().preset;
    bundles.push_back(train::load_bundle(configs.back()));
  }
  if (regimes.empty() || seeds.empty() || presets.empty()) throw ConfigError("matrix needs at least one cell");

  // Sorted by regime, then seed, then preset.
  std::vector<Cell> cells;
  for (auto r : regimes) {
    for (auto s : seeds) {
      for (std::size_t p = 0; p < presets.size(); ++p) {
        Cell c;
        c.preset = p;
        c.regime = r;
        c.seed = s;
        c.name = presets[p] + "/" + std::string(train::regime_name(r)) + "/seed-" + std::to_string(s);
        cells.push_back(std::move(c));
      }
    }
  }

  const fs::path root(a.out);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::size_t failed_index = cells.size();
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      Cell& c = cells[i];
      try {
        const auto rec = train::run_experiment(configs[c.preset], bundles[c.preset], c.regime, c.seed);
        train::write_run_dir(root / "cells" / c.name, rec, bundles[c.preset], presets[c.preset]);
        c.report = rec.test_report;
        c.done = true;
        std::lock_guard<std::mutex> lock(mu);
        err << "done " << c.name << " macro-F1 " << fmt("%.4f", c.report.f1) << "\n";
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        stop.store(true);
        return;
      }
    }
  };
  const std::size_t n_threads = std::min(a.jobs, cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ordered_json results = ordered_json::array();
  for (const auto& c : cells) {
    if (!c.done) continue;
    results.push_back(ordered_json{{"preset", presets[c.preset]},
                                   {"regime", train::regime_name(c.regime)},
                                   {"seed", c.seed},
                                   {"precision", c.report.precision},
                                   {"recall", c.report.recall},
                                   {"f1", c.report.f1},
                                   {"run_dir", (fs::path("cells") / c.name).string()}});
  }
  train::write_file_atomic((root / "results.json").string(), results.dump(2) + "\n");

  if (failure) {
    err << "matrix cell " << cells[failed_index].name << " failed\n";
    std::rethrow_exception(failure);
  }

  eval::ReportTable table;
  table.encoders = presets;
  for (auto r : regimes) {
    eval::ReportRow row{std::string(train::regime_name(r)), {}};
    for (std::size_t p = 0; p < presets.size(); ++p) {
      eval::MetricTriple m;
      std::size_t n = 0;
      for (const auto& c : cells) {
        if (c.regime != r || c.preset != p) continue;
        m.precision += c.report.precision;
        m.recall += c.report.recall;
        m.f1 += c.report.f1;
        ++n;
      }
      m.precision /= static_cast<double>(n);
      m.recall /= static_cast<double>(n);
      m.f1 /= static_cast<double>(n);
      row.metrics.push_back(m);
    }
    table.rows.push_back(std::move(row));
  }
  const std::string md = eval::render_report(table, eval::ReportFormat::Markdown);
  train::write_file_atomic((root / "report.md").string(), md);
  train::write_file_atomic((root / "report.json").string(), eval::render_report(table, eval::ReportFormat::Json));
  out << md;
  return kExitOk;
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
  std::string input, format = "markdown", out, encoder = "model";
  std::vector<std::string> evals;
};

int run_report(const ReportArgs& a, std::ostream& out) {
  eval::ReportFormat format;
  if (a.format == "markdown" || a.format == "md") format = eval::ReportFormat::Markdown;
  else if (a.format == "json") format = eval::ReportFormat::Json;
  else throw ConfigError("unknown report format: " + a.format);

  eval::ReportTable table;
  if (!a.input.empty()) {
    if (!a.evals.empty()) throw ConfigError("give either --input or --eval, not both");
    const std::string text = train::read_file(a.input);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(a.input + ": " + e.what(), 0);
    }
    table = eval::report_table_from_json(j);
  } else if (!a.evals.empty()) {
    table.encoders = {a.encoder};
    for (const auto& path : a.evals) {
      const auto r = eval::load_report(path);
      table.rows.push_back({r.model, {{r.precision, r.recall, r.f1}}});
    }
  } else {
    throw ConfigError("report needs --input or at least one --eval");
  }
  emit(a.out, eval::render_report(table, format), out);
  return kExitOk;
}

// ---- errors ----------------------------------------------------------------

struct ErrorsArgs {
  std::vector<std::string> reports;
  std::string categories, texts, out;
};

int run_errors(const ErrorsArgs& a, std::ostream& out, std::ostream& err) {
  if (a.reports.size() < 2) throw ConfigError("errors needs at least two --reports");
  std::vector<eval::EvalReport> reports;
  for (const auto& p : a.reports) reports.push_back(eval::load_report(p));
  std::map<std::string, std::string> texts, categories;
  if (!a.texts.empty()) texts = texts_of(data::read_annotations_file(a.texts));
  if (!a.categories.empty()) categories = eval::load_categories(a.categories);
  const auto cases = eval::analyze_errors(reports, texts, categories);
  emit(a.out, eval::errors_to_jsonl(cases), out);
  err << cases.size() << " samples misclassified by all " << reports.size() << " models\n";
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multitask classification with annotator-profile auxiliary tasks", "mtl"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* c_prep = app.add_subcommand("prepare", "Derive labels, build the vocabulary and write the split manifest");
  c_prep->add_option("--input", prep.input, "Annotation JSON Lines")->required();
  c_prep->add_option("--test", prep.test, "Separate test annotations (otherwise a stratified hold-out)");
  c_prep->add_option("--out", prep.out, "Output directory")->required();
  c_prep->add_option("--vocab-size", prep.vocab_size, "Vocabulary cap including reserved ids")->capture_default_str();
  c_prep->add_option("--max-len", prep.max_len, "Sequence length including the start token")->capture_default_str();
  c_prep->add_option("--val-frac", prep.val_frac, "Validation fraction")->capture_default_str();
  c_prep->add_option("--test-frac", prep.test_frac, "Test hold-out fraction without --test")->capture_default_str();
  c_prep->add_option("--seed", prep.seed, "Split seed")->capture_default_str();
  c_prep->add_flag("--no-case-fold", prep.no_case_fold, "Keep token case");

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Generate a synthetic multi-annotator corpus");
  c_syn->add_option("--n", syn.n, "Number of records")->capture_default_str();
  c_syn->add_option("--flip", syn.flip, "Flip probability, one value or six (F_18-22,...,M_46+)")->capture_default_str();
  c_syn->add_option("--seed", syn.seed, "Generator seed")->required();
  c_syn->add_option("--out", syn.out, "Output JSON Lines (default: stdout)");
  c_syn->add_option("--latent", syn.latent, "Also write {id, latent} JSON Lines here");
  c_syn->add_option("--filler-words", syn.themes.filler_words)->capture_default_str();
  c_syn->add_option("--cue-words", syn.themes.cue_words, "Cue words per class")->capture_default_str();
  c_syn->add_option("--min-tokens", syn.themes.min_tokens)->capture_default_str();
  c_syn->add_option("--max-tokens", syn.themes.max_tokens)->capture_default_str();
  c_syn->add_option("--cues-per-text", syn.themes.cues_per_text)->capture_default_str();
  c_syn->add_option("--cue-fidelity", syn.themes.cue_fidelity, "Chance a cue matches the latent label")
      ->capture_default_str();
  c_syn->add_option("--positive-rate", syn.themes.positive_rate)->capture_default_str();
  c_syn->add_option("--id-prefix", syn.id_prefix)->capture_default_str();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train one regime and evaluate it on the test split");
  c_train->add_option("--config", tr.config, "Experiment config JSON")->required();
  c_train->add_option("--regime", tr.regime, "Regime name (overrides the config)");
  c_train->add_option("--seed", tr.seed, "Training seed (overrides train.seed)");
  c_train->add_option("--out", tr.out, "Run directory")->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on an annotation file");
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  c_eval->add_option("--input", ev.input, "Annotation JSON Lines")->required();
  c_eval->add_option("--vocab", ev.vocab, "Vocabulary file (default: vocab.txt beside the checkpoint)");
  c_eval->add_option("--max-len", ev.max_len, "Sequence length (default: from the checkpoint)");
  c_eval->add_option("--case-fold", ev.case_fold, "true|false (default: from the checkpoint)")
      ->check(CLI::IsMember({"true", "false"}));
  c_eval->add_option("--model-id", ev.model_id, "Model identifier in the report");
  c_eval->add_option("--out", ev.out, "Report JSON (default: stdout)");

  GradcheckArgs gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference gradient check over random configurations");
  c_gc->add_option("--trials", gc.trials)->capture_default_str();
  c_gc->add_option("--seed", gc.seed)->capture_default_str();
  c_gc->add_option("--step", gc.h, "Central-difference step h")->capture_default_str();
  c_gc->add_option("--rtol", gc.rtol, "Maximum relative error")->capture_default_str();
  c_gc->add_option("--floor", gc.floor, "Relative-error denominator floor")->capture_default_str();

  MatrixArgs mx;
  auto* c_mx = app.add_subcommand("matrix", "Run regimes x seeds (x presets) and aggregate a report");
  c_mx->add_option("--config", mx.config, "Experiment config JSON")->required();
  c_mx->add_option("--regimes", mx.regimes, "Comma-separated regimes or 'all' (default: config regime, else all)");
  c_mx->add_option("--seeds", mx.seeds, "Comma-separated seeds (default: train.seed)");
  c_mx->add_option("--presets", mx.presets, "Comma-separated encoder presets (default: config preset)");
  c_mx->add_option("--jobs", mx.jobs, "Cells run in parallel")->capture_default_str();
  c_mx->add_option("--out", mx.out, "Output directory")->required();

  ReportArgs rp;
  auto* c_rp = app.add_subcommand("report", "Render a results table as markdown or JSON");
  c_rp->add_option("--input", rp.input, "Table JSON {encoders, rows}");
  c_rp->add_option("--eval", rp.evals, "Evaluation report JSON (one row each)");
  c_rp->add_option("--encoder", rp.encoder, "Column group name for --eval rows")->capture_default_str();
  c_rp->add_option("--format", rp.format, "markdown|json")->capture_default_str();
  c_rp->add_option("--out", rp.out, "Output file (default: stdout)");

  ErrorsArgs er;
  auto* c_er = app.add_subcommand("errors", "Samples misclassified by every model");
  c_er->add_option("--reports", er.reports, "Evaluation report JSON files (at least two)")->required();
  c_er->add_option("--categories", er.categories, "JSON Lines of {id, category}");
  c_er->add_option("--texts", er.texts, "Annotation JSON Lines supplying sample texts");
  c_er->add_option("--out", er.out, "Output JSON Lines (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_prep->parsed()) return run_prepare(prep, out);
    if (c_syn->parsed()) return run_synth(syn, out);
    if (c_train->parsed()) return run_train(tr, out);
    if (c_eval->parsed()) return run_evaluate(ev, out, err);
    if (c_gc->parsed()) return run_gradcheck(gc, out, err);
    if (c_mx->parsed()) return run_matrix(mx, out, err);
    if (c_rp->parsed()) return run_report(rp, out);
    if (c_er->parsed()) return run_errors(er, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_input_error() ? kExitInput : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace mtl::cli
