#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>
#include <vector>

#include "mtl/data/dataset.hpp"
#include "mtl/data/synthetic.hpp"
#include "mtl/error.hpp"
#include "mtl/eval/metrics.hpp"
#include "mtl/model/model.hpp"
#include "mtl/train/checkpoint.hpp"
#include "mtl/train/experiment.hpp"
#include "mtl/train/regime.hpp"
#include "mtl/train/trainer.hpp"

using namespace mtl;
using namespace mtl::train;
using nlohmann::json;

namespace {

data::DatasetBundle synthetic_bundle(std::size_t n, std::array<double, 6> flip, std::uint64_t seed = 31) {
  data::SyntheticSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.flip = flip;
  spec.themes.filler_words = 40;
  spec.themes.max_tokens = 8;
  data::DataOptions opt;
  opt.max_len = 14;
  opt.val_fraction = 0.15;
  return data::prepare_bundle(data::records_of(data::generate_synthetic(spec)), std::nullopt, opt);
}

const data::DatasetBundle& noisy_bundle() {
  static const auto b = synthetic_bundle(200, {0.05, 0.1, 0.15, 0.05, 0.1, 0.15});
  return b;
}

encoder::EncoderPreset tiny_preset(const data::DatasetBundle& b) {
  auto p = encoder::preset("base-sim");
  p.config.vocab_size = b.vocab.size();
  p.config.max_len = b.max_len;
  p.config.d_model = 8;
  p.config.n_heads = 2;
  p.config.n_layers = 1;
  p.config.d_ff = 16;
  return p;
}

TrainSettings fast_settings(std::size_t epochs = 2) {
  TrainSettings s;
  s.epochs = epochs;
  s.lr = 1e-3;
  s.batch_size = 32;
  s.seed = 5;
  return s;
}

RunRecord run(Regime r, const RunOptions& opt, const data::DatasetBundle& b = noisy_bundle()) {
  return run_regime(expand_regime(r, opt.settings), b, tiny_preset(b), opt);
}

std::vector<TaskId> hard_plus(std::initializer_list<TaskId> extra) {
  std::vector<TaskId> v{TaskId::Hard};
  v.insert(v.end(), extra);
  return v;
}

const std::vector<TaskId> kSix = hard_plus({TaskId::F18_22, TaskId::F23_45, TaskId::F46Plus, TaskId::M18_22,
                                            TaskId::M23_45, TaskId::M46Plus});
const std::vector<TaskId> kTwo = hard_plus({TaskId::FAgg, TaskId::MAgg});
const std::vector<TaskId> kHard{TaskId::Hard};

struct Row {
  Regime regime;
  model::HeadSet heads;
  std::vector<std::tuple<std::vector<TaskId>, bool, std::vector<TaskId>>> stages;
};

}  // namespace

TEST_SUITE("regimes") {
  TEST_CASE("expansion matches the regime table") {
    const std::vector<Row> table{
        {Regime::StlFullFt, model::HeadSet::HardOnly, {{kHard, true, kHard}}},
        {Regime::StlFreeze, model::HeadSet::HardOnly, {{kHard, false, kHard}}},
        {Regime::MtlSixAux, model::HeadSet::HardSix, {{kSix, true, kSix}}},
        {Regime::MtlTwoAux, model::HeadSet::HardTwo, {{kTwo, true, kTwo}}},
        {Regime::MtlSixFullFt, model::HeadSet::HardSix, {{kSix, true, kSix}, {kHard, true, kHard}}},
        {Regime::MtlSixFreeze, model::HeadSet::HardSix, {{kSix, true, kSix}, {kHard, false, kHard}}},
        {Regime::MtlTwoFullFt, model::HeadSet::HardTwo, {{kTwo, true, kTwo}, {kHard, true, kHard}}},
        {Regime::MtlTwoFreeze, model::HeadSet::HardTwo, {{kTwo, true, kTwo}, {kHard, false, kHard}}},
    };
    CHECK(all_regimes().size() == 8);
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto& row = table[i];
      CHECK(all_regimes()[i] == row.regime);
      auto spec = expand_regime(regime_name(row.regime));
      CAPTURE(regime_name(row.regime));
      CHECK(spec.regime == row.regime);
      CHECK(spec.head_set == row.heads);
      REQUIRE(spec.stages.size() == row.stages.size());
      for (std::size_t s = 0; s < spec.stages.size(); ++s) {
        const auto& [active, enc, heads] = row.stages[s];
        CHECK(spec.stages[s].active_tasks == active);
        CHECK(spec.stages[s].encoder_trainable == enc);
        CHECK(spec.stages[s].trainable_heads == heads);
        CHECK(spec.stages[s].epochs == 10);
        CHECK(spec.stages[s].lr == 5e-5);
        CHECK(spec.stages[s].batch_size == 32);
      }
    }
  }
  TEST_CASE("names") {
    const std::vector<std::string> names{"STL-full-FT",     "STL-freeze",     "MTL-six-aux",     "MTL-two-aux",
                                         "MTL-six-full-FT", "MTL-six-freeze", "MTL-two-full-FT", "MTL-two-freeze"};
    for (std::size_t i = 0; i < names.size(); ++i) {
      CHECK(regime_name(all_regimes()[i]) == names[i]);
      CHECK(parse_regime(names[i]) == all_regimes()[i]);
    }
    CHECK(parse_regime("mtl-two-aux") == Regime::MtlTwoAux);
    try {
      parse_regime("MTL-three-aux");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      for (const auto& n : names) CHECK(msg.find(n) != std::string::npos);
    }
  }
  TEST_CASE("settings and freeze_stage1") {
    TrainSettings s;
    s.epochs = 3;
    s.lr = 1e-3;
    s.batch_size = 7;
    s.freeze_stage1 = true;
    auto spec = expand_regime(Regime::MtlTwoFreeze, s);
    CHECK_FALSE(spec.stages[0].encoder_trainable);
    CHECK_FALSE(spec.stages[1].encoder_trainable);
    CHECK(spec.stages[0].epochs == 3);
    CHECK(spec.stages[1].batch_size == 7);
    CHECK(spec.stages[0].seed != spec.stages[1].seed);
    CHECK(expand_regime(Regime::MtlTwoFullFt, s).stages[0].encoder_trainable);
  }
}

TEST_SUITE("train_stage") {
  TEST_CASE("separable data: loss falls") {
    const auto b = synthetic_bundle(200, {}, 7);
    auto m = model::build_model(tiny_preset(b).config, model::HeadSet::HardOnly, 3);
    auto stage = expand_regime(Regime::StlFullFt, fast_settings(3)).stages[0];
    std::mt19937_64 rng(1);
    auto r = train_stage(m, stage, b.train, b.validation, rng);
    CHECK(r.train_loss.size() == 3);
    CHECK(r.val_f1.size() == 3);
    CHECK(r.train_loss.back() < r.initial_train_loss);
    CHECK(r.best_epoch >= 1);
    CHECK(r.best_val_f1 == r.val_f1[r.best_epoch - 1]);
    for (std::size_t e = 0; e < r.best_epoch - 1; ++e) CHECK(r.val_f1[e] < r.best_val_f1);
    for (std::size_t e = r.best_epoch; e < 3; ++e) CHECK(r.val_f1[e] <= r.best_val_f1);
    CHECK(m.params.bitwise_equal(r.best_params));
  }
  TEST_CASE("frozen encoder stage leaves the encoder bitwise unchanged") {
    auto m = model::build_model(tiny_preset(noisy_bundle()).config, model::HeadSet::HardOnly, 3);
    const auto before = m.params.clone();
    auto stage = expand_regime(Regime::StlFreeze, fast_settings(2)).stages[0];
    std::mt19937_64 rng(2);
    train_stage(m, stage, noisy_bundle().train, noisy_bundle().validation, rng);
    CHECK(m.params.bitwise_equal_prefix(before, "encoder."));
    CHECK_FALSE(m.params.bitwise_equal_prefix(before, "head.hard."));
  }
  TEST_CASE("invalid stages") {
    auto m = model::build_model(tiny_preset(noisy_bundle()).config, model::HeadSet::HardOnly, 3);
    auto stage = expand_regime(Regime::StlFullFt, fast_settings(1)).stages[0];
    std::mt19937_64 rng(3);
    CHECK_THROWS_AS(train_stage(m, stage, {}, noisy_bundle().validation, rng), TrainingError);
    CHECK_THROWS_AS(train_stage(m, stage, noisy_bundle().train, {}, rng), TrainingError);
    auto mtl = stage;
    mtl.active_tasks = kTwo;
    CHECK_THROWS_AS(train_stage(m, mtl, noisy_bundle().train, noisy_bundle().validation, rng), ConfigError);
    auto nothing = stage;
    nothing.encoder_trainable = false;
    nothing.trainable_heads.clear();
    CHECK_THROWS_AS(train_stage(m, nothing, noisy_bundle().train, noisy_bundle().validation, rng), ConfigError);
  }
  TEST_CASE("an active task with no labels anywhere is a training error") {
    auto train_set = noisy_bundle().train;
    for (auto& e : train_set) e.labels.f_agg.reset();
    auto m = model::build_model(tiny_preset(noisy_bundle()).config, model::HeadSet::HardTwo, 3);
    auto stage = expand_regime(Regime::MtlTwoAux, fast_settings(1)).stages[0];
    std::mt19937_64 rng(4);
    CHECK_THROWS_AS(train_stage(m, stage, train_set, noisy_bundle().validation, rng), TrainingError);
  }
}

TEST_SUITE("run_regime") {
  TEST_CASE("every regime: stage count, freeze soundness, nested continuity") {
    RunOptions opt;
    opt.settings = fast_settings(2);
    for (Regime r : all_regimes()) {
      CAPTURE(regime_name(r));
      auto rec = run(r, opt);
      REQUIRE(rec.stages.size() == rec.spec.stages.size());
      CHECK(rec.test_report.samples.size() == noisy_bundle().test.size());
      CHECK(rec.model.params.bitwise_equal(rec.stages.back().best_params));
      if (r == Regime::StlFreeze) CHECK(rec.model.params.bitwise_equal_prefix(rec.initial_params, "encoder."));
      if (r == Regime::StlFullFt) CHECK_FALSE(rec.model.params.bitwise_equal_prefix(rec.initial_params, "encoder."));
      if (rec.stages.size() == 2) {
        const auto& s1 = rec.stages[0].best_params;
        // Stage 2 starts at stage 1's best, evaluated with the same parameters.
        CHECK(rec.stages[1].initial_val_f1 == rec.stages[0].best_val_f1);
        if (!rec.spec.stages[1].encoder_trainable) {
          CHECK(rec.model.params.bitwise_equal_prefix(s1, "encoder."));
        }
        // Auxiliary heads are inactive in stage 2.
        for (TaskId t : rec.model.tasks()) {
          if (t != TaskId::Hard) CHECK(rec.model.params.bitwise_equal_prefix(s1, "head." + std::string(task_name(t)) + "."));
        }
      }
    }
  }
  TEST_CASE("identical inputs reproduce the checkpoint bit for bit") {
    RunOptions opt;
    opt.settings = fast_settings(2);
    auto a = run(Regime::MtlSixFullFt, opt), b = run(Regime::MtlSixFullFt, opt);
    CHECK(serialize_checkpoint(a.checkpoint) == serialize_checkpoint(b.checkpoint));
    CHECK(a.stages[0].train_loss == b.stages[0].train_loss);
    CHECK(a.stages[1].val_f1 == b.stages[1].val_f1);
    CHECK(eval::report_to_json(a.test_report).dump() == eval::report_to_json(b.test_report).dump());
    opt.settings.seed = 6;
    CHECK(serialize_checkpoint(run(Regime::MtlSixFullFt, opt).checkpoint) != serialize_checkpoint(a.checkpoint));
  }
  TEST_CASE("zero auxiliary weights reproduce the single-task trajectory") {
    RunOptions stl;
    stl.settings = fast_settings(3);
    RunOptions mtl = stl;
    for (TaskId t : kProfileTasks) mtl.aux_weights[t] = 0.0;
    auto a = run(Regime::StlFullFt, stl), b = run(Regime::MtlSixAux, mtl);
    CHECK(a.stages[0].train_loss == b.stages[0].train_loss);
    CHECK(a.stages[0].val_f1 == b.stages[0].val_f1);
    CHECK(a.model.params.bitwise_equal_prefix(b.model.params, "encoder."));
    CHECK(a.model.params.bitwise_equal_prefix(b.model.params, "head.hard."));
  }
  TEST_CASE("stages JSON") {
    RunOptions opt;
    opt.settings = fast_settings(1);
    auto j = stages_to_json(run(Regime::MtlTwoFreeze, opt));
    CHECK(j["regime"] == "MTL-two-freeze");
    CHECK(j["head_set"] == "hard+two");
    REQUIRE(j["stages"].size() == 2);
    CHECK(j["stages"][1]["encoder_trainable"] == false);
    CHECK(j["stages"][0]["active_tasks"].size() == 3);
    CHECK(j["stages"][1]["train_loss"].size() == 1);
  }
}

TEST_SUITE("checkpoint") {
  const Checkpoint& sample_checkpoint() {
    static const Checkpoint c = [] {
      RunOptions opt;
      opt.settings = fast_settings(1);
      return run(Regime::MtlTwoAux, opt).checkpoint;
    }();
    return c;
  }

  // Byte offset of the first parameter's first dimension.
  std::size_t first_dim_offset(const std::string& bytes) {
    std::uint64_t len = 0;
    std::size_t pos = 8;
    std::memcpy(&len, bytes.data() + pos, 8);
    pos += 8 + len + 8;
    std::memcpy(&len, bytes.data() + pos, 8);
    return pos + 8 + len + 1;
  }

  TEST_CASE("save, load and save again are bitwise stable") {
    const auto path = (std::filesystem::temp_directory_path() / "mtl_ckpt_test.mtlc").string();
    save_checkpoint(sample_checkpoint(), path);
    auto loaded = load_checkpoint(path);
    CHECK(loaded.params.bitwise_equal(sample_checkpoint().params));
    CHECK(loaded.metadata == sample_checkpoint().metadata);
    CHECK(serialize_checkpoint(loaded) == read_file(path));
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
    auto m = model_from_checkpoint(loaded);
    CHECK(m.heads.size() == 3);
    std::filesystem::remove(path);
  }
  TEST_CASE("header starts with magic and version") {
    const auto bytes = serialize_checkpoint(sample_checkpoint());
    CHECK(bytes.substr(0, 4) == "MTLC");
    std::uint32_t version = 0;
    std::memcpy(&version, bytes.data() + 4, 4);
    CHECK(version == 1);
  }
  TEST_CASE("metadata records the run") {
    const auto& md = sample_checkpoint().metadata;
    CHECK(md["regime"] == "MTL-two-aux");
    CHECK(md["seed"] == 5);
    CHECK(md.contains("stage_index"));
    CHECK(md.contains("epoch"));
    CHECK(md.contains("final_losses"));
  }
  TEST_CASE("corrupted magic") {
    auto bytes = serialize_checkpoint(sample_checkpoint());
    bytes[0] = 'X';
    try {
      deserialize_checkpoint(bytes);
      FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
      CHECK(e.kind() == CheckpointError::Kind::NotACheckpoint);
      CHECK(std::string(e.what()).find("not a checkpoint") != std::string::npos);
    }
  }
  TEST_CASE("version mismatch") {
    auto bytes = serialize_checkpoint(sample_checkpoint());
    bytes[4] = 2;
    try {
      deserialize_checkpoint(bytes);
      FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
      CHECK(e.kind() == CheckpointError::Kind::VersionMismatch);
    }
  }
  TEST_CASE("every truncation is detected") {
    const auto bytes = serialize_checkpoint(sample_checkpoint());
    for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
      try {
        deserialize_checkpoint(std::string_view(bytes).substr(0, cut));
        FAIL("expected CheckpointError");
      } catch (const CheckpointError& e) {
        CHECK(e.kind() != CheckpointError::Kind::ShapeMismatch);
      }
    }
  }
  TEST_CASE("edited dimension names the parameter") {
    auto bytes = serialize_checkpoint(sample_checkpoint());
    const std::size_t at = first_dim_offset(bytes);
    std::uint64_t dim = 0;
    std::memcpy(&dim, bytes.data() + at, 8);
    CHECK(dim == sample_checkpoint().params.entries()[0].tensor.shape()[0]);
    dim += 1;
    std::memcpy(bytes.data() + at, &dim, 8);
    try {
      deserialize_checkpoint(bytes);
      FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
      CHECK(e.kind() == CheckpointError::Kind::ShapeMismatch);
      CHECK(std::string(e.what()).find("encoder.tok_emb") != std::string::npos);
    }
  }
}

TEST_SUITE("experiment config") {
  json base() {
    return json::parse(R"({"regime":"MTL-two-aux","train":{"seed":3,"lr":0.001,"epochs":4},
                           "data":{"input":"ann.jsonl","max_len":20}})");
  }

  TEST_CASE("minimal config parses with paths resolved") {
    auto c = parse_experiment_config(base(), "/data/exp");
    CHECK(c.regime == Regime::MtlTwoAux);
    CHECK(c.train.seed == 3);
    CHECK(c.train.epochs == 4);
    CHECK(c.train.batch_size == 32);
    CHECK(c.input == "/data/exp/ann.jsonl");
    CHECK(c.data.max_len == 20);
    CHECK(c.data.seed == 13);
    CHECK(c.preset == "base-sim");
  }
  TEST_CASE("seed is mandatory and unknown keys are rejected") {
    auto j = base();
    j["train"].erase("seed");
    CHECK_THROWS_AS(parse_experiment_config(j, "."), ConfigError);
    j = base();
    j["train"]["momentum"] = 0.9;
    CHECK_THROWS_AS(parse_experiment_config(j, "."), ConfigError);
    j = base();
    j["regime"] = "MTL-nine-aux";
    CHECK_THROWS_AS(parse_experiment_config(j, "."), ConfigError);
    j = base();
    j["data"].erase("input");
    CHECK_THROWS_AS(parse_experiment_config(j, "."), ConfigError);
  }
  TEST_CASE("auxiliary weights") {
    auto j = base();
    j["train"]["aux_weights"] = 0.5;
    auto c = parse_experiment_config(j, ".");
    CHECK(c.aux_weights.size() == 8);
    CHECK(c.aux_weights.at(TaskId::MAgg) == 0.5);
    j["train"]["aux_weights"] = json{{"F_agg", 2.0}};
    c = parse_experiment_config(j, ".");
    CHECK(c.aux_weights.size() == 1);
    j["train"]["aux_weights"] = json{{"hard", 2.0}};
    CHECK_THROWS_AS(parse_experiment_config(j, "."), ConfigError);
    j["train"]["aux_weights"] = -1.0;
    CHECK_THROWS_AS(parse_experiment_config(j, "."), ConfigError);
  }
  TEST_CASE("missing input file is reported at start") {
    auto c = parse_experiment_config(base(), "/nonexistent-dir");
    CHECK_THROWS_AS(check_paths(c), ConfigError);
  }
  TEST_CASE("preset resolution follows the bundle") {
    auto c = parse_experiment_config(base(), ".");
    auto p = resolve_preset(c, noisy_bundle());
    CHECK(p.config.vocab_size == noisy_bundle().vocab.size());
    CHECK(p.config.max_len == noisy_bundle().max_len);
    c.encoder = {{"vocab_size", 4}};
    CHECK_THROWS_AS(resolve_preset(c, noisy_bundle()), ConfigError);
  }
}
