#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "mtl/cli/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using mtl::cli::dispatch;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::ifstream in(p);
  std::vector<json> rows;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) rows.push_back(json::parse(line));
  }
  return rows;
}

// Scratch directory removed at scope exit.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("mtl_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& leaf) const { return (dir / leaf).string(); }
};

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

// Tiny encoder so end-to-end runs take well under a second.
std::string tiny_config(const std::string& regime = "STL-full-FT") {
  return R"({"regime":")" + regime + R"(","encoder":{"d_model":8,"n_heads":2,"n_layers":1,"d_ff":8},)"
         R"("train":{"seed":3,"lr":0.001,"epochs":2},)"
         R"("data":{"input":"train.jsonl","test_input":"test.jsonl","max_len":12}})";
}

void make_corpus(const Scratch& s) {
  REQUIRE(run({"synth", "--n", "150", "--seed", "1", "--flip", "0.05,0.1,0.15,0.05,0.1,0.15", "--max-tokens", "8",
               "--out", s / "train.jsonl"})
              .code == 0);
  REQUIRE(run({"synth", "--n", "60", "--seed", "2", "--flip", "0.1", "--max-tokens", "8", "--id-prefix", "t", "--out",
               s / "test.jsonl"})
              .code == 0);
}

}  // namespace

TEST_SUITE("exit codes") {
  TEST_CASE("unknown subcommand is a usage error") {
    auto r = run({"frobnicate"});
    CHECK(r.code == 1);
    CHECK_FALSE(r.err.empty());
  }
  TEST_CASE("no subcommand is a usage error") { CHECK(run({}).code == 1); }
  TEST_CASE("help succeeds") {
    auto r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("gradcheck") != std::string::npos);
    CHECK(run({"train", "--help"}).code == 0);
  }
  TEST_CASE("missing required option is a usage error") { CHECK(run({"train", "--out", "x"}).code == 1); }
  TEST_CASE("bad config is a data/config error") {
    Scratch s("badcfg");
    write(s / "c.json", R"({"train":{"lr":0.001},"data":{"input":"a.jsonl"}})");
    auto r = run({"train", "--config", s / "c.json", "--out", s / "run"});
    CHECK(r.code == 2);
    CHECK(r.err.find("seed") != std::string::npos);
    write(s / "c.json", "{not json");
    CHECK(run({"train", "--config", s / "c.json", "--out", s / "run"}).code == 2);
  }
  TEST_CASE("missing input file is reported before work starts") {
    Scratch s("nofile");
    write(s / "c.json", tiny_config());
    auto r = run({"train", "--config", s / "c.json", "--out", s / "run"});
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(s / "run"));
  }
  TEST_CASE("unknown regime") {
    Scratch s("regime");
    make_corpus(s);
    write(s / "c.json", tiny_config());
    auto r = run({"train", "--config", s / "c.json", "--regime", "MTL-ten-aux", "--out", s / "run"});
    CHECK(r.code == 2);
    CHECK(r.err.find("MTL-two-aux") != std::string::npos);
  }
  TEST_CASE("malformed annotations are input errors") {
    Scratch s("malformed");
    write(s / "a.jsonl", "{\"id\":\"x\",\"text\":\"t\",\"annotations\":[{\"gender\":\"Q\",\"age\":\"46+\",\"label\":1}]}\n");
    auto r = run({"prepare", "--input", s / "a.jsonl", "--out", s / "p"});
    CHECK(r.code == 2);
    CHECK(r.err.find("gender") != std::string::npos);
  }
}

TEST_SUITE("subcommands") {
  TEST_CASE("synth is deterministic and validates flips") {
    Scratch s("synth");
    CHECK(run({"synth", "--n", "20", "--seed", "4", "--out", s / "a.jsonl"}).code == 0);
    CHECK(run({"synth", "--n", "20", "--seed", "4", "--out", s / "b.jsonl"}).code == 0);
    CHECK(slurp(s / "a.jsonl") == slurp(s / "b.jsonl"));
    CHECK(read_jsonl(s / "a.jsonl").size() == 20);
    CHECK(run({"synth", "--n", "5", "--seed", "4", "--flip", "0.6"}).code == 2);
    CHECK(run({"synth", "--n", "5", "--seed", "4", "--flip", "0.1,0.2"}).code != 0);
    CHECK(run({"synth", "--n", "5"}).code == 1);
  }
  TEST_CASE("prepare writes derived labels, vocabulary and split manifest") {
    Scratch s("prepare");
    std::string lines;
    // Four 3-3 ties among 40 records.
    for (int i = 0; i < 40; ++i) {
      const int y = i % 2;
      const bool tie = i < 4;
      lines += R"({"id":"r)" + std::to_string(i) + R"(","text":"w)" + std::to_string(i % 7) + R"( common","annotations":[)";
      for (int k = 0; k < 6; ++k) {
        const char* g = k < 3 ? "F" : "M";
        const char* a = k % 3 == 0 ? "18-22" : k % 3 == 1 ? "23-45" : "46+";
        const int label = tie ? (k < 3 ? 1 : 0) : y;
        lines += std::string(k ? "," : "") + R"({"gender":")" + g + R"(","age":")" + a + R"(","label":)" +
                 std::to_string(label) + "}";
      }
      lines += "]}\n";
    }
    write(s / "a.jsonl", lines);
    auto r = run({"prepare", "--input", s / "a.jsonl", "--out", s / "p", "--vocab-size", "50", "--max-len", "8",
                  "--val-frac", "0.1", "--test-frac", "0.2", "--seed", "13"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("excluded 4 tied samples") != std::string::npos);
    auto derived = read_jsonl(s.dir / "p" / "derived.jsonl");
    CHECK(derived.size() == 40);
    CHECK(derived[0]["hard"].is_null());
    CHECK(derived[0]["F_agg"] == 1);
    CHECK(derived[5]["hard"] == 1);
    const auto vocab = slurp(s.dir / "p" / "vocab.txt");
    CHECK(vocab.rfind("<pad>\n<cls>\n<unk>\ncommon\n", 0) == 0);
    auto split = json::parse(slurp(s.dir / "p" / "split.json"));
    CHECK(split["train"].size() + split["validation"].size() + split["test"].size() == 36);
  }
  TEST_CASE("train, evaluate, report and errors end to end") {
    Scratch s("e2e");
    make_corpus(s);
    write(s / "c.json", tiny_config());
    auto t1 = run({"train", "--config", s / "c.json", "--out", s / "run1"});
    REQUIRE_MESSAGE(t1.code == 0, t1.err);
    for (const char* f : {"checkpoint.mtlc", "stages.json", "eval.json", "vocab.txt", "report.md"}) {
      CHECK(fs::exists(s.dir / "run1" / f));
    }
    auto ev = json::parse(slurp(s.dir / "run1" / "eval.json"));
    CHECK(ev["samples"].size() == 60);
    CHECK(ev["model"] == "STL-full-FT/base-sim");

    // Same command again: byte-identical artifacts.
    REQUIRE(run({"train", "--config", s / "c.json", "--out", s / "run1b"}).code == 0);
    CHECK(slurp(s.dir / "run1" / "checkpoint.mtlc") == slurp(s.dir / "run1b" / "checkpoint.mtlc"));
    CHECK(slurp(s.dir / "run1" / "eval.json") == slurp(s.dir / "run1b" / "eval.json"));

    // Re-evaluating the checkpoint reproduces the stored report.
    auto e = run({"evaluate", "--checkpoint", (s.dir / "run1" / "checkpoint.mtlc").string(), "--input",
                  s / "test.jsonl", "--model-id", "STL-full-FT/base-sim", "--out", s / "re.json"});
    REQUIRE_MESSAGE(e.code == 0, e.err);
    CHECK(json::parse(slurp(s / "re.json")) == ev);

    REQUIRE(run({"train", "--config", s / "c.json", "--regime", "MTL-two-aux", "--out", s / "run2"}).code == 0);
    auto rp = run({"report", "--eval", (s.dir / "run1" / "eval.json").string(), "--eval",
                   (s.dir / "run2" / "eval.json").string(), "--encoder", "base-sim"});
    REQUIRE(rp.code == 0);
    CHECK(rp.out.find("| STL-full-FT/base-sim |") != std::string::npos);
    CHECK(rp.out.find("| MTL-two-aux/base-sim |") != std::string::npos);

    write(s / "cat.jsonl", "");
    auto er = run({"errors", "--reports", (s.dir / "run1" / "eval.json").string(), (s.dir / "run2" / "eval.json").string(),
                   "--texts", s / "test.jsonl", "--out", s / "err.jsonl"});
    REQUIRE(er.code == 0);
    for (const auto& row : read_jsonl(s / "err.jsonl")) {
      CHECK(row["text"].is_string());
      CHECK(row["predictions"]["STL-full-FT/base-sim"] != row["hard"]);
      CHECK(row["predictions"]["MTL-two-aux/base-sim"] != row["hard"]);
    }
    CHECK(run({"errors", "--reports", (s.dir / "run1" / "eval.json").string()}).code != 0);
  }
  TEST_CASE("report renders a table file") {
    auto r = run({"report", "--input", std::string(MTL_FIXTURE_DIR) + "/table1.json"});
    REQUIRE(r.code == 0);
    std::ifstream g(std::string(MTL_FIXTURE_DIR) + "/table1.golden.md");
    std::ostringstream golden;
    golden << g.rdbuf();
    CHECK(r.out == golden.str());
    CHECK(run({"report", "--input", std::string(MTL_FIXTURE_DIR) + "/table1.json", "--format", "xml"}).code != 0);
  }
  TEST_CASE("matrix averages seeds and is reproducible") {
    Scratch s("matrix");
    make_corpus(s);
    write(s / "c.json", tiny_config());
    auto a = run({"matrix", "--config", s / "c.json", "--regimes", "STL-full-FT,MTL-two-aux", "--seeds", "1,2,3",
                  "--jobs", "2", "--out", s / "m1"});
    REQUIRE_MESSAGE(a.code == 0, a.err);
    auto results = json::parse(slurp(s.dir / "m1" / "results.json"));
    CHECK(results.size() == 6);
    double sum = 0.0;
    for (const auto& cell : results) {
      if (cell["regime"] == "MTL-two-aux") sum += cell["f1"].get<double>();
    }
    auto report = json::parse(slurp(s.dir / "m1" / "report.json"));
    bool found = false;
    for (const auto& row : report["rows"]) {
      if (row["architecture"] == "MTL-two-aux") {
        found = true;
        CHECK(std::abs(row["metrics"]["base-sim"]["f1"].get<double>() - sum / 3.0) <= 1e-12);
      }
    }
    CHECK(found);
    auto b = run({"matrix", "--config", s / "c.json", "--regimes", "STL-full-FT,MTL-two-aux", "--seeds", "1,2,3",
                  "--jobs", "1", "--out", s / "m2"});
    REQUIRE(b.code == 0);
    CHECK(slurp(s.dir / "m1" / "report.md") == slurp(s.dir / "m2" / "report.md"));
    CHECK(slurp(s.dir / "m1" / "results.json") == slurp(s.dir / "m2" / "results.json"));
  }
  TEST_CASE("gradcheck exit status follows the verdict") {
    CHECK(run({"gradcheck", "--trials", "3", "--seed", "7"}).code == 0);
    auto r = run({"gradcheck", "--trials", "1", "--rtol", "1e-20"});
    CHECK(r.code == 3);
  }
}
