#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mtl/encoder/encoder.hpp"
#include "mtl/error.hpp"
#include "mtl/numerics/adam.hpp"
#include "mtl/numerics/ops.hpp"

using namespace mtl;
using namespace mtl::encoder;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.vocab_size = 30;
  c.d_model = 16;
  c.n_layers = 2;
  c.n_heads = 4;
  c.d_ff = 24;
  c.max_len = 12;
  c.init_std = 0.3;
  return c;
}

std::vector<std::uint32_t> random_sequence(std::mt19937_64& rng, std::size_t len, std::size_t vocab) {
  std::uniform_int_distribution<std::uint32_t> tok(3, static_cast<std::uint32_t>(vocab - 1));
  std::vector<std::uint32_t> s{1};
  while (s.size() < len) s.push_back(tok(rng));
  return s;
}

double max_abs_diff(const Tensor& a, std::size_t ra, const Tensor& b, std::size_t rb) {
  double m = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) m = std::max(m, std::abs(a.at(ra, c) - b.at(rb, c)));
  return m;
}

// Loss touching every output coordinate with distinct weights.
Tensor probe_loss(const Tensor& pooled, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> w(pooled.numel());
  for (auto& v : w) v = d(rng);
  return ops::sum(ops::mul(pooled, Tensor(pooled.shape(), std::move(w))));
}

}  // namespace

TEST_SUITE("encoder init") {
  TEST_CASE("same config and seed give bitwise-identical stores") {
    auto a = init_encoder(small_config(), 5), b = init_encoder(small_config(), 5);
    CHECK(a.bitwise_equal(b));
    CHECK_FALSE(a.bitwise_equal(init_encoder(small_config(), 6)));
  }
  TEST_CASE("layer-norm gammas are exactly one, betas and biases zero") {
    auto s = init_encoder(small_config(), 1);
    std::size_t gammas = 0;
    for (const auto& e : s.entries()) {
      const bool gamma = e.name.ends_with(".gamma");
      const bool zero = e.name.ends_with(".beta") || e.name.find(".b") != std::string::npos;
      if (gamma) ++gammas;
      for (double v : e.tensor.data()) {
        if (gamma) CHECK(v == 1.0);
        else if (zero) CHECK(v == 0.0);
      }
    }
    CHECK(gammas == 2 * small_config().n_layers + 1);
  }
  TEST_CASE("token table has shape (vocab, d_model)") {
    auto c = small_config();
    c.vocab_size = 100;
    c.d_model = 32;
    c.n_heads = 4;
    auto s = init_encoder(c, 0);
    CHECK(s.get("encoder.tok_emb").shape() == Shape{100, 32});
  }
  TEST_CASE("layout matches the initialized store") {
    auto c = small_config();
    auto layout = parameter_layout(c);
    auto s = init_encoder(c, 0);
    REQUIRE(layout.size() == s.size());
    for (std::size_t i = 0; i < layout.size(); ++i) {
      CHECK(layout[i].first == s.entries()[i].name);
      CHECK(layout[i].second == s.entries()[i].tensor.shape());
      CHECK(layout[i].first.starts_with("encoder."));
    }
  }
  TEST_CASE("invalid configs are rejected") {
    auto c = small_config();
    c.n_heads = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.dropout = 1.0;
    CHECK_THROWS_AS(init_encoder(c, 0), ConfigError);
    c = small_config();
    c.vocab_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(preset("large"), ConfigError);
    CHECK_THROWS_AS(parse_pooling("max"), ConfigError);
  }
  TEST_CASE("presets share the architecture and differ in salt") {
    auto a = preset("base-sim"), b = preset("tweet-sim");
    CHECK(a.config == b.config);
    CHECK(a.seed_salt != b.seed_salt);
    CHECK(a.config.d_model == 64);
    CHECK(a.config.n_layers == 2);
    CHECK(a.config.n_heads == 4);
    CHECK(a.config.d_ff == 256);
    CHECK(a.config.max_len == 64);
    CHECK(a.config.vocab_size == 8000);
    CHECK(a.config.pooling == Pooling::FirstToken);
  }
}

TEST_SUITE("encoder forward") {
  TEST_CASE("output is (batch, d_model) regardless of lengths") {
    auto c = small_config();
    auto p = init_encoder(c, 2);
    std::mt19937_64 rng(1);
    for (std::size_t b : {1u, 3u, 5u}) {
      std::vector<std::vector<std::uint32_t>> seqs;
      for (std::size_t i = 0; i < b; ++i) seqs.push_back(random_sequence(rng, 2 + i * 2, c.vocab_size));
      auto y = encode_forward(p, c, TokenBatch::from_sequences(seqs));
      CHECK(y.shape() == Shape{b, c.d_model});
    }
  }
  TEST_CASE("duplicate sequences give identical rows") {
    auto c = small_config();
    auto p = init_encoder(c, 3);
    std::mt19937_64 rng(2);
    auto s = random_sequence(rng, 7, c.vocab_size);
    auto y = encode_forward(p, c, TokenBatch::from_sequences({s, random_sequence(rng, 4, c.vocab_size), s}));
    CHECK(max_abs_diff(y, 0, y, 2) <= 1e-12);
  }
  TEST_CASE("batch rows are independent of their neighbours") {
    auto c = small_config();
    auto p = init_encoder(c, 4);
    std::mt19937_64 rng(3);
    auto s = random_sequence(rng, 6, c.vocab_size);
    auto alone = encode_forward(p, c, TokenBatch::from_sequences({s}));
    auto mixed = encode_forward(p, c, TokenBatch::from_sequences({random_sequence(rng, 10, c.vocab_size), s}));
    CHECK(max_abs_diff(alone, 0, mixed, 1) <= 1e-9);
  }
  TEST_CASE("appending pad tokens never changes the pooled output") {
    std::mt19937_64 rng(4);
    for (Pooling pooling : {Pooling::FirstToken, Pooling::Mean}) {
      auto c = small_config();
      c.pooling = pooling;
      auto p = init_encoder(c, 5);
      for (int trial = 0; trial < 10; ++trial) {
        auto s = random_sequence(rng, 2 + trial % 8, c.vocab_size);
        auto base = encode_forward(p, c, TokenBatch::from_sequences({s}));
        auto padded = s;
        padded.resize(c.max_len, 0);
        TokenBatch tb = TokenBatch::from_sequences({padded});
        std::fill(tb.mask.begin() + static_cast<std::ptrdiff_t>(s.size()), tb.mask.end(), 0);
        CHECK(max_abs_diff(base, 0, encode_forward(p, c, tb), 0) <= 1e-9);
      }
    }
  }
  TEST_CASE("without positions, mean pooling is permutation invariant") {
    auto c = small_config();
    c.use_positional = false;
    c.pooling = Pooling::Mean;
    auto p = init_encoder(c, 6);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      auto s = random_sequence(rng, 8, c.vocab_size);
      auto perm = s;
      std::shuffle(perm.begin(), perm.end(), rng);
      auto y = encode_forward(p, c, TokenBatch::from_sequences({s, perm}));
      CHECK(max_abs_diff(y, 0, y, 1) <= 1e-9);
    }
  }
  TEST_CASE("with positions, order matters") {
    auto c = small_config();
    auto p = init_encoder(c, 6);
    std::vector<std::uint32_t> s{1, 5, 6, 7}, r{1, 7, 6, 5};
    auto y = encode_forward(p, c, TokenBatch::from_sequences({s, r}));
    CHECK(max_abs_diff(y, 0, y, 1) > 1e-6);
  }
  TEST_CASE("out-of-range token is a vocab error naming the id") {
    auto c = small_config();
    auto p = init_encoder(c, 0);
    try {
      encode_forward(p, c, TokenBatch::from_sequences({{1, 4, 30}}));
      FAIL("expected VocabError");
    } catch (const VocabError& e) {
      CHECK(std::string(e.what()).find("30") != std::string::npos);
    }
  }
  TEST_CASE("overlong sequence is an error, not a silent truncation") {
    auto c = small_config();
    auto p = init_encoder(c, 0);
    std::mt19937_64 rng(6);
    CHECK_THROWS_AS(encode_forward(p, c, TokenBatch::from_sequences({random_sequence(rng, 13, 30)})), DimensionError);
  }
  TEST_CASE("dropout needs a generator and is reproducible with one") {
    auto c = small_config();
    c.dropout = 0.2;
    auto p = init_encoder(c, 0);
    auto tb = TokenBatch::from_sequences({{1, 4, 5, 9}});
    CHECK_THROWS_AS(encode_forward(p, c, tb, {true, nullptr}), StateError);
    std::mt19937_64 r1(9), r2(9);
    auto a = encode_forward(p, c, tb, {true, &r1});
    auto b = encode_forward(p, c, tb, {true, &r2});
    CHECK(a.bitwise_equal(b));
    // Evaluation mode ignores dropout entirely.
    CHECK(encode_forward(p, c, tb).bitwise_equal(encode_forward(p, c, tb)));
  }
}

TEST_SUITE("encoder freezing") {
  TEST_CASE("frozen encoder is bitwise unchanged by adam steps") {
    auto c = small_config();
    auto p = init_encoder(c, 7);
    set_trainable(p, false);
    const auto before = p.clone();
    std::mt19937_64 rng(7);
    AdamState st(AdamConfig{1e-2});
    for (int step = 0; step < 5; ++step) {
      auto y = encode_forward(p, c, TokenBatch::from_sequences({random_sequence(rng, 6, c.vocab_size)}));
      // Frozen leaves carry no graph; the loss is then a constant.
      CHECK_FALSE(y.requires_grad());
      adam_step(p, st);
    }
    CHECK(p.bitwise_equal(before));
  }
  TEST_CASE("selector all sets every flag and a step moves parameters") {
    auto c = small_config();
    auto p = init_encoder(c, 8);
    set_trainable(p, false);
    set_trainable(p, true);
    for (const auto& e : p.entries()) CHECK(e.trainable);
    const auto before = p.clone();
    std::mt19937_64 rng(8);
    auto y = encode_forward(p, c, TokenBatch::from_sequences({random_sequence(rng, 6, c.vocab_size)}));
    backward(probe_loss(y, 1));
    AdamState st(AdamConfig{1e-2});
    adam_step(p, st);
    CHECK_FALSE(p.bitwise_equal(before));
  }
  TEST_CASE("a nonzero loss sends gradient into the encoder") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
      auto c = small_config();
      c.pooling = trial % 2 ? Pooling::Mean : Pooling::FirstToken;
      auto p = init_encoder(c, 100 + trial);
      std::vector<std::vector<std::uint32_t>> seqs;
      for (int i = 0; i < 3; ++i) seqs.push_back(random_sequence(rng, 3 + i, c.vocab_size));
      backward(probe_loss(encode_forward(p, c, TokenBatch::from_sequences(seqs)), trial));
      bool any = false;
      for (const auto& e : p.entries()) {
        for (double g : e.tensor.grad()) any = any || g != 0.0;
      }
      CHECK(any);
    }
  }
}
