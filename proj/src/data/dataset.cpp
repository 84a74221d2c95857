#include "mtl/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mtl/data/labels.hpp"
#include "mtl/error.hpp"
#include "mtl/numerics/random.hpp"

namespace mtl::data {

LabeledExample make_example(const AnnotationRecord& record, const Vocabulary& vocab, std::size_t max_len) {
  EncodedText enc = encode_text(vocab, record.text, max_len);
  return LabeledExample{record.id, record.text, std::move(enc.ids), std::move(enc.mask), derive_labels(record)};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    std::span<const int> labels, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw SplitError("split fraction must be in (0, 1)");
  std::vector<std::size_t> kept, held;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    if (members.empty()) continue;
    const auto n_held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    if (n_held < 1) {
      throw SplitError("class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                       " example(s), too few for one held-out example at fraction " + std::to_string(fraction));
    }
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(cls)));
    std::shuffle(members.begin(), members.end(), rng);
    held.insert(held.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_held));
    kept.insert(kept.end(), members.begin() + static_cast<std::ptrdiff_t>(n_held), members.end());
  }
  std::sort(kept.begin(), kept.end());
  std::sort(held.begin(), held.end());
  return {std::move(kept), std::move(held)};
}

TrainValSplit split_train_val(const std::vector<LabeledExample>& examples, double val_fraction,
                              std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw SplitError("val_fraction must be in (0, 1)");
  TrainValSplit out;
  std::vector<const LabeledExample*> usable;
  std::vector<int> labels;
  for (const auto& ex : examples) {
    if (!ex.labels.hard) {
      ++out.dropped_ties;
      continue;
    }
    usable.push_back(&ex);
    labels.push_back(*ex.labels.hard);
  }
  auto [train_idx, val_idx] = stratified_split(labels, val_fraction, seed);
  for (std::size_t i : train_idx) out.train.push_back(*usable[i]);
  for (std::size_t i : val_idx) out.validation.push_back(*usable[i]);
  return out;
}

encoder::TokenBatch make_batch(const std::vector<LabeledExample>& examples,
                               std::span<const std::size_t> indices) {
  encoder::TokenBatch b;
  b.batch = indices.size();
  for (std::size_t i : indices) {
    const auto& m = examples[i].mask;
    const auto len = static_cast<std::size_t>(std::find(m.begin(), m.end(), 0) - m.begin());
    b.seq = std::max(b.seq, len);
  }
  b.ids.reserve(b.batch * b.seq);
  b.mask.reserve(b.batch * b.seq);
  for (std::size_t i : indices) {
    const auto& ex = examples[i];
    b.ids.insert(b.ids.end(), ex.ids.begin(), ex.ids.begin() + static_cast<std::ptrdiff_t>(b.seq));
    b.mask.insert(b.mask.end(), ex.mask.begin(), ex.mask.begin() + static_cast<std::ptrdiff_t>(b.seq));
  }
  return b;
}

std::vector<TaskLabelSet> batch_labels(const std::vector<LabeledExample>& examples,
                                       std::span<const std::size_t> indices) {
  std::vector<TaskLabelSet> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(examples[i].labels);
  return out;
}

DatasetBundle prepare_bundle(const std::vector<AnnotationRecord>& pool,
                             const std::optional<std::vector<AnnotationRecord>>& test_records,
                             const DataOptions& options) {
  if (pool.empty()) throw DataError("no annotation records to prepare");
  DatasetBundle bundle;
  bundle.max_len = options.max_len;

  auto keep_decided = [&](const std::vector<AnnotationRecord>& records, std::size_t& ties) {
    std::vector<const AnnotationRecord*> kept;
    for (const auto& r : records) {
      if (derive_hard_label(r)) kept.push_back(&r);
      else ++ties;
    }
    return kept;
  };

  std::size_t pool_ties = 0;
  std::vector<const AnnotationRecord*> decided = keep_decided(pool, pool_ties);
  std::vector<const AnnotationRecord*> train_pool, test_pool;
  if (test_records) {
    train_pool = decided;
    test_pool = keep_decided(*test_records, bundle.dropped_test_ties);
  } else {
    std::vector<int> hard;
    for (const auto* r : decided) hard.push_back(*derive_hard_label(*r));
    auto [kept, held] = stratified_split(hard, options.test_fraction, mix_seed(options.seed, 101));
    for (std::size_t i : kept) train_pool.push_back(decided[i]);
    for (std::size_t i : held) test_pool.push_back(decided[i]);
  }
  bundle.dropped_ties = pool_ties + bundle.dropped_test_ties;

  std::vector<std::string> texts;
  for (const auto* r : train_pool) texts.push_back(r->text);
  bundle.vocab = options.vocab ? *options.vocab : build_vocab(texts, options.vocab_size, options.case_fold);

  std::vector<LabeledExample> pool_examples;
  for (const auto* r : train_pool) pool_examples.push_back(make_example(*r, bundle.vocab, options.max_len));
  TrainValSplit split = split_train_val(pool_examples, options.val_fraction, mix_seed(options.seed, 102));
  bundle.train = std::move(split.train);
  bundle.validation = std::move(split.validation);
  for (const auto* r : test_pool) bundle.test.push_back(make_example(*r, bundle.vocab, options.max_len));
  return bundle;
}

}  // namespace mtl::data
