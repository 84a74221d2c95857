#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtl/data/annotations.hpp"
#include "mtl/data/vocab.hpp"
#include "mtl/encoder/encoder.hpp"
#include "mtl/model/task.hpp"

namespace mtl::data {

struct LabeledExample {
  std::string id;
  std::string text;
  std::vector<std::uint32_t> ids;  // CLS-prefixed, padded to max_len
  std::vector<std::uint8_t> mask;
  TaskLabelSet labels;
};

LabeledExample make_example(const AnnotationRecord& record, const Vocabulary& vocab, std::size_t max_len);

// Stratified by the given binary labels. Returns (kept, held_out) index
// lists, each in ascending order. Held-out count per class is
// round(fraction * class size); a non-empty class yielding fewer than one
// held-out example is a SplitError.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    std::span<const int> labels, double fraction, std::uint64_t seed);

struct TrainValSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> validation;
  std::size_t dropped_ties = 0;
};

// Drops tie-excluded (hard-absent) examples, then splits stratified by the
// hard label. Deterministic in seed.
TrainValSplit split_train_val(const std::vector<LabeledExample>& examples, double val_fraction,
                              std::uint64_t seed);

// Padded batch trimmed to the longest real sequence among the chosen rows.
encoder::TokenBatch make_batch(const std::vector<LabeledExample>& examples,
                               std::span<const std::size_t> indices);
std::vector<TaskLabelSet> batch_labels(const std::vector<LabeledExample>& examples,
                                       std::span<const std::size_t> indices);

struct DataOptions {
  std::size_t vocab_size = 8000;
  std::size_t max_len = 64;
  double val_fraction = 0.1;
  double test_fraction = 0.15;  // used only without a separate test file
  bool case_fold = true;
  std::uint64_t seed = 13;
  std::optional<Vocabulary> vocab;  // used as-is instead of building one
};

struct DatasetBundle {
  Vocabulary vocab{{}, true};
  std::size_t max_len = 0;
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> validation;
  std::vector<LabeledExample> test;
  std::size_t dropped_ties = 0;       // across pool and test
  std::size_t dropped_test_ties = 0;
};

// Labels derived, ties dropped, test held out (or taken from `test_records`),
// vocabulary built on the remaining pool, pool split into train/validation.
DatasetBundle prepare_bundle(const std::vector<AnnotationRecord>& pool,
                             const std::optional<std::vector<AnnotationRecord>>& test_records,
                             const DataOptions& options);

}  // namespace mtl::data
