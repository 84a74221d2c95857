#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtl/numerics/parameter_store.hpp"

namespace mtl {

struct AdamConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  explicit AdamState(AdamConfig config = {}) : config(config) {}

  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
  };

  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, Moments> moments;  // trainable parameters only
};

// Bias-corrected Adam update on trainable parameters, then zeroes every
// gradient in the store and advances the step count.
void adam_step(ParameterStore& params, AdamState& state);

}  // namespace mtl
