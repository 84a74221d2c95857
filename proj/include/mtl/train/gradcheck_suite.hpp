#pragma once

// Randomized gradient-check trials. Trial kinds cycle through every tensor
// op and then the full encoder + multitask loss, so any run of at least
// kGradTrialKinds trials touches each of them.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mtl/numerics/gradcheck.hpp"

namespace mtl::train {

inline constexpr std::size_t kGradTrialKinds = 15;

struct GradTrial {
  std::string name;
  ParameterStore params;
  LossFn loss;
};

// Deterministic in (index, seed).
GradTrial make_grad_trial(std::size_t index, std::uint64_t seed);

struct GradTrialResult {
  std::string name;
  GradCheckReport report;
};

std::vector<GradTrialResult> run_gradcheck_suite(std::size_t trials, std::uint64_t seed, double h = 1e-6,
                                                 double rtol = 1e-6, double floor = kGradCheckFloor);

}  // namespace mtl::train
