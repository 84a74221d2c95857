#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mtl/numerics/parameter_store.hpp"

namespace mtl {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;  // one per trainable parameter
  double rtol = 0.0;
  double floor = 0.0;
  std::size_t scalars_checked = 0;

  double max_rel_error() const;
  bool passed() const { return max_rel_error() <= rtol; }
  // Names of parameters whose worst relative error exceeds rtol.
  std::vector<std::string> flagged() const;
};

using LossFn = std::function<Tensor(ParameterStore&)>;

// Denominator floor of the relative error. A larger floor turns the check
// into an absolute one below that gradient magnitude; central differences at
// h = 1e-6 carry roundoff near eps * |f| / h.
inline constexpr double kGradCheckFloor = 1e-12;

// Compares backward() gradients against central differences
// (f(t + h) - f(t - h)) / 2h for every trainable scalar. Relative error is
// |a - n| / max(|a|, |n|, floor). Throws DeterminismError if two baseline
// evaluations of f differ. Leaves parameter values unchanged and grads zeroed.
GradCheckReport finite_diff_gradcheck(const LossFn& f, ParameterStore& params, double h = 1e-6,
                                      double rtol = 1e-6, double floor = kGradCheckFloor);

}  // namespace mtl
