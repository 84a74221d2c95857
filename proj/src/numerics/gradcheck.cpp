#include "mtl/numerics/gradcheck.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "mtl/error.hpp"

namespace mtl {

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

std::vector<std::string> GradCheckReport::flagged() const {
  std::vector<std::string> names;
  for (const auto& e : entries) {
    if (e.max_rel_error > rtol) names.push_back(e.name);
  }
  return names;
}

GradCheckReport finite_diff_gradcheck(const LossFn& f, ParameterStore& params, double h, double rtol,
                                      double floor) {
  if (!(h > 0.0)) throw StateError("gradcheck: step h must be positive");
  if (!(floor > 0.0)) throw StateError("gradcheck: floor must be positive");

  params.zero_grad();
  const Tensor loss = f(params);
  const double baseline = loss.item();
  backward(loss);

  const double again = f(params).item();
  if (std::bit_cast<std::uint64_t>(baseline) != std::bit_cast<std::uint64_t>(again)) {
    throw DeterminismError("gradcheck: loss function is not deterministic");
  }

  GradCheckReport report;
  report.rtol = rtol;
  report.floor = floor;
  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    std::vector<double> analytic(e.tensor.grad().begin(), e.tensor.grad().end());
    GradCheckEntry row{e.name};
    auto theta = e.tensor.mutable_data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + h;
      const double up = f(params).item();
      theta[i] = saved - h;
      const double down = f(params).item();
      theta[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      if (rel > row.max_rel_error || i == 0) {
        row.max_rel_error = std::max(rel, row.max_rel_error);
        row.worst_index = i;
        row.analytic = analytic[i];
        row.numeric = numeric;
      }
      ++report.scalars_checked;
    }
    report.entries.push_back(std::move(row));
  }
  params.zero_grad();
  return report;
}

}  // namespace mtl
