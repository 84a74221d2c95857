#include "mtl/numerics/adam.hpp"

#include <cmath>

#include "mtl/error.hpp"

namespace mtl {

void adam_step(ParameterStore& params, AdamState& state) {
  for (const auto& e : params.entries()) {
    if (e.trainable && !e.tensor.requires_grad()) {
      throw StateError("adam_step: trainable parameter has no gradient: " + e.name);
    }
  }
  // Frozen parameters lose their moments.
  for (auto it = state.moments.begin(); it != state.moments.end();) {
    if (!params.contains(it->first) || !params.trainable(it->first)) {
      it = state.moments.erase(it);
    } else {
      ++it;
    }
  }

  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    auto& mom = state.moments[e.name];
    const std::size_t n = e.tensor.numel();
    if (mom.first.size() != n) {
      mom.first.assign(n, 0.0);
      mom.second.assign(n, 0.0);
    }
    auto theta = e.tensor.mutable_data();
    auto g = e.tensor.grad();
    for (std::size_t i = 0; i < n; ++i) {
      mom.first[i] = c.beta1 * mom.first[i] + (1.0 - c.beta1) * g[i];
      mom.second[i] = c.beta2 * mom.second[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = mom.first[i] / correction1;
      const double v_hat = mom.second[i] / correction2;
      theta[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
  params.zero_grad();
}

}  // namespace mtl
