#include "pila/optim.hpp"

#include <algorithm>
#include <cmath>

namespace pila {

AdamState::AdamState(const ParameterSet& params, AdamSettings s) : settings(s) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params.all()) {
    first_moment.emplace_back(p.value.shape());
    second_moment.emplace_back(p.value.shape());
  }
}

void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size())
    throw std::invalid_argument("adam_step: gradient/state count does not match parameters");
  const AdamSettings& s = state.settings;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(s.beta1, t);
  const double bias2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params.value(k);
    const Tensor& g = grads[k];
    if (g.shape() != p.shape()) throw ShapeError("adam_step", p.shape(), g.shape());
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p[i] -= s.learning_rate * s.weight_decay * p[i];
      p[i] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
  }
}

std::size_t stabilize_gradients(Gradients& grads, CounterRng& rng, double epsilon) {
  std::size_t touched = 0;
  for (Tensor& g : grads) {
    const auto vals = g.values();
    if (std::none_of(vals.begin(), vals.end(), [](double x) { return std::isnan(x); })) continue;
    ++touched;
    for (double& x : g.values()) {
      // A draw per entry keeps the stream position independent of where the NaNs sit.
      const double r = rng.uniform() * epsilon;
      if (std::isnan(x) || x == 0.0) x = r;
    }
  }
  return touched;
}

}  // namespace pila
