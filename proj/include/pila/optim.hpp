#pragma once

#include <cstdint>

#include "pila/rng.hpp"
#include "pila/tape.hpp"

namespace pila {

struct AdamSettings {
  double learning_rate = 3e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment accumulators mirror the parameter set one-to-one.
struct AdamState {
  AdamSettings settings;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(const ParameterSet& params, AdamSettings s);
};

// Adam with decoupled weight decay (AdamW form): p <- p - lr*wd*p - lr*m_hat/(sqrt(v_hat)+eps).
void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state);

// Gradient tensors that contain a NaN get their NaN and exact-zero entries replaced by
// uniform [0,1) draws scaled by `epsilon`; NaN-free tensors are untouched. Returns the number
// of tensors that were modified.
inline constexpr double kStabilizeEpsilon = 1e-7;
std::size_t stabilize_gradients(Gradients& grads, CounterRng& rng,
                                double epsilon = kStabilizeEpsilon);

}  // namespace pila
