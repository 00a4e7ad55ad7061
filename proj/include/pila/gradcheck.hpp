#pragma once

#include <functional>

#include "pila/tensor.hpp"

namespace pila {

struct FiniteDifferenceOptions {
  // Per-coordinate step h_i = relative_step * max(1, |x_i|).
  double relative_step = 1e-5;
};

// Central-difference gradient of a scalar function. Throws std::domain_error naming the
// coordinate if f is non-finite at a probe point.
Tensor finite_difference(const std::function<double(const Tensor&)>& f, const Tensor& x,
                         FiniteDifferenceOptions options = {});

// Elementwise |a-b| <= max(rel*max(|a|,|b|), abs_floor). Returns the worst ratio
// err/allowed (<= 1 means pass).
double worst_relative_error(const Tensor& a, const Tensor& b, double rel, double abs_floor);

}  // namespace pila
