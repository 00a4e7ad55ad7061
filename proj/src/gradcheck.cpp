#include "pila/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace pila {

Tensor finite_difference(const std::function<double(const Tensor&)>& f, const Tensor& x,
                         FiniteDifferenceOptions options) {
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double h = options.relative_step * std::max(1.0, std::abs(xi));
    probe[i] = xi + h;
    const double fp = f(probe);
    probe[i] = xi - h;
    const double fm = f(probe);
    probe[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::domain_error(fmt::format("finite_difference: non-finite f at coordinate {}", i));
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double worst_relative_error(const Tensor& a, const Tensor& b, double rel, double abs_floor) {
  if (a.shape() != b.shape()) throw ShapeError("worst_relative_error", a.shape(), b.shape());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double err = std::abs(a[i] - b[i]);
    const double allowed = std::max(rel * std::max(std::abs(a[i]), std::abs(b[i])), abs_floor);
    worst = std::max(worst, err / allowed);
  }
  return worst;
}

}  // namespace pila
