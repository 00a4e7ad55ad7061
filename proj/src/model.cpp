#include "pila/model.hpp"

#include <cmath>

#include <fmt/format.h>

namespace pila {

LossParts combine(std::vector<LossTerm> terms) {
  if (terms.empty()) throw std::invalid_argument("combine: no loss terms");
  LossParts parts;
  Var total;
  for (const auto& t : terms) {
    Var w = scale(t.raw, t.weight);
    total = total.valid() ? add(total, w) : w;
  }
  parts.terms = std::move(terms);
  parts.total = total;
  return parts;
}

void require_finite_rows(const Tensor& x, std::string_view what) {
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (!std::isfinite(x(i, j)))
        throw NonFiniteError(fmt::format("{}: non-finite value in sample {} (column {})", what, i, j));
}

Var mean_squared_error(Var x, Var y) { return mean(square(sub(x, y))); }

Var gaussian_kl(Var mu, Var logvar, double m0, double s0) {
  if (!(s0 > 0.0)) throw std::invalid_argument("gaussian_kl: prior std must be positive");
  const double inv_var = 1.0 / (s0 * s0);
  // 0.5 * ((var + (mu - m0)^2) / s0^2 - 1 - logvar + log s0^2)
  Var t = add(scale(add(exp(logvar), square(add_scalar(mu, -m0))), inv_var), scale(logvar, -1.0));
  t = add_scalar(t, -1.0 + 2.0 * std::log(s0));
  return scale(sum(t), 0.5 / static_cast<double>(mu.shape().rows));
}

Var reparameterize(Var mu, Var logvar, CounterRng& rng) {
  Tensor eps(mu.shape());
  for (double& e : eps.values()) e = rng.normal();
  return add(mu, mul(exp(scale(logvar, 0.5)), mu.tape().constant(std::move(eps))));
}

}  // namespace pila
