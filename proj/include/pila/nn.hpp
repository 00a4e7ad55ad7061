#pragma once

#include <string>
#include <vector>

#include "pila/rng.hpp"
#include "pila/tape.hpp"

namespace pila::nn {

// y = x W + b with W stored [in x out].
struct Linear {
  ParamId weight = 0;
  ParamId bias = 0;
  std::size_t in = 0;
  std::size_t out = 0;

  Var operator()(Tape& tape, const ParameterSet& params, Var x) const;
};

// Weights U(-1/sqrt(in), 1/sqrt(in)), zero bias.
Linear make_linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, CounterRng& rng);
// Weights N(0, std^2), zero bias.
Linear make_linear_normal(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                          double std, CounterRng& rng);

// Every layer is followed by tanh.
struct TanhMlp {
  std::vector<Linear> layers;
  Var operator()(Tape& tape, const ParameterSet& params, Var x) const;
};

TanhMlp make_tanh_mlp(ParameterSet& params, const std::string& name, std::size_t in,
                      const std::vector<std::size_t>& widths, CounterRng& rng);

// Per-column z-scoring with statistics frozen at fit time.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Tensor& x);
  [[nodiscard]] Tensor apply(const Tensor& x) const;
  Var apply(Var x) const;
  [[nodiscard]] std::size_t dim() const { return mean.size(); }
};

// Gram-Schmidt on the columns of a [rows x cols] matrix; throws if they are dependent.
Tensor orthonormalize_columns(const Tensor& m);

}  // namespace pila::nn
