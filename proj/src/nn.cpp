#include "pila/nn.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace pila::nn {

Var Linear::operator()(Tape& tape, const ParameterSet& params, Var x) const {
  if (x.shape().cols != in) throw ShapeError(fmt::format("linear {}->{}", in, out), x.shape(), Shape{in, out});
  return add(matmul(x, tape.param(params, weight)), tape.param(params, bias));
}

Linear make_linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                   CounterRng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Tensor w(in, out);
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = params.add(name + ".weight", std::move(w));
  l.bias = params.add(name + ".bias", Tensor(1, out));
  return l;
}

Linear make_linear_normal(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                          double std, CounterRng& rng) {
  Tensor w(in, out);
  for (double& v : w.values()) v = rng.normal(0.0, std);
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = params.add(name + ".weight", std::move(w));
  l.bias = params.add(name + ".bias", Tensor(1, out));
  return l;
}

Var TanhMlp::operator()(Tape& tape, const ParameterSet& params, Var x) const {
  for (const auto& l : layers) x = tanh(l(tape, params, x));
  return x;
}

TanhMlp make_tanh_mlp(ParameterSet& params, const std::string& name, std::size_t in,
                      const std::vector<std::size_t>& widths, CounterRng& rng) {
  TanhMlp mlp;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    mlp.layers.push_back(make_linear(params, fmt::format("{}.{}", name, i), in, widths[i], rng));
    in = widths[i];
  }
  return mlp;
}

Standardizer Standardizer::fit(const Tensor& x) {
  if (x.rows() == 0) throw std::invalid_argument("Standardizer::fit: no samples");
  Standardizer s;
  const std::size_t n = x.rows();
  s.mean.assign(x.cols(), 0.0);
  s.scale.assign(x.cols(), 0.0);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += x(i, j);
    m /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += (x(i, j) - m) * (x(i, j) - m);
    const double sd = std::sqrt(v / static_cast<double>(n));
    s.mean[j] = m;
    s.scale[j] = sd > 0.0 ? sd : 1.0;  // constant columns pass through centred
  }
  return s;
}

Tensor Standardizer::apply(const Tensor& x) const {
  if (x.cols() != dim()) throw ShapeError("Standardizer::apply", x.shape(), Shape{1, dim()});
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
  return out;
}

Var Standardizer::apply(Var x) const {
  if (x.shape().cols != dim()) throw ShapeError("Standardizer::apply", x.shape(), Shape{1, dim()});
  Tape& tape = x.tape();
  std::vector<double> inv(dim());
  for (std::size_t j = 0; j < dim(); ++j) inv[j] = 1.0 / scale[j];
  return mul(sub(x, tape.constant(Tensor::row(mean))), tape.constant(Tensor::row(inv)));
}

Tensor orthonormalize_columns(const Tensor& m) {
  Tensor q = m;
  const std::size_t rows = m.rows();
  for (std::size_t c = 0; c < m.cols(); ++c) {
    // two passes of modified Gram-Schmidt keep BtB within a few ulps of I
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < c; ++p) {
        double dot = 0.0;
        for (std::size_t i = 0; i < rows; ++i) dot += q(i, p) * q(i, c);
        for (std::size_t i = 0; i < rows; ++i) q(i, c) -= dot * q(i, p);
      }
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < rows; ++i) norm += q(i, c) * q(i, c);
    norm = std::sqrt(norm);
    if (!(norm > 1e-12)) throw std::invalid_argument("orthonormalize_columns: columns are linearly dependent");
    for (std::size_t i = 0; i < rows; ++i) q(i, c) /= norm;
  }
  return q;
}

}  // namespace pila::nn
