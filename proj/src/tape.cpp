#include "pila/tape.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "pila/kernels.hpp"

namespace pila {

ParamId ParameterSet::add(std::string name, Tensor value) {
  if (find(name)) throw std::invalid_argument(fmt::format("duplicate parameter '{}'", name));
  params_.push_back(Parameter{std::move(name), std::move(value)});
  return params_.size() - 1;
}

std::optional<ParamId> ParameterSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  return std::nullopt;
}

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, std::nullopt});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true, std::nullopt});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const ParameterSet& set, ParamId id) {
  if (id >= set.size()) throw std::out_of_range(fmt::format("unknown parameter id {}", id));
  if (param_nodes_.size() <= id) param_nodes_.resize(id + 1);
  if (param_nodes_[id]) return Var(this, *param_nodes_[id]);
  nodes_.push_back(Node{set.value(id), {}, {}, true, id});
  param_nodes_[id] = nodes_.size() - 1;
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<Var> parents, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& p : parents) {
    if (p.tape_ != this) throw std::invalid_argument("operands live on different tapes");
    node.parents.push_back(p.id_);
    node.requires_grad = node.requires_grad || nodes_[p.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

std::vector<Tensor> Tape::run_backward(Var loss) const {
  if (loss.tape_ != this) throw std::invalid_argument("loss belongs to another tape");
  const Tensor& lv = nodes_.at(loss.id_).value;
  if (lv.shape() != Shape{1, 1}) throw ShapeError("backward", lv.shape(), "loss must be scalar");

  std::vector<Tensor> grads(loss.id_ + 1);
  grads[loss.id_] = Tensor::scalar(1.0);
  std::vector<Tensor*> slots;
  for (std::size_t k = loss.id_ + 1; k-- > 0;) {
    const Node& node = nodes_[k];
    if (grads[k].empty() || !node.backward) continue;
    slots.assign(node.parents.size(), nullptr);
    for (std::size_t p = 0; p < node.parents.size(); ++p) {
      const std::size_t pid = node.parents[p];
      if (!nodes_[pid].requires_grad) continue;
      if (grads[pid].empty()) grads[pid] = Tensor(nodes_[pid].value.shape());
      slots[p] = &grads[pid];
    }
    node.backward(grads[k], slots);
  }
  return grads;
}

Gradients Tape::backward(Var loss, const ParameterSet& set) const {
  auto grads = run_backward(loss);
  Gradients out;
  out.reserve(set.size());
  for (ParamId id = 0; id < set.size(); ++id) {
    const bool on_tape = id < param_nodes_.size() && param_nodes_[id].has_value();
    const std::size_t node = on_tape ? *param_nodes_[id] : 0;
    if (on_tape && node < grads.size() && !grads[node].empty())
      out.push_back(std::move(grads[node]));
    else
      out.emplace_back(set.value(id).shape());
  }
  return out;
}

std::vector<Tensor> Tape::gradients(Var loss, std::span<const Var> wrt) const {
  auto grads = run_backward(loss);
  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (const Var& v : wrt) {
    if (v.id_ < grads.size() && !grads[v.id_].empty())
      out.push_back(grads[v.id_]);
    else
      out.emplace_back(v.shape());
  }
  return out;
}

// ---- operations -----------------------------------------------------------------------------

namespace {

Shape broadcast_shape(const char* op, Shape a, Shape b) {
  auto dim = [&](std::size_t x, std::size_t y) {
    if (x == y) return x;
    if (x == 1) return y;
    if (y == 1) return x;
    throw ShapeError(op, a, b);
  };
  return Shape{dim(a.rows, b.rows), dim(a.cols, b.cols)};
}

inline std::size_t bindex(Shape s, std::size_t i, std::size_t j) {
  return (s.rows == 1 ? 0 : i) * s.cols + (s.cols == 1 ? 0 : j);
}

// Elementwise binary op with broadcasting. da/db give d(out)/d(a), d(out)/d(b).
template <typename F, typename DA, typename DB>
Var binary(const char* name, Var a, Var b, F f, DA da, DB db) {
  Tape& tape = a.tape();
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  const Shape so = broadcast_shape(name, sa, sb);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(so);
  for (std::size_t i = 0; i < so.rows; ++i)
    for (std::size_t j = 0; j < so.cols; ++j)
      out(i, j) = f(av[bindex(sa, i, j)], bv[bindex(sb, i, j)]);
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  const Tape* tp = &tape;
  return tape.record(std::move(out), {a, b},
                     [tp, ia, ib, sa, sb, so, da, db](const Tensor& g, std::span<Tensor* const> p) {
                       const Tensor& av = tp->value(ia);
                       const Tensor& bv = tp->value(ib);
                       for (std::size_t i = 0; i < so.rows; ++i)
                         for (std::size_t j = 0; j < so.cols; ++j) {
                           const double x = av[bindex(sa, i, j)];
                           const double y = bv[bindex(sb, i, j)];
                           const double up = g(i, j);
                           if (p[0]) (*p[0])[bindex(sa, i, j)] += up * da(x, y);
                           if (p[1]) (*p[1])[bindex(sb, i, j)] += up * db(x, y);
                         }
                     });
}

// Elementwise unary op; df receives (input, output). record() appends exactly one node,
// so the output id is known before recording.
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  Tape& tape = a.tape();
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t k = 0; k < av.size(); ++k) out[k] = f(av[k]);
  const std::size_t ia = a.id();
  const std::size_t io = tape.size();
  const Tape* tp = &tape;
  return tape.record(std::move(out), {a}, [tp, ia, io, df](const Tensor& g, std::span<Tensor* const> p) {
    const Tensor& x = tp->value(ia);
    const Tensor& y = tp->value(io);
    Tensor& ga = *p[0];
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * df(x[k], y[k]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = a.tape();
  Tensor out = kernels::matmul(a.value(), b.value());
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  const Tape* tp = &tape;
  return tape.record(std::move(out), {a, b}, [tp, ia, ib](const Tensor& g, std::span<Tensor* const> p) {
    if (p[0]) *p[0] += kernels::matmul_nt(g, tp->value(ib));
    if (p[1]) *p[1] += kernels::matmul_tn(tp->value(ia), g);
  });
}

Var add(Var a, Var b) {
  return binary("add", a, b, [](double x, double y) { return x + y; },
                [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary("sub", a, b, [](double x, double y) { return x - y; },
                [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary("mul", a, b, [](double x, double y) { return x * y; },
                [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var div(Var a, Var b) {
  return binary("div", a, b, [](double x, double y) { return x / y; },
                [](double, double y) { return 1.0 / y; },
                [](double x, double y) { return -x / (y * y); });
}

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no operands");
  Tape& tape = parts.front().tape();
  const std::size_t rows = parts.front().shape().rows;
  std::vector<std::size_t> offsets;
  std::size_t cols = 0;
  for (const Var& v : parts) {
    if (v.shape().rows != rows) throw ShapeError("concat_cols", parts.front().shape(), v.shape());
    offsets.push_back(cols);
    cols += v.shape().cols;
  }
  Tensor out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, offsets[k] + j) = v(i, j);
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return tape.record(std::move(out), std::move(parents),
                     [offsets](const Tensor& g, std::span<Tensor* const> p) {
                       for (std::size_t k = 0; k < p.size(); ++k) {
                         if (!p[k]) continue;
                         Tensor& gk = *p[k];
                         for (std::size_t i = 0; i < gk.rows(); ++i)
                           for (std::size_t j = 0; j < gk.cols(); ++j) gk(i, j) += g(i, offsets[k] + j);
                       }
                     });
}

Var concat_cols(Var a, Var b) {
  const Var parts[] = {a, b};
  return concat_cols(std::span<const Var>(parts));
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Shape s = a.shape();
  if (begin >= end || end > s.cols)
    throw ShapeError("slice_cols", s, fmt::format("columns [{}, {})", begin, end));
  Tensor out(s.rows, end - begin);
  const Tensor& av = a.value();
  for (std::size_t i = 0; i < s.rows; ++i)
    for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = av(i, j);
  return a.tape().record(std::move(out), {a}, [begin](const Tensor& g, std::span<Tensor* const> p) {
    Tensor& ga = *p[0];
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(i, begin + j) += g(i, j);
  });
}

Var transpose(Var a) {
  return a.tape().record(pila::transpose(a.value()), {a},
                         [](const Tensor& g, std::span<Tensor* const> p) { *p[0] += pila::transpose(g); });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var atan(Var a) {
  return unary(a, [](double x) { return std::atan(x); }, [](double x, double) { return 1.0 / (1.0 + x * x); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sqrt(Var a) {
  return unary(a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var pow(Var a, double e) {
  return unary(a, [e](double x) { return std::pow(x, e); },
               [e](double x, double) { return e * std::pow(x, e - 1.0); });
}

Var softplus(Var a) {
  return unary(
      a, [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Var clamp(Var a, double lo, double hi) {
  return unary(a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
               [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().values()) acc += v;
  return a.tape().record(Tensor::scalar(acc), {a}, [](const Tensor& g, std::span<Tensor* const> p) {
    const double up = g[0];
    for (double& v : p[0]->values()) v += up;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean", a.shape(), "empty tensor");
  double acc = 0.0;
  for (double v : a.value().values()) acc += v;
  const double inv = 1.0 / static_cast<double>(n);
  return a.tape().record(Tensor::scalar(acc * inv), {a}, [inv](const Tensor& g, std::span<Tensor* const> p) {
    const double up = g[0] * inv;
    for (double& v : p[0]->values()) v += up;
  });
}

Var sum_rows(Var a) {
  const Tensor& av = a.value();
  Tensor out(1, av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out(0, j) += av(i, j);
  return a.tape().record(std::move(out), {a}, [](const Tensor& g, std::span<Tensor* const> p) {
    Tensor& ga = *p[0];
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(0, j);
  });
}

Var outer(Var u, Var v) {
  const Shape su = u.shape();
  const Shape sv = v.shape();
  if ((su.rows != 1 && su.cols != 1) || (sv.rows != 1 && sv.cols != 1))
    throw ShapeError("outer", su, sv);
  const std::size_t n = su.size();
  const std::size_t m = sv.size();
  const Tensor& uv = u.value();
  const Tensor& vv = v.value();
  Tensor out(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, j) = uv[i] * vv[j];
  const Tape* tp = &u.tape();
  const std::size_t iu = u.id();
  const std::size_t iv = v.id();
  return u.tape().record(std::move(out), {u, v}, [tp, iu, iv, n, m](const Tensor& g, std::span<Tensor* const> p) {
    const Tensor& uv = tp->value(iu);
    const Tensor& vv = tp->value(iv);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (p[0]) (*p[0])[i] += g(i, j) * vv[j];
        if (p[1]) (*p[1])[j] += g(i, j) * uv[i];
      }
  });
}

Var detach(Var a) { return a.tape().constant(a.value()); }

}  // namespace pila
