#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pila/tensor.hpp"

namespace pila {

using ParamId = std::size_t;

struct Parameter {
  std::string name;
  Tensor value;
};

// Named, ordered trainable tensors. ParamId is the insertion index.
class ParameterSet {
 public:
  ParamId add(std::string name, Tensor value);

  [[nodiscard]] std::size_t size() const { return params_.size(); }
  Tensor& value(ParamId id) { return params_.at(id).value; }
  [[nodiscard]] const Tensor& value(ParamId id) const { return params_.at(id).value; }
  [[nodiscard]] const std::string& name(ParamId id) const { return params_.at(id).name; }
  [[nodiscard]] std::optional<ParamId> find(const std::string& name) const;
  [[nodiscard]] const std::vector<Parameter>& all() const { return params_; }
  std::vector<Parameter>& all() { return params_; }

 private:
  std::vector<Parameter> params_;
};

// One gradient tensor per parameter, indexed by ParamId.
using Gradients = std::vector<Tensor>;

class Tape;

// A tensor living on a tape: value plus the node that produced it.
class Var {
 public:
  Var() = default;

  [[nodiscard]] const Tensor& value() const;
  [[nodiscard]] Shape shape() const { return value().shape(); }
  [[nodiscard]] double item() const { return value().item(); }
  [[nodiscard]] Tape& tape() const { return *tape_; }
  [[nodiscard]] std::size_t id() const { return id_; }
  [[nodiscard]] bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Define-by-run reverse-mode tape. Build a fresh one per forward pass; confined to one thread.
class Tape {
 public:
  // Receives the upstream gradient and one slot per parent; null slots need no gradient.
  using BackwardFn = std::function<void(const Tensor& upstream, std::span<Tensor* const> parents)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf that gradients flow into but that is not a registered parameter.
  Var variable(Tensor value);
  // Leaf bound to a parameter. Repeated calls for the same id return the same node.
  Var param(const ParameterSet& set, ParamId id);

  Var record(Tensor value, std::vector<Var> parents, BackwardFn backward);

  [[nodiscard]] const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  [[nodiscard]] bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  // Gradients of a scalar loss for every parameter in `set`; unreachable ones are zero.
  [[nodiscard]] Gradients backward(Var loss, const ParameterSet& set) const;

  // Gradients of a scalar loss with respect to arbitrary nodes (leaves or intermediates).
  [[nodiscard]] std::vector<Tensor> gradients(Var loss, std::span<const Var> wrt) const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
    std::optional<ParamId> param;
  };

  [[nodiscard]] std::vector<Tensor> run_backward(Var loss) const;

  std::vector<Node> nodes_;
  std::vector<std::optional<std::size_t>> param_nodes_;
};

// ---- differentiable operations -------------------------------------------------------------
// Binary elementwise ops broadcast size-1 rows/columns (numpy-style, 2-D only).

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var concat_cols(std::span<const Var> parts);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var transpose(Var a);
Var exp(Var a);
Var log(Var a);
Var sigmoid(Var a);
Var atan(Var a);
Var tanh(Var a);
Var square(Var a);
Var sqrt(Var a);
Var pow(Var a, double p);
Var softplus(Var a);
// Gradient is 1 strictly inside [lo, hi] and 0 outside, matching torch.clamp.
Var clamp(Var a, double lo, double hi);
Var mean(Var a);
Var sum(Var a);
// Column sums: [n x c] -> [1 x c].
Var sum_rows(Var a);
// u (n entries) outer v (m entries) -> [n x m].
Var outer(Var u, Var v);
// Same values, no parents: gradients never flow through the result.
Var detach(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator-(Var a) { return scale(a, -1.0); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator*(Var a, double c) { return scale(a, c); }

}  // namespace pila
