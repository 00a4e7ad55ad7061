#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pila/mogi.hpp"
#include "pila/nn.hpp"
#include "pila/rng.hpp"
#include "pila/tape.hpp"

namespace pila {

// Non-finite values inside a model or training run; the CLI maps it to exit code 2.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// What every inverse model needs to know about the problem it inverts.
struct ModelContext {
  mogi::StationGeometry geometry;
  mogi::VariableBounds bounds;
  double poisson = 0.25;
  nn::Standardizer standardizer;  // fitted on the training split

  [[nodiscard]] std::size_t dim() const { return geometry.observation_dim(); }
};

// One named loss component. Its contribution to the objective is weight * raw.
struct LossTerm {
  std::string name;
  Var raw;
  double weight = 1.0;
};

struct LossParts {
  std::vector<LossTerm> terms;
  Var total;  // sum of weight * raw in term order
};

LossParts combine(std::vector<LossTerm> terms);

// Deterministic (mean-path) outputs for a batch, all [n x ...] plain tensors.
struct Inference {
  Tensor eta;       // normalized physical variables [n x 4]
  Tensor physical;  // rescaled [n x 4]: km, km, km, m^3
  Tensor x_f;       // physical reconstruction, mm
  Tensor delta;     // x_c - x_f
  Tensor x_c;       // full reconstruction, mm
};

class InverseModel {
 public:
  virtual ~InverseModel() = default;

  [[nodiscard]] virtual std::string_view kind() const = 0;
  virtual ParameterSet& params() = 0;
  [[nodiscard]] virtual const ParameterSet& params() const = 0;
  [[nodiscard]] virtual const ModelContext& context() const = 0;

  // Stochastic training objective for raw (mm) observations.
  virtual LossParts training_loss(Tape& tape, const Tensor& x, CounterRng& rng) = 0;
  [[nodiscard]] virtual Inference infer(const Tensor& x) const = 0;

  virtual void begin_epoch(std::size_t /*epoch*/) {}
  // Receives the epoch means of the raw (unweighted) terms, in training_loss order.
  virtual void end_epoch(std::size_t /*epoch*/, const std::vector<double>& /*raw_means*/) {}
};

// Throws naming the first offending sample if x holds a NaN or infinity.
void require_finite_rows(const Tensor& x, std::string_view what);

// ---- shared loss pieces ----------------------------------------------------------------------

// Mean over batch and dimensions of (x - y)^2.
Var mean_squared_error(Var x, Var y);
// KL(N(mu, exp(logvar)) || N(m0, s0^2)) summed over columns, averaged over rows.
Var gaussian_kl(Var mu, Var logvar, double m0 = 0.0, double s0 = 1.0);
// mu + exp(logvar / 2) * eps with eps ~ N(0, 1) drawn from rng.
Var reparameterize(Var mu, Var logvar, CounterRng& rng);

}  // namespace pila
