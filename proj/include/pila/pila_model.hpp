#pragma once

#include <optional>

#include "pila/model.hpp"

namespace pila {

enum class PriorMode { endstop, kl };
std::string_view prior_mode_name(PriorMode m);
PriorMode parse_prior_mode(std::string_view s);

struct PilaConfig {
  std::size_t rank = 4;
  std::size_t hidden = 128;
  double beta = 10.0;
  double lambda = 0.1;
  std::size_t anneal_epochs = 30;
  PriorMode prior = PriorMode::endstop;
  // Ablation switch: false pins the residual weight at 0 and drops the basis loss.
  bool residual = true;
  double clip = 1e-6;
  double coefficient_init_std = 1e-4;

  void validate(std::size_t dim) const;
};

// min(1, epoch / anneal_epochs); 1 when annealing is off.
double anneal_weight(std::size_t epoch, std::size_t anneal_epochs);

// ||B^T B - I||_F^2
Var loss_res_basis(Var basis);
// -mean(log c + log(1 - c)), c = clamp(eta, clip, 1 - clip).
Var loss_prior_endstop(Var eta, double clip = 1e-6);

// A = (2/pi) atan([z_aux | detach(x_f)] W + b), delta = s * A * B^T.
struct ResidualVars {
  Var scale;  // 1 x 1
  Var basis;  // d x r
  Var coef_weight;  // (r + d) x r
  Var coef_bias;    // 1 x r
};
Var residual(Var z_aux, Var x_f, const ResidualVars& p, Var* coefficients = nullptr);

class PilaModel final : public InverseModel {
 public:
  PilaModel(PilaConfig config, ModelContext context, std::uint64_t seed);

  struct Encoded {
    Var eta;
    Var z_aux;
    Var mu;      // KL mode only
    Var logvar;  // KL mode only
  };
  struct Forward {
    Encoded enc;
    Var x_f;
    Var delta;
    Var x_c;
  };

  // sampler == nullptr takes the mean path (eta = sigmoid(mu) in KL mode).
  Encoded encode(Tape& tape, const Tensor& x, CounterRng* sampler) const;
  Forward reconstruct(Tape& tape, const Tensor& x, CounterRng* sampler) const;
  [[nodiscard]] ResidualVars residual_vars(Tape& tape) const;

  [[nodiscard]] std::string_view kind() const override { return "pila"; }
  ParameterSet& params() override { return params_; }
  [[nodiscard]] const ParameterSet& params() const override { return params_; }
  [[nodiscard]] const ModelContext& context() const override { return context_; }
  [[nodiscard]] const PilaConfig& config() const { return config_; }

  LossParts training_loss(Tape& tape, const Tensor& x, CounterRng& rng) override;
  [[nodiscard]] Inference infer(const Tensor& x) const override;
  void begin_epoch(std::size_t epoch) override;

  [[nodiscard]] double residual_weight() const { return residual_weight_; }
  void set_residual_weight(double w);

 private:
  PilaConfig config_;
  ModelContext context_;
  ParameterSet params_;
  nn::TanhMlp feature_;
  std::optional<nn::Linear> phy_head_;
  std::optional<nn::Linear> mu_head_;
  std::optional<nn::Linear> logvar_head_;
  nn::Linear aux_head_;
  nn::Linear coef_;
  ParamId scale_ = 0;
  ParamId basis_ = 0;
  double residual_weight_ = 0.0;
};

}  // namespace pila
