#pragma once

#include <array>

#include "pila/model.hpp"

namespace pila {

struct HvaeConfig {
  std::size_t rank = 4;
  std::size_t hidden = 128;
  std::size_t combiner_hidden = 64;
  double beta = 1.2340980408667956e-4;  // e^-9
  // lambda_unmix, lambda_syn, lambda_res; 1 until calibrated
  std::array<double, 3> lambdas{1.0, 1.0, 1.0};
  std::size_t warmup_epochs = 5;
  double calibration_ratio = 0.1;
  bool calibrated = false;
  double prior_mean = 0.5;
  double prior_std = 0.866;

  void validate(std::size_t dim) const;
};

// Weighted HVAE objective on plain numbers: rec + beta*prior + l1*unmix + l2*syn + l3*res.
double hvae_total(double rec, double prior, double unmix, double syn, double res, double beta,
                  const std::array<double, 3>& lambdas);

class HvaeModel final : public InverseModel {
 public:
  HvaeModel(HvaeConfig config, ModelContext context, std::uint64_t seed);

  struct Forward {
    Var alpha;    // unmixing coefficients
    Var x_unmix;  // alpha * x
    Var phy_mu;   // softplus mean, before sampling and clamping
    Var phy_logvar;
    Var z_phy;  // clamped to [0, 1]
    Var aux_mu;
    Var aux_logvar;
    Var z_aux;
    Var x_f;
    Var x_aux;
    Var x_c;
  };

  // sampler == nullptr uses the means.
  Forward forward(Tape& tape, const Tensor& x, CounterRng* sampler) const;
  // Synthetic-pair loss for given draws z' in [0,1]^4: mean (z' - mu_phy(E_R(x'_F)))^2.
  Var synthetic_loss(Tape& tape, const Tensor& z_prime) const;

  [[nodiscard]] std::string_view kind() const override { return "hvae"; }
  ParameterSet& params() override { return params_; }
  [[nodiscard]] const ParameterSet& params() const override { return params_; }
  [[nodiscard]] const ModelContext& context() const override { return context_; }
  [[nodiscard]] const HvaeConfig& config() const { return config_; }

  LossParts training_loss(Tape& tape, const Tensor& x, CounterRng& rng) override;
  [[nodiscard]] Inference infer(const Tensor& x) const override;
  void end_epoch(std::size_t epoch, const std::vector<double>& raw_means) override;

 private:
  Var encode_phy(Tape& tape, Var x_raw, Var* logvar, Var* features) const;

  HvaeConfig config_;
  ModelContext context_;
  ParameterSet params_;
  nn::TanhMlp feature_;
  nn::Linear unmix_;
  nn::Linear phy_mu_;
  nn::Linear phy_logvar_;
  nn::Linear aux_mu_;
  nn::Linear aux_logvar_;
  nn::TanhMlp aux_decoder_hidden_;
  nn::Linear aux_decoder_out_;
  nn::Linear combiner_linear_;
  nn::TanhMlp combiner_hidden_;
  nn::Linear combiner_out_;
};

}  // namespace pila
