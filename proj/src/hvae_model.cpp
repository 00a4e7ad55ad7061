#include "pila/hvae_model.hpp"

#include <cmath>

#include <fmt/format.h>

namespace pila {
namespace {

void check_stage(Var v, std::string_view stage) {
  if (!v.value().all_finite()) throw NonFiniteError(fmt::format("hvae: non-finite values after {}", stage));
}

}  // namespace

void HvaeConfig::validate(std::size_t dim) const {
  if (rank < 1 || 2 * rank > dim)
    throw std::invalid_argument(fmt::format("model.rank = {} must satisfy 1 <= r <= d/2 = {}", rank, dim / 2));
  if (hidden < 1 || combiner_hidden < 1) throw std::invalid_argument("hvae hidden widths must be >= 1");
  if (!(beta >= 0.0)) throw std::invalid_argument("hvae beta must be >= 0");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw std::invalid_argument("hvae lambdas must be >= 0");
  if (!(prior_std > 0.0)) throw std::invalid_argument("hvae prior std must be > 0");
}

double hvae_total(double rec, double prior, double unmix, double syn, double res, double beta,
                  const std::array<double, 3>& lambdas) {
  return rec + beta * prior + lambdas[0] * unmix + lambdas[1] * syn + lambdas[2] * res;
}

HvaeModel::HvaeModel(HvaeConfig config, ModelContext context, std::uint64_t seed)
    : config_(config), context_(std::move(context)) {
  const std::size_t d = context_.dim();
  config_.validate(d);
  context_.bounds.validate();
  if (context_.standardizer.dim() != d)
    throw std::invalid_argument(
        fmt::format("HvaeModel: standardizer has {} columns, geometry {}", context_.standardizer.dim(), d));
  CounterRng rng(seed, 0x4fae);
  const std::size_t h = config_.hidden;
  const std::size_t r = config_.rank;
  const std::size_t k = mogi::kNumVariables;
  feature_ = nn::make_tanh_mlp(params_, "feature", d, {h, h}, rng);
  unmix_ = nn::make_linear(params_, "unmix", h, d, rng);
  phy_mu_ = nn::make_linear(params_, "phy_mu", h, k, rng);
  phy_logvar_ = nn::make_linear(params_, "phy_logvar", h, k, rng);
  aux_mu_ = nn::make_linear(params_, "aux_mu", h, r, rng);
  aux_logvar_ = nn::make_linear(params_, "aux_logvar", h, r, rng);
  aux_decoder_hidden_ = nn::make_tanh_mlp(params_, "aux_decoder", k + r, {h}, rng);
  aux_decoder_out_ = nn::make_linear(params_, "aux_decoder.out", h, d, rng);

  // Combiner starts as the identity on its X_F block; the nonlinear branch starts silent.
  combiner_linear_ = nn::make_linear(params_, "combiner.linear", 2 * d, d, rng);
  Tensor& cw = params_.value(combiner_linear_.weight);
  cw.fill(0.0);
  for (std::size_t i = 0; i < d; ++i) cw(i, i) = 1.0;
  combiner_hidden_ = nn::make_tanh_mlp(params_, "combiner.branch", 2 * d, {config_.combiner_hidden}, rng);
  combiner_out_ = nn::make_linear(params_, "combiner.out", config_.combiner_hidden, d, rng);
  params_.value(combiner_out_.weight).fill(0.0);
}

Var HvaeModel::encode_phy(Tape& tape, Var x_raw, Var* logvar, Var* features) const {
  Var h = feature_(tape, params_, context_.standardizer.apply(x_raw));
  if (features) *features = h;
  if (logvar) *logvar = phy_logvar_(tape, params_, h);
  return softplus(phy_mu_(tape, params_, h));
}

HvaeModel::Forward HvaeModel::forward(Tape& tape, const Tensor& x, CounterRng* sampler) const {
  require_finite_rows(x, "hvae forward");
  Forward f;
  Var xc = tape.constant(x);
  Var h0 = feature_(tape, params_, context_.standardizer.apply(xc));
  f.alpha = scale(sigmoid(unmix_(tape, params_, h0)), 2.0);
  f.x_unmix = mul(f.alpha, xc);
  check_stage(f.x_unmix, "unmixing");

  f.phy_mu = encode_phy(tape, f.x_unmix, &f.phy_logvar, nullptr);
  Var u = sampler ? reparameterize(f.phy_mu, f.phy_logvar, *sampler) : f.phy_mu;
  f.z_phy = clamp(u, 0.0, 1.0);
  check_stage(f.z_phy, "physical encoder");

  f.aux_mu = aux_mu_(tape, params_, h0);
  f.aux_logvar = aux_logvar_(tape, params_, h0);
  f.z_aux = sampler ? reparameterize(f.aux_mu, f.aux_logvar, *sampler) : f.aux_mu;
  check_stage(f.z_aux, "auxiliary encoder");

  f.x_f = mogi::forward(mogi::rescale(f.z_phy, context_.bounds), context_.geometry, context_.poisson);
  check_stage(f.x_f, "physical decoder");
  f.x_aux = aux_decoder_out_(tape, params_, aux_decoder_hidden_(tape, params_, concat_cols(f.z_aux, f.z_phy)));
  check_stage(f.x_aux, "auxiliary decoder");

  Var both = concat_cols(f.x_f, f.x_aux);
  f.x_c = add(combiner_linear_(tape, params_, both),
              combiner_out_(tape, params_, combiner_hidden_(tape, params_, both)));
  check_stage(f.x_c, "combiner");
  return f;
}

Var HvaeModel::synthetic_loss(Tape& tape, const Tensor& z_prime) const {
  if (z_prime.cols() != mogi::kNumVariables) throw ShapeError("hvae synthetic_loss", z_prime.shape(), "expected 4 columns");
  Tensor phys(z_prime.shape());
  for (std::size_t i = 0; i < z_prime.rows(); ++i) {
    const auto p = mogi::rescale(z_prime.row_span(i), context_.bounds, context_.poisson);
    for (std::size_t j = 0; j < mogi::kNumVariables; ++j) phys(i, j) = p.get(static_cast<mogi::Variable>(j));
  }
  Var x_syn = tape.constant(mogi::forward_batch(phys, context_.geometry, context_.poisson));
  Var mu = encode_phy(tape, x_syn, nullptr, nullptr);
  return mean_squared_error(tape.constant(z_prime), mu);
}

LossParts HvaeModel::training_loss(Tape& tape, const Tensor& x, CounterRng& rng) {
  const Forward f = forward(tape, x, &rng);
  Var rec = mean_squared_error(tape.constant(x), f.x_c);
  Var prior = add(gaussian_kl(f.phy_mu, f.phy_logvar, config_.prior_mean, config_.prior_std),
                  gaussian_kl(f.aux_mu, f.aux_logvar));
  Var unmix = mean_squared_error(f.x_unmix, f.x_f);
  Tensor z_prime(x.rows(), mogi::kNumVariables);
  for (double& z : z_prime.values()) z = rng.uniform();
  Var syn = synthetic_loss(tape, z_prime);
  Var res = mean_squared_error(f.x_c, f.x_f);
  const auto& l = config_.lambdas;
  return combine({{"rec", rec, 1.0},
                  {"prior", prior, config_.beta},
                  {"unmix", unmix, l[0]},
                  {"syn", syn, l[1]},
                  {"res", res, l[2]}});
}

void HvaeModel::end_epoch(std::size_t epoch, const std::vector<double>& raw_means) {
  if (config_.calibrated || epoch + 1 < config_.warmup_epochs) return;
  if (raw_means.size() != 5) throw std::invalid_argument("hvae end_epoch: expected 5 loss terms");
  for (std::size_t i = 0; i < 3; ++i) {
    const double raw = raw_means[2 + i];
    config_.lambdas[i] = raw > 0.0 ? config_.calibration_ratio * raw_means[0] / raw : 1.0;
  }
  config_.calibrated = true;
}

Inference HvaeModel::infer(const Tensor& x) const {
  Tape tape;
  const Forward f = forward(tape, x, nullptr);
  Inference out;
  out.eta = f.z_phy.value();
  out.physical = mogi::rescale(f.z_phy, context_.bounds).value();
  out.x_f = f.x_f.value();
  out.x_c = f.x_c.value();
  out.delta = out.x_c;
  for (std::size_t i = 0; i < out.delta.size(); ++i) out.delta[i] -= out.x_f[i];
  return out;
}

}  // namespace pila
