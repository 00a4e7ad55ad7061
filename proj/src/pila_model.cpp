#include "pila/pila_model.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace pila {

std::string_view prior_mode_name(PriorMode m) { return m == PriorMode::endstop ? "endstop" : "kl"; }

PriorMode parse_prior_mode(std::string_view s) {
  if (s == "endstop") return PriorMode::endstop;
  if (s == "kl") return PriorMode::kl;
  throw std::invalid_argument(fmt::format("unknown prior mode '{}' (valid: endstop, kl)", s));
}

void PilaConfig::validate(std::size_t dim) const {
  if (rank < 1 || 2 * rank > dim)
    throw std::invalid_argument(fmt::format("model.rank = {} must satisfy 1 <= r <= d/2 = {}", rank, dim / 2));
  if (hidden < 1) throw std::invalid_argument("model.hidden must be >= 1");
  if (!(beta >= 0.0)) throw std::invalid_argument("model.beta must be >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("model.lambda must be >= 0");
  if (!(clip > 0.0 && clip < 0.5)) throw std::invalid_argument("model.clip must be in (0, 0.5)");
  if (!(coefficient_init_std >= 0.0)) throw std::invalid_argument("coefficient init std must be >= 0");
}

double anneal_weight(std::size_t epoch, std::size_t anneal_epochs) {
  if (anneal_epochs == 0) return 1.0;
  return std::min(1.0, static_cast<double>(epoch) / static_cast<double>(anneal_epochs));
}

Var loss_res_basis(Var basis) {
  const std::size_t r = basis.shape().cols;
  Var gram = matmul(transpose(basis), basis);
  return sum(square(sub(gram, basis.tape().constant(Tensor::identity(r)))));
}

Var loss_prior_endstop(Var eta, double clip) {
  Var c = clamp(eta, clip, 1.0 - clip);
  return scale(mean(add(log(c), log(add_scalar(scale(c, -1.0), 1.0)))), -1.0);
}

Var residual(Var z_aux, Var x_f, const ResidualVars& p, Var* coefficients) {
  const std::size_t r = p.basis.shape().cols;
  const std::size_t d = p.basis.shape().rows;
  if (z_aux.shape().cols != r) throw ShapeError("residual: z_aux vs basis rank", z_aux.shape(), p.basis.shape());
  if (x_f.shape().cols != d) throw ShapeError("residual: x_f vs basis", x_f.shape(), p.basis.shape());
  if (p.coef_weight.shape() != Shape{r + d, r})
    throw ShapeError("residual: coefficient map", p.coef_weight.shape(), Shape{r + d, r});
  Var in = concat_cols(z_aux, detach(x_f));
  Var a = scale(atan(add(matmul(in, p.coef_weight), p.coef_bias)), 2.0 / std::numbers::pi);
  if (coefficients) *coefficients = a;
  return mul(matmul(a, transpose(p.basis)), p.scale);
}

PilaModel::PilaModel(PilaConfig config, ModelContext context, std::uint64_t seed)
    : config_(config), context_(std::move(context)) {
  const std::size_t d = context_.dim();
  config_.validate(d);
  context_.bounds.validate();
  if (context_.standardizer.dim() != d)
    throw std::invalid_argument(
        fmt::format("PilaModel: standardizer has {} columns, geometry {}", context_.standardizer.dim(), d));
  CounterRng rng(seed, 0x9117a);
  const std::size_t h = config_.hidden;
  const std::size_t r = config_.rank;
  feature_ = nn::make_tanh_mlp(params_, "feature", d, {h, h}, rng);
  if (config_.prior == PriorMode::endstop) {
    phy_head_ = nn::make_linear(params_, "phy", h, mogi::kNumVariables, rng);
  } else {
    mu_head_ = nn::make_linear(params_, "phy_mu", h, mogi::kNumVariables, rng);
    logvar_head_ = nn::make_linear(params_, "phy_logvar", h, mogi::kNumVariables, rng);
  }
  aux_head_ = nn::make_linear(params_, "aux", h, r, rng);
  coef_ = nn::make_linear_normal(params_, "res.coef", r + d, r, config_.coefficient_init_std, rng);
  scale_ = params_.add("res.scale", Tensor::scalar(1.0));
  Tensor g(d, r);
  for (double& v : g.values()) v = rng.normal();
  basis_ = params_.add("res.basis", nn::orthonormalize_columns(g));
  begin_epoch(0);
}

void PilaModel::set_residual_weight(double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("residual weight must be in [0, 1]");
  residual_weight_ = config_.residual ? w : 0.0;
}

void PilaModel::begin_epoch(std::size_t epoch) {
  set_residual_weight(anneal_weight(epoch, config_.anneal_epochs));
}

ResidualVars PilaModel::residual_vars(Tape& tape) const {
  return ResidualVars{tape.param(params_, scale_), tape.param(params_, basis_), tape.param(params_, coef_.weight),
                      tape.param(params_, coef_.bias)};
}

PilaModel::Encoded PilaModel::encode(Tape& tape, const Tensor& x, CounterRng* sampler) const {
  require_finite_rows(x, "pila encode");
  Var xs = tape.constant(context_.standardizer.apply(x));
  Var h = feature_(tape, params_, xs);
  Encoded e;
  if (phy_head_) {
    e.eta = sigmoid((*phy_head_)(tape, params_, h));
  } else {
    e.mu = (*mu_head_)(tape, params_, h);
    e.logvar = (*logvar_head_)(tape, params_, h);
    e.eta = sigmoid(sampler ? reparameterize(e.mu, e.logvar, *sampler) : e.mu);
  }
  e.z_aux = aux_head_(tape, params_, h);
  return e;
}

PilaModel::Forward PilaModel::reconstruct(Tape& tape, const Tensor& x, CounterRng* sampler) const {
  Forward f;
  f.enc = encode(tape, x, sampler);
  f.x_f = mogi::forward(mogi::rescale(f.enc.eta, context_.bounds), context_.geometry, context_.poisson);
  f.delta = residual(f.enc.z_aux, f.x_f, residual_vars(tape));
  f.x_c = residual_weight_ == 0.0 ? f.x_f : add(f.x_f, scale(f.delta, residual_weight_));
  return f;
}

LossParts PilaModel::training_loss(Tape& tape, const Tensor& x, CounterRng& rng) {
  const Forward f = reconstruct(tape, x, &rng);
  Var rec = mean_squared_error(tape.constant(x), f.x_c);
  Var prior = config_.prior == PriorMode::endstop ? loss_prior_endstop(f.enc.eta, config_.clip)
                                                  : gaussian_kl(f.enc.mu, f.enc.logvar);
  Var res = loss_res_basis(tape.param(params_, basis_));
  return combine({{"rec", rec, 1.0}, {"prior", prior, config_.beta},
                  {"res", res, config_.residual ? config_.lambda : 0.0}});
}

Inference PilaModel::infer(const Tensor& x) const {
  Tape tape;
  const Forward f = reconstruct(tape, x, nullptr);
  Inference out;
  out.eta = f.enc.eta.value();
  out.physical = mogi::rescale(f.enc.eta, context_.bounds).value();
  out.x_f = f.x_f.value();
  out.x_c = f.x_c.value();
  out.delta = out.x_c;
  for (std::size_t i = 0; i < out.delta.size(); ++i) out.delta[i] -= out.x_f[i];
  return out;
}

}  // namespace pila
