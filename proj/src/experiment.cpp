#include "pila/experiment.hpp"

#include <future>

#include <fmt/format.h>

#include "pila/csv.hpp"

namespace pila {

std::string_view model_kind_name(ModelKind k) { return k == ModelKind::pila ? "pila" : "hvae"; }

ModelKind parse_model_kind(std::string_view s) {
  if (s == "pila") return ModelKind::pila;
  if (s == "hvae") return ModelKind::hvae;
  throw std::invalid_argument(fmt::format("unknown model kind '{}' (valid: pila, hvae)", s));
}

std::unique_ptr<InverseModel> make_model(const ModelSettings& settings, ModelContext context, std::uint64_t seed) {
  if (settings.kind == ModelKind::pila) return std::make_unique<PilaModel>(settings.pila, std::move(context), seed);
  return std::make_unique<HvaeModel>(settings.hvae, std::move(context), seed);
}

ModelContext make_context(const gnss::Split& split, const mogi::VariableBounds& bounds, double poisson) {
  return ModelContext{split.train.geometry, bounds, poisson, nn::Standardizer::fit(split.train.samples)};
}

RunOutcome train_and_evaluate(const gnss::Split& split, const ModelSettings& settings, const TrainConfig& train,
                              const mogi::VariableBounds& bounds, double poisson, const EpochCallback& on_epoch) {
  RunOutcome out;
  out.model = make_model(settings, make_context(split, bounds, poisson), train.seed);
  out.training = pila::train(*out.model, split.train.samples, split.val.samples, train, on_epoch);
  out.evaluation = evaluate(*out.model, split.test);
  return out;
}

std::string_view sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::rank: return "rank";
    case SweepAxis::ablation: return "ablation";
    case SweepAxis::prior: return "prior";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "rank") return SweepAxis::rank;
  if (s == "ablation") return SweepAxis::ablation;
  if (s == "prior") return SweepAxis::prior;
  throw std::invalid_argument(fmt::format("unknown sweep axis '{}' (valid: rank, ablation, prior)", s));
}

std::vector<std::string> default_sweep_values(SweepAxis a) {
  switch (a) {
    case SweepAxis::rank: return {"1", "4", "8"};
    case SweepAxis::ablation: return {"full", "no-residual", "no-prior"};
    case SweepAxis::prior: return {"endstop", "kl-1", "kl-0.1", "kl-0.01"};
  }
  return {};
}

ModelSettings apply_sweep_value(const ModelSettings& base, SweepAxis axis, const std::string& value) {
  ModelSettings s = base;
  switch (axis) {
    case SweepAxis::rank: {
      const long r = csv::to_long(value, "rank");
      if (r < 1) throw std::invalid_argument(fmt::format("sweep rank '{}' must be >= 1", value));
      s.pila.rank = static_cast<std::size_t>(r);
      s.hvae.rank = static_cast<std::size_t>(r);
      break;
    }
    case SweepAxis::ablation:
      if (s.kind != ModelKind::pila) throw std::invalid_argument("the ablation sweep applies to pila models");
      if (value == "no-residual" || value == "no-prior") s.pila.residual = false;
      if (value == "no-prior") s.pila.beta = 0.0;
      if (value != "full" && value != "no-residual" && value != "no-prior")
        throw std::invalid_argument(fmt::format("unknown ablation '{}' (valid: full, no-residual, no-prior)", value));
      break;
    case SweepAxis::prior:
      if (s.kind != ModelKind::pila) throw std::invalid_argument("the prior sweep applies to pila models");
      if (value == "endstop") {
        s.pila.prior = PriorMode::endstop;
      } else if (value.starts_with("kl-")) {
        s.pila.prior = PriorMode::kl;
        s.pila.beta = csv::to_double(value.substr(3), "kl beta");
      } else {
        throw std::invalid_argument(fmt::format("unknown prior '{}' (valid: endstop, kl-<beta>)", value));
      }
      break;
  }
  return s;
}

std::vector<SweepRow> sweep(const gnss::Split& split, const ModelSettings& base, const TrainConfig& train,
                            SweepAxis axis, const std::vector<std::string>& values, std::size_t workers,
                            const mogi::VariableBounds& bounds, double poisson) {
  if (values.empty()) throw std::invalid_argument("sweep: no axis values");
  workers = std::max<std::size_t>(1, workers);
  // validate every point before spending time on training
  std::vector<ModelSettings> settings;
  for (const auto& v : values) settings.push_back(apply_sweep_value(base, axis, v));

  auto run_one = [&](std::size_t i) {
    RunOutcome r = train_and_evaluate(split, settings[i], train, bounds, poisson);
    SweepRow row;
    row.axis = std::string(sweep_axis_name(axis));
    row.value = values[i];
    row.metrics = r.evaluation.metrics;
    row.final_total = r.training.history.back().total;
    row.best_epoch = r.training.best_epoch;
    return row;
  };

  std::vector<SweepRow> rows(values.size());
  for (std::size_t start = 0; start < values.size(); start += workers) {
    const std::size_t stop = std::min(values.size(), start + workers);
    std::vector<std::future<SweepRow>> pending;
    for (std::size_t i = start; i < stop; ++i) pending.push_back(std::async(std::launch::async, run_one, i));
    for (std::size_t i = start; i < stop; ++i) rows[i] = pending[i - start].get();
  }
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::vector<std::string> header = {"axis", "value"};
  for (auto& c : metrics_columns()) header.push_back(c);
  header.emplace_back("final_total_loss");
  header.emplace_back("best_epoch");
  csv::Writer w(path, header);
  for (const auto& r : rows) {
    std::vector<std::string> cells = {r.axis, r.value};
    for (auto& c : metrics_cells(r.metrics)) cells.push_back(std::move(c));
    cells.push_back(csv::format_double(r.final_total));
    cells.push_back(std::to_string(r.best_epoch));
    w.row(cells);
  }
  w.close();
}

}  // namespace pila
