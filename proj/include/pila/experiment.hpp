#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pila/gnss.hpp"
#include "pila/hvae_model.hpp"
#include "pila/metrics.hpp"
#include "pila/pila_model.hpp"
#include "pila/trainer.hpp"

namespace pila {

enum class ModelKind { pila, hvae };
std::string_view model_kind_name(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

struct ModelSettings {
  ModelKind kind = ModelKind::pila;
  PilaConfig pila;
  HvaeConfig hvae;
};

std::unique_ptr<InverseModel> make_model(const ModelSettings& settings, ModelContext context, std::uint64_t seed);

// Context for a dataset split: geometry from the data, standardizer fitted on train.
ModelContext make_context(const gnss::Split& split, const mogi::VariableBounds& bounds, double poisson);

struct RunOutcome {
  std::unique_ptr<InverseModel> model;
  TrainResult training;
  Evaluation evaluation;
};

RunOutcome train_and_evaluate(const gnss::Split& split, const ModelSettings& settings, const TrainConfig& train,
                              const mogi::VariableBounds& bounds = {}, double poisson = 0.25,
                              const EpochCallback& on_epoch = {});

enum class SweepAxis { rank, ablation, prior };
std::string_view sweep_axis_name(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view s);
// rank: 1,4,8; ablation: full,no-residual,no-prior; prior: endstop,kl-1,kl-0.1,kl-0.01
std::vector<std::string> default_sweep_values(SweepAxis a);
// Applies one axis value to a copy of `base`. Throws on values the axis does not know.
ModelSettings apply_sweep_value(const ModelSettings& base, SweepAxis axis, const std::string& value);

struct SweepRow {
  std::string axis;
  std::string value;
  Metrics metrics;
  double final_total = 0.0;
  std::size_t best_epoch = 0;
};

// One train+evaluate per value on shared data and seed. Up to `workers` runs at a time; rows
// come back in `values` order regardless of completion order.
std::vector<SweepRow> sweep(const gnss::Split& split, const ModelSettings& base, const TrainConfig& train,
                            SweepAxis axis, const std::vector<std::string>& values, std::size_t workers,
                            const mogi::VariableBounds& bounds = {}, double poisson = 0.25);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

}  // namespace pila
