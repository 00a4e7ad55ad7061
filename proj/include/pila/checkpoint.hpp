#pragma once

#include <filesystem>
#include <memory>

#include "pila/experiment.hpp"

namespace pila {

inline constexpr int kCheckpointVersion = 1;

// Versioned JSON document:
//   format "pila-checkpoint", version, kind (pila|hvae), dims {observation, rank},
//   config {...model settings...}, residual_weight (pila), bounds, poisson,
//   geometry [{id, x_km, y_km}], standardizer {mean, scale},
//   params [{name, rows, cols, values}]
// Doubles are written with 17 significant digits, so a save/load round trip is exact.
void save_checkpoint(const InverseModel& model, const std::filesystem::path& path);
std::unique_ptr<InverseModel> load_checkpoint(const std::filesystem::path& path);

}  // namespace pila
