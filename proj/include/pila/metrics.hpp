#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pila/gnss.hpp"
#include "pila/model.hpp"

namespace pila {

// Held-out-window scores. Fields that need ground truth are empty on loaded data.
struct Metrics {
  double test_mse = 0.0;                               // mm^2
  std::optional<std::array<double, 4>> mae;            // x km, y km, depth km, volume m^3
  double location_std_km = 0.0;                        // sqrt(var x_m + var y_m) over days
  std::optional<double> event_capture;                 // predicted dV rise / true rise
  double saturation = 0.0;                             // share of eta entries with |eta - 0.5| > 0.49
  std::optional<double> separation;                    // corr(X_F, volcanic) - corr(X_F, seasonal)
};

// Column names of a metrics row, in write order.
std::vector<std::string> metrics_columns();
std::vector<std::string> metrics_cells(const Metrics& m);

struct Evaluation {
  Metrics metrics;
  Inference inference;
};

// Scores `model` on a dataset (normally the held-out window, rows ordered by day).
Evaluation evaluate(const InverseModel& model, const gnss::Dataset& data);

// Building blocks, exposed for testing.
double location_temporal_std(const Tensor& physical);
// Window edges are min(edge, n/2) days long. Empty when the true rise is zero.
std::optional<double> event_capture_ratio(std::span<const double> predicted, std::span<const double> truth,
                                          std::size_t edge = 30);
double saturation_fraction(const Tensor& eta);
double pearson(std::span<const double> a, std::span<const double> b);
double separation_score(const Tensor& x_f, const Tensor& volcanic, const Tensor& seasonal);

void write_metrics_csv(const std::filesystem::path& path, const Metrics& m);
// day,date,eta_*,<physical>,true_* (when available)
void write_parameters_csv(const std::filesystem::path& path, const gnss::Dataset& data, const Inference& inf);
// long format: day,dimension,observed,x_f,delta,x_c[,true_volcanic,true_seasonal]
void write_decomposition_csv(const std::filesystem::path& path, const gnss::Dataset& data, const Inference& inf);

}  // namespace pila
