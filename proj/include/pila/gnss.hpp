#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pila/mogi.hpp"
#include "pila/rng.hpp"
#include "pila/tensor.hpp"

namespace pila::gnss {

inline constexpr double kAnnualPeriodDays = 365.25;
inline constexpr double kSemiannualPeriodDays = 182.625;

// Half-open day range [first, last).
struct DayRange {
  long first = 0;
  long last = 0;
  [[nodiscard]] bool contains(long day) const { return day >= first && day < last; }
  [[nodiscard]] long length() const { return last - first; }
};

// Trajectory-model coefficients of one station/direction column (mm, mm/day).
struct Trajectory {
  double intercept = 0.0;
  double trend = 0.0;
  double annual_sin = 0.0;
  double annual_cos = 0.0;
  double semiannual_sin = 0.0;
  double semiannual_cos = 0.0;
};

struct TrajectoryParams {
  double annual_period = kAnnualPeriodDays;
  double semiannual_period = kSemiannualPeriodDays;
  std::vector<Trajectory> columns;  // observation flattening order

  [[nodiscard]] double linear(std::size_t col, double t) const;
  [[nodiscard]] double seasonal(std::size_t col, double t) const;
  void validate() const;
};

struct VolumeProfile {
  std::vector<double> daily_m3;
};

// Logistic inflation from 0 to `total` that is 1% complete at t_start and 99% complete at
// t_start + duration, then relaxes linearly by relax_rate * total per day (never below 0).
VolumeProfile volume_profile_ramp(std::size_t n_days, double t_start, double duration, double total,
                                  double relax_rate);

struct SyntheticScenario {
  mogi::StationGeometry geometry;
  mogi::MogiParams source;  // location and depth; volume comes from the profile
  VolumeProfile volume;
  TrajectoryParams trajectories;
  double white_sigma_mm = 1.0;
  double pink_amplitude_mm = 1.0;
  std::uint64_t seed = 0;
  std::size_t n_days = 0;
  DayRange event_window;  // held-out window covering the inflation
  std::chrono::sys_days start_date{std::chrono::year{2006} / std::chrono::January / 1};

  void validate(const mogi::VariableBounds& bounds) const;
};

// Knobs for building a scenario from a seed. Defaults mirror the scale of a real
// volcanic-inflation record: mm-level transient, few-mm seasonal motion, 1 mm noise.
struct ScenarioSettings {
  std::uint64_t seed = 7;
  std::size_t n_days = 1400;
  std::size_t n_stations = 12;
  double source_x_km = 1.5;
  double source_y_km = 0.8;
  double source_depth_km = 9.35;
  double poisson = 0.25;
  double event_start_day = 600.0;
  double event_duration_days = 180.0;
  double event_volume_m3 = 3.7e6;
  double relax_rate_per_day = 2.5e-4;
  double annual_amplitude_min_mm = 2.0;
  double annual_amplitude_max_mm = 6.0;
  double semiannual_amplitude_min_mm = 0.5;
  double semiannual_amplitude_max_mm = 2.0;
  double trend_max_mm_per_year = 5.0;
  double intercept_max_mm = 3.0;
  double white_sigma_mm = 1.0;
  double pink_amplitude_mm = 1.0;
  long test_first_day = 540;
  long test_last_day = 900;
  std::chrono::sys_days start_date{std::chrono::year{2006} / std::chrono::January / 1};
  std::optional<mogi::StationGeometry> geometry;  // random layout when absent
};

SyntheticScenario build_scenario(const ScenarioSettings& settings, const mogi::VariableBounds& bounds = {});

struct GroundTruth {
  Tensor volcanic;  // [days x dim]
  Tensor trend;     // intercept + linear trend
  Tensor seasonal;  // annual + semiannual
  Tensor noise;     // pink + white
  Tensor params;    // [days x 4] true source (x km, y km, depth km, volume m^3)
};

struct Dataset {
  mogi::StationGeometry geometry;
  std::vector<long> days;  // day index relative to start_date
  Tensor samples;          // [days x dim], mm
  std::optional<GroundTruth> truth;
  std::vector<double> offsets;  // per-column means removed on load (zeros for synthetic data)
  std::chrono::sys_days start_date{std::chrono::year{2006} / std::chrono::January / 1};
  std::optional<DayRange> event_window;

  [[nodiscard]] std::size_t size() const { return days.size(); }
  [[nodiscard]] std::size_t dim() const { return samples.cols(); }
  [[nodiscard]] Dataset subset(std::span<const std::size_t> rows) const;
};

// observation = trend + seasonal + volcanic + noise, summed in that order per entry.
Dataset generate(const SyntheticScenario& scenario);

// Zero-mean 1/f noise scaled to standard deviation `amplitude` (spectral shaping of white
// Gaussian noise).
std::vector<double> pink_noise(std::size_t n, double amplitude, CounterRng rng);

struct LoadOptions {
  double max_missing_fraction = 0.5;
};

// Long-format CSV `date,station,east_mm,north_mm,up_mm`. Aligns stations over the common
// span, fills interior gaps linearly, removes per-column means (recorded in `offsets`).
Dataset load_series(const std::filesystem::path& path, const mogi::StationGeometry& geom,
                    LoadOptions options = {});
void write_series(const Dataset& data, const std::filesystem::path& path);

struct Split {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Test = samples inside `window`; the rest is shuffled (seeded) into 90% train / 10% val.
Split split(const Dataset& data, DayRange window, std::uint64_t seed);

std::string format_date(std::chrono::sys_days d);
std::chrono::sys_days parse_date(const std::string& iso);

}  // namespace pila::gnss
