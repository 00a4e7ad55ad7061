#include "pila/gnss.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>
#include <fmt/format.h>

#include "pila/csv.hpp"

namespace pila::gnss {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW's planner is not re-entrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Substream ids inside a scenario's generator.
enum Stream : std::uint64_t { kGeometry = 1, kTrajectory = 2, kNoise = 3 };

}  // namespace

double TrajectoryParams::linear(std::size_t col, double t) const {
  const Trajectory& c = columns[col];
  return c.intercept + c.trend * t;
}

double TrajectoryParams::seasonal(std::size_t col, double t) const {
  const Trajectory& c = columns[col];
  const double w1 = kTwoPi * t / annual_period;
  const double w2 = kTwoPi * t / semiannual_period;
  return c.annual_sin * std::sin(w1) + c.annual_cos * std::cos(w1) + c.semiannual_sin * std::sin(w2) +
         c.semiannual_cos * std::cos(w2);
}

void TrajectoryParams::validate() const {
  if (!(annual_period > 0.0) || !(semiannual_period > 0.0))
    throw std::invalid_argument("trajectory periods must be positive");
}

VolumeProfile volume_profile_ramp(std::size_t n_days, double t_start, double duration, double total,
                                  double relax_rate) {
  if (!(duration > 0.0)) throw std::invalid_argument("volume ramp: duration must be > 0");
  if (relax_rate < 0.0) throw std::invalid_argument("volume ramp: relax_rate must be >= 0");
  // 1% at t_start, 99% at t_start + duration.
  const double steepness = 2.0 * std::log(99.0) / duration;
  const double center = t_start + 0.5 * duration;
  const double t_end = t_start + duration;
  VolumeProfile p;
  p.daily_m3.resize(n_days);
  for (std::size_t t = 0; t < n_days; ++t) {
    const double td = static_cast<double>(t);
    const double ramp = 1.0 / (1.0 + std::exp(-steepness * (td - center)));
    const double relax = relax_rate * std::max(0.0, td - t_end);
    p.daily_m3[t] = total * std::max(0.0, ramp - relax);
  }
  return p;
}

void SyntheticScenario::validate(const mogi::VariableBounds& bounds) const {
  if (geometry.size() == 0) throw std::invalid_argument("scenario: no stations");
  if (n_days == 0) throw std::invalid_argument("scenario: n_days must be >= 1");
  if (volume.daily_m3.size() != n_days) throw std::invalid_argument("scenario: volume profile length != n_days");
  if (trajectories.columns.size() != geometry.observation_dim())
    throw std::invalid_argument("scenario: trajectory columns != 3 * stations");
  trajectories.validate();
  for (double v : volume.daily_m3)
    if (!std::isfinite(v)) throw std::invalid_argument("scenario: non-finite volume change");
  const auto check = [&](mogi::Variable var, double v) {
    const auto& r = bounds[var];
    if (v < r.min || v > r.max)
      throw std::invalid_argument(fmt::format("scenario: true {} = {} outside [{}, {}]",
                                              mogi::variable_name(var), v, r.min, r.max));
  };
  check(mogi::Variable::x_m, source.x_m_km);
  check(mogi::Variable::y_m, source.y_m_km);
  check(mogi::Variable::depth, source.depth_km);
  if (white_sigma_mm < 0.0 || pink_amplitude_mm < 0.0) throw std::invalid_argument("scenario: negative noise level");
}

SyntheticScenario build_scenario(const ScenarioSettings& s, const mogi::VariableBounds& bounds) {
  bounds.validate();
  CounterRng root(s.seed);
  SyntheticScenario sc;
  sc.geometry = s.geometry ? *s.geometry
                           : mogi::StationGeometry::random_layout(s.n_stations, bounds, root.substream(kGeometry));
  sc.source.x_m_km = s.source_x_km;
  sc.source.y_m_km = s.source_y_km;
  sc.source.depth_km = s.source_depth_km;
  sc.source.poisson = s.poisson;
  sc.n_days = s.n_days;
  sc.volume = volume_profile_ramp(s.n_days, s.event_start_day, s.event_duration_days, s.event_volume_m3,
                                  s.relax_rate_per_day);
  sc.white_sigma_mm = s.white_sigma_mm;
  sc.pink_amplitude_mm = s.pink_amplitude_mm;
  sc.seed = s.seed;
  sc.event_window = DayRange{s.test_first_day, s.test_last_day};
  sc.start_date = s.start_date;

  CounterRng traj = root.substream(kTrajectory);
  sc.trajectories.columns.resize(sc.geometry.observation_dim());
  for (auto& c : sc.trajectories.columns) {
    c.intercept = traj.uniform(-s.intercept_max_mm, s.intercept_max_mm);
    c.trend = traj.uniform(-s.trend_max_mm_per_year, s.trend_max_mm_per_year) / kAnnualPeriodDays;
    const double a1 = traj.uniform(s.annual_amplitude_min_mm, s.annual_amplitude_max_mm);
    const double p1 = traj.uniform(0.0, kTwoPi);
    c.annual_sin = a1 * std::cos(p1);
    c.annual_cos = a1 * std::sin(p1);
    const double a2 = traj.uniform(s.semiannual_amplitude_min_mm, s.semiannual_amplitude_max_mm);
    const double p2 = traj.uniform(0.0, kTwoPi);
    c.semiannual_sin = a2 * std::cos(p2);
    c.semiannual_cos = a2 * std::sin(p2);
  }
  sc.validate(bounds);
  return sc;
}

std::vector<double> pink_noise(std::size_t n, double amplitude, CounterRng rng) {
  if (n == 0) throw std::invalid_argument("pink_noise: n must be >= 1");
  std::vector<double> out(n, 0.0);
  if (amplitude == 0.0 || n < 2) return out;

  std::vector<double> white(n);
  for (double& w : white) w = rng.normal();
  const std::size_t bins = n / 2 + 1;
  std::vector<std::complex<double>> spectrum(bins);

  fftw_plan fwd;
  fftw_plan inv;
  {
    std::lock_guard lock(fftw_planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), white.data(),
                               reinterpret_cast<fftw_complex*>(spectrum.data()), FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(spectrum.data()),
                               out.data(), FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  spectrum[0] = 0.0;
  for (std::size_t k = 1; k < bins; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(n);
    spectrum[k] /= std::sqrt(f);
  }
  fftw_execute(inv);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }

  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double& v : out) {
    v -= mean;
    var += v * v;
  }
  const double sd = std::sqrt(var / static_cast<double>(n));
  if (sd > 0.0)
    for (double& v : out) v *= amplitude / sd;
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.geometry = geometry;
  out.offsets = offsets;
  out.start_date = start_date;
  out.event_window = event_window;
  const std::size_t d = dim();
  auto take = [&](const Tensor& src) {
    Tensor t(rows.size(), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < src.cols(); ++j) t(i, j) = src(rows[i], j);
    return t;
  };
  out.samples = Tensor(rows.size(), d);
  out.days.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= size()) throw std::out_of_range("Dataset::subset: row out of range");
    out.days.push_back(days[rows[i]]);
  }
  out.samples = take(samples);
  if (truth) {
    out.truth = GroundTruth{take(truth->volcanic), take(truth->trend), take(truth->seasonal), take(truth->noise),
                            take(truth->params)};
  }
  return out;
}

Dataset generate(const SyntheticScenario& sc) {
  sc.validate(mogi::VariableBounds{});
  const std::size_t n = sc.n_days;
  const std::size_t d = sc.geometry.observation_dim();

  GroundTruth truth;
  truth.params = Tensor(n, mogi::kNumVariables);
  for (std::size_t t = 0; t < n; ++t) {
    truth.params(t, 0) = sc.source.x_m_km;
    truth.params(t, 1) = sc.source.y_m_km;
    truth.params(t, 2) = sc.source.depth_km;
    truth.params(t, 3) = sc.volume.daily_m3[t];
  }
  truth.volcanic = mogi::forward_batch(truth.params, sc.geometry, sc.source.poisson);
  truth.trend = Tensor(n, d);
  truth.seasonal = Tensor(n, d);
  truth.noise = Tensor(n, d);

  const CounterRng noise_root = CounterRng(sc.seed).substream(kNoise);
  for (std::size_t j = 0; j < d; ++j) {
    const auto pink = pink_noise(n, sc.pink_amplitude_mm, noise_root.substream(2 * j));
    CounterRng white = noise_root.substream(2 * j + 1);
    for (std::size_t t = 0; t < n; ++t) {
      const double td = static_cast<double>(t);
      truth.trend(t, j) = sc.trajectories.linear(j, td);
      truth.seasonal(t, j) = sc.trajectories.seasonal(j, td);
      truth.noise(t, j) = pink[t] + sc.white_sigma_mm * white.normal();
    }
  }

  Dataset data;
  data.geometry = sc.geometry;
  data.start_date = sc.start_date;
  data.event_window = sc.event_window;
  data.offsets.assign(d, 0.0);
  data.samples = Tensor(n, d);
  data.days.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    data.days[t] = static_cast<long>(t);
    for (std::size_t j = 0; j < d; ++j)
      data.samples(t, j) = truth.trend(t, j) + truth.seasonal(t, j) + truth.volcanic(t, j) + truth.noise(t, j);
  }
  data.truth = std::move(truth);
  return data;
}

std::string format_date(std::chrono::sys_days d) {
  const std::chrono::year_month_day ymd{d};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

std::chrono::sys_days parse_date(const std::string& iso) {
  int y = 0;
  unsigned m = 0;
  unsigned dd = 0;
  char tail = 0;
  if (iso.size() != 10 || std::sscanf(iso.c_str(), "%4d-%2u-%2u%c", &y, &m, &dd, &tail) != 3)
    throw std::runtime_error(fmt::format("bad ISO-8601 date '{}'", iso));
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{dd}};
  if (!ymd.ok()) throw std::runtime_error(fmt::format("invalid calendar date '{}'", iso));
  return std::chrono::sys_days{ymd};
}

Dataset load_series(const std::filesystem::path& path, const mogi::StationGeometry& geom, LoadOptions options) {
  const auto table = csv::read(path);
  const std::vector<std::string> header = {"date", "station", "east_mm", "north_mm", "up_mm"};
  csv::require_header(table, header, path);
  const std::size_t ns = geom.size();
  if (ns == 0) throw std::invalid_argument("load_series: empty station geometry");

  // per station: day number -> (e, n, u)
  std::vector<std::map<long, std::array<double, 3>>> records(ns);
  for (const auto& row : table.rows) {
    const auto idx = geom.index_of(row[1]);
    if (!idx) throw std::runtime_error(fmt::format("load_series: unknown station '{}' (not in geometry)", row[1]));
    const long day = parse_date(row[0]).time_since_epoch().count();
    const std::array<double, 3> v = {csv::to_double(row[2], "east_mm"), csv::to_double(row[3], "north_mm"),
                                     csv::to_double(row[4], "up_mm")};
    if (!records[*idx].emplace(day, v).second)
      throw std::runtime_error(fmt::format("load_series: duplicate record for '{}' on {}", row[1], row[0]));
  }

  long first = std::numeric_limits<long>::min();
  long last = std::numeric_limits<long>::max();
  for (std::size_t s = 0; s < ns; ++s) {
    if (records[s].empty())
      throw std::runtime_error(fmt::format("load_series: station '{}' has no data", geom[s].id));
    first = std::max(first, records[s].begin()->first);
    last = std::min(last, records[s].rbegin()->first);
  }
  if (first > last) throw std::runtime_error("load_series: station spans do not overlap");
  const auto len = static_cast<std::size_t>(last - first + 1);

  Dataset data;
  data.geometry = geom;
  data.start_date = std::chrono::sys_days{std::chrono::days{first}};
  data.samples = Tensor(len, 3 * ns);
  data.days.resize(len);
  for (std::size_t t = 0; t < len; ++t) data.days[t] = static_cast<long>(t);

  for (std::size_t s = 0; s < ns; ++s) {
    const auto& rec = records[s];
    const auto present = static_cast<std::size_t>(
        std::count_if(rec.begin(), rec.end(), [&](const auto& kv) { return kv.first >= first && kv.first <= last; }));
    const double missing = 1.0 - static_cast<double>(present) / static_cast<double>(len);
    if (missing > options.max_missing_fraction)
      throw std::runtime_error(fmt::format("load_series: station '{}' is missing {:.1f}% of days", geom[s].id,
                                           100.0 * missing));
    for (std::size_t t = 0; t < len; ++t) {
      const long day = first + static_cast<long>(t);
      std::array<double, 3> v{};
      if (auto it = rec.find(day); it != rec.end()) {
        v = it->second;
      } else {
        // Interior by construction: every station has records at or before `first` and at or after `last`.
        auto hi = rec.upper_bound(day);
        auto lo = std::prev(hi);
        const double w = static_cast<double>(day - lo->first) / static_cast<double>(hi->first - lo->first);
        for (int c = 0; c < 3; ++c) v[c] = lo->second[c] + w * (hi->second[c] - lo->second[c]);
      }
      for (std::size_t c = 0; c < 3; ++c) data.samples(t, c * ns + s) = v[c];
    }
  }

  data.offsets.assign(3 * ns, 0.0);
  for (std::size_t j = 0; j < 3 * ns; ++j) {
    double m = 0.0;
    for (std::size_t t = 0; t < len; ++t) m += data.samples(t, j);
    m /= static_cast<double>(len);
    data.offsets[j] = m;
    for (std::size_t t = 0; t < len; ++t) data.samples(t, j) -= m;
  }
  return data;
}

void write_series(const Dataset& data, const std::filesystem::path& path) {
  const std::vector<std::string> header = {"date", "station", "east_mm", "north_mm", "up_mm"};
  csv::Writer w(path, header);
  const std::size_t ns = data.geometry.size();
  for (std::size_t t = 0; t < data.size(); ++t) {
    const std::string date = format_date(data.start_date + std::chrono::days{data.days[t]});
    for (std::size_t s = 0; s < ns; ++s) {
      const std::vector<std::string> cells = {
          date, data.geometry[s].id, csv::format_double(data.samples(t, s) + data.offsets[s]),
          csv::format_double(data.samples(t, ns + s) + data.offsets[ns + s]),
          csv::format_double(data.samples(t, 2 * ns + s) + data.offsets[2 * ns + s])};
      w.row(cells);
    }
  }
  w.close();
}

Split split(const Dataset& data, DayRange window, std::uint64_t seed) {
  if (data.size() == 0) throw std::invalid_argument("split: empty dataset");
  if (window.first >= window.last) throw std::invalid_argument("split: empty event window");
  if (window.first < data.days.front() || window.last > data.days.back() + 1)
    throw std::invalid_argument(fmt::format("split: event window [{}, {}) outside dataset days [{}, {}]",
                                            window.first, window.last, data.days.front(), data.days.back()));
  std::vector<std::size_t> test;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < data.size(); ++i) (window.contains(data.days[i]) ? test : rest).push_back(i);
  if (rest.empty()) throw std::invalid_argument("split: no samples outside the event window for train/val");

  CounterRng rng(seed, 0x5b17);
  rng.shuffle(rest);
  const std::size_t n_val = rest.size() / 10;
  std::vector<std::size_t> val(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(rest.begin() + static_cast<std::ptrdiff_t>(n_val), rest.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  Split out{data.subset(train), data.subset(val), data.subset(test)};
  out.test.event_window = window;
  return out;
}

}  // namespace pila::gnss
