#include "pila/mogi.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "pila/csv.hpp"

namespace pila::mogi {
namespace {

constexpr double kMetersPerKm = 1000.0;
constexpr double kMmPerMeter = 1000.0;

constexpr std::array<std::string_view, kNumVariables> kNames = {"xm", "ym", "depth", "dv"};

// Displacements (mm) at one station; lengths in meters.
struct Point {
  double e, n, v;
};

inline Point point_source(double dx, double dy, double d, double alpha) {
  const double r2 = dx * dx + dy * dy + d * d;
  const double r3 = r2 * std::sqrt(r2);
  const double k = alpha / r3 * kMmPerMeter;
  return {k * dx, k * dy, k * d};
}

inline double alpha_of(double volume_m3, double poisson) {
  return (1.0 - poisson) * volume_m3 / std::numbers::pi;
}

void forward_row(const Tensor& params, const StationGeometry& geom, double poisson, Tensor& out,
                 std::size_t row) {
  const std::size_t n = geom.size();
  const double xm = params(row, 0) * kMetersPerKm;
  const double ym = params(row, 1) * kMetersPerKm;
  const double d = params(row, 2) * kMetersPerKm;
  const double alpha = alpha_of(params(row, 3), poisson);
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = point_source(geom[i].x_km * kMetersPerKm - xm, geom[i].y_km * kMetersPerKm - ym, d, alpha);
    out(row, i) = p.e;
    out(row, n + i) = p.n;
    out(row, 2 * n + i) = p.v;
  }
}

void check_batch(const Tensor& params, const StationGeometry& geom) {
  if (params.cols() != kNumVariables) throw ShapeError("mogi::forward_batch", params.shape(), "expected 4 columns");
  if (geom.size() == 0) throw std::invalid_argument("mogi::forward_batch: empty station geometry");
  for (std::size_t r = 0; r < params.rows(); ++r)
    if (!(params(r, 2) > 0.0))
      throw std::invalid_argument(fmt::format("mogi::forward_batch: row {} has depth {} <= 0", r, params(r, 2)));
}

}  // namespace

std::string_view variable_name(Variable v) { return kNames.at(static_cast<std::size_t>(v)); }

Variable parse_variable(std::string_view name) {
  if (name == "xm" || name == "x_m") return Variable::x_m;
  if (name == "ym" || name == "y_m") return Variable::y_m;
  if (name == "depth" || name == "d") return Variable::depth;
  if (name == "dv" || name == "volume") return Variable::volume;
  throw std::invalid_argument(
      fmt::format("unknown variable '{}'; valid names: xm, ym, depth, dv", name));
}

const Range& VariableBounds::operator[](Variable v) const {
  switch (v) {
    case Variable::x_m: return x_m;
    case Variable::y_m: return y_m;
    case Variable::depth: return depth;
    case Variable::volume: return volume;
  }
  throw std::out_of_range("VariableBounds: bad variable");
}

void VariableBounds::validate() const {
  for (std::size_t i = 0; i < kNumVariables; ++i) {
    const Range& r = (*this)[i];
    if (!(r.min < r.max))
      throw std::invalid_argument(fmt::format("bounds for {}: min {} must be < max {}", kNames[i], r.min, r.max));
  }
  if (!(depth.min > 0.0)) throw std::invalid_argument("bounds for depth must be positive");
}

double VariableBounds::horizontal_diagonal_km() const { return std::hypot(x_m.span(), y_m.span()); }

double MogiParams::get(Variable v) const {
  switch (v) {
    case Variable::x_m: return x_m_km;
    case Variable::y_m: return y_m_km;
    case Variable::depth: return depth_km;
    case Variable::volume: return volume_m3;
  }
  throw std::out_of_range("MogiParams: bad variable");
}

void MogiParams::set(Variable v, double value) {
  switch (v) {
    case Variable::x_m: x_m_km = value; return;
    case Variable::y_m: y_m_km = value; return;
    case Variable::depth: depth_km = value; return;
    case Variable::volume: volume_m3 = value; return;
  }
}

StationGeometry::StationGeometry(std::vector<Station> stations) : stations_(std::move(stations)) {
  std::set<std::string> seen;
  for (const auto& s : stations_) {
    if (s.id.empty()) throw std::invalid_argument("station with empty id");
    if (!seen.insert(s.id).second) throw std::invalid_argument(fmt::format("duplicate station '{}'", s.id));
    if (!std::isfinite(s.x_km) || !std::isfinite(s.y_km))
      throw std::invalid_argument(fmt::format("station '{}' has non-finite coordinates", s.id));
  }
}

std::optional<std::size_t> StationGeometry::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < stations_.size(); ++i)
    if (stations_[i].id == id) return i;
  return std::nullopt;
}

std::vector<std::string> StationGeometry::dimension_names() const {
  std::vector<std::string> names;
  names.reserve(observation_dim());
  for (const char* prefix : {"E_", "N_", "U_"})
    for (const auto& s : stations_) names.push_back(prefix + s.id);
  return names;
}

StationGeometry StationGeometry::random_layout(std::size_t n, const VariableBounds& bounds, CounterRng rng) {
  std::vector<Station> st;
  st.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(bounds.x_m.min, bounds.x_m.max);
    const double y = rng.uniform(bounds.y_m.min, bounds.y_m.max);
    st.push_back(Station{fmt::format("ST{:02d}", i + 1), x, y});
  }
  return StationGeometry(std::move(st));
}

StationGeometry StationGeometry::read_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const std::vector<std::string> header = {"station", "x_km", "y_km"};
  csv::require_header(table, header, path);
  std::vector<Station> st;
  for (const auto& row : table.rows)
    st.push_back(Station{row[0], csv::to_double(row[1], "x_km"), csv::to_double(row[2], "y_km")});
  if (st.empty()) throw std::runtime_error(fmt::format("'{}' lists no stations", path.string()));
  return StationGeometry(std::move(st));
}

void StationGeometry::write_csv(const std::filesystem::path& path) const {
  const std::vector<std::string> header = {"station", "x_km", "y_km"};
  csv::Writer w(path, header);
  for (const auto& s : stations_) {
    const std::vector<std::string> cells = {s.id, csv::format_double(s.x_km), csv::format_double(s.y_km)};
    w.row(cells);
  }
  w.close();
}

MogiParams rescale(std::span<const double> eta, const VariableBounds& bounds, double poisson) {
  if (eta.size() != kNumVariables)
    throw std::invalid_argument(fmt::format("rescale: expected 4 normalized values, got {}", eta.size()));
  MogiParams p;
  p.poisson = poisson;
  for (std::size_t i = 0; i < kNumVariables; ++i) {
    if (!(eta[i] >= 0.0 && eta[i] <= 1.0))
      throw std::domain_error(fmt::format("rescale: normalized {} = {} outside [0, 1]", kNames[i], eta[i]));
    const Range& r = bounds[i];
    p.set(static_cast<Variable>(i), r.span() * eta[i] + r.min);
  }
  return p;
}

std::array<double, kNumVariables> normalize(const MogiParams& p, const VariableBounds& bounds) {
  std::array<double, kNumVariables> eta{};
  for (std::size_t i = 0; i < kNumVariables; ++i) {
    const Range& r = bounds[i];
    eta[i] = (p.get(static_cast<Variable>(i)) - r.min) / r.span();
  }
  return eta;
}

DisplacementField forward(const MogiParams& params, const StationGeometry& geom) {
  if (!(params.depth_km > 0.0)) throw std::invalid_argument("mogi::forward: depth must be > 0");
  if (geom.size() == 0) throw std::invalid_argument("mogi::forward: empty station geometry");
  const std::size_t n = geom.size();
  DisplacementField out{std::vector<double>(3 * n)};
  const double xm = params.x_m_km * kMetersPerKm;
  const double ym = params.y_m_km * kMetersPerKm;
  const double d = params.depth_km * kMetersPerKm;
  const double alpha = alpha_of(params.volume_m3, params.poisson);
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = point_source(geom[i].x_km * kMetersPerKm - xm, geom[i].y_km * kMetersPerKm - ym, d, alpha);
    out.values[i] = p.e;
    out.values[n + i] = p.n;
    out.values[2 * n + i] = p.v;
  }
  for (double v : out.values)
    if (!std::isfinite(v)) throw std::logic_error("mogi::forward produced a non-finite displacement");
  return out;
}

Tensor jacobian(const MogiParams& params, const StationGeometry& geom) {
  if (!(params.depth_km > 0.0)) throw std::invalid_argument("mogi::jacobian: depth must be > 0");
  const std::size_t n = geom.size();
  Tensor jac(3 * n, kNumVariables);
  const double xm = params.x_m_km * kMetersPerKm;
  const double ym = params.y_m_km * kMetersPerKm;
  const double d = params.depth_km * kMetersPerKm;
  const double alpha = alpha_of(params.volume_m3, params.poisson);
  const double dalpha = (1.0 - params.poisson) / std::numbers::pi;
  // Chain factor: parameter in km -> meters, displacement m -> mm.
  const double len = kMetersPerKm * kMmPerMeter;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = geom[i].x_km * kMetersPerKm - xm;
    const double dy = geom[i].y_km * kMetersPerKm - ym;
    const double r2 = dx * dx + dy * dy + d * d;
    const double r = std::sqrt(r2);
    const double r3 = r2 * r;
    const double r5 = r3 * r2;
    const double a3 = alpha / r3;
    const double a5 = 3.0 * alpha / r5;
    // east
    jac(i, 0) = (a5 * dx * dx - a3) * len;
    jac(i, 1) = a5 * dx * dy * len;
    jac(i, 2) = -a5 * dx * d * len;
    jac(i, 3) = dalpha * dx / r3 * kMmPerMeter;
    // north
    jac(n + i, 0) = a5 * dy * dx * len;
    jac(n + i, 1) = (a5 * dy * dy - a3) * len;
    jac(n + i, 2) = -a5 * dy * d * len;
    jac(n + i, 3) = dalpha * dy / r3 * kMmPerMeter;
    // vertical
    jac(2 * n + i, 0) = a5 * d * dx * len;
    jac(2 * n + i, 1) = a5 * d * dy * len;
    jac(2 * n + i, 2) = (a3 - a5 * d * d) * len;
    jac(2 * n + i, 3) = dalpha * d / r3 * kMmPerMeter;
  }
  return jac;
}

namespace serial {
Tensor forward_batch(const Tensor& params, const StationGeometry& geom, double poisson) {
  check_batch(params, geom);
  Tensor out(params.rows(), geom.observation_dim());
  for (std::size_t r = 0; r < params.rows(); ++r) forward_row(params, geom, poisson, out, r);
  return out;
}
}  // namespace serial

namespace omp {
Tensor forward_batch(const Tensor& params, const StationGeometry& geom, double poisson) {
  check_batch(params, geom);
  Tensor out(params.rows(), geom.observation_dim());
  const auto rows = static_cast<std::int64_t>(params.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) forward_row(params, geom, poisson, out, static_cast<std::size_t>(r));
  return out;
}
}  // namespace omp

Tensor forward_batch(const Tensor& params, const StationGeometry& geom, double poisson) {
  return params.rows() * geom.size() >= 4096 ? omp::forward_batch(params, geom, poisson)
                                             : serial::forward_batch(params, geom, poisson);
}

Var rescale(Var eta, const VariableBounds& bounds) {
  if (eta.shape().cols != kNumVariables) throw ShapeError("mogi::rescale", eta.shape(), "expected 4 columns");
  Tape& tape = eta.tape();
  std::vector<double> span(kNumVariables), lo(kNumVariables);
  for (std::size_t i = 0; i < kNumVariables; ++i) {
    span[i] = bounds[i].span();
    lo[i] = bounds[i].min;
  }
  Var s = tape.constant(Tensor::row(span));
  Var m = tape.constant(Tensor::row(lo));
  return add(mul(eta, s), m);
}

Var forward(Var physical, const StationGeometry& geom, double poisson) {
  if (physical.shape().cols != kNumVariables)
    throw ShapeError("mogi::forward", physical.shape(), "expected 4 columns");
  if (geom.size() == 0) throw std::invalid_argument("mogi::forward: empty station geometry");
  Tape& tape = physical.tape();
  std::vector<double> sx, sy;
  for (const auto& s : geom.stations()) {
    sx.push_back(s.x_km * kMetersPerKm);
    sy.push_back(s.y_km * kMetersPerKm);
  }
  Var station_x = tape.constant(Tensor::row(sx));
  Var station_y = tape.constant(Tensor::row(sy));

  Var xm = scale(slice_cols(physical, 0, 1), kMetersPerKm);  // [n x 1]
  Var ym = scale(slice_cols(physical, 1, 2), kMetersPerKm);
  Var d = scale(slice_cols(physical, 2, 3), kMetersPerKm);
  Var alpha = scale(slice_cols(physical, 3, 4), (1.0 - poisson) / std::numbers::pi);

  Var dx = sub(station_x, xm);  // [n x N]
  Var dy = sub(station_y, ym);
  Var r2 = add(add(square(dx), square(dy)), square(d));
  Var k = scale(div(alpha, pow(r2, 1.5)), kMmPerMeter);
  const Var parts[] = {mul(k, dx), mul(k, dy), mul(k, d)};
  return concat_cols(std::span<const Var>(parts));
}

}  // namespace pila::mogi
