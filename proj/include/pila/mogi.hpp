#pragma once

#include <array>
#include <optional>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pila/rng.hpp"
#include "pila/tape.hpp"

namespace pila::mogi {

// Order of the four source variables everywhere (normalized vectors, Jacobian columns).
enum class Variable : std::size_t { x_m = 0, y_m = 1, depth = 2, volume = 3 };
inline constexpr std::size_t kNumVariables = 4;

std::string_view variable_name(Variable v);
// Accepts "xm"/"x_m", "ym"/"y_m", "depth"/"d", "dv"/"volume". Throws listing valid names.
Variable parse_variable(std::string_view name);

struct Range {
  double min = 0.0;
  double max = 0.0;
  [[nodiscard]] double span() const { return max - min; }
};

// Physical search box. Lengths in km, volume change in m^3.
struct VariableBounds {
  Range x_m{-9.33, 14.35};
  Range y_m{-5.80, 7.62};
  Range depth{2.0, 20.0};
  Range volume{-10e6, 10e6};

  [[nodiscard]] const Range& operator[](Variable v) const;
  [[nodiscard]] const Range& operator[](std::size_t i) const { return (*this)[static_cast<Variable>(i)]; }
  void validate() const;
  [[nodiscard]] double horizontal_diagonal_km() const;
};

struct MogiParams {
  double x_m_km = 0.0;
  double y_m_km = 0.0;
  double depth_km = 1.0;
  double volume_m3 = 0.0;
  double poisson = 0.25;

  [[nodiscard]] double get(Variable v) const;
  void set(Variable v, double value);
};

struct Station {
  std::string id;
  double x_km = 0.0;
  double y_km = 0.0;
};

// Station order defines observation flattening: east block, north block, vertical block,
// each in station order.
class StationGeometry {
 public:
  StationGeometry() = default;
  explicit StationGeometry(std::vector<Station> stations);

  [[nodiscard]] std::size_t size() const { return stations_.size(); }
  [[nodiscard]] std::size_t observation_dim() const { return 3 * stations_.size(); }
  [[nodiscard]] const std::vector<Station>& stations() const { return stations_; }
  [[nodiscard]] const Station& operator[](std::size_t i) const { return stations_[i]; }
  [[nodiscard]] std::optional<std::size_t> index_of(std::string_view id) const;
  // "E_<id>", "N_<id>", "U_<id>" in flattening order.
  [[nodiscard]] std::vector<std::string> dimension_names() const;

  // n stations drawn uniformly inside the horizontal bounds; ids ST01..STnn.
  static StationGeometry random_layout(std::size_t n, const VariableBounds& bounds, CounterRng rng);

  // CSV with header `station,x_km,y_km`.
  static StationGeometry read_csv(const std::filesystem::path& path);
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<Station> stations_;
};

// Flattened displacement in mm, dimension 3 * stations.
struct DisplacementField {
  std::vector<double> values;

  [[nodiscard]] std::size_t stations() const { return values.size() / 3; }
  [[nodiscard]] double east(std::size_t i) const { return values[i]; }
  [[nodiscard]] double north(std::size_t i) const { return values[stations() + i]; }
  [[nodiscard]] double up(std::size_t i) const { return values[2 * stations() + i]; }
};

// Z = (max - min) * eta + min per variable. Throws if any eta is outside [0, 1].
MogiParams rescale(std::span<const double> eta, const VariableBounds& bounds, double poisson = 0.25);
std::array<double, kNumVariables> normalize(const MogiParams& p, const VariableBounds& bounds);

// Point-source surface displacement with uplift positive for inflation.
DisplacementField forward(const MogiParams& params, const StationGeometry& geom);

// d(displacement mm) / d(x_m km, y_m km, depth km, volume m^3): [3N x 4].
Tensor jacobian(const MogiParams& params, const StationGeometry& geom);

// Batched forward over rows of `params` ([n x 4] physical units); serial reference and
// OpenMP version are interchangeable bit for bit.
namespace serial {
Tensor forward_batch(const Tensor& params, const StationGeometry& geom, double poisson = 0.25);
}
namespace omp {
Tensor forward_batch(const Tensor& params, const StationGeometry& geom, double poisson = 0.25);
}
Tensor forward_batch(const Tensor& params, const StationGeometry& geom, double poisson = 0.25);

// Differentiable path used inside the models: eta [n x 4] in (0,1) -> displacement [n x 3N].
// Built from primitive tape ops so it stays independent of the closed-form Jacobian.
Var rescale(Var eta, const VariableBounds& bounds);
Var forward(Var physical, const StationGeometry& geom, double poisson = 0.25);

}  // namespace pila::mogi
