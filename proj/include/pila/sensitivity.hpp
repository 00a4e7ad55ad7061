#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pila/mogi.hpp"

namespace pila::mogi {

struct SweepAxis {
  Variable variable = Variable::depth;
  std::size_t points = 21;  // evenly spaced over the variable's bounds, endpoints included
};

struct GridSpec {
  std::vector<SweepAxis> swept;       // one or two axes
  std::map<Variable, double> fixed;   // physical units; unlisted sit at mid-range, volume at its max
  double poisson = 0.25;
};

// Parses "depth" / "xm,ym" and "dv=3.7e6,depth=9" style strings.
GridSpec parse_grid_spec(const std::string& sweep, const std::string& fixed, std::size_t points);

struct SensitivityRow {
  std::vector<double> coords;  // swept-variable values at this grid point, physical units
  Variable wrt = Variable::depth;
  std::size_t output = 0;
  double gradient = 0.0;      // d X_F[output] / d eta_wrt
  double standardized = 0.0;  // gradient / output_std[output]
};

// Gradient of the physical reconstruction with respect to each swept normalized variable at
// every grid point, divided per output dimension by that dimension's data standard deviation.
std::vector<SensitivityRow> sensitivity_profile(const VariableBounds& bounds, const StationGeometry& geom,
                                                const GridSpec& spec, std::span<const double> output_std);

void write_sensitivity_csv(const std::filesystem::path& path, const GridSpec& spec,
                           const StationGeometry& geom, std::span<const SensitivityRow> rows);

}  // namespace pila::mogi
