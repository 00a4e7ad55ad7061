#include "pila/sensitivity.hpp"

#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "pila/csv.hpp"

namespace pila::mogi {
namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

GridSpec parse_grid_spec(const std::string& sweep, const std::string& fixed, std::size_t points) {
  if (points < 2) throw std::invalid_argument("sensitivity: need at least 2 grid points per axis");
  GridSpec spec;
  for (const auto& name : split_list(sweep)) spec.swept.push_back(SweepAxis{parse_variable(name), points});
  if (spec.swept.empty() || spec.swept.size() > 2)
    throw std::invalid_argument("sensitivity: sweep one or two variables (e.g. 'depth' or 'xm,ym')");
  if (spec.swept.size() == 2 && spec.swept[0].variable == spec.swept[1].variable)
    throw std::invalid_argument("sensitivity: swept variables must differ");
  for (const auto& kv : split_list(fixed)) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(fmt::format("sensitivity: bad fixed value '{}'", kv));
    const Variable v = parse_variable(kv.substr(0, eq));
    spec.fixed[v] = csv::to_double(kv.substr(eq + 1), kv.substr(0, eq));
  }
  for (const auto& axis : spec.swept)
    if (spec.fixed.contains(axis.variable))
      throw std::invalid_argument(
          fmt::format("sensitivity: '{}' is both swept and fixed", variable_name(axis.variable)));
  return spec;
}

std::vector<SensitivityRow> sensitivity_profile(const VariableBounds& bounds, const StationGeometry& geom,
                                                const GridSpec& spec, std::span<const double> output_std) {
  bounds.validate();
  if (spec.swept.empty() || spec.swept.size() > 2)
    throw std::invalid_argument("sensitivity_profile: sweep one or two variables");
  if (output_std.size() != geom.observation_dim())
    throw std::invalid_argument(fmt::format("sensitivity_profile: {} standard deviations for {} outputs",
                                            output_std.size(), geom.observation_dim()));
  for (std::size_t k = 0; k < output_std.size(); ++k)
    if (!(output_std[k] > 0.0))
      throw std::invalid_argument(fmt::format("sensitivity_profile: output {} has std {}", k, output_std[k]));

  MogiParams base;
  base.poisson = spec.poisson;
  for (std::size_t i = 0; i < kNumVariables; ++i) {
    const auto v = static_cast<Variable>(i);
    const auto it = spec.fixed.find(v);
    if (it != spec.fixed.end()) base.set(v, it->second);
    else if (v == Variable::volume) base.set(v, bounds[i].max);  // mid-range is zero volume: flat everywhere
    else base.set(v, 0.5 * (bounds[i].min + bounds[i].max));
  }

  auto axis_value = [&](const SweepAxis& a, std::size_t k) {
    const Range& r = bounds[a.variable];
    return r.min + r.span() * static_cast<double>(k) / static_cast<double>(a.points - 1);
  };

  const std::size_t n0 = spec.swept[0].points;
  const std::size_t n1 = spec.swept.size() > 1 ? spec.swept[1].points : 1;
  std::vector<SensitivityRow> rows;
  rows.reserve(n0 * n1 * spec.swept.size() * geom.observation_dim());
  for (std::size_t a = 0; a < n0; ++a) {
    for (std::size_t b = 0; b < n1; ++b) {
      MogiParams p = base;
      std::vector<double> coords;
      coords.push_back(axis_value(spec.swept[0], a));
      p.set(spec.swept[0].variable, coords.back());
      if (spec.swept.size() > 1) {
        coords.push_back(axis_value(spec.swept[1], b));
        p.set(spec.swept[1].variable, coords.back());
      }
      const Tensor jac = jacobian(p, geom);
      for (const auto& axis : spec.swept) {
        const auto col = static_cast<std::size_t>(axis.variable);
        const double chain = bounds[axis.variable].span();
        for (std::size_t k = 0; k < jac.rows(); ++k) {
          const double g = jac(k, col) * chain;
          rows.push_back(SensitivityRow{coords, axis.variable, k, g, g / output_std[k]});
        }
      }
    }
  }
  return rows;
}

void write_sensitivity_csv(const std::filesystem::path& path, const GridSpec& spec,
                           const StationGeometry& geom, std::span<const SensitivityRow> rows) {
  std::vector<std::string> header;
  for (const auto& axis : spec.swept) header.emplace_back(variable_name(axis.variable));
  for (const char* h : {"wrt", "output", "gradient", "standardized_gradient"}) header.emplace_back(h);
  const auto names = geom.dimension_names();
  csv::Writer w(path, header);
  std::vector<std::string> cells;
  for (const auto& r : rows) {
    cells.clear();
    for (double c : r.coords) cells.push_back(csv::format_double(c));
    cells.emplace_back(variable_name(r.wrt));
    cells.push_back(names.at(r.output));
    cells.push_back(csv::format_double(r.gradient));
    cells.push_back(csv::format_double(r.standardized));
    w.row(cells);
  }
  w.close();
}

}  // namespace pila::mogi
