#include "pila/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pila/csv.hpp"

namespace pila {
namespace {

double column_std(const Tensor& t, std::size_t col) {
  const auto n = static_cast<double>(t.rows());
  double m = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) m += t(i, col);
  m /= n;
  double v = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) v += (t(i, col) - m) * (t(i, col) - m);
  return std::sqrt(v / n);
}

double rise(std::span<const double> s, std::size_t edge) {
  double head = 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < edge; ++i) {
    head += s[i];
    tail += s[s.size() - edge + i];
  }
  return (tail - head) / static_cast<double>(edge);
}

std::string optional_cell(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); }

}  // namespace

double location_temporal_std(const Tensor& physical) {
  if (physical.rows() == 0 || physical.cols() != mogi::kNumVariables)
    throw ShapeError("location_temporal_std", physical.shape(), "expected [n x 4], n >= 1");
  return std::hypot(column_std(physical, 0), column_std(physical, 1));
}

std::optional<double> event_capture_ratio(std::span<const double> predicted, std::span<const double> truth,
                                          std::size_t edge) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument(fmt::format("event_capture_ratio: {} predictions vs {} truths", predicted.size(),
                                            truth.size()));
  edge = std::min(edge, predicted.size() / 2);
  if (edge == 0) return std::nullopt;
  const double true_rise = rise(truth, edge);
  if (true_rise == 0.0) return std::nullopt;
  return rise(predicted, edge) / true_rise;
}

double saturation_fraction(const Tensor& eta) {
  if (eta.size() == 0) return 0.0;
  std::size_t n = 0;
  for (double v : eta.values())
    if (std::abs(v - 0.5) > 0.49) ++n;
  return static_cast<double>(n) / static_cast<double>(eta.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("pearson: size mismatch or empty");
  const auto n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;  // a constant series carries no linear signal
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double separation_score(const Tensor& x_f, const Tensor& volcanic, const Tensor& seasonal) {
  if (x_f.shape() != volcanic.shape() || x_f.shape() != seasonal.shape())
    throw ShapeError("separation_score", x_f.shape(), volcanic.shape());
  return pearson(x_f.values(), volcanic.values()) - pearson(x_f.values(), seasonal.values());
}

std::vector<std::string> metrics_columns() {
  return {"test_mse", "mae_xm_km",      "mae_ym_km",     "mae_depth_km", "mae_dv_m3",
          "location_std_km", "event_capture", "saturation", "separation"};
}

std::vector<std::string> metrics_cells(const Metrics& m) {
  std::vector<std::string> c = {csv::format_double(m.test_mse)};
  for (std::size_t k = 0; k < 4; ++k) c.push_back(m.mae ? csv::format_double((*m.mae)[k]) : std::string());
  c.push_back(csv::format_double(m.location_std_km));
  c.push_back(optional_cell(m.event_capture));
  c.push_back(csv::format_double(m.saturation));
  c.push_back(optional_cell(m.separation));
  return c;
}

Evaluation evaluate(const InverseModel& model, const gnss::Dataset& data) {
  const std::size_t d = model.context().dim();
  if (data.dim() != d)
    throw std::invalid_argument(
        fmt::format("evaluate: dataset has {} dimensions but the checkpoint expects {}", data.dim(), d));
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  for (std::size_t s = 0; s < model.context().geometry.size(); ++s)
    if (model.context().geometry[s].id != data.geometry[s].id)
      throw std::invalid_argument(fmt::format("evaluate: station {} is '{}' in the checkpoint but '{}' in the data",
                                              s, model.context().geometry[s].id, data.geometry[s].id));
  Evaluation ev;
  ev.inference = model.infer(data.samples);
  const Inference& inf = ev.inference;
  Metrics& m = ev.metrics;

  double acc = 0.0;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const double e = data.samples[i] - inf.x_c[i];
    acc += e * e;
  }
  m.test_mse = acc / static_cast<double>(data.samples.size());
  m.location_std_km = location_temporal_std(inf.physical);
  m.saturation = saturation_fraction(inf.eta);

  if (data.truth) {
    const auto& t = *data.truth;
    std::array<double, 4> mae{};
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t k = 0; k < 4; ++k) mae[k] += std::abs(inf.physical(i, k) - t.params(i, k));
    for (double& v : mae) v /= static_cast<double>(data.size());
    m.mae = mae;
    std::vector<double> pred(data.size());
    std::vector<double> truth(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      pred[i] = inf.physical(i, 3);
      truth[i] = t.params(i, 3);
    }
    m.event_capture = event_capture_ratio(pred, truth);
    m.separation = separation_score(inf.x_f, t.volcanic, t.seasonal);
  }
  return ev;
}

void write_metrics_csv(const std::filesystem::path& path, const Metrics& m) {
  csv::Writer w(path, metrics_columns());
  w.row(metrics_cells(m));
  w.close();
}

void write_parameters_csv(const std::filesystem::path& path, const gnss::Dataset& data, const Inference& inf) {
  std::vector<std::string> header = {"day", "date", "eta_xm", "eta_ym", "eta_depth", "eta_dv",
                                     "xm_km", "ym_km", "depth_km", "dv_m3"};
  if (data.truth)
    for (const char* h : {"true_xm_km", "true_ym_km", "true_depth_km", "true_dv_m3"}) header.emplace_back(h);
  csv::Writer w(path, header);
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < data.size(); ++i) {
    cells = {std::to_string(data.days[i]), gnss::format_date(data.start_date + std::chrono::days{data.days[i]})};
    for (std::size_t k = 0; k < 4; ++k) cells.push_back(csv::format_double(inf.eta(i, k)));
    for (std::size_t k = 0; k < 4; ++k) cells.push_back(csv::format_double(inf.physical(i, k)));
    if (data.truth)
      for (std::size_t k = 0; k < 4; ++k) cells.push_back(csv::format_double(data.truth->params(i, k)));
    w.row(cells);
  }
  w.close();
}

void write_decomposition_csv(const std::filesystem::path& path, const gnss::Dataset& data, const Inference& inf) {
  std::vector<std::string> header = {"day", "dimension", "observed", "x_f", "delta", "x_c"};
  if (data.truth) {
    header.emplace_back("true_volcanic");
    header.emplace_back("true_seasonal");
  }
  const auto names = data.geometry.dimension_names();
  csv::Writer w(path, header);
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j) {
      cells = {std::to_string(data.days[i]), names[j], csv::format_double(data.samples(i, j)),
               csv::format_double(inf.x_f(i, j)), csv::format_double(inf.delta(i, j)),
               csv::format_double(inf.x_c(i, j))};
      if (data.truth) {
        cells.push_back(csv::format_double(data.truth->volcanic(i, j)));
        cells.push_back(csv::format_double(data.truth->seasonal(i, j)));
      }
      w.row(cells);
    }
  }
  w.close();
}

}  // namespace pila
