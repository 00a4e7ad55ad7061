#include "pila/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "pila/csv.hpp"

namespace pila::report {
namespace {

namespace fs = std::filesystem;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 34.0;
constexpr double kBottom = 44.0;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(double w, double h, const SvgOptions& o) {
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "viewBox=\"0 0 {:.0f} {:.0f}\" font-family=\"sans-serif\" font-size=\"11\">\n",
      w, h, w, h);
  if (o.timestamp) s += fmt::format("<!-- generated {} -->\n", escape(*o.timestamp));
  s += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", w, h);
  return s;
}

struct Extent {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi == lo) {
      const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.05;
      lo -= pad;
      hi += pad;
    }
  }
};

std::string panel(const Plot& plot, double w, double h, double y0) {
  Extent ex;
  Extent ey;
  for (const auto& s : plot.series) {
    for (double v : s.x) ex.add(v);
    for (double v : s.y) ey.add(v);
  }
  ex.settle();
  ey.settle();
  const double pw = w - kLeft - kRight;
  const double ph = h - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - ex.lo) / (ex.hi - ex.lo) * pw; };
  auto py = [&](double v) { return y0 + kTop + (1.0 - (v - ey.lo) / (ey.hi - ey.lo)) * ph; };

  std::string s;
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"13\" font-weight=\"bold\">{}</text>\n", kLeft,
                   y0 + 20.0, escape(plot.title));
  s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"#444\"/>\n",
                   kLeft, y0 + kTop, pw, ph);
  for (int i = 0; i <= 4; ++i) {
    const double fx = ex.lo + (ex.hi - ex.lo) * i / 4.0;
    const double fy = ey.lo + (ey.hi - ey.lo) * i / 4.0;
    s += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"#ddd\"/>\n", px(fx),
                     y0 + kTop, y0 + kTop + ph);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.4g}</text>\n", px(fx),
                     y0 + kTop + ph + 14.0, fx);
    s += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"#ddd\"/>\n", kLeft,
                     py(fy), kLeft + pw);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.4g}</text>\n", kLeft - 4.0,
                     py(fy) + 4.0, fy);
  }
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2.0,
                   y0 + h - 8.0, escape(plot.x_label));
  s += fmt::format("<text transform=\"translate(14,{:.1f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                   y0 + kTop + ph / 2.0, escape(plot.y_label));

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& ser = plot.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < std::min(ser.x.size(), ser.y.size()); ++i) {
      if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i])) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(ser.x[i]), py(ser.y[i]));
    }
    if (!pts.empty()) pts.pop_back();
    s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.3\" points=\"{}\"/>\n", color, pts);
    const double ly = y0 + kTop + 12.0 + 16.0 * static_cast<double>(k);
    s += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                     kLeft + pw + 10.0, ly, kLeft + pw + 30.0, color);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", kLeft + pw + 34.0, ly + 4.0, escape(ser.label));
  }
  return s;
}

std::vector<double> column(const csv::Table& t, const std::string& name) {
  const std::size_t c = t.column(name);
  std::vector<double> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows)
    out.push_back(r[c].empty() ? std::numeric_limits<double>::quiet_NaN() : csv::to_double(r[c], name));
  return out;
}

bool has_column(const csv::Table& t, const std::string& name) {
  return std::find(t.header.begin(), t.header.end(), name) != t.header.end();
}

fs::path emit(const fs::path& dir, const std::string& name, const std::string& svg) {
  const fs::path p = dir / name;
  write_text(p, svg);
  return p;
}

}  // namespace

std::string render_line_plot(const Plot& plot, const SvgOptions& options) {
  return render_panels({plot}, options);
}

std::string render_panels(const std::vector<Plot>& panels, const SvgOptions& options) {
  const double h = options.height * static_cast<double>(std::max<std::size_t>(1, panels.size()));
  std::string s = header(options.width, h, options);
  for (std::size_t i = 0; i < panels.size(); ++i)
    s += panel(panels[i], options.width, options.height, options.height * static_cast<double>(i));
  s += "</svg>\n";
  return s;
}

std::string render_bars(const std::string& title, const std::vector<std::string>& labels,
                        const std::vector<double>& values, const SvgOptions& options) {
  if (labels.size() != values.size()) throw std::invalid_argument("render_bars: labels vs values");
  const double row = 24.0;
  const double h = kTop + kBottom + row * static_cast<double>(labels.size());
  const double pw = options.width - kLeft - kRight;
  double hi = 0.0;
  for (double v : values)
    if (std::isfinite(v)) hi = std::max(hi, std::abs(v));
  if (hi == 0.0) hi = 1.0;
  std::string s = header(options.width, h, options);
  s += fmt::format("<text x=\"{:.1f}\" y=\"20\" font-size=\"13\" font-weight=\"bold\">{}</text>\n", kLeft,
                   escape(title));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = kTop + row * static_cast<double>(i);
    const double v = values[i];
    const double len = std::isfinite(v) ? std::abs(v) / hi * pw : 0.0;
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", kLeft - 6.0, y + 15.0,
                     escape(labels[i]));
    s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n", kLeft,
                     y + 3.0, len, row - 6.0, kPalette[i % std::size(kPalette)]);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", kLeft + len + 6.0, y + 15.0,
                     std::isfinite(v) ? fmt::format("{:.4g}", v) : std::string("n/a"));
  }
  s += "</svg>\n";
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("error writing '{}'", path.string()));
}

std::vector<fs::path> render_eval_report(const fs::path& eval_dir, const fs::path& out_dir,
                                         const SvgOptions& options) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  const auto params = csv::read(eval_dir / "parameters.csv");
  const auto day = column(params, "day");
  const bool truth = has_column(params, "true_dv_m3");

  Plot eta{"Normalized physical variables", "day", "eta", {}};
  for (const char* v : {"xm", "ym", "depth", "dv"}) eta.series.push_back({v, day, column(params, fmt::format("eta_{}", v))});
  written.push_back(emit(out_dir, "eta.svg", render_line_plot(eta, options)));

  Plot dv{"Volume change", "day", "dV (m^3)", {{"predicted", day, column(params, "dv_m3")}}};
  if (truth) dv.series.push_back({"true", day, column(params, "true_dv_m3")});
  written.push_back(emit(out_dir, "volume.svg", render_line_plot(dv, options)));

  std::vector<Plot> loc;
  for (const auto& [name, title] : std::vector<std::pair<std::string, std::string>>{
           {"xm_km", "Source x (km)"}, {"ym_km", "Source y (km)"}, {"depth_km", "Source depth (km)"}}) {
    Plot p{title, "day", "km", {{"predicted", day, column(params, name)}}};
    if (truth) p.series.push_back({"true", day, column(params, "true_" + name)});
    loc.push_back(std::move(p));
  }
  written.push_back(emit(out_dir, "location.svg", render_panels(loc, options)));

  // decomposition: one file per station, E/N/U panels
  const auto dec = csv::read(eval_dir / "decomposition.csv");
  const std::size_t c_day = dec.column("day");
  const std::size_t c_dim = dec.column("dimension");
  std::map<std::string, Plot> by_dim;
  std::vector<std::string> dim_order;
  for (const auto& r : dec.rows) {
    const std::string& dim = r[c_dim];
    auto [it, fresh] = by_dim.try_emplace(dim);
    if (fresh) {
      dim_order.push_back(dim);
      it->second.title = dim;
      it->second.x_label = "day";
      it->second.y_label = "mm";
      for (const char* s : {"observed", "x_f", "delta", "x_c"}) it->second.series.push_back({s, {}, {}});
    }
    const double d = csv::to_double(r[c_day], "day");
    std::size_t k = 0;
    for (const char* s : {"observed", "x_f", "delta", "x_c"}) {
      it->second.series[k].x.push_back(d);
      it->second.series[k].y.push_back(csv::to_double(r[dec.column(s)], s));
      ++k;
    }
  }
  std::map<std::string, std::vector<Plot>> stations;
  std::vector<std::string> station_order;
  for (const auto& dim : dim_order) {
    const std::string id = dim.size() > 2 ? dim.substr(2) : dim;
    if (!stations.contains(id)) station_order.push_back(id);
    stations[id].push_back(by_dim[dim]);
  }
  const fs::path sdir = out_dir / "stations";
  fs::create_directories(sdir);
  for (const auto& id : station_order)
    written.push_back(emit(sdir, fmt::format("{}.svg", id), render_panels(stations[id], options)));
  return written;
}

std::vector<fs::path> render_history_report(const fs::path& history_csv, const fs::path& out_dir,
                                            const SvgOptions& options) {
  fs::create_directories(out_dir);
  const auto t = csv::read(history_csv);
  const auto epoch = column(t, "epoch");
  Plot p{"Training losses (weighted)", "epoch", "loss", {}};
  for (const auto& h : t.header)
    if (h == "total" || h.starts_with("loss_") || h == "val_rec") p.series.push_back({h, epoch, column(t, h)});
  return {emit(out_dir, "history.svg", render_line_plot(p, options))};
}

std::vector<fs::path> render_comparison_report(const fs::path& table_csv, const fs::path& out_dir,
                                               const SvgOptions& options) {
  fs::create_directories(out_dir);
  const auto t = csv::read(table_csv);
  std::vector<std::string> labels;
  const bool swept = has_column(t, "value");
  for (const auto& r : t.rows) labels.push_back(swept ? r[t.column("value")] : r[0]);
  std::vector<fs::path> written;
  for (const char* metric : {"test_mse", "location_std_km", "saturation", "event_capture", "separation",
                             "mae_depth_km"}) {
    if (!has_column(t, metric)) continue;
    written.push_back(emit(out_dir, fmt::format("compare_{}.svg", metric),
                           render_bars(metric, labels, column(t, metric), options)));
  }
  return written;
}

}  // namespace pila::report
