#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pila::report {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

struct SvgOptions {
  double width = 760.0;
  double height = 360.0;
  // Written as an XML comment; leave empty for byte-stable output.
  std::optional<std::string> timestamp;
};

// Standalone SVG line chart (one or more series, shared axes, legend).
std::string render_line_plot(const Plot& plot, const SvgOptions& options = {});
// Several panels stacked vertically in one SVG.
std::string render_panels(const std::vector<Plot>& panels, const SvgOptions& options = {});

void write_text(const std::filesystem::path& path, const std::string& text);

// Horizontal bars, one per label.
std::string render_bars(const std::string& title, const std::vector<std::string>& labels,
                        const std::vector<double>& values, const SvgOptions& options = {});

// Renders the figures of an `eval` output directory (parameters.csv, decomposition.csv) into
// `out_dir`. Returns the files written.
std::vector<std::filesystem::path> render_eval_report(const std::filesystem::path& eval_dir,
                                                      const std::filesystem::path& out_dir,
                                                      const SvgOptions& options);

// Loss curves from a training history CSV.
std::vector<std::filesystem::path> render_history_report(const std::filesystem::path& history_csv,
                                                         const std::filesystem::path& out_dir,
                                                         const SvgOptions& options);

// Bar-style comparison of the metric columns across the rows of a sweep/comparison CSV.
std::vector<std::filesystem::path> render_comparison_report(const std::filesystem::path& table_csv,
                                                            const std::filesystem::path& out_dir,
                                                            const SvgOptions& options);

}  // namespace pila::report
