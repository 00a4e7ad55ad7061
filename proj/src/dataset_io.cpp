#include "pila/dataset_io.hpp"

#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "pila/csv.hpp"

namespace pila::gnss {
namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

const std::vector<std::string> kParamNames = {"xm_km", "ym_km", "depth_km", "dv_m3"};

struct TruthFile {
  const char* file;
  Tensor GroundTruth::*member;
};
constexpr TruthFile kTruthFiles[] = {{"truth_volcanic.csv", &GroundTruth::volcanic},
                                     {"truth_trend.csv", &GroundTruth::trend},
                                     {"truth_seasonal.csv", &GroundTruth::seasonal},
                                     {"truth_noise.csv", &GroundTruth::noise}};

}  // namespace

void write_matrix_csv(const fs::path& path, std::span<const long> days, const std::vector<std::string>& names,
                      const Tensor& m) {
  if (m.rows() != days.size() || m.cols() != names.size())
    throw ShapeError("write_matrix_csv", m.shape(), Shape{days.size(), names.size()});
  std::vector<std::string> header = {"day"};
  header.insert(header.end(), names.begin(), names.end());
  csv::Writer w(path, header);
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    cells.assign(1, std::to_string(days[i]));
    for (std::size_t j = 0; j < m.cols(); ++j) cells.push_back(csv::format_double(m(i, j)));
    w.row(cells);
  }
  w.close();
}

Tensor read_matrix_csv(const fs::path& path, const std::vector<std::string>& names, std::vector<long>* days) {
  const auto t = csv::read(path);
  std::vector<std::string> header = {"day"};
  header.insert(header.end(), names.begin(), names.end());
  csv::require_header(t, header, path);
  Tensor m(t.rows.size(), names.size());
  if (days) days->clear();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (days) days->push_back(csv::to_long(t.rows[i][0], "day"));
    for (std::size_t j = 0; j < names.size(); ++j) m(i, j) = csv::to_double(t.rows[i][j + 1], names[j]);
  }
  return m;
}

void write_dataset(const Dataset& data, const fs::path& dir) {
  fs::create_directories(dir);
  data.geometry.write_csv(dir / "stations.csv");
  write_series(data, dir / "observations.csv");
  const auto names = data.geometry.dimension_names();
  write_matrix_csv(dir / "samples.csv", data.days, names, data.samples);
  if (data.truth) {
    for (const auto& f : kTruthFiles) write_matrix_csv(dir / f.file, data.days, names, (*data.truth).*f.member);
    write_matrix_csv(dir / "truth_params.csv", data.days, kParamNames, data.truth->params);
  }

  pt::ptree meta;
  meta.put("dataset.start_date", format_date(data.start_date));
  meta.put("dataset.days", data.size());
  meta.put("dataset.stations", data.geometry.size());
  meta.put("dataset.synthetic", data.truth ? "true" : "false");
  if (data.event_window) {
    meta.put("dataset.event_first_day", data.event_window->first);
    meta.put("dataset.event_last_day", data.event_window->last);
  }
  std::vector<std::string> offsets;
  for (double o : data.offsets) offsets.push_back(csv::format_double(o));
  meta.put("dataset.offsets", fmt::format("{}", fmt::join(offsets, " ")));
  pt::write_ini((dir / "meta.ini").string(), meta);
}

Dataset read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error(fmt::format("dataset directory '{}' not found", dir.string()));
  pt::ptree meta;
  try {
    pt::read_ini((dir / "meta.ini").string(), meta);
  } catch (const pt::ini_parser_error& e) {
    throw std::runtime_error(fmt::format("cannot read dataset metadata: {}", e.what()));
  }
  Dataset data;
  data.geometry = mogi::StationGeometry::read_csv(dir / "stations.csv");
  const auto names = data.geometry.dimension_names();
  data.samples = read_matrix_csv(dir / "samples.csv", names, &data.days);
  data.start_date = parse_date(meta.get<std::string>("dataset.start_date"));
  if (auto first = meta.get_optional<long>("dataset.event_first_day"))
    data.event_window = DayRange{*first, meta.get<long>("dataset.event_last_day")};
  std::istringstream offs(meta.get<std::string>("dataset.offsets", ""));
  for (std::string tok; offs >> tok;) data.offsets.push_back(csv::to_double(tok, "offset"));
  if (data.offsets.empty()) data.offsets.assign(data.dim(), 0.0);
  if (data.offsets.size() != data.dim())
    throw std::runtime_error(fmt::format("meta.ini lists {} offsets for {} columns", data.offsets.size(), data.dim()));

  if (meta.get<std::string>("dataset.synthetic", "false") == "true") {
    GroundTruth t;
    for (const auto& f : kTruthFiles) t.*f.member = read_matrix_csv(dir / f.file, names);
    t.params = read_matrix_csv(dir / "truth_params.csv", kParamNames);
    for (const auto& f : kTruthFiles)
      if ((t.*f.member).rows() != data.size())
        throw std::runtime_error(fmt::format("{} has {} rows, samples.csv {}", f.file, (t.*f.member).rows(), data.size()));
    data.truth = std::move(t);
  }
  return data;
}

}  // namespace pila::gnss
