#include "pila/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include "pila/checkpoint.hpp"
#include "pila/config.hpp"
#include "pila/csv.hpp"
#include "pila/dataset_io.hpp"
#include "pila/report.hpp"
#include "pila/sensitivity.hpp"

namespace pila::cli {
namespace {

namespace fs = std::filesystem;

// Refused before any work: bad arguments, existing output, missing inputs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
};

struct Options {
  Common common;
  // gen-data
  std::string geometry;
  std::string series;
  // train / eval / sweep
  std::string data;
  std::string checkpoint;
  std::string window;
  // sweep
  std::string axis;
  std::string values;
  std::size_t workers = 0;
  // sensitivity
  std::string sweep_vars;
  std::string fixed;
  std::size_t points = 21;
  // report
  std::string eval_dir;
  std::string history;
  std::vector<std::string> compare;
  bool deterministic = false;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot read '{}'", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Hash of a file or of every regular file in a directory (names and bytes, sorted by name).
std::string hash_input(const std::string& path) {
  if (path.empty()) return "none";
  const fs::path p(path);
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const auto& f : files) acc += f.filename().string() + '\0' + content_hash(read_file(f)) + '\n';
    return content_hash(acc);
  }
  if (!fs::exists(p)) throw ValidationError(fmt::format("input '{}' does not exist", path));
  return content_hash(read_file(p));
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (c.seed) cfg.set_seed(*c.seed);
  if (!c.out.empty()) {
    cfg.paths.output = c.out;
  } else if (const char* env = std::getenv("PILA_OUTPUT_DIR"); env && *env) {
    cfg.paths.output = env;
  }
  cfg.validate();
  return cfg;
}

std::size_t resolve_workers(std::size_t flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("PILA_WORKERS"); env && *env) {
    try {
      const long w = csv::to_long(env, "PILA_WORKERS");
      if (w >= 1) return static_cast<std::size_t>(w);
    } catch (const std::exception&) {
    }
    throw ValidationError(fmt::format("PILA_WORKERS='{}' must be a positive integer", env));
  }
  return 1;
}

// Creates <output>/<command>-<hash> and writes manifest.ini into it.
// Set while a command is writing; removed again if the command throws.
fs::path g_pending_dir;

void discard_pending() {
  std::error_code ec;
  if (!g_pending_dir.empty()) fs::remove_all(g_pending_dir, ec);
  g_pending_dir.clear();
}

fs::path open_run_dir(const std::string& command, const RunConfig& cfg,
                      const std::vector<std::pair<std::string, std::string>>& extras, bool force) {
  std::string body = fmt::format("[run]\ncommand = {}\n", command);
  for (const auto& [k, v] : extras) body += fmt::format("{} = {}\n", k, v);
  // where the run lands is not part of its identity
  RunConfig keyed = cfg;
  keyed.paths.output.clear();
  body += '\n' + to_ini(keyed);
  const std::string hash = content_hash(body);
  const fs::path dir = fs::path(cfg.paths.output) / fmt::format("{}-{}", command, hash);
  if (fs::exists(dir)) {
    if (!force)
      throw ValidationError(fmt::format("output directory '{}' already exists (use --force to overwrite)", dir.string()));
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
  g_pending_dir = dir;
  report::write_text(dir / "manifest.ini", fmt::format("# run manifest\nhash = {}\n\n{}", hash, body));
  return dir;
}

gnss::DayRange resolve_window(const std::string& flag, const gnss::Dataset& data, const RunConfig& cfg) {
  if (!flag.empty()) {
    const auto comma = flag.find(',');
    if (comma == std::string::npos) throw ValidationError("--window expects FIRST,LAST (half-open day range)");
    return gnss::DayRange{csv::to_long(flag.substr(0, comma), "--window first"),
                          csv::to_long(flag.substr(comma + 1), "--window last")};
  }
  if (data.event_window) return *data.event_window;
  return gnss::DayRange{cfg.scenario.test_first_day, cfg.scenario.test_last_day};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

void log_epoch(const EpochRecord& r, std::size_t epochs) {
  if (r.epoch % 10 != 0 && r.epoch + 1 != epochs) return;
  std::string parts;
  for (std::size_t k = 0; k < r.names.size(); ++k) parts += fmt::format(" {}={:.4g}", r.names[k], r.weighted[k]);
  std::cerr << fmt::format("epoch {:>4}/{} total={:.5g}{} val_rec={:.5g}\n", r.epoch + 1, epochs, r.total, parts,
                           r.val_rec);
}

gnss::Dataset require_dataset(const std::string& dir) {
  if (dir.empty()) throw ValidationError("--data <dataset dir> is required (output of gen-data)");
  if (!fs::is_directory(dir)) throw ValidationError(fmt::format("dataset directory '{}' not found", dir));
  return gnss::read_dataset(dir);
}

// ---- subcommands -------------------------------------------------------------------------------

int cmd_gen_data(const Options& o) {
  RunConfig cfg = resolve_config(o.common);
  if (!o.geometry.empty()) cfg.paths.geometry = o.geometry;
  if (!o.series.empty()) cfg.paths.data = o.series;
  const fs::path dir = open_run_dir("gen-data", cfg,
                                    {{"geometry_hash", hash_input(cfg.paths.geometry)},
                                     {"series_hash", hash_input(cfg.paths.data)}},
                                    o.common.force);
  gnss::Dataset data;
  if (!cfg.paths.data.empty()) {
    if (cfg.paths.geometry.empty()) throw ValidationError("loading a series needs paths.geometry / --geometry");
    data = gnss::load_series(cfg.paths.data, mogi::StationGeometry::read_csv(cfg.paths.geometry));
    data.event_window = gnss::DayRange{cfg.scenario.test_first_day, cfg.scenario.test_last_day};
  } else {
    gnss::ScenarioSettings s = cfg.scenario;
    s.poisson = cfg.poisson;
    if (!cfg.paths.geometry.empty()) s.geometry = mogi::StationGeometry::read_csv(cfg.paths.geometry);
    data = gnss::generate(gnss::build_scenario(s, cfg.bounds));
  }
  gnss::write_dataset(data, dir);
  std::cerr << fmt::format("wrote {} days x {} dimensions\n", data.size(), data.dim());
  std::cout << dir.string() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o) {
  const RunConfig cfg = resolve_config(o.common);
  const gnss::Dataset data = require_dataset(o.data);
  const auto window = resolve_window(o.window, data, cfg);
  const fs::path dir = open_run_dir("train", cfg,
                                    {{"data_hash", hash_input(o.data)},
                                     {"window", fmt::format("{},{}", window.first, window.last)}},
                                    o.common.force);
  const auto split = gnss::split(data, window, cfg.train.seed);
  auto model = make_model(cfg.model, make_context(split, cfg.bounds, cfg.poisson), cfg.train.seed);
  std::cerr << fmt::format("training {} on {} samples ({} val, {} test)\n", model->kind(), split.train.size(),
                           split.val.size(), split.test.size());
  const auto result = train(*model, split.train.samples, split.val.samples, cfg.train,
                            [&](const EpochRecord& r) { log_epoch(r, cfg.train.epochs); });
  save_checkpoint(*model, dir / "checkpoint.json");
  write_history_csv(dir / "history.csv", result.history);
  std::cerr << fmt::format("best epoch {} (val rec {:.5g})\n", result.best_epoch + 1, result.best_val_rec);
  std::cout << dir.string() << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o) {
  const RunConfig cfg = resolve_config(o.common);
  if (o.checkpoint.empty()) throw ValidationError("--checkpoint <file> is required");
  const gnss::Dataset data = require_dataset(o.data);
  const auto window = resolve_window(o.window, data, cfg);
  const std::string ck_hash = hash_input(o.checkpoint);
  const auto model = load_checkpoint(o.checkpoint);
  const fs::path dir = open_run_dir("eval", cfg,
                                    {{"data_hash", hash_input(o.data)},
                                     {"checkpoint_hash", ck_hash},
                                     {"window", fmt::format("{},{}", window.first, window.last)}},
                                    o.common.force);
  const auto split = gnss::split(data, window, cfg.train.seed);
  const auto ev = evaluate(*model, split.test);
  write_metrics_csv(dir / "metrics.csv", ev.metrics);
  write_parameters_csv(dir / "parameters.csv", split.test, ev.inference);
  write_decomposition_csv(dir / "decomposition.csv", split.test, ev.inference);
  const auto cells = metrics_cells(ev.metrics);
  const auto cols = metrics_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) std::cerr << fmt::format("{:>16} {}\n", cols[i], cells[i]);
  std::cout << dir.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  const RunConfig cfg = resolve_config(o.common);
  if (o.axis.empty()) throw ValidationError("--axis {rank|ablation|prior} is required");
  const SweepAxis axis = parse_sweep_axis(o.axis);
  const auto values = o.values.empty() ? default_sweep_values(axis) : split_list(o.values);
  if (values.empty()) throw ValidationError("--values lists no axis values");
  for (const auto& v : values) (void)apply_sweep_value(cfg.model, axis, v);
  const gnss::Dataset data = require_dataset(o.data);
  const auto window = resolve_window(o.window, data, cfg);
  const std::size_t workers = resolve_workers(o.workers);
  const fs::path dir = open_run_dir("sweep", cfg,
                                    {{"data_hash", hash_input(o.data)},
                                     {"axis", o.axis},
                                     {"values", fmt::format("{}", fmt::join(values, ","))},
                                     {"window", fmt::format("{},{}", window.first, window.last)}},
                                    o.common.force);
  const auto split = gnss::split(data, window, cfg.train.seed);
  std::cerr << fmt::format("sweeping {} over {} values with {} worker(s)\n", o.axis, values.size(), workers);
  const auto rows = sweep(split, cfg.model, cfg.train, axis, values, workers, cfg.bounds, cfg.poisson);
  write_sweep_csv(dir / "comparison.csv", rows);
  std::cout << dir.string() << '\n';
  return kExitOk;
}

int cmd_sensitivity(const Options& o) {
  const RunConfig cfg = resolve_config(o.common);
  if (o.sweep_vars.empty()) throw ValidationError("--sweep <var>[,<var>] is required");
  auto spec = mogi::parse_grid_spec(o.sweep_vars, o.fixed, o.points);
  spec.poisson = cfg.poisson;
  gnss::Dataset data;
  std::string data_hash = "none";
  if (!o.data.empty()) {
    data = require_dataset(o.data);
    data_hash = hash_input(o.data);
  } else {
    gnss::ScenarioSettings s = cfg.scenario;
    s.poisson = cfg.poisson;
    if (!cfg.paths.geometry.empty()) s.geometry = mogi::StationGeometry::read_csv(cfg.paths.geometry);
    data = gnss::generate(gnss::build_scenario(s, cfg.bounds));
  }
  const auto stdz = nn::Standardizer::fit(data.samples);
  const fs::path dir = open_run_dir("sensitivity", cfg,
                                    {{"data_hash", data_hash},
                                     {"sweep", o.sweep_vars},
                                     {"fixed", o.fixed},
                                     {"points", std::to_string(o.points)}},
                                    o.common.force);
  const auto rows = mogi::sensitivity_profile(cfg.bounds, data.geometry, spec, stdz.scale);
  mogi::write_sensitivity_csv(dir / "sensitivity.csv", spec, data.geometry, rows);
  std::cerr << fmt::format("{} rows\n", rows.size());
  std::cout << dir.string() << '\n';
  return kExitOk;
}

int cmd_report(const Options& o) {
  const RunConfig cfg = resolve_config(o.common);
  if (o.eval_dir.empty() && o.history.empty() && o.compare.empty())
    throw ValidationError("report needs at least one of --eval, --history, --compare");
  std::vector<std::pair<std::string, std::string>> extras = {
      {"eval_hash", o.eval_dir.empty() ? "none" : hash_input(o.eval_dir)},
      {"history_hash", hash_input(o.history)}};
  for (const auto& c : o.compare) extras.emplace_back("compare_hash", hash_input(c));
  extras.emplace_back("deterministic", o.deterministic ? "true" : "false");
  const fs::path dir = open_run_dir("report", cfg, extras, o.common.force);

  report::SvgOptions svg;
  if (!o.deterministic) {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    svg.timestamp = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
  }
  std::vector<fs::path> files;
  if (!o.eval_dir.empty()) {
    auto f = report::render_eval_report(o.eval_dir, dir, svg);
    files.insert(files.end(), f.begin(), f.end());
  }
  if (!o.history.empty()) {
    fs::path h(o.history);
    if (fs::is_directory(h)) h /= "history.csv";
    auto f = report::render_history_report(h, dir, svg);
    files.insert(files.end(), f.begin(), f.end());
  }
  for (std::size_t i = 0; i < o.compare.size(); ++i) {
    const fs::path sub = o.compare.size() == 1 ? dir : dir / fmt::format("compare{}", i + 1);
    auto f = report::render_comparison_report(o.compare[i], sub, svg);
    files.insert(files.end(), f.begin(), f.end());
  }
  std::cerr << fmt::format("wrote {} SVG files\n", files.size());
  std::cout << dir.string() << '\n';
  return kExitOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "INI run configuration ([scenario] [model] [train] [paths])")
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Seed for data generation, splitting, init and training (default: config)");
  sub->add_option("--out", c.out, "Parent output directory (default: paths.output, env PILA_OUTPUT_DIR)");
  sub->add_flag("--force", c.force, "Replace an existing run directory with the same manifest hash");
}

}  // namespace

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"PILA: physics-informed low-rank augmentation for Mogi-source inversion of GNSS series", "pila"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(40);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset (or ingest a station series CSV)");
  add_common(gen, o.common);
  gen->add_option("--geometry", o.geometry, "Station CSV station,x_km,y_km (default: seeded random layout)");
  gen->add_option("--series", o.series, "Long-format CSV date,station,east_mm,north_mm,up_mm to load instead");

  auto* tr = app.add_subcommand("train", "Train a pila or hvae model on a dataset directory");
  add_common(tr, o.common);
  tr->add_option("--data", o.data, "Dataset directory written by gen-data")->required();
  tr->add_option("--window", o.window, "Held-out test window FIRST,LAST (days, half-open; default: dataset)");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out window");
  add_common(ev, o.common);
  ev->add_option("--checkpoint", o.checkpoint, "checkpoint.json written by train")->required();
  ev->add_option("--data", o.data, "Dataset directory written by gen-data")->required();
  ev->add_option("--window", o.window, "Held-out test window FIRST,LAST (days, half-open; default: dataset)");

  auto* sw = app.add_subcommand("sweep", "Train and evaluate once per axis value");
  add_common(sw, o.common);
  sw->add_option("--data", o.data, "Dataset directory written by gen-data")->required();
  sw->add_option("--axis", o.axis, "rank | ablation | prior")->required();
  sw->add_option("--values", o.values,
                 "Comma-separated values (default rank 1,4,8; ablation full,no-residual,no-prior; "
                 "prior endstop,kl-1,kl-0.1,kl-0.01)");
  sw->add_option("--workers", o.workers, "Concurrent runs (default: env PILA_WORKERS or 1)");
  sw->add_option("--window", o.window, "Held-out test window FIRST,LAST (days, half-open; default: dataset)");

  auto* se = app.add_subcommand("sensitivity", "Standardized Mogi gradients over a parameter grid");
  add_common(se, o.common);
  se->add_option("--sweep", o.sweep_vars, "One or two variables: xm, ym, depth, dv")->required();
  se->add_option("--fixed", o.fixed, "Fixed values, e.g. dv=3.7e6,depth=9 (others at mid-range, dv at its maximum)");
  se->add_option("--points", o.points, "Grid points per swept variable")->capture_default_str();
  se->add_option("--data", o.data, "Dataset directory for geometry and output std (default: config scenario)");

  auto* re = app.add_subcommand("report", "Render SVG figures from eval/train/sweep outputs");
  add_common(re, o.common);
  re->add_option("--eval", o.eval_dir, "eval output directory");
  re->add_option("--history", o.history, "history.csv from train, or the train run directory");
  re->add_option("--compare", o.compare, "comparison.csv from sweep (repeatable)");
  re->add_flag("--deterministic", o.deterministic, "Omit the generation timestamp so SVGs are byte-stable");

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  g_pending_dir.clear();
  try {
    int code = kExitValidation;
    if (*gen) code = cmd_gen_data(o);
    else if (*tr) code = cmd_train(o);
    else if (*ev) code = cmd_eval(o);
    else if (*sw) code = cmd_sweep(o);
    else if (*se) code = cmd_sensitivity(o);
    else if (*re) code = cmd_report(o);
    g_pending_dir.clear();
    return code;
  } catch (const NonFiniteError& e) {
    discard_pending();
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::invalid_argument& e) {
    discard_pending();
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    discard_pending();
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace pila::cli
