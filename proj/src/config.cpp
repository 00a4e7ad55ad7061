#include "pila/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "pila/csv.hpp"

namespace pila {
namespace {

namespace pt = boost::property_tree;

struct Key {
  std::string section;
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  [[nodiscard]] std::string full() const { return section + "." + name; }
};

template <typename T>
T parse_number(const std::string& s, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      return csv::to_double(s, key);
    } else {
      const long v = csv::to_long(s, key);
      if constexpr (std::is_unsigned_v<T>)
        if (v < 0) throw std::invalid_argument("negative");
      return static_cast<T>(v);
    }
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: '{}' is not a valid {}", key, s,
                                  std::is_same_v<T, double> ? "number" : "non-negative integer"));
  }
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean (true/false)", key, s));
}

template <typename T>
std::string show(const T& v) {
  if constexpr (std::is_same_v<T, double>)
    return csv::format_double(v);
  else if constexpr (std::is_same_v<T, bool>)
    return v ? "true" : "false";
  else if constexpr (std::is_same_v<T, std::string>)
    return v;
  else
    return std::to_string(v);
}

// Key bound to one field through an accessor returning a reference.
template <typename T, typename Access>
Key field(std::string section, std::string name, Access access) {
  Key k{std::move(section), std::move(name), {}, {}};
  const std::string full = k.full();
  k.get = [access](const RunConfig& c) { return show<T>(access(const_cast<RunConfig&>(c))); };
  k.set = [access, full](RunConfig& c, const std::string& s) {
    if constexpr (std::is_same_v<T, bool>)
      access(c) = parse_bool(s, full);
    else if constexpr (std::is_same_v<T, std::string>)
      access(c) = s;
    else
      access(c) = parse_number<T>(s, full);
  };
  return k;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> t;
    using S = std::size_t;
    // [scenario]
    t.push_back(field<std::uint64_t>("scenario", "seed", [](RunConfig& c) -> auto& { return c.scenario.seed; }));
    t.push_back(field<S>("scenario", "days", [](RunConfig& c) -> auto& { return c.scenario.n_days; }));
    t.push_back(field<S>("scenario", "stations", [](RunConfig& c) -> auto& { return c.scenario.n_stations; }));
    t.push_back(field<double>("scenario", "source_x_km", [](RunConfig& c) -> auto& { return c.scenario.source_x_km; }));
    t.push_back(field<double>("scenario", "source_y_km", [](RunConfig& c) -> auto& { return c.scenario.source_y_km; }));
    t.push_back(field<double>("scenario", "source_depth_km", [](RunConfig& c) -> auto& { return c.scenario.source_depth_km; }));
    t.push_back(field<double>("scenario", "poisson", [](RunConfig& c) -> auto& { return c.poisson; }));
    t.push_back(field<double>("scenario", "event_start_day", [](RunConfig& c) -> auto& { return c.scenario.event_start_day; }));
    t.push_back(field<double>("scenario", "event_duration_days", [](RunConfig& c) -> auto& { return c.scenario.event_duration_days; }));
    t.push_back(field<double>("scenario", "event_volume_m3", [](RunConfig& c) -> auto& { return c.scenario.event_volume_m3; }));
    t.push_back(field<double>("scenario", "relax_rate_per_day", [](RunConfig& c) -> auto& { return c.scenario.relax_rate_per_day; }));
    t.push_back(field<double>("scenario", "annual_min_mm", [](RunConfig& c) -> auto& { return c.scenario.annual_amplitude_min_mm; }));
    t.push_back(field<double>("scenario", "annual_max_mm", [](RunConfig& c) -> auto& { return c.scenario.annual_amplitude_max_mm; }));
    t.push_back(field<double>("scenario", "semiannual_min_mm", [](RunConfig& c) -> auto& { return c.scenario.semiannual_amplitude_min_mm; }));
    t.push_back(field<double>("scenario", "semiannual_max_mm", [](RunConfig& c) -> auto& { return c.scenario.semiannual_amplitude_max_mm; }));
    t.push_back(field<double>("scenario", "trend_max_mm_per_year", [](RunConfig& c) -> auto& { return c.scenario.trend_max_mm_per_year; }));
    t.push_back(field<double>("scenario", "intercept_max_mm", [](RunConfig& c) -> auto& { return c.scenario.intercept_max_mm; }));
    t.push_back(field<double>("scenario", "white_sigma_mm", [](RunConfig& c) -> auto& { return c.scenario.white_sigma_mm; }));
    t.push_back(field<double>("scenario", "pink_amplitude_mm", [](RunConfig& c) -> auto& { return c.scenario.pink_amplitude_mm; }));
    t.push_back(field<long>("scenario", "test_first_day", [](RunConfig& c) -> auto& { return c.scenario.test_first_day; }));
    t.push_back(field<long>("scenario", "test_last_day", [](RunConfig& c) -> auto& { return c.scenario.test_last_day; }));
    {
      Key k{"scenario", "start_date", {}, {}};
      k.get = [](const RunConfig& c) { return gnss::format_date(c.scenario.start_date); };
      k.set = [](RunConfig& c, const std::string& s) {
        try {
          c.scenario.start_date = gnss::parse_date(s);
        } catch (const std::exception& e) {
          throw ConfigError(fmt::format("scenario.start_date: {}", e.what()));
        }
      };
      t.push_back(k);
    }
    // [model]
    {
      Key k{"model", "kind", {}, {}};
      k.get = [](const RunConfig& c) { return std::string(model_kind_name(c.model.kind)); };
      k.set = [](RunConfig& c, const std::string& s) {
        try {
          c.model.kind = parse_model_kind(s);
        } catch (const std::exception& e) {
          throw ConfigError(fmt::format("model.kind: {}", e.what()));
        }
      };
      t.push_back(k);
    }
    {
      Key k{"model", "rank", {}, {}};
      k.get = [](const RunConfig& c) { return show(c.model.pila.rank); };
      k.set = [](RunConfig& c, const std::string& s) {
        c.model.pila.rank = c.model.hvae.rank = parse_number<S>(s, "model.rank");
      };
      t.push_back(k);
    }
    {
      Key k{"model", "hidden", {}, {}};
      k.get = [](const RunConfig& c) { return show(c.model.pila.hidden); };
      k.set = [](RunConfig& c, const std::string& s) {
        c.model.pila.hidden = c.model.hvae.hidden = parse_number<S>(s, "model.hidden");
      };
      t.push_back(k);
    }
    t.push_back(field<double>("model", "beta", [](RunConfig& c) -> auto& { return c.model.pila.beta; }));
    t.push_back(field<double>("model", "lambda", [](RunConfig& c) -> auto& { return c.model.pila.lambda; }));
    t.push_back(field<S>("model", "anneal_epochs", [](RunConfig& c) -> auto& { return c.model.pila.anneal_epochs; }));
    {
      Key k{"model", "prior", {}, {}};
      k.get = [](const RunConfig& c) { return std::string(prior_mode_name(c.model.pila.prior)); };
      k.set = [](RunConfig& c, const std::string& s) {
        try {
          c.model.pila.prior = parse_prior_mode(s);
        } catch (const std::exception& e) {
          throw ConfigError(fmt::format("model.prior: {}", e.what()));
        }
      };
      t.push_back(k);
    }
    t.push_back(field<bool>("model", "residual", [](RunConfig& c) -> auto& { return c.model.pila.residual; }));
    t.push_back(field<double>("model", "clip", [](RunConfig& c) -> auto& { return c.model.pila.clip; }));
    t.push_back(field<double>("model", "coefficient_init_std", [](RunConfig& c) -> auto& { return c.model.pila.coefficient_init_std; }));
    t.push_back(field<double>("model", "hvae_beta", [](RunConfig& c) -> auto& { return c.model.hvae.beta; }));
    t.push_back(field<S>("model", "hvae_combiner_hidden", [](RunConfig& c) -> auto& { return c.model.hvae.combiner_hidden; }));
    t.push_back(field<S>("model", "hvae_warmup_epochs", [](RunConfig& c) -> auto& { return c.model.hvae.warmup_epochs; }));
    t.push_back(field<double>("model", "hvae_calibration_ratio", [](RunConfig& c) -> auto& { return c.model.hvae.calibration_ratio; }));
    t.push_back(field<double>("model", "hvae_prior_mean", [](RunConfig& c) -> auto& { return c.model.hvae.prior_mean; }));
    t.push_back(field<double>("model", "hvae_prior_std", [](RunConfig& c) -> auto& { return c.model.hvae.prior_std; }));
    // [train]
    t.push_back(field<S>("train", "epochs", [](RunConfig& c) -> auto& { return c.train.epochs; }));
    t.push_back(field<S>("train", "batch_size", [](RunConfig& c) -> auto& { return c.train.batch_size; }));
    t.push_back(field<double>("train", "learning_rate", [](RunConfig& c) -> auto& { return c.train.adam.learning_rate; }));
    t.push_back(field<double>("train", "weight_decay", [](RunConfig& c) -> auto& { return c.train.adam.weight_decay; }));
    t.push_back(field<double>("train", "beta1", [](RunConfig& c) -> auto& { return c.train.adam.beta1; }));
    t.push_back(field<double>("train", "beta2", [](RunConfig& c) -> auto& { return c.train.adam.beta2; }));
    t.push_back(field<double>("train", "epsilon", [](RunConfig& c) -> auto& { return c.train.adam.epsilon; }));
    t.push_back(field<std::uint64_t>("train", "seed", [](RunConfig& c) -> auto& { return c.train.seed; }));
    // [paths]
    t.push_back(field<std::string>("paths", "geometry", [](RunConfig& c) -> auto& { return c.paths.geometry; }));
    t.push_back(field<std::string>("paths", "data", [](RunConfig& c) -> auto& { return c.paths.data; }));
    t.push_back(field<std::string>("paths", "output", [](RunConfig& c) -> auto& { return c.paths.output; }));
    return t;
  }();
  return table;
}

const Key* find_key(const std::string& section, const std::string& name) {
  for (const auto& k : keys())
    if (k.section == section && k.name == name) return &k;
  return nullptr;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(fmt::format("{}: {}", key, what));
}

}  // namespace

void RunConfig::set_seed(std::uint64_t seed) {
  scenario.seed = seed;
  train.seed = seed;
}

void RunConfig::validate() const {
  const auto& s = scenario;
  require(s.n_days >= 2, "scenario.days", "must be >= 2");
  require(s.n_stations >= 1, "scenario.stations", "must be >= 1");
  require(poisson > -1.0 && poisson < 0.5, "scenario.poisson", "must be in (-1, 0.5)");
  require(s.event_duration_days > 0.0, "scenario.event_duration_days", "must be > 0");
  require(s.relax_rate_per_day >= 0.0, "scenario.relax_rate_per_day", "must be >= 0");
  require(s.annual_amplitude_min_mm >= 0.0 && s.annual_amplitude_min_mm <= s.annual_amplitude_max_mm,
          "scenario.annual_min_mm", "must satisfy 0 <= annual_min_mm <= annual_max_mm");
  require(s.semiannual_amplitude_min_mm >= 0.0 && s.semiannual_amplitude_min_mm <= s.semiannual_amplitude_max_mm,
          "scenario.semiannual_min_mm", "must satisfy 0 <= semiannual_min_mm <= semiannual_max_mm");
  require(s.trend_max_mm_per_year >= 0.0, "scenario.trend_max_mm_per_year", "must be >= 0");
  require(s.intercept_max_mm >= 0.0, "scenario.intercept_max_mm", "must be >= 0");
  require(s.white_sigma_mm >= 0.0, "scenario.white_sigma_mm", "must be >= 0");
  require(s.pink_amplitude_mm >= 0.0, "scenario.pink_amplitude_mm", "must be >= 0");
  require(s.test_first_day >= 0 && s.test_first_day < s.test_last_day, "scenario.test_first_day",
          "need 0 <= test_first_day < test_last_day");
  auto inside = [&](double v, const mogi::Range& r) { return v >= r.min && v <= r.max; };
  require(inside(s.source_x_km, bounds.x_m), "scenario.source_x_km", "outside the x_m bounds");
  require(inside(s.source_y_km, bounds.y_m), "scenario.source_y_km", "outside the y_m bounds");
  require(inside(s.source_depth_km, bounds.depth), "scenario.source_depth_km", "outside the depth bounds");

  const auto& p = model.pila;
  require(p.rank >= 1, "model.rank", "must be >= 1");
  if (paths.geometry.empty() && paths.data.empty())
    require(2 * p.rank <= 3 * s.n_stations, "model.rank", fmt::format("must be <= {} (d/2)", 3 * s.n_stations / 2));
  require(p.hidden >= 1, "model.hidden", "must be >= 1");
  require(p.beta >= 0.0, "model.beta", "must be >= 0");
  require(p.lambda >= 0.0, "model.lambda", "must be >= 0");
  require(p.clip > 0.0 && p.clip < 0.5, "model.clip", "must be in (0, 0.5)");
  require(p.coefficient_init_std >= 0.0, "model.coefficient_init_std", "must be >= 0");
  require(model.hvae.beta >= 0.0, "model.hvae_beta", "must be >= 0");
  require(model.hvae.combiner_hidden >= 1, "model.hvae_combiner_hidden", "must be >= 1");
  require(model.hvae.calibration_ratio > 0.0, "model.hvae_calibration_ratio", "must be > 0");
  require(model.hvae.prior_std > 0.0, "model.hvae_prior_std", "must be > 0");

  require(train.epochs >= 1, "train.epochs", "must be >= 1");
  require(train.batch_size >= 1, "train.batch_size", "must be >= 1");
  require(train.adam.learning_rate > 0.0, "train.learning_rate", "must be > 0");
  require(train.adam.weight_decay >= 0.0, "train.weight_decay", "must be >= 0");
  require(train.adam.beta1 >= 0.0 && train.adam.beta1 < 1.0, "train.beta1", "must be in [0, 1)");
  require(train.adam.beta2 >= 0.0 && train.adam.beta2 < 1.0, "train.beta2", "must be in [0, 1)");
  require(train.adam.epsilon > 0.0, "train.epsilon", "must be > 0");
  require(!paths.output.empty(), "paths.output", "must not be empty");
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.message()));
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(fmt::format("{}: key '{}' must live inside a [section]", source, section));
    for (const auto& [name, value] : body) {
      const Key* k = find_key(section, name);
      if (!k) throw ConfigError(fmt::format("{}: unknown key '{}.{}'", source, section, name));
      k->set(c, value.get_value<std::string>());
    }
  }
  c.scenario.poisson = c.poisson;
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string to_ini(const RunConfig& c) {
  std::string out;
  std::string section;
  for (const auto& k : keys()) {
    if (k.section != section) {
      if (!section.empty()) out += '\n';
      section = k.section;
      out += fmt::format("[{}]\n", section);
    }
    out += fmt::format("{} = {}\n", k.name, k.get(c));
  }
  return out;
}

}  // namespace pila
