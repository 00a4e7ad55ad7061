#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "pila/experiment.hpp"
#include "pila/gnss.hpp"

namespace pila {

// Bad configuration value or key; the message names the key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PathSettings {
  std::string geometry;  // optional station CSV for synthetic runs
  std::string data;      // optional long-format series CSV (load instead of generating)
  std::string output = "runs";
};

// Everything a CLI run needs. INI sections [scenario] [model] [train] [paths].
struct RunConfig {
  gnss::ScenarioSettings scenario;
  ModelSettings model;
  TrainConfig train;
  PathSettings paths;
  double poisson = 0.25;
  mogi::VariableBounds bounds;

  // --seed: scenario and training streams both derive from it
  void set_seed(std::uint64_t seed);
  void validate() const;
};

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);
// Canonical INI text listing every key; parse_config(to_ini(c)) == c.
std::string to_ini(const RunConfig& c);

}  // namespace pila
