#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pila/cli.hpp"
#include "pila/csv.hpp"
#include "pila/metrics.hpp"

using namespace pila;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string dir;  // stdout, trimmed
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pila");
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = cli::run(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  std::string s = out.str();
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  if (code != 0) MESSAGE("stderr: " << err.str());
  return {code, s};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path root;
  fs::path cfg;
  Workspace(const std::string& name) : root(fs::temp_directory_path() / ("pila_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
    cfg = root / "tiny.cfg";
    std::ofstream(cfg) << "[scenario]\ndays = 240\nstations = 6\nevent_start_day = 100\nevent_duration_days = 60\n"
                          "test_first_day = 90\ntest_last_day = 170\n[model]\nhidden = 12\n[train]\nepochs = 2\n";
  }
  ~Workspace() { fs::remove_all(root); }
  std::string out(const std::string& sub = "runs") const { return (root / sub).string(); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen-data, train, eval, report") {
  Workspace w("pipeline");
  const auto gen = run_cli({"gen-data", "--config", w.cfg.string(), "--out", w.out()});
  REQUIRE(gen.code == 0);
  CHECK(fs::exists(fs::path(gen.dir) / "samples.csv"));
  CHECK(fs::exists(fs::path(gen.dir) / "manifest.ini"));

  const auto tr = run_cli({"train", "--config", w.cfg.string(), "--data", gen.dir, "--out", w.out()});
  REQUIRE(tr.code == 0);
  CHECK(fs::exists(fs::path(tr.dir) / "checkpoint.json"));
  CHECK(csv::read(fs::path(tr.dir) / "history.csv").rows.size() == 2);

  const auto ev = run_cli({"eval", "--config", w.cfg.string(), "--checkpoint", (fs::path(tr.dir) / "checkpoint.json").string(),
                           "--data", gen.dir, "--out", w.out()});
  REQUIRE(ev.code == 0);
  const auto m = csv::read(fs::path(ev.dir) / "metrics.csv");
  CHECK(m.header == metrics_columns());
  REQUIRE(m.rows.size() == 1);
  for (const auto& cell : m.rows[0]) CHECK_FALSE(cell.empty());
  CHECK(fs::exists(fs::path(ev.dir) / "parameters.csv"));
  CHECK(fs::exists(fs::path(ev.dir) / "decomposition.csv"));

  const auto rep = run_cli({"report", "--eval", ev.dir, "--history", tr.dir, "--deterministic", "--out", w.out()});
  REQUIRE(rep.code == 0);
  CHECK(fs::exists(fs::path(rep.dir) / "history.svg"));
  CHECK(fs::exists(fs::path(rep.dir) / "eta.svg"));
  CHECK(slurp(fs::path(rep.dir) / "eta.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("sweep and sensitivity table shapes") {
  Workspace w("sweep");
  const auto gen = run_cli({"gen-data", "--config", w.cfg.string(), "--out", w.out()});
  REQUIRE(gen.code == 0);
  const auto sw = run_cli({"sweep", "--config", w.cfg.string(), "--data", gen.dir, "--axis", "rank", "--values", "1,4,8",
                           "--out", w.out()});
  REQUIRE(sw.code == 0);
  const auto t = csv::read(fs::path(sw.dir) / "comparison.csv");
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[2][t.column("value")] == "8");

  const auto se = run_cli({"sensitivity", "--config", w.cfg.string(), "--sweep", "depth", "--fixed", "dv=3.7e6",
                           "--points", "11", "--out", w.out()});
  REQUIRE(se.code == 0);
  CHECK(csv::read(fs::path(se.dir) / "sensitivity.csv").rows.size() == 11 * 18);

  const auto cmp = run_cli({"report", "--compare", (fs::path(sw.dir) / "comparison.csv").string(), "--out", w.out()});
  CHECK(cmp.code == 0);
}

TEST_CASE("re-runs are byte-identical") {
  Workspace w("determinism");
  std::vector<std::vector<std::string>> files(2);
  for (int k = 0; k < 2; ++k) {
    const std::string out = w.out(k == 0 ? "a" : "b");
    const auto gen = run_cli({"gen-data", "--config", w.cfg.string(), "--out", out});
    const auto tr = run_cli({"train", "--config", w.cfg.string(), "--data", gen.dir, "--out", out});
    const auto ev = run_cli({"eval", "--config", w.cfg.string(), "--checkpoint", tr.dir + "/checkpoint.json",
                             "--data", gen.dir, "--out", out});
    REQUIRE((gen.code == 0 && tr.code == 0 && ev.code == 0));
    for (const auto& [dir, name] : std::vector<std::pair<std::string, std::string>>{
             {gen.dir, "samples.csv"}, {gen.dir, "observations.csv"}, {tr.dir, "history.csv"},
             {tr.dir, "checkpoint.json"}, {ev.dir, "metrics.csv"}, {ev.dir, "parameters.csv"},
             {ev.dir, "decomposition.csv"}})
      files[k].push_back(slurp(fs::path(dir) / name));
    files[k].push_back(fs::path(tr.dir).filename().string());
  }
  REQUIRE(files[0].size() == files[1].size());
  for (std::size_t i = 0; i < files[0].size(); ++i) CHECK(files[0][i] == files[1][i]);
}

TEST_CASE("exit codes and existing run directories") {
  Workspace w("errors");
  CHECK(run_cli({"train", "--data", (w.root / "missing").string(), "--out", w.out()}).code == cli::kExitValidation);
  CHECK(run_cli({"frobnicate"}).code == cli::kExitValidation);
  CHECK(run_cli({"sweep", "--config", w.cfg.string(), "--data", "x", "--axis", "colour"}).code == cli::kExitValidation);
  CHECK(run_cli({"--help"}).code == cli::kExitOk);

  std::ofstream(w.root / "bad.cfg") << "[train]\nepochz = 3\n";
  CHECK(run_cli({"gen-data", "--config", (w.root / "bad.cfg").string(), "--out", w.out()}).code == cli::kExitValidation);

  const auto first = run_cli({"gen-data", "--config", w.cfg.string(), "--out", w.out()});
  REQUIRE(first.code == 0);
  CHECK(run_cli({"gen-data", "--config", w.cfg.string(), "--out", w.out()}).code == cli::kExitValidation);
  const auto forced = run_cli({"gen-data", "--config", w.cfg.string(), "--out", w.out(), "--force"});
  CHECK(forced.code == 0);
  CHECK(forced.dir == first.dir);
  // a different seed is a different run directory
  const auto other = run_cli({"gen-data", "--config", w.cfg.string(), "--seed", "12", "--out", w.out()});
  CHECK(other.code == 0);
  CHECK(other.dir != first.dir);

  // a failed command leaves nothing behind
  const auto before = std::distance(fs::directory_iterator(w.out()), fs::directory_iterator());
  CHECK(run_cli({"report", "--history", w.cfg.string(), "--out", w.out()}).code != 0);
  CHECK(std::distance(fs::directory_iterator(w.out()), fs::directory_iterator()) == before);
}

TEST_CASE("content hash") {
  CHECK(cli::content_hash("") == "cbf29ce484222325");
  CHECK(cli::content_hash("a") == "af63dc4c8601ec8c");
  CHECK(cli::content_hash("abc").size() == 16);
}

}  // TEST_SUITE
