#pragma once
// Shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "pila/gnss.hpp"
#include "pila/gradcheck.hpp"
#include "pila/model.hpp"
#include "pila/mogi.hpp"
#include "pila/rng.hpp"
#include "pila/tape.hpp"

namespace pila::testing {

// Mogi surface displacement written out from the textbook closed form, one station at a
// time, without touching the library's forward code. Returns (east, north, up) in mm.
struct Enu {
  double e, n, u;
};

inline Enu mogi_closed_form(double xs_km, double ys_km, double xm_km, double ym_km, double depth_km,
                            double dv_m3, double nu) {
  const double dx = xs_km * 1000.0 - xm_km * 1000.0;
  const double dy = ys_km * 1000.0 - ym_km * 1000.0;
  const double d = depth_km * 1000.0;
  const double c = (1.0 - nu) * dv_m3 / std::numbers::pi;
  const double big_r = std::sqrt(dx * dx + dy * dy + d * d);
  const double k = 1000.0 * c / (big_r * big_r * big_r);
  return {k * dx, k * dy, k * d};
}

inline mogi::MogiParams random_params(CounterRng& rng, const mogi::VariableBounds& b = {}) {
  mogi::MogiParams p;
  p.x_m_km = rng.uniform(b.x_m.min, b.x_m.max);
  p.y_m_km = rng.uniform(b.y_m.min, b.y_m.max);
  p.depth_km = rng.uniform(b.depth.min, b.depth.max);
  p.volume_m3 = rng.uniform(b.volume.min, b.volume.max);
  return p;
}

// A random small composite graph: two dense layers with randomly chosen smooth activations,
// a few elementwise extras and a random reduction. Parameters are registered in `set`.
struct RandomGraph {
  ParameterSet set;
  std::uint64_t seed = 0;
  std::size_t act1 = 0, act2 = 0, extra = 0, reduce = 0;

  static Var activation(Var v, std::size_t which) {
    switch (which) {
      case 0: return tanh(v);
      case 1: return sigmoid(v);
      case 2: return atan(v);
      case 3: return softplus(v);
      case 4: return square(v);
      default: return exp(scale(v, 0.3));
    }
  }

  explicit RandomGraph(std::uint64_t s) : seed(s) {
    CounterRng rng(s, 0x96a);
    auto rand_tensor = [&](std::size_t r, std::size_t c) {
      Tensor t(r, c);
      for (double& v : t.values()) v = rng.normal(0.0, 0.7);
      return t;
    };
    const std::size_t n = 2 + rng.below(3), k = 2 + rng.below(3), h = 2 + rng.below(4), o = 1 + rng.below(3);
    set.add("x", rand_tensor(n, k));
    set.add("w1", rand_tensor(k, h));
    set.add("b1", rand_tensor(1, h));
    set.add("w2", rand_tensor(h, o));
    set.add("c", rand_tensor(n, 1));
    act1 = rng.below(6);
    act2 = rng.below(6);
    extra = rng.below(6);
    reduce = rng.below(3);
  }

  Var build(Tape& t, const ParameterSet& p) const {
    Var x = t.param(p, 0), w1 = t.param(p, 1), b1 = t.param(p, 2), w2 = t.param(p, 3), c = t.param(p, 4);
    Var h = activation(add(matmul(x, w1), b1), act1);
    Var y = activation(matmul(h, w2), act2);
    switch (extra) {
      case 0: y = mul(y, c); break;                                   // column broadcast
      case 1: y = div(y, add_scalar(softplus(c), 0.5)); break;
      case 2: y = log(add_scalar(softplus(y), 0.25)); break;
      case 3: y = sqrt(add_scalar(square(y), 1.0)); break;
      case 4: y = concat_cols(y, transpose(sum_rows(transpose(h)))); break;
      default: y = sub(pow(add_scalar(softplus(y), 0.5), 1.5), outer(slice_cols(transpose(c), 0, 1), sum_rows(y))); break;
    }
    switch (reduce) {
      case 0: return mean(y);
      case 1: return sum(y);
      default: return mean(square(y));
    }
  }

  // Worst err/allowed ratio over every parameter entry (<= 1 passes).
  [[nodiscard]] double check(double rel = 1e-4, double abs_floor = 1e-8) const {
    Tape tape;
    const Gradients g = tape.backward(build(tape, set), set);
    double worst = 0.0;
    for (ParamId id = 0; id < set.size(); ++id) {
      auto f = [&](const Tensor& v) {
        ParameterSet probe = set;
        probe.value(id) = v;
        Tape t2;
        return build(t2, probe).item();
      };
      const Tensor fd = finite_difference(f, set.value(id));
      worst = std::max(worst, worst_relative_error(g[id], fd, rel, abs_floor));
    }
    return worst;
  }
};

// The default scenario shrunk so that a training run takes a second or two.
inline gnss::ScenarioSettings tiny_scenario(std::uint64_t seed = 3) {
  gnss::ScenarioSettings s;
  s.seed = seed;
  s.n_days = 240;
  s.n_stations = 5;
  s.event_start_day = 100;
  s.event_duration_days = 60;
  s.test_first_day = 90;
  s.test_last_day = 170;
  return s;
}

// Data and a matching model context (standardizer fitted on all rows).
struct TinyProblem {
  gnss::Dataset data;
  ModelContext context;
};

inline TinyProblem tiny_problem(std::size_t stations = 5, std::uint64_t seed = 3) {
  gnss::ScenarioSettings s = tiny_scenario(seed);
  s.n_stations = stations;
  TinyProblem p;
  p.data = gnss::generate(gnss::build_scenario(s));
  p.context.geometry = p.data.geometry;
  p.context.standardizer = nn::Standardizer::fit(p.data.samples);
  return p;
}

inline Tensor first_rows(const Tensor& x, std::size_t n) {
  Tensor out(n, x.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j);
  return out;
}

// Singular values of a small matrix (sqrt of the eigenvalues of M^T M by cyclic Jacobi),
// sorted descending.
inline std::vector<double> singular_values(const Tensor& m) {
  const std::size_t n = m.cols();
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < m.rows(); ++k) a[i * n + j] += m(k, i) * m(k, j);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-300) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p * n + q] == 0.0) continue;
        const double theta = 0.5 * std::atan2(2 * a[p * n + q], a[q * n + q] - a[p * n + p]);
        const double c = std::cos(theta), s = std::sin(theta);
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> sv(n);
  for (std::size_t i = 0; i < n; ++i) sv[i] = std::sqrt(std::max(0.0, a[i * n + i]));
  std::sort(sv.rbegin(), sv.rend());
  return sv;
}

}  // namespace pila::testing
