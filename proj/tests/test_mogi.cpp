#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include <fmt/format.h>

#include "pila/gradcheck.hpp"
#include "pila/mogi.hpp"
#include "pila/sensitivity.hpp"
#include "support.hpp"

using namespace pila;
using namespace pila::mogi;

namespace {

StationGeometry one_station(double x, double y) { return StationGeometry({Station{"A", x, y}}); }

}  // namespace

TEST_SUITE("mogi") {

TEST_CASE("rescale endpoints and range check") {
  const VariableBounds b;
  const double lo[] = {0, 0, 0, 0}, hi[] = {1, 1, 1, 1}, mid[] = {0.5, 0.5, 0.5, 0.5};
  CHECK(rescale(lo, b).depth_km == 2.0);
  CHECK(rescale(hi, b).depth_km == 20.0);
  CHECK(rescale(mid, b).depth_km == 11.0);
  CHECK(rescale(hi, b).volume_m3 == 10e6);
  const double bad[] = {0.5, 1.01, 0.5, 0.5};
  CHECK_THROWS_AS(rescale(bad, b), std::domain_error);
  const auto n = normalize(rescale(mid, b), b);
  for (double v : n) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("bounds validation") {
  VariableBounds b;
  CHECK_NOTHROW(b.validate());
  b.depth = {5, 5};
  CHECK_THROWS(b.validate());
}

TEST_CASE("variable names") {
  CHECK(parse_variable("depth") == Variable::depth);
  CHECK(parse_variable("dv") == Variable::volume);
  try {
    (void)parse_variable("bogus");
    FAIL("accepted unknown name");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("xm, ym, depth, dv") != std::string::npos);
  }
}

TEST_CASE("hand oracle: station 5 km east of a 10 km deep source") {
  MogiParams p{0.0, 0.0, 10.0, 4e6, 0.25};
  const auto u = forward(p, one_station(5.0, 0.0));
  // alpha = 3e6/pi m^3, R = sqrt(5000^2 + 10000^2) m
  const double alpha = 3e6 / std::numbers::pi;
  const double r = std::sqrt(5000.0 * 5000.0 + 10000.0 * 10000.0);
  CHECK(r == doctest::Approx(11180.34).epsilon(1e-6));
  CHECK(u.east(0) == doctest::Approx(alpha * 5000.0 / (r * r * r) * 1000.0).epsilon(1e-14));
  CHECK(u.east(0) == doctest::Approx(3.4164602084024494).epsilon(1e-12));
  CHECK(u.north(0) == 0.0);
  CHECK(u.up(0) == doctest::Approx(6.832920416804899).epsilon(1e-12));
}

TEST_CASE("zero volume gives zero field") {
  CounterRng rng(2);
  const auto geom = StationGeometry::random_layout(8, VariableBounds{}, rng);
  MogiParams p{1, 2, 5, 0.0, 0.25};
  for (double v : forward(p, geom).values) CHECK(v == 0.0);
}

TEST_CASE("matches the independent closed form on random draws") {
  CounterRng rng(21);
  const VariableBounds b;
  const auto geom = StationGeometry::random_layout(12, b, rng.substream(1));
  for (int trial = 0; trial < 200; ++trial) {
    const MogiParams p = testing::random_params(rng, b);
    const auto u = forward(p, geom);
    for (std::size_t i = 0; i < geom.size(); ++i) {
      const auto o = testing::mogi_closed_form(geom[i].x_km, geom[i].y_km, p.x_m_km, p.y_m_km, p.depth_km,
                                               p.volume_m3, p.poisson);
      CHECK(u.east(i) == doctest::Approx(o.e).epsilon(1e-12));
      CHECK(u.north(i) == doctest::Approx(o.n).epsilon(1e-12));
      CHECK(u.up(i) == doctest::Approx(o.u).epsilon(1e-12));
    }
  }
}

TEST_CASE("linear in volume") {
  CounterRng rng(4);
  const auto geom = StationGeometry::random_layout(6, VariableBounds{}, rng);
  MogiParams p{1.0, -2.0, 7.0, 1.3e6, 0.25};
  const auto u1 = forward(p, geom);
  p.volume_m3 *= 3.0;
  const auto u3 = forward(p, geom);
  for (std::size_t k = 0; k < u1.values.size(); ++k) CHECK(u3.values[k] == doctest::Approx(3.0 * u1.values[k]));
}

TEST_CASE("rotating source and stations rotates the horizontal field") {
  CounterRng rng(5);
  const auto geom = StationGeometry::random_layout(7, VariableBounds{}, rng);
  const double th = 0.7, c = std::cos(th), s = std::sin(th);
  std::vector<Station> rotated;
  for (const auto& st : geom.stations()) rotated.push_back({st.id, c * st.x_km - s * st.y_km, s * st.x_km + c * st.y_km});
  const MogiParams p{2.0, 1.0, 6.0, 2e6, 0.25};
  const MogiParams pr{c * 2.0 - s * 1.0, s * 2.0 + c * 1.0, 6.0, 2e6, 0.25};
  const auto u = forward(p, geom);
  const auto ur = forward(pr, StationGeometry(rotated));
  for (std::size_t i = 0; i < geom.size(); ++i) {
    CHECK(ur.east(i) == doctest::Approx(c * u.east(i) - s * u.north(i)).epsilon(1e-10));
    CHECK(ur.north(i) == doctest::Approx(s * u.east(i) + c * u.north(i)).epsilon(1e-10));
    CHECK(ur.up(i) == doctest::Approx(u.up(i)).epsilon(1e-12));
  }
}

TEST_CASE("horizontal motion points radially away from an inflating source") {
  CounterRng rng(6);
  const auto geom = StationGeometry::random_layout(10, VariableBounds{}, rng);
  const MogiParams p{0.5, -0.5, 8.0, 3e6, 0.25};
  const auto u = forward(p, geom);
  for (std::size_t i = 0; i < geom.size(); ++i) {
    const double rx = geom[i].x_km - p.x_m_km, ry = geom[i].y_km - p.y_m_km;
    CHECK(u.east(i) * ry - u.north(i) * rx == doctest::Approx(0.0).scale(std::hypot(u.east(i), u.north(i))));
    CHECK(u.east(i) * rx + u.north(i) * ry > 0.0);
    CHECK(u.up(i) > 0.0);
  }
}

TEST_CASE("batched forward: serial, omp and single-row forward agree") {
  CounterRng rng(8);
  const VariableBounds b;
  const auto geom = StationGeometry::random_layout(12, b, rng.substream(3));
  Tensor params(300, 4);
  for (std::size_t r = 0; r < params.rows(); ++r) {
    const auto p = testing::random_params(rng, b);
    params(r, 0) = p.x_m_km;
    params(r, 1) = p.y_m_km;
    params(r, 2) = p.depth_km;
    params(r, 3) = p.volume_m3;
  }
  const Tensor s = serial::forward_batch(params, geom);
  CHECK(omp::forward_batch(params, geom) == s);
  CHECK(forward_batch(params, geom) == s);
  const auto row = forward({params(17, 0), params(17, 1), params(17, 2), params(17, 3), 0.25}, geom);
  for (std::size_t k = 0; k < row.values.size(); ++k) CHECK(s(17, k) == row.values[k]);

  Tensor bad = params;
  bad(5, 2) = 0.0;
  CHECK_THROWS_AS(serial::forward_batch(bad, geom), std::invalid_argument);
}

TEST_CASE("tape forward equals the closed form and its gradient equals the Jacobian") {
  CounterRng rng(9);
  const VariableBounds b;
  const auto geom = StationGeometry::random_layout(4, b, rng);
  const MogiParams p{1.0, 2.0, 6.0, 2.5e6, 0.25};
  Tape tape;
  Var phys = tape.variable(Tensor::row({p.x_m_km, p.y_m_km, p.depth_km, p.volume_m3}));
  Var u = forward(phys, geom);
  const auto ref = forward(p, geom);
  for (std::size_t k = 0; k < ref.values.size(); ++k) CHECK(u.value()[k] == doctest::Approx(ref.values[k]).epsilon(1e-13));

  const Tensor jac = jacobian(p, geom);
  for (std::size_t k = 0; k < ref.values.size(); ++k) {
    Tape t;
    Var ph = t.variable(Tensor::row({p.x_m_km, p.y_m_km, p.depth_km, p.volume_m3}));
    Var out = slice_cols(forward(ph, geom), k, k + 1);
    const std::vector<Var> wrt = {ph};
    const auto g = t.gradients(sum(out), wrt);
    for (std::size_t j = 0; j < 4; ++j) CHECK(g[0][j] == doctest::Approx(jac(k, j)).epsilon(1e-10));
  }
}

TEST_CASE("Jacobian matches finite differences") {
  CounterRng rng(10);
  const VariableBounds b;
  const auto geom = StationGeometry::random_layout(5, b, rng.substream(1));
  for (int trial = 0; trial < 20; ++trial) {
    MogiParams p = testing::random_params(rng, b);
    const Tensor jac = jacobian(p, geom);
    for (std::size_t k = 0; k < geom.observation_dim(); ++k) {
      auto f = [&](const Tensor& x) {
        const MogiParams q{x[0], x[1], x[2], x[3], p.poisson};
        return forward(q, geom).values[k];
      };
      const Tensor fd = finite_difference(f, Tensor::row({p.x_m_km, p.y_m_km, p.depth_km, p.volume_m3}));
      Tensor row(1, 4);
      for (std::size_t j = 0; j < 4; ++j) row[j] = jac(k, j);
      CHECK(worst_relative_error(row, fd, 1e-5, 1e-8) <= 1.0);
    }
  }
}

TEST_CASE("finite difference of east displacement w.r.t. depth matches the Jacobian") {
  const auto geom = one_station(5.0, 0.0);
  const MogiParams p{0.0, 0.0, 10.0, 4e6, 0.25};
  auto f = [&](const Tensor& x) { return forward({0.0, 0.0, x[0], 4e6, 0.25}, geom).east(0); };
  const double fd = finite_difference(f, Tensor::scalar(10.0))[0];
  CHECK(fd == doctest::Approx(jacobian(p, geom)(0, 2)).epsilon(1e-5));
  auto fx = [&](const Tensor& x) { return forward({x[0], 0.0, 10.0, 4e6, 0.25}, geom).east(0); };
  CHECK(finite_difference(fx, Tensor::scalar(0.0))[0] == doctest::Approx(jacobian(p, geom)(0, 0)).epsilon(1e-5));
}

TEST_CASE("geometry: unique ids, names, CSV round trip") {
  CHECK_THROWS(StationGeometry({Station{"A", 0, 0}, Station{"A", 1, 1}}));
  CounterRng rng(12);
  const auto geom = StationGeometry::random_layout(3, VariableBounds{}, rng);
  const auto names = geom.dimension_names();
  REQUIRE(names.size() == 9);
  CHECK(names[0] == "E_ST01");
  CHECK(names[4] == "N_ST02");
  CHECK(names[8] == "U_ST03");
  const auto path = std::filesystem::temp_directory_path() / "pila_test_geom.csv";
  geom.write_csv(path);
  const auto back = StationGeometry::read_csv(path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].id == geom[i].id);
    CHECK(back[i].x_km == geom[i].x_km);
    CHECK(back[i].y_km == geom[i].y_km);
  }
  std::filesystem::remove(path);
}

}  // TEST_SUITE

TEST_SUITE("sensitivity") {

TEST_CASE("grid spec parsing") {
  const auto g = parse_grid_spec("xm,ym", "dv=3.7e6", 5);
  REQUIRE(g.swept.size() == 2);
  CHECK(g.fixed.at(Variable::volume) == 3.7e6);
  CHECK_THROWS(parse_grid_spec("", "", 5));
  CHECK_THROWS(parse_grid_spec("xm,ym,depth", "", 5));
  CHECK_THROWS(parse_grid_spec("depth,depth", "", 5));
  CHECK_THROWS(parse_grid_spec("depth", "depth=3", 5));
  CHECK_THROWS(parse_grid_spec("depth", "", 1));
  CHECK_THROWS(parse_grid_spec("depth", "dv", 5));
}

TEST_CASE("table values equal the Jacobian chain-ruled through the rescaling") {
  const VariableBounds b;
  CounterRng rng(13);
  const auto geom = StationGeometry::random_layout(4, b, rng);
  std::vector<double> stds(geom.observation_dim());
  for (double& s : stds) s = rng.uniform(0.5, 3.0);
  const auto spec = parse_grid_spec("depth,xm", "dv=3.7e6,ym=0.4", 4);
  const auto rows = sensitivity_profile(b, geom, spec, stds);
  CHECK(rows.size() == 4 * 4 * 2 * geom.observation_dim());
  for (const auto& r : rows) {
    MogiParams p{r.coords[1], 0.4, r.coords[0], 3.7e6, 0.25};
    const Tensor jac = jacobian(p, geom);
    const double expect = jac(r.output, static_cast<std::size_t>(r.wrt)) * b[r.wrt].span();
    CHECK(std::abs(r.gradient - expect) <= 1e-10 * std::max(1.0, std::abs(expect)));
    CHECK(r.standardized == doctest::Approx(r.gradient / stds[r.output]));
  }
}

TEST_CASE("vertical sensitivity above the source decays with depth") {
  const VariableBounds b;
  const auto geom = one_station(0.0, 0.0);
  const std::vector<double> stds = {1.0, 1.0, 1.0};
  auto grad_at = [&](double depth) {
    const auto spec = parse_grid_spec("dv", fmt::format("xm=0,ym=0,depth={}", depth), 2);
    const auto rows = sensitivity_profile(b, geom, spec, stds);
    return std::abs(rows.back().gradient);  // last grid point, vertical output
  };
  CHECK(grad_at(10.0) < grad_at(5.0));
  CHECK(grad_at(10.0) == doctest::Approx(grad_at(5.0) / 4.0));
}

TEST_CASE("non-positive output std is rejected") {
  const VariableBounds b;
  const auto geom = one_station(1.0, 0.0);
  const std::vector<double> stds = {1.0, 0.0, 1.0};
  CHECK_THROWS(sensitivity_profile(b, geom, parse_grid_spec("depth", "", 3), stds));
}

}  // TEST_SUITE
