#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "gammahom/geodesic.hpp"
#include "gammahom/potential.hpp"

using namespace gammahom;

namespace {

// plain fixed-panel Simpson rule, independent of the adaptive quadrature in
// the library
double composite_simpson(const std::function<double(double)>& f, double a, double b,
                         int n) {
  double s = f(a) + f(b);
  const double h = (b - a) / n;
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

double quartic_metric_cost(const Potential& pot, double p, double q, int n = 4096) {
  auto f = [&](double s) { return 2.0 * std::sqrt(eval_W(pot, vec1(0.25), vec1(s))); };
  return composite_simpson(f, std::min(p, q), std::max(p, q), n);
}

}  // namespace

TEST_CASE("scalar well-to-well distance matches the exact value", "[geodesic]") {
  const Potential pot = make_quartic();
  const auto res = dw_interior(pot, vec1(0.25), vec1(-1.0), vec1(1.0));
  CHECK(res.distance == Catch::Approx(8.0 / 3.0).margin(1e-3));
  CHECK(res.distance == Catch::Approx(8.0 / 3.0).margin(1e-9));
  CHECK(res.euclidean_length == Catch::Approx(2.0).margin(1e-12));
  CHECK(res.tol == Catch::Approx(0.125).margin(1e-12));
  CHECK(res.path.size() == 2);
  CHECK_FALSE(res.z0.has_value());
}

TEST_CASE("scalar distances agree with an independent quadrature", "[geodesic]") {
  const Potential pot = make_quartic();
  struct Pair {
    double p, q, exact;
  };
  // closed forms of the integral of 2|s^2-1|
  const Pair pairs[] = {{-1.0, 1.0, 8.0 / 3.0},
                        {-0.5, 0.5, 11.0 / 6.0},
                        {-2.0, 0.0, 4.0},
                        {0.2, 0.9, 2.0 * (0.7 - (0.729 - 0.008) / 3.0)}};
  for (const auto& pr : pairs) {
    const auto res = dw_interior(pot, vec1(0.0), vec1(pr.p), vec1(pr.q));
    CHECK(res.distance == Catch::Approx(pr.exact).margin(1e-9));
    CHECK(res.distance ==
          Catch::Approx(quartic_metric_cost(pot, pr.p, pr.q)).margin(1e-9));
  }
}

TEST_CASE("identical endpoints return a zero path", "[geodesic]") {
  const Potential pot = make_quartic();
  const auto res = dw_interior(pot, vec1(0.1), vec1(0.37), vec1(0.37));
  CHECK(res.distance == 0.0);
  CHECK(res.path.size() == 1);
  CHECK(res.path[0][0] == 0.37);
}

TEST_CASE("degenerate equal wells collapse nearby states", "[geodesic]") {
  Potential pot = make_min_squares(0.5, 0.5);
  const auto near = dw_interior(pot, vec1(0.0), vec1(0.5), vec1(0.51));
  CHECK(near.distance == 0.0);
  CHECK(near.tol == Catch::Approx(2.0 * 2.5 / 128.0).margin(1e-12));

  const auto far = dw_interior(pot, vec1(0.0), vec1(0.4), vec1(0.6));
  CHECK(far.distance == Catch::Approx(0.02).margin(1e-9));
}

TEST_CASE("collapse near a well stays within the reported tolerance", "[geodesic]") {
  const Potential pot = make_quartic();
  // both states hug the same well, so a zero report is inside the contract
  const auto hug = dw_interior(pot, vec1(0.0), vec1(0.95), vec1(1.05));
  CHECK(std::abs(hug.distance - quartic_metric_cost(pot, 0.95, 1.05)) <= hug.tol);

  // away from the well the exact quadrature answer is required
  const auto res = dw_interior(pot, vec1(0.0), vec1(0.8), vec1(1.2));
  CHECK(res.distance > 0.1);
  CHECK(res.distance == Catch::Approx(quartic_metric_cost(pot, 0.8, 1.2)).margin(1e-9));
}

TEST_CASE("two-branch interior distance crosses the equidistance kink", "[geodesic]") {
  const Potential pot = make_bz(0.3);
  const auto res = dw_interior(pot, vec1(0.25), vec1(1.3), vec1(-0.7));
  CHECK(res.distance == Catch::Approx(2.0).margin(1e-9));

  const auto other = dw_interior(pot, vec1(-0.25), vec1(0.7), vec1(-1.3));
  CHECK(other.distance == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("interface hand-off between same-phase wells", "[geodesic]") {
  const Potential pot = make_bz(0.3);

  GeodesicQuery query;
  query.y = vec1(0.5);
  query.at_interface = true;
  query.p = vec1(1.3);
  query.q = vec1(0.7);
  const auto res = dw(pot, query);
  CHECK(res.distance == Catch::Approx(0.18).margin(1e-6));
  REQUIRE(res.z0.has_value());
  CHECK((*res.z0)[0] == Catch::Approx(1.0).margin(1e-4));
  CHECK(res.path.size() == 3);

  // brute-force hand-off scan with an independent per-leg quadrature
  auto leg = [&](int label, double a, double b) {
    auto f = [&](double s) {
      return 2.0 * std::sqrt(eval_W_cell(pot, label, vec1(0.5), vec1(s)));
    };
    return composite_simpson(f, std::min(a, b), std::max(a, b), 2048);
  };
  double brute = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 2000; ++i) {
    const double z = 2.0 * i / 2000.0;
    brute = std::min(brute, leg(1, 1.3, z) + leg(2, z, 0.7));
  }
  CHECK(res.distance == Catch::Approx(brute).margin(1e-5));

  // the wrap seam carries the opposite orientation
  GeodesicQuery seam;
  seam.y = vec1(0.0);
  seam.at_interface = true;
  seam.p = vec1(0.7);
  seam.q = vec1(1.3);
  const auto at_seam = dw(pot, seam);
  CHECK(at_seam.distance == Catch::Approx(0.18).margin(1e-6));
  REQUIRE(at_seam.z0.has_value());
  CHECK((*at_seam.z0)[0] == Catch::Approx(1.0).margin(1e-4));
}

TEST_CASE("interface hand-off between opposite-phase wells", "[geodesic]") {
  const Potential pot = make_bz(0.3);
  GeodesicQuery query;
  query.y = vec1(0.5);
  query.at_interface = true;
  query.p = vec1(1.3);
  query.q = vec1(-1.3);
  const auto res = dw(pot, query);
  CHECK(res.distance == Catch::Approx(2.18).margin(1e-6));
}

TEST_CASE("interface with identical metrics on both sides reduces to the interior case",
          "[geodesic]") {
  Potential pot = make_quartic();
  BoxCell c1 = full_cell(1, vec1(1.0), vec1(-1.0));
  c1.lo[0] = 0.0;
  BoxCell c2 = c1;
  c2.label = 2;
  c2.lo[0] = -0.5;
  c2.hi[0] = 0.0;
  pot.partition.cells = {c1, c2};

  GeodesicQuery query;
  query.y = vec1(0.0);
  query.at_interface = true;
  query.p = vec1(-1.0);
  query.q = vec1(1.0);
  const auto at_iface = dw(pot, query);
  const auto interior = dw_interior(pot, vec1(0.25), vec1(-1.0), vec1(1.0));
  CHECK(at_iface.distance == Catch::Approx(interior.distance).margin(1e-9));
}

TEST_CASE("planar interface with identical metrics reduces to the interior case",
          "[geodesic]") {
  Potential pot = make_quartic2(vec2(1.0, 0.0), vec2(-1.0, 0.0));
  BoxCell c1 = pot.partition.cells[0];
  c1.lo[0] = 0.0;
  BoxCell c2 = c1;
  c2.label = 2;
  c2.lo[0] = -0.5;
  c2.hi[0] = 0.0;
  pot.partition.cells = {c1, c2};

  GeodesicQuery query;
  query.y = vec1(0.0);
  query.at_interface = true;
  query.label_minus = 1;
  query.label_plus = 2;
  query.p = vec2(-1.0, 0.0);
  query.q = vec2(1.0, 0.0);
  query.h_p = 1.0 / 32.0;
  const auto at_iface = dw(pot, query);

  GeodesicQuery inner = query;
  inner.at_interface = false;
  inner.label_minus = inner.label_plus = 0;
  inner.y = vec1(0.25);
  const auto interior = dw(pot, inner);
  REQUIRE(at_iface.z0.has_value());
  CHECK(at_iface.distance == Catch::Approx(interior.distance).margin(interior.tol));
  CHECK(at_iface.distance == Catch::Approx(8.0 / 3.0).margin(at_iface.tol));
}

TEST_CASE("scalar symmetry is exact and the triangle inequality holds", "[geodesic]") {
  const Potential quartic = make_quartic();
  const Potential bz = make_bz(0.3);
  Rng rng(2026);
  for (int trial = 0; trial < 50; ++trial) {
    const Potential& pot = trial % 2 ? bz : quartic;
    const double y = rng.uniform(-0.5, 0.5);
    const double p = rng.uniform(-2.0, 2.0);
    const double q = rng.uniform(-2.0, 2.0);
    const double r = rng.uniform(-2.0, 2.0);
    const auto d_pq = dw_interior(pot, vec1(y), vec1(p), vec1(q));
    const auto d_qp = dw_interior(pot, vec1(y), vec1(q), vec1(p));
    CHECK(d_pq.distance == d_qp.distance);
    const auto d_pr = dw_interior(pot, vec1(y), vec1(p), vec1(r));
    const auto d_rq = dw_interior(pot, vec1(y), vec1(r), vec1(q));
    CHECK(d_pq.distance <= d_pr.distance + d_rq.distance + 3.0 * d_pq.tol);
    CHECK(d_pq.euclidean_length >= std::abs(p - q) - 1e-12);
  }
}

TEST_CASE("interface symmetry swaps both endpoints and labels", "[geodesic]") {
  const Potential pot = make_bz(0.3);
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    GeodesicQuery fwd;
    fwd.y = vec1(0.5);
    fwd.at_interface = true;
    fwd.label_minus = 1;
    fwd.label_plus = 2;
    fwd.p = vec1(rng.uniform(-2.0, 2.0));
    fwd.q = vec1(rng.uniform(-2.0, 2.0));
    GeodesicQuery rev = fwd;
    rev.label_minus = 2;
    rev.label_plus = 1;
    std::swap(rev.p, rev.q);
    const auto a = dw(pot, fwd);
    const auto b = dw(pot, rev);
    CHECK(a.distance == Catch::Approx(b.distance).margin(2.0 * a.tol));
  }
}

TEST_CASE("planar quartic distance along the well axis", "[geodesic]") {
  const Potential pot = make_quartic2(vec2(1.0, 0.0), vec2(-1.0, 0.0));
  GeodesicQuery query;
  query.y = vec1(0.0);
  query.p = vec2(-1.0, 0.0);
  query.q = vec2(1.0, 0.0);
  query.h_p = 1.0 / 64.0;
  const auto res = dw(pot, query);
  CHECK(res.distance == Catch::Approx(8.0 / 3.0).margin(res.tol));
  CHECK(res.distance <= 8.0 / 3.0 + 1e-9);
  CHECK(res.euclidean_length >= 2.0 - 1e-12);

  // straight-chord upper bound via an independent quadrature
  auto chord = [&](double s) {
    return 2.0 * std::sqrt(eval_W(pot, vec1(0.0), vec2(s, 0.0)));
  };
  const double chord_cost = composite_simpson(chord, -1.0, 1.0, 2048);
  CHECK(res.distance <= chord_cost + 1e-9);
}

TEST_CASE("planar min-squares distance between vector wells", "[geodesic]") {
  Potential pot = make_min_squares();
  pot.dim_p = 2;
  pot.partition.cells = {full_cell(1, vec2(1.0, 0.0), vec2(-1.0, 0.0))};
  GeodesicQuery query;
  query.y = vec1(0.0);
  query.p = vec2(-1.0, 0.0);
  query.q = vec2(1.0, 0.0);
  query.h_p = 1.0 / 64.0;
  const auto res = dw(pot, query);
  CHECK(res.distance == Catch::Approx(2.0).margin(res.tol));
}

TEST_CASE("planar distances improve monotonically under refinement", "[geodesic]") {
  const Potential pot = make_quartic2(vec2(1.0, 0.0), vec2(-1.0, 0.0));
  GeodesicQuery coarse;
  coarse.y = vec1(0.0);
  coarse.p = vec2(-0.8, 0.4);
  coarse.q = vec2(0.9, -0.2);
  coarse.h_p = 1.0 / 16.0;
  GeodesicQuery fine = coarse;
  fine.h_p = 1.0 / 32.0;
  const auto c = dw(pot, coarse);
  const auto f = dw(pot, fine);
  CHECK(f.distance <= c.distance + c.tol);
  CHECK(std::abs(f.distance - c.distance) <= c.tol);
}

TEST_CASE("slab metric equals the pointwise metric when wells do not move",
          "[geodesic]") {
  const Potential pot = make_quartic();
  const auto slab = h_eps(pot, vec1(0.1), 0.2, vec1(-1.0), vec1(1.0));
  const auto point = dw_interior(pot, vec1(0.1), vec1(-1.0), vec1(1.0));
  CHECK(slab.distance == Catch::Approx(point.distance).margin(1e-9));
}

TEST_CASE("slab metric takes the cheaper branch near an interface", "[geodesic]") {
  const Potential pot = make_bz(0.3);
  const auto res = h_eps(pot, vec1(0.01), 0.05, vec1(0.7), vec1(1.3));
  CHECK(res.distance == Catch::Approx(0.18).margin(1e-4));
  // never exceeds the one-branch distance at the same point
  const auto one_sided = dw_interior(pot, vec1(0.01), vec1(0.7), vec1(1.3));
  CHECK(one_sided.distance == Catch::Approx(0.36).margin(1e-9));
  CHECK(res.distance <= one_sided.distance + 1e-9);
}

TEST_CASE("slab thickness is validated", "[geodesic]") {
  const Potential pot = make_quartic();
  CHECK(eps_upper_bound(pot) == 0.25);
  CHECK_THROWS_AS(h_eps(pot, vec1(0.0), 0.25, vec1(-1.0), vec1(1.0)),
                  EpsilonOutOfRange);
  CHECK_THROWS_AS(h_eps(pot, vec1(0.0), 0.3, vec1(-1.0), vec1(1.0)), EpsilonOutOfRange);
  CHECK_THROWS_AS(h_eps(pot, vec1(0.0), 0.0, vec1(-1.0), vec1(1.0)), EpsilonOutOfRange);
  CHECK_THROWS_AS(h_eps(pot, vec1(0.0), -0.1, vec1(-1.0), vec1(1.0)),
                  EpsilonOutOfRange);

  const Potential wobbled = make_quartic(1.0, -1.0, 0.2);
  const double e1 = eps_upper_bound(wobbled);
  CHECK(e1 < 0.25);
  CHECK_NOTHROW(h_eps(wobbled, vec1(0.0), 0.5 * e1, vec1(-1.0), vec1(1.0)));
}

TEST_CASE("slab metric rejects planar micro domains", "[geodesic]") {
  Potential pot = make_quartic();
  pot.dim_y = 2;
  pot.partition.dim = 2;
  pot.partition.cells = {full_cell(2, vec1(1.0), vec1(-1.0))};
  CHECK_THROWS_AS(h_eps(pot, vec1(0.0), 0.1, vec1(-1.0), vec1(1.0)), Unsupported);
}

TEST_CASE("query validation", "[geodesic]") {
  const Potential pot = make_quartic();
  CHECK_THROWS_AS(dw_interior(pot, vec1(0.0), vec1(5.0), vec1(1.0)), RadiusTooSmall);
  CHECK_THROWS_AS(h_eps(pot, vec1(0.0), 0.1, vec1(5.0), vec1(1.0)), RadiusTooSmall);
  const double bad = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(dw_interior(pot, vec1(0.0), vec1(bad), vec1(1.0)), NonFiniteInput);
  CHECK_THROWS_AS(h_eps(pot, vec1(0.0), 0.1, vec1(bad), vec1(1.0)), NonFiniteInput);

  const Potential planar_cells = make_bz(0.3);
  GeodesicQuery query;
  query.y = vec1(0.0);
  query.at_interface = true;
  query.p = vec1(0.7);
  query.q = vec1(1.3);
  CHECK_NOTHROW(dw(planar_cells, query));
}

TEST_CASE("calibrated length bound covers fresh samples", "[geodesic]") {
  const Potential pot = make_quartic();
  const double L = calibrate_length_bound(pot, 200, 1);
  CHECK(L > 0.0);

  Rng rng(2);
  std::vector<GeodesicResult> fresh;
  for (int s = 0; s < 100; ++s) {
    GeodesicQuery query;
    query.y = vec1(rng.uniform(-0.5, 0.5));
    query.p = vec1(rng.uniform(-2.0, 2.0));
    query.q = vec1(rng.uniform(-2.0, 2.0));
    fresh.push_back(dw(pot, query));
  }
  const auto rep = check_length_bound(fresh, L);
  CHECK(rep.ok);
  CHECK(rep.violations == 0);
  CHECK(rep.max_length <= L);
}
