#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gammahom/energy.hpp"
#include "gammahom/geodesic.hpp"
#include "gammahom/grid.hpp"
#include "gammahom/potential.hpp"

using namespace gammahom;

TEST_CASE("energy of constant fields", "[energy]") {
  const Potential pot = make_quartic();
  const MacroGrid macro{1, 64};
  EnergyParams params;
  params.eps = 1.0 / 32.0;
  params.delta = 1.0 / 4.0;

  GridField at_well = make_field(macro);
  fill_field(at_well, [](const Vec&, int) { return 1.0; });
  const auto ground = energy(pot, at_well, params);
  CHECK(ground.total == 0.0);

  GridField at_zero = make_field(macro);
  const auto barrier = energy(pot, at_zero, params);
  CHECK(barrier.bulk == Catch::Approx(1.0).margin(1e-12));
  CHECK(barrier.gradient_part == 0.0);
  CHECK(barrier.total == barrier.bulk + barrier.gradient_part);
}

TEST_CASE("single interface profile approximates the geodesic cost", "[energy]") {
  const Potential pot = make_quartic();
  const MacroGrid macro{1, 1024};
  EnergyParams params;
  params.delta = 1.0 / 4.0;
  params.eps = params.delta / 16.0;

  // the exact scalar profile for (1-u^2)^2 is tanh((x-x0)/eps)
  GridField u = make_field(macro);
  const double eps = params.eps;
  fill_field(u, [eps](const Vec& x, int) { return std::tanh((x[0] - 0.5) / eps); });
  const auto e = energy(pot, u, params);

  const double unit = dw_interior(pot, vec1(0.0), vec1(1.0), vec1(-1.0)).distance;
  CHECK(e.total == Catch::Approx(eps * unit).epsilon(0.10));
  CHECK(std::abs(e.bulk - e.gradient_part) / e.total <= 0.1);
}

TEST_CASE("rescaled energy decomposes exactly over unfolded cells", "[energy]") {
  const Potential pot = make_quartic();
  const MacroGrid macro{1, 512};
  EnergyParams params;
  params.delta = 1.0 / 8.0;
  params.eps = params.delta / 32.0;

  GridField u = make_field(macro);
  Rng rng(5);
  for (auto& v : u.data) v = rng.uniform(-1.2, 1.2);

  const auto re = energy_rescaled(pot, u, params);
  const auto e = energy(pot, u, params);
  CHECK(re.total ==
        Catch::Approx(params.delta / params.eps * e.total).epsilon(1e-12));

  double resum = re.remainder;
  for (double v : re.per_cell) resum += v * params.delta;
  CHECK(resum == re.total);
  CHECK(re.interior_cells.size() == 7);

  GridField at_well = make_field(macro);
  fill_field(at_well, [](const Vec&, int) { return 1.0; });
  const auto ground = energy_rescaled(pot, at_well, params);
  CHECK(ground.total == 0.0);
  CHECK(ground.remainder == 0.0);
}

TEST_CASE("energy gradient matches finite differences", "[energy]") {
  const Potential pot = make_quartic(1.0, -1.0, 0.1);
  const MacroGrid macro{1, 64};
  EnergyParams params;
  params.delta = 1.0 / 4.0;
  params.eps = 1.0 / 16.0;

  GridField u = make_field(macro);
  Rng rng(7);
  for (auto& v : u.data) v = rng.uniform(-1.5, 1.5);
  const GridField grad = energy_gradient(pot, u, params);

  GridField dir = make_field(macro);
  for (auto& v : dir.data) v = rng.uniform(-1.0, 1.0);

  const double t = 1e-6;
  GridField up = u, dn = u;
  for (size_t i = 0; i < u.data.size(); ++i) {
    up.data[i] += t * dir.data[i];
    dn.data[i] -= t * dir.data[i];
  }
  const double fd =
      (energy(pot, up, params).total - energy(pot, dn, params).total) / (2.0 * t);
  double directional = 0.0;
  for (size_t i = 0; i < u.data.size(); ++i) directional += grad.data[i] * dir.data[i];
  CHECK(directional == Catch::Approx(fd).epsilon(1e-5));
}

TEST_CASE("gradient vanishes at a discrete critical point", "[energy]") {
  const Potential pot = make_quartic();
  const MacroGrid macro{1, 32};
  EnergyParams params;
  params.delta = 1.0 / 4.0;
  params.eps = 1.0 / 16.0;
  GridField u = make_field(macro);
  fill_field(u, [](const Vec&, int) { return 1.0; });
  const GridField grad = energy_gradient(pot, u, params);
  for (double v : grad.data) CHECK(v == 0.0);
}

TEST_CASE("projected gradient has zero mean", "[energy]") {
  const Potential pot = make_quartic();
  const MacroGrid macro{1, 64};
  EnergyParams params;
  params.delta = 1.0 / 4.0;
  params.eps = 1.0 / 16.0;
  params.mass_constraint = 0.25;

  GridField u = make_field(macro);
  Rng rng(9);
  for (auto& v : u.data) v = rng.uniform(-2.0, 2.0);
  const GridField grad = energy_gradient(pot, u, params);
  double mean = 0.0;
  for (double v : grad.data) mean += v;
  mean /= static_cast<double>(grad.data.size());
  CHECK(std::abs(mean) <= 1e-12);
}

TEST_CASE("parameter validation", "[energy]") {
  const Potential pot = make_quartic();
  const MacroGrid macro{1, 64};
  GridField u = make_field(macro);

  EnergyParams bad_ratio;
  bad_ratio.delta = 1.0 / 4.0;
  bad_ratio.eps = 1.0 / 4.0;
  CHECK_THROWS_AS(energy(pot, u, bad_ratio), BadConfig);

  EnergyParams misaligned;
  misaligned.delta = 0.3;
  misaligned.eps = 0.01;
  CHECK_THROWS_AS(energy(pot, u, misaligned), MisalignedDelta);

  EnergyParams coarse;
  coarse.delta = 1.0 / 10.0;  // 64 not divisible by 10
  coarse.eps = 1.0 / 100.0;
  CHECK_THROWS_AS(energy(pot, u, coarse), MisalignedDelta);
}

TEST_CASE("limit functional of micro patterns with constant wells", "[energy]") {
  const Potential pot = make_quartic();
  const MicroGrid micro{1, 64};

  const auto pure = make_uniform_microstructure(1, 64, true);
  CHECK(g1(pot, pure, micro) == 0.0);

  const auto half = make_interval_microstructure(64, -0.5, 0.0);
  const double two_jumps = g1(pot, half, micro);
  CHECK(two_jumps == Catch::Approx(16.0 / 3.0).margin(1e-3));
}

TEST_CASE("limit functional of the two-branch subcell pattern", "[energy]") {
  const Potential pot = make_bz(0.3);
  const MicroGrid micro{1, 64};
  const auto branch1 = make_interval_microstructure(64, 0.0, 0.5);

  GeodesicQuery query;
  query.y = vec1(0.0);
  query.at_interface = true;
  query.label_minus = 2;
  query.label_plus = 1;
  query.p = vec1(-1.3);
  query.q = vec1(1.3);
  const double cross = dw(pot, query).distance;

  const double value = g1(pot, branch1, micro);
  CHECK(value > 0.0);
  CHECK(value == Catch::Approx(2.0 * cross).margin(2e-6));

  // staying on phase a still jumps where the selected well is discontinuous
  const auto pure_a = make_uniform_microstructure(1, 64, true);
  CHECK(g1(pot, pure_a, micro) == Catch::Approx(0.36).margin(1e-6));
}

TEST_CASE("limit functional is additive over macro pieces", "[energy]") {
  const Potential pot = make_quartic();
  const MicroGrid micro{1, 64};
  const auto ms_half = make_interval_microstructure(64, -0.5, 0.0);
  const auto ms_pure = make_uniform_microstructure(1, 64, true);

  MacroMicrostructure mm;
  mm.macro = MacroGrid{1, 8};
  for (int j = 0; j < 4; ++j) mm.cells.push_back(ms_half);
  for (int j = 0; j < 4; ++j) mm.cells.push_back(ms_pure);

  const double whole = g1(pot, mm, micro);
  const double parts = 0.5 * g1(pot, ms_half, micro) + 0.5 * g1(pot, ms_pure, micro);
  CHECK(whole == Catch::Approx(parts).margin(1e-13));
}

TEST_CASE("limit functional on a planar checkerboard", "[energy]") {
  const Potential pot = make_quartic2(vec2(1.0, 0.0), vec2(-1.0, 0.0));
  const MicroGrid micro{2, 8};
  Microstructure ms;
  ms.dim = 2;
  ms.m = 8;
  ms.take_a.assign(64, 0);
  // vertical stripe: left half a, right half b, two straight interfaces
  for (int l0 = 0; l0 < 4; ++l0)
    for (int l1 = 0; l1 < 8; ++l1) ms.take_a[l0 * 8 + l1] = 1;

  const double unit =
      dw_interior(pot, vec2(0.0, 0.0), vec2(1.0, 0.0), vec2(-1.0, 0.0)).distance;
  const double value = g1(pot, ms, micro);
  // two interfaces of unit length, each edge weighted h_y
  CHECK(value == Catch::Approx(2.0 * unit).epsilon(0.25));
}
