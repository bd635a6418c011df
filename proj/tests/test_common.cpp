#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gammahom/common.hpp"

using namespace gammahom;

TEST_CASE("wrap_unit maps to [-1/2, 1/2) with halves rounded up", "[common]") {
  CHECK(wrap_unit(0.25) == 0.25);
  CHECK(wrap_unit(1.25) == 0.25);
  CHECK(wrap_unit(-0.25) == -0.25);
  CHECK(wrap_unit(0.5) == -0.5);
  CHECK(wrap_unit(-0.5) == -0.5);
  CHECK(wrap_unit(1.5) == -0.5);
  CHECK(wrap_unit(0.0) == 0.0);
  CHECK(wrap_unit(3.0) == 0.0);
  CHECK(wrap_unit(0.49999) == Catch::Approx(0.49999));
  for (double x : {-7.3, -2.5, -0.7, 0.1, 0.9, 5.5, 12.2}) {
    const double y = wrap_unit(x);
    CHECK(y >= -0.5);
    CHECK(y < 0.5);
    CHECK(std::abs(std::remainder(x - y, 1.0)) < 1e-12);
  }
}

TEST_CASE("integer node decomposition matches exact micro coordinates", "[common]") {
  // node j of an m-point macro-aligned grid lives in cell k with signed
  // offset l, and its periodic coordinate is l/m computed in one division
  for (int64_t m : {2, 3, 4, 5, 8, 64, 100}) {
    for (int64_t j = 0; j < m; ++j) {
      const int64_t k = wrap_cell_of_node(j, m);
      const int64_t l = wrap_offset_of_node(j, m);
      CHECK(k * m + l == j);
      CHECK(2 * l >= -m);
      CHECK(2 * l < m);
      CHECK(micro_coord_of_node(j, m) == static_cast<double>(l) / static_cast<double>(m));
      CHECK(micro_coord_of_node(j, m) ==
            Catch::Approx(wrap_unit(static_cast<double>(j) / m)).margin(1e-15));
    }
  }
  CHECK(wrap_cell_of_node(2, 4) == 1);
  CHECK(micro_coord_of_node(2, 4) == -0.5);
  CHECK(micro_coord_of_node(3, 4) == -0.25);
}

TEST_CASE("floor_div rounds toward minus infinity", "[common]") {
  CHECK(floor_div(7, 2) == 3);
  CHECK(floor_div(-7, 2) == -4);
  CHECK(floor_div(-8, 2) == -4);
  CHECK(floor_div(7, -2) == -4);
  CHECK(floor_div(0, 5) == 0);
}

TEST_CASE("rng streams are deterministic per seed", "[common]") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform01(), y = b.uniform01(), z = c.uniform01();
    all_equal = all_equal && (x == y);
    any_diff = any_diff || (x != z);
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff);
  Rng d(7);
  for (int i = 0; i < 1000; ++i) {
    const int v = d.uniform_int(-3, 5);
    CHECK(v >= -3);
    CHECK(v <= 5);
  }
}

TEST_CASE("adaptive simpson integrates smooth functions to tolerance", "[common]") {
  CHECK(adaptive_simpson([](double x) { return x * x; }, 0.0, 1.0) ==
        Catch::Approx(1.0 / 3.0).margin(1e-11));
  CHECK(adaptive_simpson([](double x) { return std::sin(x); }, 0.0, M_PI) ==
        Catch::Approx(2.0).margin(1e-9));
  CHECK(adaptive_simpson([](double x) { return std::exp(x); }, -1.0, 2.0) ==
        Catch::Approx(std::exp(2.0) - std::exp(-1.0)).margin(1e-9));
}

TEST_CASE("integration with breakpoints handles kinks exactly", "[common]") {
  const double v = integrate_with_breaks([](double x) { return std::abs(x); }, -1.0, 1.0,
                                         {0.0});
  CHECK(v == Catch::Approx(1.0).margin(1e-11));
  // breakpoints outside the interval or at its ends are ignored
  const double w = integrate_with_breaks([](double x) { return x * x; }, 0.0, 2.0,
                                         {-1.0, 0.0, 3.0, 1.0});
  CHECK(w == Catch::Approx(8.0 / 3.0).margin(1e-10));
}

TEST_CASE("g17 formatting round trips doubles exactly", "[common]") {
  for (double x : {1.0 / 3.0, 2.0 / 7.0, 1e-300, 3.5, 0.0, -1.25e17}) {
    CHECK(std::stod(fmt_g17(x)) == x);
  }
}

TEST_CASE("fnv hash is stable and input sensitive", "[common]") {
  const std::string s = "gammahom";
  CHECK(fnv1a64(s) == fnv1a64(s));
  CHECK(fnv1a64("a") != fnv1a64("b"));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
}
