// Periodic multi-well potentials W(y, p) on the centered unit cell
// Q = (-1/2, 1/2)^N: cell partitions with per-cell well pairs, the built-in
// potential families, JSON (de)serialization, and the sampled assumption
// checker.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"

namespace gammahom {

// Lipschitz well pair attached to one partition cell. The optional sinusoidal
// wobble shifts both wells along state component 0 as a function of y[0]:
//   a(y) = a0 + wobble * sin(2*pi*freq*y[0]) * e0,   likewise b(y).
// continuous across the periodic seam for integer freq.
struct WellPair {
  Vec a{}, b{};
};

struct BoxCell {
  int label = 1;       // labels are 1..k, unique
  Vec lo{}, hi{};      // axis-aligned box, closed, inside [-1/2, 1/2]
  WellPair wells;
};

struct CellPartition {
  int dim = 1;
  std::vector<BoxCell> cells;  // sorted by label

  // Boundary points belong to the smallest-label cell containing them.
  int locate(const Vec& y) const {
    for (const auto& c : cells) {
      bool inside = true;
      for (int i = 0; i < dim; ++i)
        if (y[i] < c.lo[i] || y[i] > c.hi[i]) { inside = false; break; }
      if (inside) return c.label;
    }
    throw BadConfig("partition does not cover the queried point");
  }
  const BoxCell& cell(int label) const {
    for (const auto& c : cells)
      if (c.label == label) return c;
    throw BadConfig("unknown cell label " + std::to_string(label));
  }
};

enum class Family { Quartic, MinSquares, Tabulated };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::Quartic: return "quartic";
    case Family::MinSquares: return "min_squares";
    case Family::Tabulated: return "tabulated";
  }
  return "?";
}

// Declared growth constants: quadratic pinning (c1, R), coercivity scale c2,
// and the well-separation margin mu used by interface bounds.
struct GrowthConsts {
  double c1 = 8.0;
  double c2 = 10.0;
  double R = 0.5;
  double mu = 0.25;
};

// 1-D-in-y, 1-D-in-p sample table with bilinear interpolation; y wraps,
// p clamps to the table range and picks up the quadratic coercivity tail
// max(0, |p|^2 - p_edge^2)/c2 beyond it.
struct TabulatedData {
  int ny = 0, np = 0;
  double p_lo = 0.0, p_hi = 0.0;
  std::vector<double> values;  // ny * np, y-major; y nodes at wrap(i/ny)
};

struct Potential {
  int dim_y = 1;
  int dim_p = 1;
  Family family = Family::Quartic;
  CellPartition partition;
  double scale = 1.0;        // quartic / min_squares prefactor
  double wobble = 0.0;       // common sinusoidal well shift amplitude
  int wobble_freq = 1;
  GrowthConsts growth;
  std::optional<TabulatedData> table;

  double well_lip() const { return std::abs(wobble) * 2.0 * M_PI * wobble_freq; }
  double max_well_norm() const {
    double m = 0.0;
    for (const auto& c : partition.cells) {
      m = std::max(m, norm(c.wells.a, dim_p) + std::abs(wobble));
      m = std::max(m, norm(c.wells.b, dim_p) + std::abs(wobble));
    }
    return m;
  }
  // Default solver ball radius for geodesic queries.
  double default_radius() const { return 2.0 * max_well_norm() + 1.0; }
};

struct WellsAt {
  Vec a{}, b{};
  int label = 1;
};

namespace detail {
inline double wobble_shift(const Potential& pot, const Vec& y) {
  if (pot.wobble == 0.0) return 0.0;
  return pot.wobble * std::sin(2.0 * M_PI * pot.wobble_freq * y[0]);
}
}  // namespace detail

// Wells of a given cell evaluated at y (no location step: y may sit on the
// cell boundary, giving the one-sided limit from that cell).
inline WellsAt eval_wells_cell(const Potential& pot, int label, const Vec& y) {
  const BoxCell& c = pot.partition.cell(label);
  WellsAt w;
  w.label = label;
  w.a = c.wells.a;
  w.b = c.wells.b;
  const double s = detail::wobble_shift(pot, y);
  w.a[0] += s;
  w.b[0] += s;
  return w;
}

inline WellsAt eval_wells(const Potential& pot, const Vec& x) {
  const Vec y = wrap_vec(x, pot.dim_y);
  return eval_wells_cell(pot, pot.partition.locate(y), y);
}

namespace detail {
inline double tabulated_value(const Potential& pot, const Vec& y, const Vec& p) {
  const TabulatedData& t = *pot.table;
  // y interpolation on the periodic node set wrap(i/ny)
  double yy = wrap_unit(y[0]);
  double fy = yy * t.ny;  // fractional node index in [-ny/2, ny/2)
  double fi = std::floor(fy);
  int i0 = static_cast<int>(fi) % t.ny;
  if (i0 < 0) i0 += t.ny;
  int i1 = (i0 + 1) % t.ny;
  double wy = fy - fi;
  // p clamps to the table
  double pp = std::clamp(p[0], t.p_lo, t.p_hi);
  double gp = (t.np == 1) ? 0.0 : (pp - t.p_lo) / (t.p_hi - t.p_lo) * (t.np - 1);
  int j0 = std::min(static_cast<int>(std::floor(gp)), t.np - 2);
  j0 = std::max(j0, 0);
  double wp = gp - j0;
  auto at = [&](int i, int j) { return t.values[static_cast<size_t>(i) * t.np + j]; };
  double v = (1 - wy) * ((1 - wp) * at(i0, j0) + wp * at(i0, j0 + 1)) +
             wy * ((1 - wp) * at(i1, j0) + wp * at(i1, j0 + 1));
  const double p_edge = std::max(std::abs(t.p_lo), std::abs(t.p_hi));
  const double tail = std::max(0.0, p[0] * p[0] - p_edge * p_edge) / pot.growth.c2;
  return v + tail;
}
}  // namespace detail

// W restricted to one cell's branch, evaluated at micro point y (which may
// lie on the cell boundary) and state p. Total function: finite inputs give
// finite values for every family.
inline double eval_W_cell(const Potential& pot, int label, const Vec& y, const Vec& p) {
  switch (pot.family) {
    case Family::Quartic: {
      const WellsAt w = eval_wells_cell(pot, label, y);
      return pot.scale * sqnorm(sub(p, w.a), pot.dim_p) * sqnorm(sub(p, w.b), pot.dim_p);
    }
    case Family::MinSquares: {
      const WellsAt w = eval_wells_cell(pot, label, y);
      return pot.scale *
             std::min(sqnorm(sub(p, w.a), pot.dim_p), sqnorm(sub(p, w.b), pot.dim_p));
    }
    case Family::Tabulated:
      return detail::tabulated_value(pot, y, p);
  }
  return 0.0;
}

inline double eval_W(const Potential& pot, const Vec& x, const Vec& p) {
  if (!all_finite(x, pot.dim_y) || !all_finite(p, pot.dim_p))
    throw NonFiniteInput("eval_W: non-finite input");
  const Vec y = wrap_vec(x, pot.dim_y);
  return eval_W_cell(pot, pot.partition.locate(y), y, p);
}

// dW/dp on one cell's branch. min_squares resolves ties toward the a-well;
// tabulated uses central differences at half the table spacing.
inline Vec eval_dW_cell(const Potential& pot, int label, const Vec& y, const Vec& p) {
  switch (pot.family) {
    case Family::Quartic: {
      const WellsAt w = eval_wells_cell(pot, label, y);
      const Vec da = sub(p, w.a), db = sub(p, w.b);
      const double na = sqnorm(da, pot.dim_p), nb = sqnorm(db, pot.dim_p);
      Vec g{};
      for (int i = 0; i < pot.dim_p; ++i)
        g[i] = pot.scale * (2.0 * da[i] * nb + 2.0 * db[i] * na);
      return g;
    }
    case Family::MinSquares: {
      const WellsAt w = eval_wells_cell(pot, label, y);
      const Vec da = sub(p, w.a), db = sub(p, w.b);
      const bool use_a = sqnorm(da, pot.dim_p) <= sqnorm(db, pot.dim_p);
      const Vec& d = use_a ? da : db;
      Vec g{};
      for (int i = 0; i < pot.dim_p; ++i) g[i] = pot.scale * 2.0 * d[i];
      return g;
    }
    case Family::Tabulated: {
      const TabulatedData& t = *pot.table;
      const double h = (t.np > 1) ? 0.5 * (t.p_hi - t.p_lo) / (t.np - 1) : 1e-4;
      Vec pl = p, pr = p;
      pl[0] -= h;
      pr[0] += h;
      Vec g{};
      g[0] = (detail::tabulated_value(pot, y, pr) - detail::tabulated_value(pot, y, pl)) /
             (2.0 * h);
      return g;
    }
  }
  return Vec{};
}

inline Vec eval_dW(const Potential& pot, const Vec& x, const Vec& p) {
  if (!all_finite(x, pot.dim_y) || !all_finite(p, pot.dim_p))
    throw NonFiniteInput("eval_dW: non-finite input");
  const Vec y = wrap_vec(x, pot.dim_y);
  return eval_dW_cell(pot, pot.partition.locate(y), y, p);
}

// ---------------------------------------------------------------------------
// Built-in factories

inline BoxCell full_cell(int dim, const Vec& a, const Vec& b) {
  BoxCell c;
  c.label = 1;
  for (int i = 0; i < dim; ++i) {
    c.lo[i] = -0.5;
    c.hi[i] = 0.5;
  }
  c.wells = WellPair{a, b};
  return c;
}

// Scalar double-well (p-a)^2 (p-b)^2 with optional common well wobble.
inline Potential make_quartic(double a = 1.0, double b = -1.0, double wobble = 0.0,
                              int freq = 1) {
  Potential pot;
  pot.dim_y = 1;
  pot.dim_p = 1;
  pot.family = Family::Quartic;
  pot.partition.dim = 1;
  pot.partition.cells = {full_cell(1, vec1(a), vec1(b))};
  pot.wobble = wobble;
  pot.wobble_freq = freq;
  pot.growth = GrowthConsts{8.0, 10.0, 0.5, 0.25};
  return pot;
}

// Planar double-well |p-a|^2 |p-b|^2 with vector wells.
inline Potential make_quartic2(const Vec& a, const Vec& b) {
  Potential pot;
  pot.dim_y = 1;
  pot.dim_p = 2;
  pot.family = Family::Quartic;
  pot.partition.dim = 1;
  pot.partition.cells = {full_cell(1, a, b)};
  pot.growth = GrowthConsts{8.0, 10.0, 0.5, 0.25};
  return pot;
}

// Two-branch piecewise potential: W(y,s) = min((s-k-1)^2, (s-k+1)^2) on the
// branch y in (0, 1/2) and min((s+k-1)^2, (s+k+1)^2) on y in (-1/2, 0).
// Wells are the zeros of each branch, upper zero stored as "a".
inline Potential make_bz(double k) {
  Potential pot;
  pot.dim_y = 1;
  pot.dim_p = 1;
  pot.family = Family::MinSquares;
  pot.partition.dim = 1;
  BoxCell c1, c2;
  c1.label = 1;
  c1.lo[0] = 0.0;
  c1.hi[0] = 0.5;
  c1.wells = WellPair{vec1(k + 1.0), vec1(k - 1.0)};
  c2.label = 2;
  c2.lo[0] = -0.5;
  c2.hi[0] = 0.0;
  c2.wells = WellPair{vec1(1.0 - k), vec1(-1.0 - k)};
  pot.partition.cells = {c1, c2};
  const double wm = 1.0 + std::abs(k);
  pot.growth = GrowthConsts{2.0, std::max(4.0, 4.0 * wm), 0.45, 0.25};
  return pot;
}

inline Potential make_min_squares(double a = 1.0, double b = -1.0, double wobble = 0.0,
                                  int freq = 1) {
  Potential pot = make_quartic(a, b, wobble, freq);
  pot.family = Family::MinSquares;
  pot.growth = GrowthConsts{2.0, 6.0, 0.45, 0.25};
  return pot;
}

// Samples an existing scalar potential into a table (test / interop helper).
inline Potential make_tabulated_from(const Potential& src, int ny, int np, double p_lo,
                                     double p_hi) {
  Potential pot;
  pot.dim_y = 1;
  pot.dim_p = 1;
  pot.family = Family::Tabulated;
  pot.partition = src.partition;
  pot.wobble = 0.0;
  pot.growth = src.growth;
  TabulatedData t;
  t.ny = ny;
  t.np = np;
  t.p_lo = p_lo;
  t.p_hi = p_hi;
  t.values.resize(static_cast<size_t>(ny) * np);
  for (int i = 0; i < ny; ++i) {
    const Vec y = vec1(micro_coord_of_node(i, ny));
    for (int j = 0; j < np; ++j) {
      const double p = p_lo + (p_hi - p_lo) * j / (np - 1);
      t.values[static_cast<size_t>(i) * np + j] = eval_W(src, y, vec1(p));
    }
  }
  pot.table = t;
  return pot;
}

// ---------------------------------------------------------------------------
// JSON interface
//
// { "dim_y": N, "dim_p": M,
//   "cells": [ {"label": 1, "lo": [...], "hi": [...], "a": [...], "b": [...]} ],
//   "family": "quartic" | "min_squares" | "bz" | "tabulated",
//   "params": { ... },
//   "growth": {"c1":, "c2":, "R":, "mu":}            (optional)
// }
//
// family "bz" takes params {"k"} and ignores "cells" (the two branches are
// implied). quartic/min_squares accept params {"scale","wobble","freq"} and,
// when "cells" is absent, single-cell wells {"a","b"}. tabulated takes params
// {"ny","np","p_lo","p_hi","values","a","b"}.

namespace detail {
inline Vec json_vec(const nlohmann::json& j, int dim, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw BadConfig(std::string("expected array of length ") + std::to_string(dim) + " for " +
                    what);
  Vec v{};
  for (int i = 0; i < dim; ++i) v[i] = j[i].get<double>();
  return v;
}
}  // namespace detail

inline Potential load_potential(const nlohmann::json& j) {
  Potential pot;
  pot.dim_y = j.at("dim_y").get<int>();
  pot.dim_p = j.at("dim_p").get<int>();
  if (pot.dim_y < 1 || pot.dim_y > kMaxDim || pot.dim_p < 1 || pot.dim_p > kMaxDim)
    throw Unsupported("potential dimensions must be 1 or 2");
  const std::string fam = j.at("family").get<std::string>();
  const nlohmann::json params = j.value("params", nlohmann::json::object());

  if (fam == "bz") {
    pot = make_bz(params.at("k").get<double>());
  } else if (fam == "quartic" || fam == "min_squares") {
    pot.family = fam == "quartic" ? Family::Quartic : Family::MinSquares;
    pot.scale = params.value("scale", 1.0);
    pot.wobble = params.value("wobble", 0.0);
    pot.wobble_freq = params.value("freq", 1);
    pot.partition.dim = pot.dim_y;
    if (j.contains("cells")) {
      for (const auto& cj : j.at("cells")) {
        BoxCell c;
        c.label = cj.at("label").get<int>();
        c.lo = detail::json_vec(cj.at("lo"), pot.dim_y, "cell lo");
        c.hi = detail::json_vec(cj.at("hi"), pot.dim_y, "cell hi");
        c.wells.a = detail::json_vec(cj.at("a"), pot.dim_p, "well a");
        c.wells.b = detail::json_vec(cj.at("b"), pot.dim_p, "well b");
        pot.partition.cells.push_back(c);
      }
      std::sort(pot.partition.cells.begin(), pot.partition.cells.end(),
                [](const BoxCell& x, const BoxCell& y) { return x.label < y.label; });
    } else {
      pot.partition.cells = {full_cell(
          pot.dim_y, detail::json_vec(params.at("a"), pot.dim_p, "well a"),
          detail::json_vec(params.at("b"), pot.dim_p, "well b"))};
    }
    pot.growth = fam == "quartic" ? GrowthConsts{8.0, 10.0, 0.5, 0.25}
                                  : GrowthConsts{2.0, 6.0, 0.45, 0.25};
  } else if (fam == "tabulated") {
    if (pot.dim_y != 1 || pot.dim_p != 1)
      throw Unsupported("tabulated potentials are 1-D in y and p");
    pot.family = Family::Tabulated;
    pot.partition.dim = 1;
    pot.partition.cells = {full_cell(1, detail::json_vec(params.at("a"), 1, "well a"),
                                     detail::json_vec(params.at("b"), 1, "well b"))};
    TabulatedData t;
    t.ny = params.at("ny").get<int>();
    t.np = params.at("np").get<int>();
    t.p_lo = params.at("p_lo").get<double>();
    t.p_hi = params.at("p_hi").get<double>();
    t.values = params.at("values").get<std::vector<double>>();
    if (static_cast<int>(t.values.size()) != t.ny * t.np)
      throw BadConfig("tabulated values size mismatch");
    pot.table = t;
    pot.growth = GrowthConsts{8.0, 10.0, 0.5, 0.25};
  } else {
    throw BadConfig("unknown potential family '" + fam + "'");
  }

  if (j.contains("growth")) {
    const auto& g = j.at("growth");
    pot.growth.c1 = g.value("c1", pot.growth.c1);
    pot.growth.c2 = g.value("c2", pot.growth.c2);
    pot.growth.R = g.value("R", pot.growth.R);
    pot.growth.mu = g.value("mu", pot.growth.mu);
  }
  return pot;
}

inline nlohmann::json potential_to_json(const Potential& pot) {
  nlohmann::json j;
  j["dim_y"] = pot.dim_y;
  j["dim_p"] = pot.dim_p;
  j["family"] = family_name(pot.family);
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : pot.partition.cells) {
    nlohmann::json cj;
    cj["label"] = c.label;
    cj["lo"] = std::vector<double>(c.lo.begin(), c.lo.begin() + pot.dim_y);
    cj["hi"] = std::vector<double>(c.hi.begin(), c.hi.begin() + pot.dim_y);
    cj["a"] = std::vector<double>(c.wells.a.begin(), c.wells.a.begin() + pot.dim_p);
    cj["b"] = std::vector<double>(c.wells.b.begin(), c.wells.b.begin() + pot.dim_p);
    cells.push_back(cj);
  }
  j["cells"] = cells;
  nlohmann::json params;
  params["scale"] = pot.scale;
  params["wobble"] = pot.wobble;
  params["freq"] = pot.wobble_freq;
  if (pot.table) {
    params["ny"] = pot.table->ny;
    params["np"] = pot.table->np;
    params["p_lo"] = pot.table->p_lo;
    params["p_hi"] = pot.table->p_hi;
    params["values"] = pot.table->values;
    params["a"] = std::vector<double>(pot.partition.cells[0].wells.a.begin(),
                                      pot.partition.cells[0].wells.a.begin() + 1);
    params["b"] = std::vector<double>(pot.partition.cells[0].wells.b.begin(),
                                      pot.partition.cells[0].wells.b.begin() + 1);
  }
  j["params"] = params;
  j["growth"] = {{"c1", pot.growth.c1},
                 {"c2", pot.growth.c2},
                 {"R", pot.growth.R},
                 {"mu", pot.growth.mu}};
  return j;
}

// ---------------------------------------------------------------------------
// Sampled assumption verification.
//
// Checks, with sampling domains chosen so the declared constants are
// meaningful for the solver ball B(0, 2*maxwell+1):
//   nonneg        W >= -1e-12 everywhere sampled
//   wells-zero    W(y, a(y)) and W(y, b(y)) vanish to 1e-12
//   periodicity   W(y + z, p) == W(y, p) exactly, dyadic y, integer z
//   W4-pinning    (1/c1)|p-a|^2 <= W <= c1|p-a|^2 for |p-a| <= R, wells
//                 separated by more than 2R at the sampled y
//   W5-lower      W >= |p|^2/c2 for |p| in [c2, 1.5 c2]
//   W5-upper      W <= c2(1+|p|^2) on the solver ball
//   well-lip      sampled well increments obey the declared Lipschitz bound
// plus positive-infimum estimates C_r = inf{W : dist(p, wells) >= r} for
// r in {0.1, 0.25, 0.5} over the solver ball.

struct AssumptionViolation {
  std::string check;
  Vec y{}, p{};
  double detail = 0.0;
};

struct AssumptionReport {
  std::vector<AssumptionViolation> violations;
  std::vector<std::pair<double, double>> c_r;  // (r, estimated infimum)
  bool clean() const { return violations.empty(); }
};

inline AssumptionReport verify_assumptions(const Potential& pot, int n_samples = 10000,
                                           uint64_t seed = 1) {
  AssumptionReport rep;
  Rng rng(seed);
  const double ball = pot.default_radius();
  const GrowthConsts& g = pot.growth;
  auto rand_y = [&] {
    Vec y{};
    for (int i = 0; i < pot.dim_y; ++i) y[i] = rng.uniform(-0.5, 0.5);
    return y;
  };
  auto rand_dir = [&] {
    Vec d{};
    double n2 = 0.0;
    do {
      for (int i = 0; i < pot.dim_p; ++i) d[i] = rng.uniform(-1.0, 1.0);
      n2 = sqnorm(d, pot.dim_p);
    } while (n2 < 1e-12);
    return scale(d, 1.0 / std::sqrt(n2));
  };
  auto flag = [&](const char* check, const Vec& y, const Vec& p, double detail) {
    rep.violations.push_back({check, y, p, detail});
  };

  const std::array<double, 3> rs{0.1, 0.25, 0.5};
  std::array<double, 3> cr_min;
  cr_min.fill(std::numeric_limits<double>::infinity());

  for (int s = 0; s < n_samples; ++s) {
    const Vec y = rand_y();
    const Vec p = scale(rand_dir(), rng.uniform(0.0, ball));
    const double W = eval_W(pot, y, p);
    const WellsAt w = eval_wells(pot, y);

    if (W < -1e-12) flag("nonneg", y, p, W);
    if (W > g.c2 * (1.0 + sqnorm(p, pot.dim_p)) + 1e-12)
      flag("W5-upper", y, p, W - g.c2 * (1.0 + sqnorm(p, pot.dim_p)));

    const double da = dist(p, w.a, pot.dim_p), db = dist(p, w.b, pot.dim_p);
    const double dw_min = std::min(da, db);
    for (size_t k = 0; k < rs.size(); ++k)
      if (dw_min >= rs[k]) cr_min[k] = std::min(cr_min[k], W);

    if (s % 4 == 0) {
      if (eval_W(pot, y, w.a) > 1e-12) flag("wells-zero", y, w.a, eval_W(pot, y, w.a));
      if (eval_W(pot, y, w.b) > 1e-12) flag("wells-zero", y, w.b, eval_W(pot, y, w.b));
    }
    if (s % 4 == 1) {
      // dyadic y so adding the integer shift is floating-point exact
      Vec yd{};
      for (int i = 0; i < pot.dim_y; ++i) yd[i] = rng.uniform_int(-512, 511) / 1024.0;
      Vec ys = yd;
      for (int i = 0; i < pot.dim_y; ++i) ys[i] += rng.uniform_int(-2, 2);
      if (eval_W(pot, ys, p) != eval_W(pot, yd, p)) flag("periodicity", yd, p, 0.0);
    }
    if (s % 4 == 2 && dist(w.a, w.b, pot.dim_p) > 2.0 * g.R) {
      const double t = rng.uniform(1e-6, g.R);
      const Vec pr = add(w.a, scale(rand_dir(), t));
      const double Wr = eval_W(pot, y, pr);
      if (Wr > g.c1 * t * t + 1e-12) flag("W4-pinning", y, pr, Wr - g.c1 * t * t);
      if (Wr < t * t / g.c1 - 1e-12) flag("W4-pinning", y, pr, t * t / g.c1 - Wr);
    }
    if (s % 4 == 3) {
      const double t = rng.uniform(g.c2, 1.5 * g.c2);
      const Vec pr = scale(rand_dir(), t);
      const double Wr = eval_W(pot, y, pr);
      if (Wr < t * t / g.c2 - 1e-12) flag("W5-lower", y, pr, t * t / g.c2 - Wr);
      // well Lipschitz sample within the same cell
      const BoxCell& cell = pot.partition.cell(w.label);
      Vec y2{};
      for (int i = 0; i < pot.dim_y; ++i) y2[i] = rng.uniform(cell.lo[i], cell.hi[i]);
      const WellsAt w2 = eval_wells_cell(pot, w.label, y2);
      const double dy = dist(y, y2, pot.dim_y);
      const double lip = pot.well_lip();
      if (dist(w.a, w2.a, pot.dim_p) > lip * dy + 1e-9) flag("well-lip", y, w.a, dy);
      if (dist(w.b, w2.b, pot.dim_p) > lip * dy + 1e-9) flag("well-lip", y, w.b, dy);
    }
  }
  for (size_t k = 0; k < rs.size(); ++k)
    rep.c_r.emplace_back(rs[k], std::isfinite(cr_min[k]) ? cr_min[k] : 0.0);
  return rep;
}

}  // namespace gammahom
