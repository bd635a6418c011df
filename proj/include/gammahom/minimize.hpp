#pragma once
// Projected gradient descent for the discrete energies, recovery-sequence
// construction with geodesic interface profiles, and scaling probes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "gammahom/cell.hpp"
#include "gammahom/common.hpp"
#include "gammahom/energy.hpp"
#include "gammahom/geodesic.hpp"
#include "gammahom/grid.hpp"
#include "gammahom/potential.hpp"

namespace gammahom {

struct SolveOptions {
  int max_iters = 500;
  double grad_tol = 1e-8;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  uint64_t seed = 1;
};

struct TraceEntry {
  int iter = 0;
  double energy = 0.0;
  double grad_norm = 0.0;  // sup norm of the projected gradient
};

struct MinimizeResult {
  GridField u;
  std::vector<TraceEntry> trace;
  bool converged = false;
  bool stalled = false;
};

inline GridField make_random_init(const MacroGrid& macro, const Potential& pot,
                                  uint64_t seed) {
  GridField u = make_field(macro, pot.dim_p);
  Rng rng(seed);
  const double r = pot.max_well_norm();
  for (auto& v : u.data) v = rng.uniform(-r, r);
  return u;
}

namespace detail {

inline void project_mass(GridField& u, double target) {
  const int64_t nodes = u.node_count();
  for (int c = 0; c < u.comps; ++c) {
    double mean = 0.0;
    for (int64_t j = 0; j < nodes; ++j) mean += u.at(j, c);
    mean /= static_cast<double>(nodes);
    for (int64_t j = 0; j < nodes; ++j) u.at(j, c) += target - mean;
  }
}

}  // namespace detail

inline MinimizeResult minimize_energy(const Potential& pot, const EnergyParams& params,
                                      const GridField& init, const SolveOptions& opts) {
  if (!(opts.grad_tol >= 0.0)) throw BadConfig("minimize: grad_tol must be nonnegative");
  if (opts.max_iters < 0) throw BadConfig("minimize: max_iters must be nonnegative");
  if (!(opts.shrink > 0.0 && opts.shrink < 1.0))
    throw BadConfig("minimize: shrink must lie in (0,1)");
  if (!(opts.sufficient_decrease > 0.0))
    throw BadConfig("minimize: sufficient decrease must be positive");

  MinimizeResult res;
  res.u = init;
  if (params.mass_constraint) detail::project_mass(res.u, *params.mass_constraint);

  const double hN = detail::node_weight_pow(init.n, init.dim);
  const double t_cap = 4.0 / hN;
  double E = energy(pot, res.u, params).total;
  double t0 = 1.0 / hN;

  GridField cand = res.u;
  for (int iter = 0;; ++iter) {
    const GridField g = energy_gradient(pot, res.u, params);
    double sup = 0.0, gsq = 0.0;
    for (double v : g.data) {
      sup = std::max(sup, std::abs(v));
      gsq += v * v;
    }
    res.trace.push_back({iter, E, sup});
    if (sup <= opts.grad_tol) {
      res.converged = true;
      break;
    }
    if (iter >= opts.max_iters) break;

    double t = t0;
    double Ec = E;
    bool accepted = false;
    while (t >= 1e-14) {
      for (size_t i = 0; i < cand.data.size(); ++i)
        cand.data[i] = res.u.data[i] - t * g.data[i];
      if (params.mass_constraint) detail::project_mass(cand, *params.mass_constraint);
      Ec = energy(pot, cand, params).total;
      if (Ec <= E - opts.sufficient_decrease * t * gsq && Ec < E) {
        accepted = true;
        break;
      }
      t *= opts.shrink;
    }
    if (!accepted) {
      res.stalled = true;
      break;
    }
    res.u.data.swap(cand.data);
    E = Ec;
    t0 = std::min(2.0 * t, t_cap);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Recovery sequences

enum class RecoveryProfile { GeodesicReparam, LinearRamp };

struct RecoverySpec {
  Microstructure base;                    // broadcast to every macro cell
  std::vector<Microstructure> per_cell;   // optional override, one per unfolding cell
  RecoveryProfile profile = RecoveryProfile::GeodesicReparam;
};

namespace detail {

// one smoothed interface: a geodesic path traversed by a monotone arclength
// schedule dy -> sigma whose width stays proportional to eta
struct JumpProfile {
  double ystar = 0.0;
  double width = 0.0;  // total support of the transition in y units
  double length = 0.0;
  std::vector<Vec> path;
  std::vector<double> cum;    // cumulative arclength at path vertices
  std::vector<double> dy_of;  // centered offsets at uniform sigma samples
};

inline Vec path_point(const JumpProfile& jp, double s) {
  const auto& cum = jp.cum;
  if (s <= 0.0) return jp.path.front();
  if (s >= jp.length) return jp.path.back();
  size_t k = std::upper_bound(cum.begin(), cum.end(), s) - cum.begin();
  k = std::min(std::max<size_t>(k, 1), cum.size() - 1);
  const double seg = cum[k] - cum[k - 1];
  const double t = seg > 0.0 ? (s - cum[k - 1]) / seg : 0.0;
  Vec p{};
  for (int c = 0; c < 2; ++c)
    p[c] = jp.path[k - 1][c] + t * (jp.path[k][c] - jp.path[k - 1][c]);
  return p;
}

inline double sigma_at(const JumpProfile& jp, double dy) {
  const auto& table = jp.dy_of;
  if (dy <= table.front()) return 0.0;
  if (dy >= table.back()) return 1.0;
  const size_t k =
      std::upper_bound(table.begin(), table.end(), dy) - table.begin();
  const double lo = table[k - 1], hi = table[k];
  const double frac = hi > lo ? (dy - lo) / (hi - lo) : 0.0;
  return (static_cast<double>(k - 1) + frac) / static_cast<double>(table.size() - 1);
}

struct CellPlan {
  std::vector<JumpProfile> jumps;
};

inline JumpProfile make_jump_profile(const Potential& pot, double ystar, int ll, int lr,
                                     int pf, int pt, double eta, double room,
                                     RecoveryProfile profile) {
  GeodesicQuery query;
  query.y = vec1(ystar);
  const WellsAt wl = eval_wells_cell(pot, ll, vec1(ystar));
  const WellsAt wr = eval_wells_cell(pot, lr, vec1(ystar));
  query.p = selected_well(wl, pf);
  query.q = selected_well(wr, pt);
  if (ll != lr) {
    query.at_interface = true;
    query.label_minus = ll;
    query.label_plus = lr;
  }
  const GeodesicResult geo = dw(pot, query);

  JumpProfile jp;
  jp.ystar = ystar;
  jp.path = geo.path;
  if (jp.path.size() < 2) jp.path = {query.p, query.q};
  jp.cum.assign(jp.path.size(), 0.0);
  for (size_t k = 1; k < jp.path.size(); ++k)
    jp.cum[k] = jp.cum[k - 1] + norm(sub(jp.path[k], jp.path[k - 1]), pot.dim_p);
  jp.length = jp.cum.back();

  const int S = 512;
  const auto barrier = [&](double sigma) {
    const Vec p = path_point(jp, sigma * jp.length);
    const double wa = eval_W_cell(pot, ll, vec1(ystar), p);
    const double wb = ll == lr ? wa : eval_W_cell(pot, lr, vec1(ystar), p);
    return std::min(wa, wb);
  };

  if (profile == RecoveryProfile::LinearRamp) {
    jp.dy_of.resize(S + 1);
    for (int k = 0; k <= S; ++k)
      jp.dy_of[k] = eta * (static_cast<double>(k) / S - 0.5);
    jp.width = eta;
    return jp;
  }

  double max_w = 0.0;
  for (int k = 0; k <= 128; ++k) max_w = std::max(max_w, barrier(k / 128.0));
  double floor = 0.72 * eta * std::max(max_w, 1e-12);
  for (int attempt = 0; attempt < 60; ++attempt) {
    jp.dy_of.assign(S + 1, 0.0);
    double prev = jp.length / std::sqrt(std::max(barrier(0.0), floor));
    for (int k = 1; k <= S; ++k) {
      const double cur =
          jp.length / std::sqrt(std::max(barrier(static_cast<double>(k) / S), floor));
      jp.dy_of[k] = jp.dy_of[k - 1] + eta * 0.5 * (prev + cur) / S;
      prev = cur;
    }
    jp.width = jp.dy_of.back();
    if (jp.width <= room) break;
    floor *= 2.0;
  }
  const double half = 0.5 * jp.width;
  for (auto& v : jp.dy_of) v -= half;
  return jp;
}

// a cell keeps its pattern only next to an interior cell with the same
// pattern; everything else triggers the cut-off toward a(y)
inline bool recovery_neighbor_matches(const RecoverySpec& spec, int k, int nb, int d) {
  if (nb < 1 || nb > d - 1) return false;
  if (spec.per_cell.empty()) return true;
  return spec.per_cell[k].take_a == spec.per_cell[nb].take_a;
}

inline CellPlan make_cell_plan(const Potential& pot, const Microstructure& ms,
                               double eta, RecoveryProfile profile) {
  const int m = ms.m;
  std::vector<int> boundaries;
  for (int t = 0; t < m; ++t) {
    const int tn = (t + 1) % m;
    const double yl = micro_node_y(t, m);
    const int ll = pot.partition.locate(vec1(yl));
    const int lr = pot.partition.locate(vec1(micro_node_y(tn, m)));
    const double ystar =
        ll == lr ? wrap_unit(yl + 0.5 / m) : wrap_unit(pot.partition.cell(ll).hi[0]);
    const WellsAt wl = eval_wells_cell(pot, ll, vec1(ystar));
    const WellsAt wr = eval_wells_cell(pot, lr, vec1(ystar));
    const Vec pv = selected_well(wl, ms.take_a[t]);
    const Vec qv = selected_well(wr, ms.take_a[tn]);
    double gap = 0.0;
    for (int c = 0; c < pot.dim_p; ++c) gap = std::max(gap, std::abs(pv[c] - qv[c]));
    if (gap > 1e-12) boundaries.push_back(t);
  }

  CellPlan plan;
  const int nj = static_cast<int>(boundaries.size());
  for (int i = 0; i < nj; ++i) {
    const int t = boundaries[i];
    const int tn = (t + 1) % m;
    const double yl = micro_node_y(t, m);
    const int ll = pot.partition.locate(vec1(yl));
    const int lr = pot.partition.locate(vec1(micro_node_y(tn, m)));
    const double ystar =
        ll == lr ? wrap_unit(yl + 0.5 / m) : wrap_unit(pot.partition.cell(ll).hi[0]);
    double room = 0.9;
    if (nj > 1) {
      const double y_prev = micro_node_y(boundaries[(i + nj - 1) % nj], m);
      const double y_next = micro_node_y(boundaries[(i + 1) % nj], m);
      const double gap_prev = std::abs(wrap_unit(yl - y_prev));
      const double gap_next = std::abs(wrap_unit(y_next - yl));
      room = 0.9 * std::min(std::max(gap_prev, 1.0 / m), std::max(gap_next, 1.0 / m));
    }
    plan.jumps.push_back(make_jump_profile(pot, ystar, ll, lr, ms.take_a[t],
                                           ms.take_a[tn], eta, room, profile));
  }
  return plan;
}

}  // namespace detail

inline GridField build_recovery(const Potential& pot, const RecoverySpec& spec,
                                const EnergyParams& params, const MacroGrid& macro) {
  if (pot.dim_y != 1 || macro.dim != 1 || spec.base.dim != 1)
    throw Unsupported("build_recovery: 1-D macro and micro only");
  const int m = detail::alignment_ratio(macro.n, params);
  const int d = macro.n / m;
  const double ratio = params.eps / params.delta;
  if (!(ratio > 0.0 && ratio < 0.25))
    throw BadConfig("build_recovery: eps/delta must lie in (0, 1/4)");
  const double eta = ratio, gamma = ratio;
  if (eta * m < 3.0)
    throw WidthUnresolvable("build_recovery: interface width under 3 micro nodes");
  if (!spec.per_cell.empty() && static_cast<int>(spec.per_cell.size()) != d + 1)
    throw ShapeMismatch("build_recovery: need one microstructure per unfolding cell");

  const auto pattern_of = [&](int k) -> const Microstructure& {
    return spec.per_cell.empty() ? spec.base : spec.per_cell[k];
  };
  for (int k = 0; k <= d; ++k) {
    if (pattern_of(k).m != m || pattern_of(k).dim != 1)
      throw ShapeMismatch("build_recovery: microstructure resolution must match delta/h");
  }

  std::map<std::vector<uint8_t>, detail::CellPlan> plans;
  const auto plan_of = [&](const Microstructure& ms) -> const detail::CellPlan& {
    auto it = plans.find(ms.take_a);
    if (it == plans.end())
      it = plans.emplace(ms.take_a, detail::make_cell_plan(pot, ms, eta, spec.profile))
               .first;
    return it->second;
  };

  GridField u = make_field(macro, pot.dim_p);
  for (int64_t j = 0; j < macro.n; ++j) {
    const int k = static_cast<int>((j + m / 2) / m);
    const int li = static_cast<int>((j + m / 2) % m);
    const double y = micro_node_y(li, m);
    const bool interior = k >= 1 && k <= d - 1;
    const WellsAt wells = eval_wells(pot, vec1(y));
    if (!interior) {
      for (int c = 0; c < pot.dim_p; ++c) u.at(j, c) = wells.a[c];
      continue;
    }
    const Microstructure& ms = pattern_of(k);
    Vec state = detail::selected_well(wells, ms.take_a[li]);
    const detail::CellPlan& plan = plan_of(ms);
    double best = 1.0;
    const detail::JumpProfile* nearest = nullptr;
    for (const auto& jp : plan.jumps) {
      const double dy = wrap_unit(y - jp.ystar);
      if (std::abs(dy) < std::abs(best) || nearest == nullptr) {
        best = dy;
        nearest = &jp;
      }
    }
    if (nearest != nullptr && std::abs(best) <= 0.5 * nearest->width) {
      const double sigma = detail::sigma_at(*nearest, best);
      state = detail::path_point(*nearest, sigma * nearest->length);
    }

    const bool cut_left = !detail::recovery_neighbor_matches(spec, k, k - 1, d);
    const bool cut_right = !detail::recovery_neighbor_matches(spec, k, k + 1, d);
    double s_cut = 1.0;
    if (cut_left) s_cut = std::min(s_cut, std::clamp((y + 0.5) / gamma, 0.0, 1.0));
    if (cut_right) s_cut = std::min(s_cut, std::clamp((0.5 - y) / gamma, 0.0, 1.0));
    for (int c = 0; c < pot.dim_p; ++c)
      u.at(j, c) = wells.a[c] + s_cut * (state[c] - wells.a[c]);
  }
  return u;
}

// ---------------------------------------------------------------------------
// Scaling probes

struct ScalingRow {
  double ratio = 0.0;
  double rescaled = 0.0;
  double bulk_share = 0.0;
  double gradient_share = 0.0;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  double slope = 0.0;  // log-log fit of the unrescaled energy against the ratio
};

inline ScalingTable scaling_probe(const Potential& pot, const RecoverySpec& spec,
                                  const std::vector<double>& ratios,
                                  double delta = 0.25) {
  if (ratios.size() < 2) throw BadConfig("scaling_probe: need at least two ratios");
  ScalingTable table;
  std::vector<double> lx, ly;
  for (double r : ratios) {
    int frexp_exp = 0;
    const double mant = std::frexp(r, &frexp_exp);
    if (mant != 0.5) throw BadConfig("scaling_probe: ratios must be dyadic");
    const int d = static_cast<int>(std::lround(1.0 / delta));
    const int m = std::max(128, 4 * static_cast<int>(std::lround(1.0 / r)));
    const MacroGrid macro{1, d * m};
    EnergyParams params;
    params.delta = delta;
    params.eps = r * delta;
    const GridField u = build_recovery(pot, spec, params, macro);
    const EnergyBreakdown e = energy(pot, u, params);
    ScalingRow row;
    row.ratio = r;
    row.rescaled = e.total / r;
    row.bulk_share = e.total > 0.0 ? e.bulk / e.total : 0.0;
    row.gradient_share = e.total > 0.0 ? e.gradient_part / e.total : 0.0;
    table.rows.push_back(row);
    lx.push_back(std::log(r));
    ly.push_back(std::log(std::max(e.total, 1e-300)));
  }
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(ly.size());
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  table.slope = den > 0.0 ? num / den : 0.0;
  return table;
}

}  // namespace gammahom
