// Cell problems behind the two-scale expansion: per-point convex envelopes
// of W, the homogenized potential W^hom by separable dual bisection, the
// macro functional G0 through a cached value table, and the cell-averaged
// first-order density via a mass-constrained interface DP.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "common.hpp"
#include "geodesic.hpp"
#include "grid.hpp"
#include "potential.hpp"

namespace gammahom {

// Lower convex hull of s -> W(y,s) sampled on a knot grid. hull_values live
// on the same knots; evaluation between knots is linear, beyond the ends the
// end slopes extend.
struct ConvexEnvelope1D {
  Vec y{};
  std::vector<double> knots;
  std::vector<double> hull_values;
  std::vector<double> slopes;  // per segment, nondecreasing

  double eval(double s) const {
    const size_t n = knots.size();
    if (s <= knots.front())
      return hull_values.front() + slopes.front() * (s - knots.front());
    if (s >= knots.back())
      return hull_values.back() + slopes.back() * (s - knots.back());
    const size_t i =
        static_cast<size_t>(std::upper_bound(knots.begin(), knots.end(), s) -
                            knots.begin()) -
        1;
    const size_t j = std::min(i, n - 2);
    const double t = (s - knots[j]) / (knots[j + 1] - knots[j]);
    return hull_values[j] + t * (hull_values[j + 1] - hull_values[j]);
  }

  // leftmost knot minimizing hull(s) - lambda*s
  int argmin_knot(double lambda) const {
    const auto it = std::lower_bound(slopes.begin(), slopes.end(), lambda);
    return static_cast<int>(it - slopes.begin());
  }
};

namespace detail {

inline ConvexEnvelope1D envelope_for_cell(const Potential& pot, int label, const Vec& y,
                                          int n_knots) {
  if (pot.dim_p != 1)
    throw Unsupported("convex envelope implemented for scalar states");
  if (n_knots < 256) throw BadConfig("envelope needs at least 256 knots");
  const double span = pot.growth.c2 + 1.0;
  const WellsAt w = eval_wells_cell(pot, label, y);
  std::vector<double> s;
  s.reserve(static_cast<size_t>(n_knots) + 2);
  for (int i = 0; i < n_knots; ++i)
    s.push_back(-span + 2.0 * span * i / (n_knots - 1));
  s.push_back(w.a[0]);
  s.push_back(w.b[0]);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());

  const size_t n = s.size();
  std::vector<double> val(n);
  for (size_t i = 0; i < n; ++i) val[i] = eval_W_cell(pot, label, y, vec1(s[i]));

  std::vector<size_t> hull;
  for (size_t i = 0; i < n; ++i) {
    while (hull.size() >= 2) {
      const size_t k = hull[hull.size() - 2], j = hull.back();
      if ((val[j] - val[k]) * (s[i] - s[k]) >= (val[i] - val[k]) * (s[j] - s[k]))
        hull.pop_back();
      else
        break;
    }
    hull.push_back(i);
  }

  ConvexEnvelope1D env;
  env.y = y;
  env.knots = s;
  env.hull_values.assign(n, 0.0);
  for (size_t seg = 0; seg + 1 < hull.size(); ++seg) {
    const size_t k = hull[seg], j = hull[seg + 1];
    for (size_t i = k; i <= j; ++i) {
      const double t = (s[i] - s[k]) / (s[j] - s[k]);
      env.hull_values[i] = val[k] + t * (val[j] - val[k]);
    }
  }
  env.hull_values[hull.front()] = val[hull.front()];
  env.hull_values[hull.back()] = val[hull.back()];
  env.slopes.assign(n - 1, 0.0);
  for (size_t i = 0; i + 1 < n; ++i)
    env.slopes[i] = (env.hull_values[i + 1] - env.hull_values[i]) / (s[i + 1] - s[i]);
  return env;
}

}  // namespace detail

inline ConvexEnvelope1D convex_envelope(const Potential& pot, const Vec& y,
                                        int n_knots = 1024) {
  const Vec yw = wrap_vec(y, pot.dim_y);
  return detail::envelope_for_cell(pot, pot.partition.locate(yw), yw, n_knots);
}

struct CellProblemResult {
  double p = 0.0;
  double value = 0.0;
  double dual_lambda = 0.0;
  std::vector<double> minimizer_phi;  // zero-mean, size = micro node count
};

namespace detail {

// per-node hulls grouped by identical metric; with no wobble the hull
// depends on the cell label only
struct CellHulls {
  std::vector<ConvexEnvelope1D> unique_hulls;
  std::vector<int> node_hull;   // micro node -> hull index
  std::vector<int64_t> counts;  // nodes per hull
  double span_lo = 0.0, span_hi = 0.0;
  double slope_lo = 0.0, slope_hi = 0.0;
};

inline CellHulls build_hulls(const Potential& pot, const MicroGrid& micro,
                             int n_knots = 1024) {
  if (pot.dim_p != 1) throw Unsupported("cell problem implemented for scalar states");
  if (micro.dim != pot.dim_y)
    throw ShapeMismatch("micro grid dimension does not match the potential");
  CellHulls hulls;
  const int m = micro.m;
  const int64_t nodes = micro.node_count();
  hulls.node_hull.assign(nodes, -1);
  std::map<int, int> by_label;
  const bool cache_by_label = pot.wobble == 0.0;
  for (int64_t j = 0; j < nodes; ++j) {
    Vec y{};
    if (micro.dim == 1) {
      y = vec1(micro_node_y(static_cast<int>(j), m));
    } else {
      y = vec2(micro_node_y(static_cast<int>(j / m), m),
               micro_node_y(static_cast<int>(j % m), m));
    }
    const int label = pot.partition.locate(y);
    int idx = -1;
    if (cache_by_label) {
      const auto it = by_label.find(label);
      if (it != by_label.end()) idx = it->second;
    }
    if (idx < 0) {
      hulls.unique_hulls.push_back(detail::envelope_for_cell(pot, label, y, n_knots));
      idx = static_cast<int>(hulls.unique_hulls.size()) - 1;
      if (cache_by_label) by_label[label] = idx;
    }
    hulls.node_hull[j] = idx;
  }
  hulls.counts.assign(hulls.unique_hulls.size(), 0);
  for (int64_t j = 0; j < nodes; ++j) ++hulls.counts[hulls.node_hull[j]];
  hulls.span_lo = hulls.unique_hulls.front().knots.front();
  hulls.span_hi = hulls.unique_hulls.front().knots.back();
  hulls.slope_lo = std::numeric_limits<double>::infinity();
  hulls.slope_hi = -std::numeric_limits<double>::infinity();
  for (const auto& env : hulls.unique_hulls) {
    hulls.span_lo = std::min(hulls.span_lo, env.knots.front());
    hulls.span_hi = std::max(hulls.span_hi, env.knots.back());
    hulls.slope_lo = std::min(hulls.slope_lo, env.slopes.front());
    hulls.slope_hi = std::max(hulls.slope_hi, env.slopes.back());
  }
  return hulls;
}

// separable dual: per-hull leftmost argmin knots at a multiplier, blended
// exactly to meet the mass constraint
inline CellProblemResult w_hom_dual(const CellHulls& hulls, double p,
                                    bool want_phi) {
  const int64_t nodes =
      static_cast<int64_t>(hulls.node_hull.size());
  if (!(p >= hulls.span_lo && p <= hulls.span_hi))
    throw MassInfeasible("w_hom: mass outside the representable span");

  const size_t ng = hulls.unique_hulls.size();
  auto group_mean = [&](double lambda, std::vector<int>& arg) {
    double sum = 0.0;
    for (size_t g = 0; g < ng; ++g) {
      arg[g] = hulls.unique_hulls[g].argmin_knot(lambda);
      sum += hulls.counts[g] * hulls.unique_hulls[g].knots[arg[g]];
    }
    return sum / static_cast<double>(nodes);
  };

  std::vector<int> arg_lo(ng), arg_hi(ng), arg_mid(ng);
  double lo = hulls.slope_lo - 1.0, hi = hulls.slope_hi + 1.0;
  double mean_lo = group_mean(lo, arg_lo);
  group_mean(hi, arg_hi);
  if (mean_lo >= p) {
    hi = lo;
    arg_hi = arg_lo;
  } else {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double mean_mid = group_mean(mid, arg_mid);
      if (mean_mid >= p) {
        hi = mid;
        arg_hi = arg_mid;
      } else {
        lo = mid;
        arg_lo = arg_mid;
        mean_lo = mean_mid;
      }
    }
  }

  // per group: full_right nodes take the knot at arg_hi, one pivot node sits
  // inside the bracketing segment, the rest stay at arg_lo
  CellProblemResult res;
  res.p = p;
  res.dual_lambda = 0.5 * (lo + hi);
  double deficit = p * static_cast<double>(nodes);
  for (size_t g = 0; g < ng; ++g)
    deficit -= hulls.counts[g] * hulls.unique_hulls[g].knots[arg_lo[g]];

  std::vector<int64_t> full_right(ng, 0);
  std::vector<double> pivot(ng, std::numeric_limits<double>::quiet_NaN());
  for (size_t g = 0; g < ng && deficit > 0.0; ++g) {
    const auto& env = hulls.unique_hulls[g];
    const double gain = env.knots[arg_hi[g]] - env.knots[arg_lo[g]];
    if (gain <= 0.0) continue;
    const int64_t take = std::min(
        hulls.counts[g], static_cast<int64_t>(std::floor(deficit / gain)));
    full_right[g] = take;
    deficit -= take * gain;
    if (take < hulls.counts[g] && deficit > 0.0) {
      pivot[g] = env.knots[arg_lo[g]] + deficit;
      deficit = 0.0;
    }
  }

  double value_sum = 0.0, mass_sum = 0.0;
  for (size_t g = 0; g < ng; ++g) {
    const auto& env = hulls.unique_hulls[g];
    const double q_lo = env.knots[arg_lo[g]], q_hi = env.knots[arg_hi[g]];
    const double v_lo = env.hull_values[arg_lo[g]], v_hi = env.hull_values[arg_hi[g]];
    int64_t rest = hulls.counts[g] - full_right[g];
    value_sum += full_right[g] * v_hi;
    mass_sum += full_right[g] * q_hi;
    if (!std::isnan(pivot[g])) {
      value_sum += env.eval(pivot[g]);
      mass_sum += pivot[g];
      --rest;
    }
    value_sum += rest * v_lo;
    mass_sum += rest * q_lo;
  }
  const double mean = mass_sum / static_cast<double>(nodes);
  if (std::abs(mean - p) > 1e-9 * std::max(1.0, std::abs(p)))
    throw NonConvergent("w_hom: dual bisection did not meet the mass constraint");
  res.value = value_sum / static_cast<double>(nodes);

  if (want_phi) {
    res.minimizer_phi.assign(nodes, 0.0);
    std::vector<int64_t> used(ng, 0);
    for (int64_t j = 0; j < nodes; ++j) {
      const int g = hulls.node_hull[j];
      const auto& env = hulls.unique_hulls[g];
      double q;
      if (used[g] < full_right[g])
        q = env.knots[arg_hi[g]];
      else if (used[g] == full_right[g] && !std::isnan(pivot[g]))
        q = pivot[g];
      else
        q = env.knots[arg_lo[g]];
      ++used[g];
      res.minimizer_phi[j] = q - p;
    }
  }
  return res;
}

}  // namespace detail

inline CellProblemResult w_hom(const Potential& pot, double p, const MicroGrid& micro,
                               int n_knots = 1024) {
  if (micro.m < 64) throw BadConfig("w_hom needs micro resolution >= 64");
  const auto hulls = detail::build_hulls(pot, micro, n_knots);
  return detail::w_hom_dual(hulls, p, true);
}

// Value table for G0 quadrature: 512 points across the representable span.
struct WhomTable {
  double p_lo = 0.0, p_hi = 0.0;
  std::vector<double> values;
  std::vector<double> lambdas;

  double eval(double p) const {
    if (!(p >= p_lo && p <= p_hi))
      throw MassInfeasible("w_hom table: state outside the representable span");
    const size_t n = values.size();
    const double t = (p - p_lo) / (p_hi - p_lo) * (n - 1);
    const size_t i = std::min(static_cast<size_t>(t), n - 2);
    const double f = t - static_cast<double>(i);
    return values[i] + f * (values[i + 1] - values[i]);
  }
};

inline WhomTable build_whom_table(const Potential& pot, const MicroGrid& micro,
                                  int n = 512, int jobs = 1) {
  if (n < 2) throw BadConfig("w_hom table needs at least 2 points");
  const auto hulls = detail::build_hulls(pot, micro);
  WhomTable table;
  table.p_lo = hulls.span_lo;
  table.p_hi = hulls.span_hi;
  table.values.assign(n, 0.0);
  table.lambdas.assign(n, 0.0);
  auto fill = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const double p = table.p_lo + (table.p_hi - table.p_lo) * i / (n - 1);
      const auto res = detail::w_hom_dual(hulls, p, false);
      table.values[i] = res.value;
      table.lambdas[i] = res.dual_lambda;
    }
  };
  if (jobs <= 1) {
    fill(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + jobs - 1) / jobs;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back(fill, std::min(t * chunk, n), std::min((t + 1) * chunk, n));
    for (auto& th : pool) th.join();
  }
  return table;
}

inline double g0(const WhomTable& table, const GridField& u) {
  if (u.comps != 1) throw ShapeMismatch("g0 expects a scalar macro field");
  double sum = 0.0;
  for (int64_t j = 0; j < u.node_count(); ++j) sum += table.eval(u.at(j));
  double w = 1.0;
  for (int i = 0; i < u.dim; ++i) w /= u.n;
  return sum * w;
}

inline double g0(const Potential& pot, const GridField& u, const MicroGrid& micro) {
  return g0(build_whom_table(pot, micro), u);
}

// Binary well selection on the micro grid, node-major.
struct Microstructure {
  int dim = 1;
  int m = 0;
  std::vector<uint8_t> take_a;

  int64_t node_count() const {
    int64_t c = 1;
    for (int i = 0; i < dim; ++i) c *= m;
    return c;
  }
};

inline Microstructure make_uniform_microstructure(int dim, int m, bool take_a) {
  Microstructure ms;
  ms.dim = dim;
  ms.m = m;
  ms.take_a.assign(ms.node_count(), take_a ? 1 : 0);
  return ms;
}

// take_a on wrapped micro coordinates y with lo <= y < hi along axis 0;
// hi < lo selects the complementary arc across the periodic seam
inline Microstructure make_interval_microstructure(int m, double lo, double hi) {
  Microstructure ms;
  ms.dim = 1;
  ms.m = m;
  ms.take_a.assign(m, 0);
  for (int li = 0; li < m; ++li) {
    const double y = micro_node_y(li, m);
    const bool inside = lo <= hi ? (y >= lo && y < hi) : (y >= lo || y < hi);
    ms.take_a[li] = inside ? 1 : 0;
  }
  return ms;
}

struct H1Result {
  double p = 0.0;
  double value = 0.0;
  double slack = 0.0;
  int interfaces = 0;
  Microstructure pattern;
  std::vector<std::pair<int, int>> runs;  // (1 = a-well, 0 = b-well, length)
};

namespace detail {

struct JumpCostTable {
  // cost[boundary][phase_from][phase_to]; boundary t sits between micro
  // nodes t and t+1 (mod m)
  std::vector<std::array<std::array<double, 2>, 2>> cost;
  double max_cost = 0.0;
};

inline Vec selected_well(const WellsAt& w, int phase) {
  return phase == 1 ? w.a : w.b;
}

inline JumpCostTable build_jump_costs(const Potential& pot, int m) {
  JumpCostTable table;
  table.cost.resize(m);
  std::map<std::tuple<int, int, int, int, int64_t>, double> memo;
  for (int t = 0; t < m; ++t) {
    const int tn = (t + 1) % m;
    const double yl = micro_node_y(t, m), yr = micro_node_y(tn, m);
    const int ll = pot.partition.locate(vec1(yl));
    const int lr = pot.partition.locate(vec1(yr));
    double ystar;
    if (ll == lr) {
      ystar = wrap_unit(yl + 0.5 / m);
    } else {
      ystar = wrap_unit(pot.partition.cell(ll).hi[0]);
    }
    const WellsAt wl = eval_wells_cell(pot, ll, vec1(ystar));
    const WellsAt wr = eval_wells_cell(pot, lr, vec1(ystar));
    const int64_t qy = pot.wobble == 0.0 ? 0 : llround(ystar * 4.0e9);
    for (int pf = 0; pf < 2; ++pf)
      for (int pt = 0; pt < 2; ++pt) {
        const Vec pv = selected_well(wl, pf), qv = selected_well(wr, pt);
        double gap = 0.0;
        for (int c = 0; c < pot.dim_p; ++c) gap = std::max(gap, std::abs(pv[c] - qv[c]));
        double cost;
        if (gap <= 1e-12) {
          cost = 0.0;
        } else {
          const auto key = std::make_tuple(ll, lr, pf, pt, qy);
          const auto it = memo.find(key);
          if (it != memo.end()) {
            cost = it->second;
          } else {
            GeodesicQuery query;
            query.y = vec1(ystar);
            query.p = pv;
            query.q = qv;
            if (ll != lr) {
              query.at_interface = true;
              query.label_minus = ll;
              query.label_plus = lr;
            }
            cost = dw(pot, query).distance;
            memo[key] = cost;
          }
        }
        table.cost[t][pf][pt] = cost;
        table.max_cost = std::max(table.max_cost, cost);
      }
  }
  return table;
}

}  // namespace detail

// Minimal interface cost over periodic binary well selections with mean p,
// by DP over micro cells with quantized accumulated mass. The reported slack
// bounds the bias from jump-position and mass quantization.
inline H1Result h1_tilde(const Potential& pot, double p, const MicroGrid& micro,
                         int max_interfaces = 6) {
  if (pot.dim_y != 1 || micro.dim != 1)
    throw Unsupported("h1_tilde implemented for 1-D micro cells");
  if (pot.dim_p != 1) throw Unsupported("h1_tilde implemented for scalar states");
  if (max_interfaces < 0 || max_interfaces > 16)
    throw BadConfig("max_interfaces must be between 0 and 16");
  const int m = micro.m;
  const int K = max_interfaces;

  std::vector<double> wa(m), wb(m), wmin(m), gap(m);
  double sum_min = 0.0, gap_total = 0.0, gap_max = 0.0, gap_min_pos = 0.0;
  for (int t = 0; t < m; ++t) {
    const WellsAt w = eval_wells(pot, vec1(micro_node_y(t, m)));
    wa[t] = w.a[0];
    wb[t] = w.b[0];
    wmin[t] = std::min(wa[t], wb[t]);
    gap[t] = std::abs(wa[t] - wb[t]);
    sum_min += wmin[t];
    gap_total += gap[t];
    gap_max = std::max(gap_max, gap[t]);
  }
  gap_min_pos = gap_max;
  for (int t = 0; t < m; ++t)
    if (gap[t] > 0.0) gap_min_pos = std::min(gap_min_pos, gap[t]);
  const double mass_lo = sum_min / m;
  const double mass_hi = (sum_min + gap_total) / m;
  if (p < mass_lo - 1e-12 || p > mass_hi + 1e-12)
    throw MassInfeasible("h1_tilde: mass outside the attainable selection range");

  const bool degenerate = gap_total <= 1e-12;
  const int B = degenerate ? 1 : 10 * m + 1;
  const double binw = degenerate ? 1.0 : gap_total / (10.0 * m);
  const double target = p * m - sum_min;
  const double window = degenerate ? 1.0 : std::max(0.75 * binw, 0.5 * gap_max);

  std::vector<int> dbin(2 * m, 0);
  for (int t = 0; t < m && !degenerate; ++t) {
    dbin[2 * t + 0] = static_cast<int>(llround((wb[t] - wmin[t]) / binw));
    dbin[2 * t + 1] = static_cast<int>(llround((wa[t] - wmin[t]) / binw));
  }

  const auto jumps = detail::build_jump_costs(pot, m);
  const double inf = std::numeric_limits<double>::infinity();
  const int64_t layer = 2LL * (K + 1) * B;
  auto idx = [&](int phase, int k, int b) {
    return (static_cast<int64_t>(phase) * (K + 1) + k) * B + b;
  };

  double best_value = inf;
  int best_s0 = -1, best_phase = -1, best_k = -1, best_b = -1;
  std::vector<uint8_t> best_choice;
  std::vector<double> cur(layer), nxt(layer);
  std::vector<uint8_t> choice(static_cast<int64_t>(m) * layer);

  for (int s0 = 0; s0 < 2; ++s0) {
    std::fill(cur.begin(), cur.end(), inf);
    std::fill(choice.begin(), choice.end(), 255);
    const int b0 = dbin[2 * 0 + s0];
    if (b0 >= B) continue;
    cur[idx(s0, 0, b0)] = 0.0;
    for (int t = 1; t < m; ++t) {
      std::fill(nxt.begin(), nxt.end(), inf);
      for (int pf = 0; pf < 2; ++pf)
        for (int k = 0; k <= K; ++k)
          for (int b = 0; b < B; ++b) {
            const double c = cur[idx(pf, k, b)];
            if (c == inf) continue;
            for (int pt = 0; pt < 2; ++pt) {
              const int kk = k + (pf != pt ? 1 : 0);
              if (kk > K) continue;
              const int bb = b + dbin[2 * t + pt];
              if (bb >= B) continue;
              const double cc = c + jumps.cost[t - 1][pf][pt];
              const int64_t to = idx(pt, kk, bb);
              if (cc < nxt[to]) {
                nxt[to] = cc;
                choice[t * layer + to] = static_cast<uint8_t>(pf);
              }
            }
          }
      cur.swap(nxt);
    }
    double run_value = inf;
    int run_phase = -1, run_k = -1, run_b = -1;
    for (int pf = 0; pf < 2; ++pf)
      for (int k = 0; k <= K; ++k)
        for (int b = 0; b < B; ++b) {
          const double c = cur[idx(pf, k, b)];
          if (c == inf) continue;
          if (pf != s0 && k + 1 > K) continue;
          if (!degenerate && std::abs(b * binw - target) > window) continue;
          const double total = c + jumps.cost[m - 1][pf][s0];
          if (total < run_value) {
            run_value = total;
            run_phase = pf;
            run_k = k;
            run_b = b;
          }
        }
    if (run_value < best_value) {
      best_value = run_value;
      best_s0 = s0;
      best_phase = run_phase;
      best_k = run_k;
      best_b = run_b;
      best_choice = choice;
    }
  }
  if (best_s0 < 0) throw MassInfeasible("h1_tilde: no selection reaches the mass level");

  H1Result res;
  res.p = p;
  res.value = best_value;
  res.pattern.dim = 1;
  res.pattern.m = m;
  res.pattern.take_a.assign(m, 0);
  {
    int phase = best_phase, k = best_k, b = best_b;
    for (int t = m - 1; t >= 1; --t) {
      res.pattern.take_a[t] = static_cast<uint8_t>(phase);
      const int prev = best_choice[static_cast<int64_t>(t) * layer + idx(phase, k, b)];
      b -= dbin[2 * t + phase];
      if (prev != phase) --k;
      phase = prev;
    }
    res.pattern.take_a[0] = static_cast<uint8_t>(phase);
  }
  for (int t = 0; t < m; ++t) {
    const int next = res.pattern.take_a[(t + 1) % m];
    if (next != res.pattern.take_a[t]) ++res.interfaces;
  }
  for (int t = 0; t < m;) {
    int len = 1;
    while (t + len < m && res.pattern.take_a[t + len] == res.pattern.take_a[t]) ++len;
    res.runs.emplace_back(res.pattern.take_a[t], len);
    t += len;
  }
  res.slack = K * jumps.max_cost *
              (2.0 / m + 2.0 * (degenerate ? 0.0 : binw / m) /
                             std::max(gap_min_pos, 1e-9));
  return res;
}

}  // namespace gammahom
