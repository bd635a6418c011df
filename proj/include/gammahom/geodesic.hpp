// Degenerate geodesic distance d_W(y,p,q) between states under the conformal
// metric 2*sqrt(W(y,.)): exact quadrature on monotone paths for scalar
// states, Dijkstra on a state-space grid for planar states, the two-leg
// interface problem with intermediate point z0, and the slab-minimized
// variant under F_eps.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "common.hpp"
#include "potential.hpp"

namespace gammahom {

struct GeodesicQuery {
  Vec y{};                  // micro point (wrapped internally)
  bool at_interface = false;
  int label_minus = 0;      // 0 = locate automatically
  int label_plus = 0;
  Vec p{}, q{};
  double radius = 0.0;      // <= 0: use the potential's default ball
  double h_p = 1.0 / 128.0; // state-space resolution
};

struct GeodesicResult {
  double distance = 0.0;
  double euclidean_length = 0.0;
  double tol = 0.0;
  std::vector<Vec> path;
  std::optional<Vec> z0;
};

struct LengthBoundReport {
  bool ok = true;
  double max_length = 0.0;
  int violations = 0;
};

namespace detail {

using Factor = std::function<double(const Vec&)>;  // sqrt of the density

inline double polyline_length(const std::vector<Vec>& path, int dim) {
  double len = 0.0;
  for (size_t i = 1; i < path.size(); ++i) len += dist(path[i - 1], path[i], dim);
  return len;
}

// sup of the conformal factor over the search ball, sampled; enters the
// reported tolerance
inline double sup_factor(const Factor& f, int dim, double R) {
  double m = 0.0;
  const int n = 33;
  if (dim == 1) {
    for (int i = 0; i < n; ++i) m = std::max(m, f(vec1(-R + 2.0 * R * i / (n - 1))));
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m = std::max(m, f(vec2(-R + 2.0 * R * i / (n - 1), -R + 2.0 * R * j / (n - 1))));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Scalar backend: any scalar path covers [min(p,q), max(p,q)], so the
// monotone path is optimal and the distance is a direct quadrature of
// 2*factor. Breakpoints at the wells and the equidistance midpoint keep the
// integrand piecewise smooth for the adaptive rule.

inline double scalar_cost(const Factor& f, double p, double q,
                          const std::vector<double>& breaks) {
  if (p == q) return 0.0;
  const double lo = std::min(p, q), hi = std::max(p, q);
  return integrate_with_breaks([&](double s) { return 2.0 * f(vec1(s)); }, lo, hi,
                               breaks);
}

inline std::vector<double> metric_breaks(const Potential& pot, int label, const Vec& y) {
  const WellsAt w = eval_wells_cell(pot, label, y);
  return {w.a[0], w.b[0], 0.5 * (w.a[0] + w.b[0])};
}

// ---------------------------------------------------------------------------
// Planar backend: Dijkstra with 8-neighborhood and trapezoid edge weights on
// a uniform grid over the search square. Sources and targets live off-grid
// and attach to the surrounding node patch. Raw grid paths are then relaxed
// by vertex projection toward local chords to cut grid anisotropy.

// composite Simpson of 2f along the segment, with panels scaled to the grid
// resolution; a single panel misses sign structure on segments that start
// and end at metric zeros
inline double segment_cost(const Factor& f, const Vec& u, const Vec& v, double h_ref) {
  const double len = dist(u, v, 2);
  if (len == 0.0) return 0.0;
  int n = static_cast<int>(std::ceil(len / std::max(h_ref, 1e-12)));
  n = std::clamp(n, 1, 256);
  double total = 0.0;
  Vec a = u;
  double fa = f(a);
  for (int i = 1; i <= n; ++i) {
    const Vec b = lerp(u, v, static_cast<double>(i) / n);
    const Vec m = lerp(u, v, (i - 0.5) / n);
    const double fb = f(b);
    total += (len / n) * (2.0 * fa + 8.0 * f(m) + 2.0 * fb) / 6.0;
    a = b;
    fa = fb;
  }
  return total;
}

class PlanarSolver {
 public:
  PlanarSolver(Factor f, double R, double h_p) : f_(std::move(f)), R_(R) {
    K_ = std::max(3, static_cast<int>(std::lround(2.0 * R / h_p)) + 1);
    h_ = 2.0 * R / (K_ - 1);
    fval_.resize(grid_count());
    for (int i = 0; i < K_; ++i)
      for (int j = 0; j < K_; ++j)
        fval_[static_cast<int64_t>(i) * K_ + j] = f_(vec2(coord(i), coord(j)));
  }

  int64_t grid_count() const { return static_cast<int64_t>(K_) * K_; }
  double grid_h() const { return h_; }
  double coord(int i) const { return -R_ + h_ * i; }
  Vec node_pos(int64_t idx) const {
    return vec2(coord(static_cast<int>(idx / K_)), coord(static_cast<int>(idx % K_)));
  }
  double dist_at(int64_t idx) const { return dist_[idx]; }
  double dist_to_target() const { return dist_[grid_count() + 1]; }

  // single-source sweep from an off-grid point; if a target is supplied it
  // is attached as an extra node (with a direct source edge) and the sweep
  // stops once it settles
  void sweep(const Vec& src, const std::optional<Vec>& target) {
    src_ = src;
    target_ = target;
    const int64_t n = grid_count() + 2;
    const int64_t idx_src = grid_count(), idx_tgt = grid_count() + 1;
    dist_.assign(n, std::numeric_limits<double>::infinity());
    prev_.assign(n, -1);
    std::vector<char> done(n, 0);
    std::vector<char> tgt_anchor(grid_count(), 0);
    std::vector<int64_t> src_anchor;
    patch_around(src, src_anchor);
    if (target) {
      std::vector<int64_t> ta;
      patch_around(*target, ta);
      for (int64_t a : ta) tgt_anchor[a] = 1;
    }
    using QE = std::pair<double, int64_t>;
    std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
    dist_[idx_src] = 0.0;
    pq.push({0.0, idx_src});
    auto relax = [&](int64_t from, int64_t to) {
      const double w =
          (from >= grid_count() || to >= grid_count())
              ? segment_cost(f_, pos(from), pos(to), h_)
              : dist(pos(from), pos(to), 2) * (fac(from) + fac(to));
      if (dist_[from] + w < dist_[to]) {
        dist_[to] = dist_[from] + w;
        prev_[to] = from;
        pq.push({dist_[to], to});
      }
    };
    static const int off[8][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                  {1, 1},  {1, -1}, {-1, 1}, {-1, -1}};
    while (!pq.empty()) {
      const auto [dcur, idx] = pq.top();
      pq.pop();
      if (done[idx]) continue;
      done[idx] = 1;
      if (idx == idx_tgt) break;
      if (idx == idx_src) {
        for (int64_t a : src_anchor) relax(idx_src, a);
        if (target) relax(idx_src, idx_tgt);
        continue;
      }
      const int i = static_cast<int>(idx / K_), j = static_cast<int>(idx % K_);
      for (const auto& o : off) {
        const int ni = i + o[0], nj = j + o[1];
        if (ni >= 0 && ni < K_ && nj >= 0 && nj < K_)
          relax(idx, static_cast<int64_t>(ni) * K_ + nj);
      }
      if (tgt_anchor[idx]) relax(idx, idx_tgt);
    }
  }

  std::vector<Vec> path_to(int64_t idx) const {
    std::vector<Vec> path;
    for (int64_t cur = idx; cur != -1; cur = prev_[cur]) path.push_back(pos(cur));
    std::reverse(path.begin(), path.end());
    if (path.empty() || dist(path.front(), src_, 2) > 0.0) path.insert(path.begin(), src_);
    return path;
  }
  std::vector<Vec> path_to_target() const { return path_to(grid_count() + 1); }

  const Factor& factor() const { return f_; }

 private:
  Vec pos(int64_t idx) const {
    if (idx == grid_count()) return src_;
    if (idx == grid_count() + 1) return *target_;
    return node_pos(idx);
  }
  double fac(int64_t idx) const {
    if (idx >= grid_count()) return f_(pos(idx));
    return fval_[idx];
  }
  void patch_around(const Vec& pt, std::vector<int64_t>& out) const {
    const int bi = static_cast<int>(std::floor((pt[0] + R_) / h_));
    const int bj = static_cast<int>(std::floor((pt[1] + R_) / h_));
    for (int di = -1; di <= 2; ++di)
      for (int dj = -1; dj <= 2; ++dj) {
        const int i = bi + di, j = bj + dj;
        if (i >= 0 && i < K_ && j >= 0 && j < K_)
          out.push_back(static_cast<int64_t>(i) * K_ + j);
      }
  }

  Factor f_;
  double R_ = 1.0, h_ = 1.0;
  int K_ = 3;
  Vec src_{};
  std::optional<Vec> target_;
  std::vector<double> fval_;
  std::vector<double> dist_;
  std::vector<int64_t> prev_;
};

// vertex projection toward the local chord, then the composite cost of the
// relaxed polyline
inline double shorten_and_cost(const Factor& f, std::vector<Vec>& path, double h_ref) {
  for (int pass = 0; pass < 3; ++pass) {
    for (size_t i = 1; i + 1 < path.size();) {
      const Vec &a = path[i - 1], &c = path[i + 1];
      const double cur =
          segment_cost(f, a, path[i], h_ref) + segment_cost(f, path[i], c, h_ref);
      const double skip = segment_cost(f, a, c, h_ref);
      if (skip <= cur) {
        path.erase(path.begin() + static_cast<std::ptrdiff_t>(i));
        continue;
      }
      Vec best = path[i];
      double best_cost = cur;
      const Vec mid = lerp(a, c, 0.5);
      for (double t : {0.25, 0.5, 0.75, 1.0}) {
        const Vec cand = lerp(path[i], mid, t);
        const double cc =
            segment_cost(f, a, cand, h_ref) + segment_cost(f, cand, c, h_ref);
        if (cc < best_cost) {
          best_cost = cc;
          best = cand;
        }
      }
      path[i] = best;
      ++i;
    }
  }
  double total = 0.0;
  for (size_t i = 1; i < path.size(); ++i)
    total += segment_cost(f, path[i - 1], path[i], h_ref);
  return total;
}

struct PointDistance {
  double distance = 0.0;
  std::vector<Vec> path;
};

// one-metric distance for either backend
inline PointDistance point_distance(const Factor& f, int dim, const Vec& p, const Vec& q,
                                    double R, double h_p,
                                    const std::vector<double>& breaks_1d) {
  PointDistance g;
  if (dim == 1) {
    g.distance = scalar_cost(f, p[0], q[0], breaks_1d);
    g.path = {p, q};
    return g;
  }
  PlanarSolver solver(f, R, h_p);
  solver.sweep(p, q);
  g.path = solver.path_to_target();
  g.distance = shorten_and_cost(f, g.path, solver.grid_h());
  return g;
}

}  // namespace detail

// ---------------------------------------------------------------------------

// Geodesic distance between states p and q at micro point y. Interior
// queries use the single metric of the containing cell; interface queries
// minimize the two-leg cost over the hand-off point z0.
inline GeodesicResult dw(const Potential& pot, const GeodesicQuery& query) {
  const int M = pot.dim_p;
  if (M > 2) throw Unsupported("geodesics implemented for state dimension 1 and 2");
  if (!all_finite(query.y, pot.dim_y) || !all_finite(query.p, M) ||
      !all_finite(query.q, M))
    throw NonFiniteInput("dw: non-finite query");
  const double R = query.radius > 0.0 ? query.radius : pot.default_radius();
  if (norm(query.p, M) > R || norm(query.q, M) > R)
    throw RadiusTooSmall("dw: endpoint outside the search ball");

  const Vec y = wrap_vec(query.y, pot.dim_y);
  int li = query.label_minus, lj = query.label_plus;
  if (!query.at_interface) {
    if (li == 0) li = pot.partition.locate(y);
    lj = li;
  } else if (li == 0 || lj == 0) {
    if (pot.dim_y != 1)
      throw BadConfig("interface queries in 2-D micro need explicit labels");
    Vec ym = y, yp = y;
    ym[0] = wrap_unit(y[0] - 1e-9);
    yp[0] = wrap_unit(y[0] + 1e-9);
    if (li == 0) li = pot.partition.locate(ym);
    if (lj == 0) lj = pot.partition.locate(yp);
  }

  const detail::Factor f_i = [&pot, li, y](const Vec& s) {
    return std::sqrt(std::max(0.0, eval_W_cell(pot, li, y, s)));
  };
  const detail::Factor f_j = [&pot, lj, y](const Vec& s) {
    return std::sqrt(std::max(0.0, eval_W_cell(pot, lj, y, s)));
  };

  const double supf =
      std::max(detail::sup_factor(f_i, M, R), detail::sup_factor(f_j, M, R));
  GeodesicResult res;
  res.tol = std::max(1e-6, 2.0 * query.h_p * supf);

  // identical endpoints, or nearby endpoints projecting onto one zero point
  const double pq = dist(query.p, query.q, M);
  if (pq <= 1e-15 * (1.0 + norm(query.p, M))) {
    res.path = {query.p};
    return res;
  }
  {
    const WellsAt wi = eval_wells_cell(pot, li, y);
    auto proj = [&](const Vec& v) {
      return dist(v, wi.a, M) <= dist(v, wi.b, M) ? wi.a : wi.b;
    };
    const Vec proj_p = proj(query.p), proj_q = proj(query.q);
    if (!query.at_interface && pq <= res.tol && dist(proj_p, proj_q, M) == 0.0 &&
        dist(query.p, proj_p, M) <= res.tol && dist(query.q, proj_q, M) <= res.tol) {
      res.path = {query.p, query.q};
      res.euclidean_length = pq;
      return res;
    }
  }

  if (!query.at_interface) {
    const auto g = detail::point_distance(f_i, M, query.p, query.q, R, query.h_p,
                                          M == 1 ? detail::metric_breaks(pot, li, y)
                                                 : std::vector<double>{});
    res.distance = g.distance;
    res.path = g.path;
    res.euclidean_length = detail::polyline_length(res.path, M);
    return res;
  }

  if (M == 1) {
    // two-leg interface problem: coarse z0 grid plus the well values, then a
    // local golden-section refinement around the best candidate
    const std::vector<double> bi = detail::metric_breaks(pot, li, y);
    const std::vector<double> bj = detail::metric_breaks(pot, lj, y);
    auto two_leg = [&](double z0) {
      return detail::scalar_cost(f_i, query.p[0], z0, bi) +
             detail::scalar_cost(f_j, z0, query.q[0], bj);
    };
    double best_z = 0.0, best_cost = std::numeric_limits<double>::infinity();
    const double step = 4.0 * query.h_p;
    std::vector<double> cands;
    for (double z = -R; z <= R + 1e-12; z += step) cands.push_back(z);
    const WellsAt wi = eval_wells_cell(pot, li, y), wj = eval_wells_cell(pot, lj, y);
    cands.insert(cands.end(), {wi.a[0], wi.b[0], wj.a[0], wj.b[0]});
    for (double z : cands) {
      const double c = two_leg(z);
      if (c < best_cost) {
        best_cost = c;
        best_z = z;
      }
    }
    double lo = std::max(-R, best_z - step), hi = std::min(R, best_z + step);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double c1 = two_leg(x1), c2 = two_leg(x2);
    for (int it = 0; it < 60; ++it) {
      if (c1 < c2) {
        hi = x2;
        x2 = x1;
        c2 = c1;
        x1 = hi - gr * (hi - lo);
        c1 = two_leg(x1);
      } else {
        lo = x1;
        x1 = x2;
        c1 = c2;
        x2 = lo + gr * (hi - lo);
        c2 = two_leg(x2);
      }
    }
    const double xm = 0.5 * (lo + hi);
    if (two_leg(xm) < best_cost) {
      best_cost = two_leg(xm);
      best_z = xm;
    }
    res.distance = best_cost;
    res.z0 = vec1(best_z);
    res.path = {query.p, vec1(best_z), query.q};
    res.euclidean_length = detail::polyline_length(res.path, M);
    return res;
  }

  // planar interface: one sweep from each endpoint under its own metric,
  // then the hand-off point is the grid argmin of the summed distances
  detail::PlanarSolver from_p(f_i, R, query.h_p);
  from_p.sweep(query.p, std::nullopt);
  detail::PlanarSolver from_q(f_j, R, query.h_p);
  from_q.sweep(query.q, std::nullopt);
  int64_t best_idx = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int64_t idx = 0; idx < from_p.grid_count(); ++idx) {
    const double c = from_p.dist_at(idx) + from_q.dist_at(idx);
    if (c < best_cost) {
      best_cost = c;
      best_idx = idx;
    }
  }
  std::vector<Vec> leg1 = from_p.path_to(best_idx);
  std::vector<Vec> leg2 = from_q.path_to(best_idx);
  const double cost1 = detail::shorten_and_cost(f_i, leg1, from_p.grid_h());
  const double cost2 = detail::shorten_and_cost(f_j, leg2, from_q.grid_h());
  res.distance = cost1 + cost2;
  res.z0 = from_p.node_pos(best_idx);
  res.path = leg1;
  for (auto it = leg2.rbegin(); it != leg2.rend(); ++it)
    if (res.path.empty() || dist(res.path.back(), *it, 2) > 0.0) res.path.push_back(*it);
  res.euclidean_length = detail::polyline_length(res.path, M);
  return res;
}

// Convenience wrapper for interior queries at a wrapped micro point.
inline GeodesicResult dw_interior(const Potential& pot, const Vec& y, const Vec& p,
                                  const Vec& q, double h_p = 1.0 / 128.0) {
  GeodesicQuery query;
  query.y = y;
  query.p = p;
  query.q = q;
  query.h_p = h_p;
  return dw(pot, query);
}

// Admissible slab half-thickness for the slab-minimized metric: a quarter
// cell, shrunk when the wells move (Lipschitz rate L) so that the slab
// cannot drag a well across the pinning radius or the separation margin.
inline double eps_upper_bound(const Potential& pot) {
  double e1 = 0.25;
  const double lip = pot.well_lip();
  if (lip > 0.0) {
    e1 = std::min(e1, pot.growth.R / (2.0 * lip));
    e1 = std::min(e1, pot.growth.mu / (2.0 * lip));
  }
  return e1;
}

// Distance under the slab-minimized conformal factor
// F_eps(y',s) = min_{|z| <= eps} sqrt(W(y'+z, s)), with the inner
// minimization sampled on 33 slab knots.
inline GeodesicResult h_eps(const Potential& pot, const Vec& y_prime, double eps,
                            const Vec& p, const Vec& q, double h_p = 1.0 / 128.0,
                            double radius = 0.0) {
  if (pot.dim_y != 1) throw Unsupported("slab metric implemented for 1-D micro cells");
  const int M = pot.dim_p;
  if (M > 2) throw Unsupported("geodesics implemented for state dimension 1 and 2");
  if (!all_finite(y_prime, 1) || !all_finite(p, M) || !all_finite(q, M) ||
      !std::isfinite(eps))
    throw NonFiniteInput("h_eps: non-finite input");
  const double e1 = eps_upper_bound(pot);
  if (!(eps > 0.0 && eps < e1))
    throw EpsilonOutOfRange("h_eps: need 0 < eps < " + fmt_g17(e1));
  const double R = radius > 0.0 ? radius : pot.default_radius();
  if (norm(p, M) > R || norm(q, M) > R)
    throw RadiusTooSmall("h_eps: endpoint outside the search ball");

  const int n_knots = 33;
  const double y0 = y_prime[0];
  const detail::Factor f = [&pot, y0, eps](const Vec& s) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_knots; ++i) {
      const double z = -eps + 2.0 * eps * i / (n_knots - 1);
      m = std::min(m, eval_W(pot, vec1(y0 + z), s));
    }
    return std::sqrt(std::max(0.0, m));
  };

  GeodesicResult res;
  res.tol = std::max(1e-6, 2.0 * h_p * detail::sup_factor(f, M, R));
  if (dist(p, q, M) <= 1e-15 * (1.0 + norm(p, M))) {
    res.path = {p};
    return res;
  }

  std::vector<double> breaks;
  if (M == 1) {
    for (const auto& c : pot.partition.cells)
      for (double z : {-eps, 0.0, eps}) {
        const WellsAt w = eval_wells_cell(pot, c.label, vec1(wrap_unit(y0 + z)));
        breaks.push_back(w.a[0]);
        breaks.push_back(w.b[0]);
        breaks.push_back(0.5 * (w.a[0] + w.b[0]));
      }
  }
  const auto g = detail::point_distance(f, M, p, q, R, h_p, breaks);
  res.distance = g.distance;
  res.path = g.path;
  res.euclidean_length = detail::polyline_length(res.path, M);
  return res;
}

// One-time per-potential calibration of the Euclidean length bound: the max
// observed geodesic length over a seeded endpoint sample, times 1.5.
inline double calibrate_length_bound(const Potential& pot, int n_pairs = 200,
                                     uint64_t seed = 1, double sample_radius = 2.0,
                                     double h_p = 1.0 / 128.0) {
  Rng rng(seed);
  const int M = pot.dim_p;
  double max_len = 0.0;
  for (int s = 0; s < n_pairs; ++s) {
    GeodesicQuery query;
    query.y = vec1(rng.uniform(-0.5, 0.5));
    for (int c = 0; c < M; ++c) {
      query.p[c] = rng.uniform(-sample_radius, sample_radius);
      query.q[c] = rng.uniform(-sample_radius, sample_radius);
    }
    query.h_p = h_p;
    max_len = std::max(max_len, dw(pot, query).euclidean_length);
  }
  return 1.5 * std::max(max_len, 1e-6);
}

inline LengthBoundReport check_length_bound(const std::vector<GeodesicResult>& results,
                                            double L) {
  LengthBoundReport rep;
  for (const auto& r : results) {
    rep.max_length = std::max(rep.max_length, r.euclidean_length);
    if (r.euclidean_length > L) ++rep.violations;
  }
  rep.ok = rep.violations == 0;
  return rep;
}

}  // namespace gammahom
