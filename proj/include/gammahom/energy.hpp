#pragma once
// Discrete phase-field energies on the macro grid, their rescaled and
// unfolded per-cell decomposition, exact gradients, and the limit interface
// functional on microstructures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "gammahom/cell.hpp"
#include "gammahom/common.hpp"
#include "gammahom/geodesic.hpp"
#include "gammahom/grid.hpp"
#include "gammahom/potential.hpp"

namespace gammahom {

struct EnergyParams {
  double eps = 0.0;
  double delta = 0.0;
  std::optional<double> mass_constraint;
};

struct EnergyBreakdown {
  double total = 0.0;
  double bulk = 0.0;
  double gradient_part = 0.0;
};

struct RescaledEnergy {
  double total = 0.0;
  std::vector<int64_t> interior_cells;
  std::vector<double> per_cell;  // unfolded densities aligned with interior_cells
  double remainder = 0.0;        // rescaled energy carried by the boundary layer
};

namespace detail {

// micro nodes per macro cell axis, after validating the alignment rules
inline int alignment_ratio(int n, const EnergyParams& params) {
  if (!(params.eps > 0.0) || !(params.delta > 0.0))
    throw BadConfig("energy: eps and delta must be positive");
  if (params.eps / params.delta > 0.5)
    throw BadConfig("energy: needs eps/delta <= 1/2");
  const double dr = 1.0 / params.delta;
  const int d = static_cast<int>(std::lround(dr));
  if (d < 2 || std::abs(dr - d) > 1e-9)
    throw MisalignedDelta("delta must be the inverse of an integer >= 2");
  if (n % d != 0) throw MisalignedDelta("delta must be an integer multiple of the spacing");
  const int m = n / d;
  if (m < 2) throw MisalignedDelta("need at least 2 micro nodes per cell");
  return m;
}

inline int micro_ratio(const GridField& u, const EnergyParams& params) {
  if (u.periodic) throw BadConfig("energy expects a macro field");
  if (!u.all_values_finite()) throw NonFiniteInput("energy: non-finite field values");
  return alignment_ratio(u.n, params);
}

// exact periodic micro coordinate of a macro node index along one axis
inline double micro_y_of_node(int64_t j, int m) {
  const int li = static_cast<int>((j + m / 2) % m);
  return micro_node_y(li, m);
}

inline Vec node_state(const GridField& u, int64_t node) {
  Vec p{};
  for (int c = 0; c < u.comps; ++c) p[c] = u.at(node, c);
  return p;
}

}  // namespace detail

inline EnergyBreakdown energy(const Potential& pot, const GridField& u,
                              const EnergyParams& params) {
  if (u.comps != pot.dim_p) throw ShapeMismatch("field components != potential dim_p");
  if (u.dim != pot.dim_y) throw ShapeMismatch("field dimension != potential dim_y");
  const int m = detail::micro_ratio(u, params);
  const GridField g = fd_gradient(u);
  const double hN = detail::node_weight_pow(u.n, u.dim);
  const double e2 = params.eps * params.eps;

  EnergyBreakdown out;
  const int64_t nodes = u.node_count();
  for (int64_t node = 0; node < nodes; ++node) {
    Vec y{};
    if (u.dim == 1) {
      y = vec1(detail::micro_y_of_node(node, m));
    } else {
      y = vec2(detail::micro_y_of_node(node / u.n, m),
               detail::micro_y_of_node(node % u.n, m));
    }
    out.bulk += eval_W(pot, y, detail::node_state(u, node)) * hN;
    double gsq = 0.0;
    for (int c = 0; c < g.comps; ++c) gsq += g.at(node, c) * g.at(node, c);
    out.gradient_part += e2 * gsq * hN;
  }
  out.total = out.bulk + out.gradient_part;
  return out;
}

inline RescaledEnergy energy_rescaled(const Potential& pot, const GridField& u,
                                      const EnergyParams& params) {
  if (u.comps != pot.dim_p) throw ShapeMismatch("field components != potential dim_p");
  if (u.dim != pot.dim_y) throw ShapeMismatch("field dimension != potential dim_y");
  const int m = detail::micro_ratio(u, params);
  const int d = u.n / m;
  const GridField g = fd_gradient(u);
  const double hN = detail::node_weight_pow(u.n, u.dim);
  const double e2 = params.eps * params.eps;
  const double ratio = params.delta / params.eps;

  // cell index along one axis for the unfolding convention: cells are
  // centered at delta*k, the two half cells at the ends form the layer
  const auto cell_of = [&](int64_t j) { return static_cast<int>((j + m / 2) / m); };
  const auto interior = [&](int k) { return k >= 1 && k <= d - 1; };

  const int64_t cells = u.dim == 1 ? d + 1 : static_cast<int64_t>(d + 1) * (d + 1);
  std::vector<double> cell_sum(cells, 0.0);
  std::vector<char> cell_interior(cells, 0);

  const int64_t nodes = u.node_count();
  for (int64_t node = 0; node < nodes; ++node) {
    Vec y{};
    int64_t cell;
    if (u.dim == 1) {
      y = vec1(detail::micro_y_of_node(node, m));
      cell = cell_of(node);
      cell_interior[cell] = interior(static_cast<int>(cell)) ? 1 : 0;
    } else {
      const int64_t j0 = node / u.n, j1 = node % u.n;
      y = vec2(detail::micro_y_of_node(j0, m), detail::micro_y_of_node(j1, m));
      const int k0 = cell_of(j0), k1 = cell_of(j1);
      cell = static_cast<int64_t>(k0) * (d + 1) + k1;
      cell_interior[cell] = (interior(k0) && interior(k1)) ? 1 : 0;
    }
    double gsq = 0.0;
    for (int c = 0; c < g.comps; ++c) gsq += g.at(node, c) * g.at(node, c);
    cell_sum[cell] += (eval_W(pot, y, detail::node_state(u, node)) + e2 * gsq) * hN;
  }

  RescaledEnergy out;
  double cell_measure = 1.0;
  for (int i = 0; i < u.dim; ++i) cell_measure *= params.delta;
  double layer = 0.0;
  for (int64_t cell = 0; cell < cells; ++cell) {
    if (cell_interior[cell]) {
      out.interior_cells.push_back(cell);
      out.per_cell.push_back(ratio * cell_sum[cell] / cell_measure);
    } else {
      layer += cell_sum[cell];
    }
  }
  out.remainder = ratio * layer;
  double total = out.remainder;
  for (double v : out.per_cell) total += v * cell_measure;
  out.total = total;
  return out;
}

inline GridField energy_gradient(const Potential& pot, const GridField& u,
                                 const EnergyParams& params) {
  if (u.comps != pot.dim_p) throw ShapeMismatch("field components != potential dim_p");
  if (u.dim != pot.dim_y) throw ShapeMismatch("field dimension != potential dim_y");
  const int m = detail::micro_ratio(u, params);
  const double hN = detail::node_weight_pow(u.n, u.dim);
  const double e2 = params.eps * params.eps;
  const double inv_h = static_cast<double>(u.n);

  GridField grad = u;
  std::fill(grad.data.begin(), grad.data.end(), 0.0);
  const int64_t nodes = u.node_count();
  for (int64_t node = 0; node < nodes; ++node) {
    Vec y{};
    if (u.dim == 1) {
      y = vec1(detail::micro_y_of_node(node, m));
    } else {
      y = vec2(detail::micro_y_of_node(node / u.n, m),
               detail::micro_y_of_node(node % u.n, m));
    }
    const Vec dW = eval_dW(pot, y, detail::node_state(u, node));
    for (int c = 0; c < u.comps; ++c) grad.at(node, c) += dW[c] * hN;
  }

  // scatter the chain-rule terms of each forward difference; the last node
  // on a non-periodic axis reuses the backward difference
  const auto scatter_axis = [&](int64_t base, int64_t stride, int extent) {
    for (int j = 0; j < extent; ++j) {
      int64_t fwd = j + 1, bwd = j;
      if (j == extent - 1) {
        fwd = j;
        bwd = j - 1;
      }
      const int64_t nf = base + fwd * stride, nb = base + bwd * stride;
      for (int c = 0; c < u.comps; ++c) {
        const double diff = (u.at(nf, c) - u.at(nb, c)) * inv_h;
        const double w = 2.0 * e2 * diff * inv_h * hN;
        grad.at(nf, c) += w;
        grad.at(nb, c) -= w;
      }
    }
  };
  if (u.dim == 1) {
    scatter_axis(0, 1, u.n);
  } else {
    for (int64_t j1 = 0; j1 < u.n; ++j1) scatter_axis(j1, u.n, u.n);
    for (int64_t j0 = 0; j0 < u.n; ++j0) scatter_axis(j0 * u.n, 1, u.n);
  }

  if (params.mass_constraint.has_value()) {
    for (int c = 0; c < u.comps; ++c) {
      double mean = 0.0;
      for (int64_t node = 0; node < nodes; ++node) mean += grad.at(node, c);
      mean /= static_cast<double>(nodes);
      for (int64_t node = 0; node < nodes; ++node) grad.at(node, c) -= mean;
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Limit interface functional on microstructures

namespace detail {

// geodesic cost across one micro grid edge, cached by location and branch
class EdgeCostCache {
 public:
  explicit EdgeCostCache(const Potential& pot) : pot_(pot) {}

  double cost(const Vec& y_edge, int label_from, int label_to, int phase_from,
              int phase_to) {
    const WellsAt wf = eval_wells_cell(pot_, label_from, y_edge);
    const WellsAt wt = eval_wells_cell(pot_, label_to, y_edge);
    const Vec pv = selected_well(wf, phase_from), qv = selected_well(wt, phase_to);
    double gap = 0.0;
    for (int c = 0; c < pot_.dim_p; ++c) gap = std::max(gap, std::abs(pv[c] - qv[c]));
    if (gap <= 1e-12) return 0.0;
    const int64_t q0 = pot_.wobble == 0.0 ? 0 : llround(y_edge[0] * 4.0e9);
    const int64_t q1 = pot_.wobble == 0.0 || pot_.dim_y < 2 ? 0 : llround(y_edge[1] * 4.0e9);
    const auto key = std::make_tuple(label_from, label_to, phase_from, phase_to, q0, q1);
    const auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    GeodesicQuery query;
    query.y = y_edge;
    query.p = pv;
    query.q = qv;
    if (label_from != label_to) {
      query.at_interface = true;
      query.label_minus = label_from;
      query.label_plus = label_to;
    }
    const double c = dw(pot_, query).distance;
    memo_[key] = c;
    return c;
  }

 private:
  const Potential& pot_;
  std::map<std::tuple<int, int, int, int, int64_t, int64_t>, double> memo_;
};

inline double g1_of_pattern(const Potential& pot, const Microstructure& ms,
                            EdgeCostCache& cache) {
  const int m = ms.m;
  if (ms.dim == 1) {
    double sum = 0.0;
    for (int t = 0; t < m; ++t) {
      const int tn = (t + 1) % m;
      const double yl = micro_node_y(t, m);
      const int ll = pot.partition.locate(vec1(yl));
      const int lr = pot.partition.locate(vec1(micro_node_y(tn, m)));
      const double ystar = ll == lr ? wrap_unit(yl + 0.5 / m)
                                    : wrap_unit(pot.partition.cell(ll).hi[0]);
      sum += cache.cost(vec1(ystar), ll, lr, ms.take_a[t], ms.take_a[tn]);
    }
    return sum;
  }
  if (ms.dim != 2) throw Unsupported("g1: micro dimension must be 1 or 2");
  const double hy = 1.0 / m;
  double sum = 0.0;
  for (int l0 = 0; l0 < m; ++l0)
    for (int l1 = 0; l1 < m; ++l1) {
      const int64_t node = static_cast<int64_t>(l0) * m + l1;
      const double y0 = micro_node_y(l0, m), y1 = micro_node_y(l1, m);
      for (int axis = 0; axis < 2; ++axis) {
        const int n0 = axis == 0 ? (l0 + 1) % m : l0;
        const int n1 = axis == 1 ? (l1 + 1) % m : l1;
        const int64_t nb = static_cast<int64_t>(n0) * m + n1;
        if (ms.take_a[node] == ms.take_a[nb]) continue;
        Vec y_edge = vec2(y0, y1);
        y_edge[axis] = wrap_unit(y_edge[axis] + 0.5 * hy);
        const Vec y_nb = vec2(micro_node_y(n0, m), micro_node_y(n1, m));
        const int lf = pot.partition.locate(wrap_vec(vec2(y0, y1), 2));
        const int lt = pot.partition.locate(wrap_vec(y_nb, 2));
        sum += cache.cost(y_edge, lf, lt, ms.take_a[node], ms.take_a[nb]) * hy;
      }
    }
  return sum;
}

}  // namespace detail

// per-macro-node microstructures; a single entry is broadcast to every node
struct MacroMicrostructure {
  MacroGrid macro;
  std::vector<Microstructure> cells;
};

inline double g1(const Potential& pot, const Microstructure& ms, const MicroGrid& micro) {
  if (ms.dim != micro.dim || ms.m != micro.m)
    throw ShapeMismatch("g1: microstructure does not match the micro grid");
  if (micro.dim > 2) throw Unsupported("g1: micro dimension must be 1 or 2");
  detail::EdgeCostCache cache(pot);
  return detail::g1_of_pattern(pot, ms, cache);
}

inline double g1(const Potential& pot, const MacroMicrostructure& mm, const MicroGrid& micro) {
  if (mm.cells.empty()) throw BadConfig("g1: empty macro microstructure");
  if (static_cast<int64_t>(mm.cells.size()) != mm.macro.node_count())
    throw ShapeMismatch("g1: one microstructure per macro node required");
  detail::EdgeCostCache cache(pot);
  const double hN = detail::node_weight_pow(mm.macro.n, mm.macro.dim);
  std::map<std::vector<uint8_t>, double> by_pattern;
  double sum = 0.0;
  for (const auto& ms : mm.cells) {
    if (ms.dim != micro.dim || ms.m != micro.m)
      throw ShapeMismatch("g1: microstructure does not match the micro grid");
    const auto it = by_pattern.find(ms.take_a);
    double v;
    if (it != by_pattern.end()) {
      v = it->second;
    } else {
      v = detail::g1_of_pattern(pot, ms, cache);
      by_pattern[ms.take_a] = v;
    }
    sum += v * hN;
  }
  return sum;
}

}  // namespace gammahom
