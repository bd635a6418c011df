// Uniform discretizations of the macro domain (0,1)^N and the periodic unit
// cell Q, sampled fields with finite-difference calculus, the unfolding
// operator with its boundary layer, and two-scale convergence diagnostics.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "common.hpp"
#include "potential.hpp"

namespace gammahom {

// Nodes x_j = j*h, j in [0,n)^dim, h = 1/n, each carrying quadrature
// weight h^dim.
struct MacroGrid {
  int dim = 1;
  int n = 2;
  double h() const { return 1.0 / n; }
  int64_t node_count() const {
    int64_t c = 1;
    for (int i = 0; i < dim; ++i) c *= n;
    return c;
  }
};

// Periodic grid on Q = (-1/2, 1/2)^dim with the macro-aligned node set
// {wrap(l/m)}: sorted coordinates (li - m/2)/m for storage index li in [0,m).
struct MicroGrid {
  int dim = 1;
  int m = 2;
  double h() const { return 1.0 / m; }
  int64_t node_count() const {
    int64_t c = 1;
    for (int i = 0; i < dim; ++i) c *= m;
    return c;
  }
};

inline double micro_node_y(int li, int m) {
  return static_cast<double>(li - m / 2) / static_cast<double>(m);
}

struct GridField {
  int dim = 1;
  int n = 2;          // nodes per axis
  bool periodic = false;
  int comps = 1;
  std::vector<double> data;  // node-major, components fastest

  int64_t node_count() const {
    int64_t c = 1;
    for (int i = 0; i < dim; ++i) c *= n;
    return c;
  }
  int64_t flat(int64_t j0, int64_t j1 = 0) const { return dim == 1 ? j0 : j0 * n + j1; }
  double& at(int64_t node, int c = 0) { return data[node * comps + c]; }
  double at(int64_t node, int c = 0) const { return data[node * comps + c]; }
  bool all_values_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline GridField make_field(const MacroGrid& g, int comps = 1) {
  GridField f;
  f.dim = g.dim;
  f.n = g.n;
  f.periodic = false;
  f.comps = comps;
  f.data.assign(g.node_count() * comps, 0.0);
  return f;
}

inline GridField make_field(const MicroGrid& g, int comps = 1) {
  GridField f;
  f.dim = g.dim;
  f.n = g.m;
  f.periodic = true;
  f.comps = comps;
  f.data.assign(g.node_count() * comps, 0.0);
  return f;
}

// Coordinate of a node: macro fields live at j*h, micro fields at the
// wrapped set (j - n/2)/n.
inline double node_coord(const GridField& f, int64_t j_axis) {
  return f.periodic ? micro_node_y(static_cast<int>(j_axis), f.n)
                    : static_cast<double>(j_axis) / f.n;
}

template <class F>
inline void fill_field(GridField& f, F&& fn) {
  if (f.dim == 1) {
    for (int64_t j = 0; j < f.n; ++j) {
      const Vec x = vec1(node_coord(f, j));
      for (int c = 0; c < f.comps; ++c) f.at(j, c) = fn(x, c);
    }
  } else {
    for (int64_t j0 = 0; j0 < f.n; ++j0)
      for (int64_t j1 = 0; j1 < f.n; ++j1) {
        const Vec x = vec2(node_coord(f, j0), node_coord(f, j1));
        for (int c = 0; c < f.comps; ++c) f.at(f.flat(j0, j1), c) = fn(x, c);
      }
  }
}

// Forward differences; the last macro node falls back to the backward
// difference so affine fields stay exact, micro grids wrap. Output component
// layout: c*dim + axis.
inline GridField fd_gradient(const GridField& u) {
  if (u.n < 2) throw BadConfig("fd_gradient needs at least 2 nodes per axis");
  GridField g;
  g.dim = u.dim;
  g.n = u.n;
  g.periodic = u.periodic;
  g.comps = u.comps * u.dim;
  g.data.assign(u.node_count() * g.comps, 0.0);
  const double inv_h = static_cast<double>(u.n);
  auto diff_1d = [&](int64_t j, int64_t stride, int64_t extent, int64_t base, int c) {
    int64_t fwd = j + 1, bwd = j;
    if (j == extent - 1) {
      if (u.periodic) {
        fwd = 0;
      } else {
        fwd = j;
        bwd = j - 1;
      }
    }
    return (u.at(base + fwd * stride, c) - u.at(base + bwd * stride, c)) * inv_h;
  };
  if (u.dim == 1) {
    for (int64_t j = 0; j < u.n; ++j)
      for (int c = 0; c < u.comps; ++c) g.at(j, c * 1 + 0) = diff_1d(j, 1, u.n, 0, c);
  } else {
    for (int64_t j0 = 0; j0 < u.n; ++j0)
      for (int64_t j1 = 0; j1 < u.n; ++j1) {
        const int64_t node = u.flat(j0, j1);
        for (int c = 0; c < u.comps; ++c) {
          g.at(node, c * 2 + 0) = diff_1d(j0, u.n, u.n, j1, c);
          g.at(node, c * 2 + 1) = diff_1d(j1, 1, u.n, j0 * u.n, c);
        }
      }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Unfolding

// Cells indexed k in [0,d]^dim around centers delta*k; cells with index 0 or
// d on any axis form the boundary layer, where the stored micro data is the
// sampled well a(y) rather than the folded macro values.
struct UnfoldedField {
  int dim = 1;
  int d = 2;       // 1/delta
  int m = 2;       // micro nodes per cell per axis
  int comps = 1;
  std::vector<double> data;  // cell-major, then micro node-major, comps fastest

  int cells_per_axis() const { return d + 1; }
  int64_t cell_count() const {
    int64_t c = 1;
    for (int i = 0; i < dim; ++i) c *= cells_per_axis();
    return c;
  }
  int64_t micro_count() const {
    int64_t c = 1;
    for (int i = 0; i < dim; ++i) c *= m;
    return c;
  }
  int64_t cell_flat(int k0, int k1 = 0) const {
    return dim == 1 ? k0 : static_cast<int64_t>(k0) * cells_per_axis() + k1;
  }
  int64_t micro_flat(int l0, int l1 = 0) const {
    return dim == 1 ? l0 : static_cast<int64_t>(l0) * m + l1;
  }
  double& at(int64_t cell, int64_t micro, int c = 0) {
    return data[(cell * micro_count() + micro) * comps + c];
  }
  double at(int64_t cell, int64_t micro, int c = 0) const {
    return data[(cell * micro_count() + micro) * comps + c];
  }
  bool axis_interior(int k) const { return k >= 1 && k <= d - 1; }
  bool cell_interior(int k0, int k1 = 0) const {
    return axis_interior(k0) && (dim == 1 || axis_interior(k1));
  }
  // number of macro nodes per axis whose nearest cell center is k
  int axis_node_count(int k) const {
    if (axis_interior(k)) return m;
    // the two half cells at the ends share the m boundary nodes
    const int upper = m / 2;             // offsets l in [-m/2, 0)
    const int lower = m - upper;         // offsets l in [0, m/2]
    return k == 0 ? lower : upper;
  }
};

// delta must be 1/d and an integer multiple m >= 2 of the macro spacing, so
// unfolding permutes nodes instead of interpolating.
inline UnfoldedField unfold(const Potential& pot, const GridField& u, double delta) {
  if (u.periodic) throw BadConfig("unfold expects a macro field");
  if (u.comps != pot.dim_p) throw ShapeMismatch("field components != potential dim_p");
  if (!(delta > 0.0 && delta < 1.0)) throw MisalignedDelta("delta must lie in (0,1)");
  const double dr = 1.0 / delta;
  const int d = static_cast<int>(std::lround(dr));
  if (std::abs(dr - d) > 1e-9) throw MisalignedDelta("delta must be the inverse of an integer");
  if (u.n % d != 0) throw MisalignedDelta("delta must be an integer multiple of the spacing");
  const int m = u.n / d;
  if (m < 2) throw MisalignedDelta("need at least 2 micro nodes per cell");

  UnfoldedField uf;
  uf.dim = u.dim;
  uf.d = d;
  uf.m = m;
  uf.comps = u.comps;
  uf.data.assign(uf.cell_count() * uf.micro_count() * uf.comps, 0.0);

  const int ca = uf.cells_per_axis();
  if (u.dim == 1) {
    for (int k = 0; k < ca; ++k) {
      if (uf.cell_interior(k)) {
        for (int li = 0; li < m; ++li) {
          const int64_t j = static_cast<int64_t>(k) * m + (li - m / 2);
          for (int c = 0; c < u.comps; ++c) uf.at(k, li, c) = u.at(j, c);
        }
      } else {
        for (int li = 0; li < m; ++li) {
          const WellsAt w = eval_wells(pot, vec1(micro_node_y(li, m)));
          for (int c = 0; c < u.comps; ++c) uf.at(k, li, c) = w.a[c];
        }
      }
    }
  } else {
    for (int k0 = 0; k0 < ca; ++k0)
      for (int k1 = 0; k1 < ca; ++k1) {
        const int64_t cell = uf.cell_flat(k0, k1);
        if (uf.cell_interior(k0, k1)) {
          for (int l0 = 0; l0 < m; ++l0)
            for (int l1 = 0; l1 < m; ++l1) {
              const int64_t j0 = static_cast<int64_t>(k0) * m + (l0 - m / 2);
              const int64_t j1 = static_cast<int64_t>(k1) * m + (l1 - m / 2);
              for (int c = 0; c < u.comps; ++c)
                uf.at(cell, uf.micro_flat(l0, l1), c) = u.at(u.flat(j0, j1), c);
            }
        } else {
          for (int l0 = 0; l0 < m; ++l0)
            for (int l1 = 0; l1 < m; ++l1) {
              const Vec y = vec2(micro_node_y(l0, m), micro_node_y(l1, m));
              const WellsAt w = eval_wells(pot, y);
              for (int c = 0; c < u.comps; ++c)
                uf.at(cell, uf.micro_flat(l0, l1), c) = w.a[c];
            }
        }
      }
  }
  return uf;
}

// Measured volume of the boundary layer: macro nodes whose cell touches the
// domain boundary, each weighted h^dim.
inline double lambda_measure(const UnfoldedField& uf) {
  const int macro_n = uf.d * uf.m;
  const double interior_axis = static_cast<double>((uf.d - 1) * uf.m) / macro_n;
  double interior = 1.0;
  for (int i = 0; i < uf.dim; ++i) interior *= interior_axis;
  return 1.0 - interior;
}

namespace detail {
// accumulates |u|^2 in cell-major, micro-major order; used by both sides of
// the isometry check so the summation order is identical
template <class AT>
inline double sum_sq_interior(const UnfoldedField& uf, AT&& value_at) {
  double s = 0.0;
  const int ca = uf.cells_per_axis();
  if (uf.dim == 1) {
    for (int k = 0; k < ca; ++k) {
      if (!uf.cell_interior(k)) continue;
      for (int li = 0; li < uf.m; ++li)
        for (int c = 0; c < uf.comps; ++c) {
          const double v = value_at(k, 0, li, 0, c);
          s += v * v;
        }
    }
  } else {
    for (int k0 = 0; k0 < ca; ++k0)
      for (int k1 = 0; k1 < ca; ++k1) {
        if (!uf.cell_interior(k0, k1)) continue;
        for (int l0 = 0; l0 < uf.m; ++l0)
          for (int l1 = 0; l1 < uf.m; ++l1)
            for (int c = 0; c < uf.comps; ++c) {
              const double v = value_at(k0, k1, l0, l1, c);
              s += v * v;
            }
      }
  }
  return s;
}

inline double node_weight_pow(int n, int dim) {
  double w = 1.0;
  for (int i = 0; i < dim; ++i) w *= 1.0 / n;
  return w;
}
}  // namespace detail

// L^2 norm squared of the unfolded field over interior cells times Q, using
// the cell-counting quadrature. Identical summation order and an identical
// final weight make this bit-equal to l2_sq_macro_interior on aligned grids.
inline double l2_sq_unfolded_interior(const UnfoldedField& uf) {
  const double s = detail::sum_sq_interior(
      uf, [&](int k0, int k1, int l0, int l1, int c) {
        return uf.at(uf.cell_flat(k0, k1), uf.micro_flat(l0, l1), c);
      });
  return s * detail::node_weight_pow(uf.d * uf.m, uf.dim);
}

inline double l2_sq_macro_interior(const GridField& u, const UnfoldedField& uf) {
  const int m = uf.m;
  const double s = detail::sum_sq_interior(
      uf, [&](int k0, int k1, int l0, int l1, int c) {
        const int64_t j0 = static_cast<int64_t>(k0) * m + (l0 - m / 2);
        const int64_t j1 = static_cast<int64_t>(k1) * m + (l1 - m / 2);
        return u.at(uf.dim == 1 ? j0 : u.flat(j0, j1), c);
      });
  return s * detail::node_weight_pow(u.n, u.dim);
}

// L^1(Omega x Q) distance between two unfolded tables. Each cell contributes
// its physical macro measure times the Q-average of the pointwise Euclidean
// norm of the difference; the boundary layer enters through the stored a(y)
// convention on either side.
inline double two_scale_error(const UnfoldedField& uf, const UnfoldedField& vf) {
  if (uf.dim != vf.dim || uf.d != vf.d || uf.m != vf.m || uf.comps != vf.comps)
    throw ShapeMismatch("unfolded tables differ in shape");
  const double h = 1.0 / (uf.d * uf.m);
  const double hy = 1.0 / uf.m;
  double hyN = 1.0;
  for (int i = 0; i < uf.dim; ++i) hyN *= hy;
  double total = 0.0;
  const int ca = uf.cells_per_axis();
  auto cell_term = [&](int k0, int k1) {
    const int64_t cell = uf.cell_flat(k0, k1);
    double acc = 0.0;
    for (int64_t mi = 0; mi < uf.micro_count(); ++mi) {
      double n2 = 0.0;
      for (int c = 0; c < uf.comps; ++c) {
        const double dv = uf.at(cell, mi, c) - vf.at(cell, mi, c);
        n2 += dv * dv;
      }
      acc += std::sqrt(n2);
    }
    double measure = uf.axis_node_count(k0) * h;
    if (uf.dim == 2) measure *= uf.axis_node_count(k1) * h;
    total += measure * acc * hyN;
  };
  if (uf.dim == 1)
    for (int k = 0; k < ca; ++k) cell_term(k, 0);
  else
    for (int k0 = 0; k0 < ca; ++k0)
      for (int k1 = 0; k1 < ca; ++k1) cell_term(k0, k1);
  return total;
}

// Builds the comparison table v(z_k, y_l) on the shape of an existing
// unfolded field, with z_k the cell center delta*k.
template <class F>
inline UnfoldedField tabulate_two_scale(const UnfoldedField& shape, F&& v) {
  UnfoldedField t = shape;
  const double delta = 1.0 / shape.d;
  const int ca = shape.cells_per_axis();
  auto fill_cell = [&](int k0, int k1) {
    const int64_t cell = t.cell_flat(k0, k1);
    const Vec z = shape.dim == 1 ? vec1(k0 * delta) : vec2(k0 * delta, k1 * delta);
    for (int l0 = 0; l0 < shape.m; ++l0) {
      if (shape.dim == 1) {
        const Vec y = vec1(micro_node_y(l0, shape.m));
        for (int c = 0; c < shape.comps; ++c) t.at(cell, l0, c) = v(z, y, c);
      } else {
        for (int l1 = 0; l1 < shape.m; ++l1) {
          const Vec y = vec2(micro_node_y(l0, shape.m), micro_node_y(l1, shape.m));
          for (int c = 0; c < shape.comps; ++c)
            t.at(cell, t.micro_flat(l0, l1), c) = v(z, y, c);
        }
      }
    }
  };
  if (shape.dim == 1)
    for (int k = 0; k < ca; ++k) fill_cell(k, 0);
  else
    for (int k0 = 0; k0 < ca; ++k0)
      for (int k1 = 0; k1 < ca; ++k1) fill_cell(k0, k1);
  return t;
}

// ---------------------------------------------------------------------------
// Serialization

inline void save_field_binary(const GridField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw BadConfig("cannot open '" + path + "' for writing");
  const char magic[4] = {'G', 'H', 'F', '1'};
  out.write(magic, 4);
  const int32_t header[4] = {f.dim, f.n, f.periodic ? 1 : 0, f.comps};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(f.data.data()),
            static_cast<std::streamsize>(f.data.size() * sizeof(double)));
  if (!out) throw BadConfig("short write to '" + path + "'");
}

inline GridField load_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadConfig("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "GHF1", 4) != 0)
    throw BadConfig("'" + path + "' is not a field file");
  int32_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw BadConfig("truncated field file '" + path + "'");
  GridField f;
  f.dim = header[0];
  f.n = header[1];
  f.periodic = header[2] != 0;
  f.comps = header[3];
  if (f.dim < 1 || f.dim > kMaxDim || f.n < 1 || f.comps < 1)
    throw BadConfig("corrupt field header in '" + path + "'");
  f.data.resize(f.node_count() * f.comps);
  in.read(reinterpret_cast<char*>(f.data.data()),
          static_cast<std::streamsize>(f.data.size() * sizeof(double)));
  if (!in) throw BadConfig("truncated field data in '" + path + "'");
  return f;
}

inline std::string field_to_csv(const GridField& f) {
  std::string out = f.dim == 1 ? "x0" : "x0,x1";
  for (int c = 0; c < f.comps; ++c) out += ",c" + std::to_string(c);
  out += "\n";
  auto row = [&](int64_t node, double x0, double x1) {
    out += fmt_g17(x0);
    if (f.dim == 2) out += "," + fmt_g17(x1);
    for (int c = 0; c < f.comps; ++c) out += "," + fmt_g17(f.at(node, c));
    out += "\n";
  };
  if (f.dim == 1)
    for (int64_t j = 0; j < f.n; ++j) row(j, node_coord(f, j), 0.0);
  else
    for (int64_t j0 = 0; j0 < f.n; ++j0)
      for (int64_t j1 = 0; j1 < f.n; ++j1)
        row(f.flat(j0, j1), node_coord(f, j0), node_coord(f, j1));
  return out;
}

}  // namespace gammahom
