// Shared infrastructure: contract error types, cube wrapping, fixed-capacity
// vector helpers, a reproducible RNG, adaptive quadrature, and formatting.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace gammahom {

inline constexpr int kMaxDim = 2;

// Coordinates and states are at most 2-dimensional; the first `dim` entries
// of a Vec are meaningful, the rest stay zero.
using Vec = std::array<double, kMaxDim>;

// ---------------------------------------------------------------------------
// Contract errors

struct RadiusTooSmall : std::runtime_error {
  explicit RadiusTooSmall(const std::string& msg) : std::runtime_error(msg) {}
};
struct NonFiniteInput : std::runtime_error {
  explicit NonFiniteInput(const std::string& msg) : std::runtime_error(msg) {}
};
struct EpsilonOutOfRange : std::runtime_error {
  explicit EpsilonOutOfRange(const std::string& msg) : std::runtime_error(msg) {}
};
struct Unsupported : std::runtime_error {
  explicit Unsupported(const std::string& msg) : std::runtime_error(msg) {}
};
struct MisalignedDelta : std::runtime_error {
  explicit MisalignedDelta(const std::string& msg) : std::runtime_error(msg) {}
};
struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& msg) : std::runtime_error(msg) {}
};
struct MassInfeasible : std::runtime_error {
  explicit MassInfeasible(const std::string& msg) : std::runtime_error(msg) {}
};
struct NonConvergent : std::runtime_error {
  explicit NonConvergent(const std::string& msg) : std::runtime_error(msg) {}
};
struct WidthUnresolvable : std::runtime_error {
  explicit WidthUnresolvable(const std::string& msg) : std::runtime_error(msg) {}
};
struct BadConfig : std::runtime_error {
  explicit BadConfig(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Small vector helpers (dim <= kMaxDim)

inline Vec vec1(double x) { return Vec{x, 0.0}; }
inline Vec vec2(double x, double y) { return Vec{x, y}; }

inline Vec add(const Vec& a, const Vec& b) { return Vec{a[0] + b[0], a[1] + b[1]}; }
inline Vec sub(const Vec& a, const Vec& b) { return Vec{a[0] - b[0], a[1] - b[1]}; }
inline Vec scale(const Vec& a, double s) { return Vec{a[0] * s, a[1] * s}; }
inline Vec lerp(const Vec& a, const Vec& b, double t) {
  return Vec{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
}
inline double dot(const Vec& a, const Vec& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}
inline double sqnorm(const Vec& a, int dim) { return dot(a, a, dim); }
inline double norm(const Vec& a, int dim) { return std::sqrt(sqnorm(a, dim)); }
inline double dist(const Vec& a, const Vec& b, int dim) { return norm(sub(a, b), dim); }

inline bool all_finite(const Vec& a, int dim) {
  for (int i = 0; i < dim; ++i)
    if (!std::isfinite(a[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Wrapping onto the centered unit cell [-1/2, 1/2)

// Nearest integer with halves rounded up, so the fractional part lives in
// [-1/2, 1/2). Among tied lattice points this picks the lexicographically
// largest one; the choice is applied independently per axis.
inline double nearest_int_half_up(double x) { return std::floor(x + 0.5); }

inline double wrap_unit(double x) {
  double y = x - nearest_int_half_up(x);
  if (y >= 0.5) y -= 1.0;
  if (y < -0.5) y += 1.0;
  return y;
}

inline Vec wrap_vec(const Vec& x, int dim) {
  Vec y{};
  for (int i = 0; i < dim; ++i) y[i] = wrap_unit(x[i]);
  return y;
}

// Integer form of the same convention: node index j on a grid with m nodes
// per period maps to cell k = round_half_up(j/m) and signed offset
// l = j - k*m in [-ceil(m/2), floor((m-1)/2)], giving y = l/m in [-1/2, 1/2).
inline int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
inline int64_t wrap_cell_of_node(int64_t j, int64_t m) { return floor_div(2 * j + m, 2 * m); }
inline int64_t wrap_offset_of_node(int64_t j, int64_t m) { return j - wrap_cell_of_node(j, m) * m; }
// Exact micro coordinate of period-m node j: one division, no drift.
inline double micro_coord_of_node(int64_t j, int64_t m) {
  return static_cast<double>(wrap_offset_of_node(j, m)) / static_cast<double>(m);
}

// ---------------------------------------------------------------------------
// Reproducible RNG. Uniform draws use the raw 64-bit stream directly so the
// byte-for-byte output contract does not depend on library distribution
// internals.

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  uint64_t next() {
    // xorshift* stream
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545f4914f6cdd1dull;
  }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
  }

 private:
  uint64_t state_;
};

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature with explicit breakpoints for kinked integrands.

namespace detail {
template <class F>
double simpson_step(const F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-11, int max_depth = 32) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

// Integrates f over [a, b], splitting at the given interior breakpoints
// (sorted or not; points outside (a, b) are ignored).
template <class F>
double integrate_with_breaks(const F& f, double a, double b, std::vector<double> breaks,
                             double tol = 1e-11) {
  if (!(b > a)) return 0.0;
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  double prev = a;
  for (double c : breaks) {
    if (c <= prev || c > b) continue;
    total += adaptive_simpson(f, prev, std::min(c, b), tol);
    prev = c;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Formatting: %.17g round-trips doubles and keeps CLI output byte-stable.

inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

// FNV-1a content hash for run records.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

}  // namespace gammahom
