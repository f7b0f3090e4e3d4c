/**
 * @brief Potential containers for the construction: the piecewise-constant
 *        bump, its mollification by a compactly supported unit-mass kernel,
 *        and the assembled compactly supported addition to the background.
 *
 * Mollification is evaluated analytically: a piecewise-constant function is a
 * sum of Heaviside jumps, so its convolution with the kernel is the same sum
 * with the Heaviside replaced by the kernel's cumulative integral.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <bhmode/errors.hpp>

namespace bhmode {

namespace detail {

/// Unnormalized bump exp(-1/(1-t^2)) on (-1,1).
inline double bump_raw(double t) {
  const double s = 1.0 - t * t;
  if (s <= 0.0) return 0.0;
  return std::exp(-1.0 / s);
}

/// Cumulative table of the normalized kernel on [-1, 1]: node values of
/// C(t_i) = c int_{-1}^{t_i} exp(-1/(1-s^2)) ds at t_i = -1 + 2i/N, built once
/// with per-panel 8-point Gauss-Legendre (machine accurate) and normalized so
/// C(1) = 1 exactly.
struct BumpTable {
  static constexpr int N = 4096;
  std::vector<double> C;   ///< size N+1
  double norm = 0.0;       ///< normalization constant c

  BumpTable() : C(N + 1, 0.0) {
    static const double gx[4] = {0.1834346424956498, 0.5255324099163290,
                                 0.7966664774136267, 0.9602898564975363};
    static const double gw[4] = {0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};
    const double h = 2.0 / N;
    for (int i = 0; i < N; ++i) {
      const double a = -1.0 + i * h, mid = a + 0.5 * h, half = 0.5 * h;
      double s = 0.0;
      for (int k = 0; k < 4; ++k)
        s += gw[k] * (bump_raw(mid - half * gx[k]) + bump_raw(mid + half * gx[k]));
      C[i + 1] = C[i] + half * s;
    }
    norm = 1.0 / C[N];
    for (double& v : C) v *= norm;
  }
};

inline const BumpTable& bump_table() {
  static const BumpTable t;
  return t;
}

/// Normalization constant c with c * int_{-1}^{1} exp(-1/(1-t^2)) dt = 1.
inline double bump_norm() { return bump_table().norm; }

/**
 * Kernel cumulative integral C(y) = int_{-1}^{min(y,1)} K, K = c exp(-1/(1-t^2)),
 * by cubic Hermite interpolation of the precomputed table; the derivative at
 * the nodes is the kernel itself, so the interpolation error is O(h^4) ~ 1e-11.
 */
inline double bump_cumulative(double y) {
  if (y <= -1.0) return 0.0;
  if (y >= 1.0) return 1.0;
  const auto& tab = bump_table();
  const double h = 2.0 / BumpTable::N;
  const double pos = (y + 1.0) / h;
  const int i = std::min(int(pos), BumpTable::N - 1);
  const double u = pos - i;  // in [0, 1)
  const double t0 = -1.0 + i * h, t1 = t0 + h;
  const double f0 = tab.C[i], f1 = tab.C[i + 1];
  const double d0 = tab.norm * bump_raw(t0) * h, d1 = tab.norm * bump_raw(t1) * h;
  const double u2 = u * u, u3 = u2 * u;
  return f0 * (2.0 * u3 - 3.0 * u2 + 1.0) + d0 * (u3 - 2.0 * u2 + u) +
         f1 * (-2.0 * u3 + 3.0 * u2) + d1 * (u3 - u2);
}

}  // namespace detail

/// Piecewise-constant potential: values[i] on (breakpoints[i], breakpoints[i+1]),
/// zero outside [breakpoints.front(), breakpoints.back()].
struct PiecewisePotential {
  std::vector<double> breakpoints;  ///< strictly increasing, size = values.size()+1
  std::vector<double> values;

  void validate() const {
    if (breakpoints.size() != values.size() + 1 || values.empty())
      throw PreconditionError("PiecewisePotential: inconsistent breakpoint/value sizes");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
      if (!(breakpoints[i] < breakpoints[i + 1]))
        throw PreconditionError("PiecewisePotential: breakpoints must increase");
  }

  double support_lo() const { return breakpoints.front(); }
  double support_hi() const { return breakpoints.back(); }

  double value(double x) const {
    if (x <= breakpoints.front() || x >= breakpoints.back()) return 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (x < breakpoints[i + 1]) return values[i];
    return 0.0;
  }

  /// Heaviside-jump representation: pairs (location, jump height).
  std::vector<std::pair<double, double>> jumps() const {
    std::vector<std::pair<double, double>> out;
    double prev = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      out.emplace_back(breakpoints[i], values[i] - prev);
      prev = values[i];
    }
    out.emplace_back(breakpoints.back(), -prev);
    return out;
  }

  double l1_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      s += std::abs(values[i]) * (breakpoints[i + 1] - breakpoints[i]);
    return s;
  }
};

/// Smooth potential: analytic convolution of a PiecewisePotential with the
/// unit-mass bump kernel of half-width delta.
struct SmoothPotential {
  PiecewisePotential source;
  double kernel_width = 0.0;  ///< delta > 0

  double support_lo() const { return source.support_lo() - kernel_width; }
  double support_hi() const { return source.support_hi() + kernel_width; }

  double value(double x) const {
    if (kernel_width <= 0.0) return source.value(x);
    if (x <= support_lo() || x >= support_hi()) return 0.0;
    double v = 0.0;
    for (const auto& [b, j] : source.jumps())
      v += j * detail::bump_cumulative((x - b) / kernel_width);
    return v;
  }
};

/// Mollify a piecewise-constant potential with the bump kernel of half-width
/// delta > 0; the result agrees with the source beyond distance delta of each
/// breakpoint and is C-infinity everywhere.
inline SmoothPotential mollify(const PiecewisePotential& rough, double delta) {
  rough.validate();
  if (!(delta > 0.0)) throw PreconditionError("mollify: delta must be positive");
  return SmoothPotential{rough, delta};
}

/// L1 distance of two smooth/piecewise potentials by composite quadrature on
/// the union of supports, refined near the breakpoints.
inline double l1_distance(const std::function<double(double)>& f,
                          const std::function<double(double)>& g,
                          double lo, double hi,
                          const std::vector<double>& refine_near = {},
                          double refine_width = 0.0) {
  std::vector<double> edges{lo, hi};
  for (double c : refine_near) {
    for (double e : {c - refine_width, c, c + refine_width})
      if (e > lo && e < hi) edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double a = edges[k], b = edges[k + 1];
    if (!(b > a)) continue;
    const int n = 2000;
    const double h = (b - a) / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = a + (i + 0.5) * h;
      s += std::abs(f(x) - g(x));
    }
    total += s * h;
  }
  return total;
}

/**
 * The full compactly supported addition V that the mode certificate carries:
 * a smooth analytic "flattening" part (type-erased callable) plus the
 * mollified two-parameter bump.  Real-valued.
 */
struct ConstructedPotential {
  std::function<double(double)> flatten_part;  ///< may be empty
  std::optional<SmoothPotential> bump;         ///< may be absent
  double support_lo = 0.0;
  double support_hi = 0.0;

  double value(double x) const {
    if (x <= support_lo || x >= support_hi) return 0.0;
    double v = 0.0;
    if (flatten_part) v += flatten_part(x);
    if (bump) v += bump->value(x);
    return v;
  }
};

}  // namespace bhmode
