/**
 * @brief Metric-deformation profile h: sampled values with first and second
 *        derivatives, the three-region evaluation (identically 1 to the left,
 *        Hermite-interpolated samples in the middle, exact far-field closed
 *        form to the right for the conic family), and the curvature term
 *        h''/h + 2(1 - 2M/r) h'/(r h) that feeds the deformed potential.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <bhmode/errors.hpp>
#include <bhmode/geometry.hpp>

namespace bhmode {

/// Which construction produced the profile.
enum class DeformationKind {
  KerrAlgebraic,  ///< h^2 = 1 - V/Re(...) on the Kerr exterior; h -> 1 off support
  Conic           ///< Picard fixed point on the auxiliary family; h -> C1 + C2 * far integral
};

namespace detail {

/// Cubic Hermite value/derivative on one interval from endpoint values+slopes.
inline double hermite_value(double x, double xa, double xb, double ya, double yb,
                            double sa, double sb) {
  const double hh = xb - xa, t = (x - xa) / hh;
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  // Written as base value plus increments so constant data is reproduced
  // exactly (no rounding residue from the partition of unity).
  return ya + h01 * (yb - ya) + h10 * hh * sa + h11 * hh * sb;
}

}  // namespace detail

/**
 * Deformation profile h(r_*).  Sample arrays cover [R_plus, R_plus_1] for the
 * conic family (outside which the closed forms apply) and the full support for
 * the algebraic Kerr family (outside which h = 1).
 */
struct DeformationProfile {
  DeformationKind kind = DeformationKind::Conic;
  KerrParams params;                     ///< background the profile deforms
  std::vector<double> r_star;            ///< strictly increasing sample abscissas
  std::vector<double> r;                 ///< corresponding radii
  std::vector<double> h;                 ///< h values
  std::vector<double> h_prime;           ///< dh/dr_*
  std::vector<double> h_double_prime;    ///< d^2h/dr_*^2
  double R_plus = 0.0;                   ///< left edge of the deformation (r_* value)
  double R_plus_1 = 0.0;                 ///< right edge R_plus + window length
  double C1 = 1.0;                       ///< far-field constant (conic)
  double C2 = 0.0;                       ///< far-field 1/r coefficient (conic), <= 0 convention
  std::vector<double> contraction_ratios;  ///< iteration log (conic)

  /// Exact curvature source h''/h + 2(1-2M/r)h'/(rh) where available (conic:
  /// the fixed-point relation makes it equal to the constructed compact bump).
  std::function<double(double)> curvature_source;

  void validate() const {
    if (r_star.size() < 2 || h.size() != r_star.size() || h_prime.size() != r_star.size() ||
        h_double_prime.size() != r_star.size())
      throw InvalidProfileError("DeformationProfile: inconsistent sample arrays");
    for (std::size_t i = 0; i + 1 < r_star.size(); ++i)
      if (!(r_star[i] < r_star[i + 1]))
        throw InvalidProfileError("DeformationProfile: r_star samples must increase");
    for (double v : h)
      if (!(v > 0.0)) throw InvalidProfileError("DeformationProfile: h must be positive");
    if (kind == DeformationKind::Conic) {
      for (double v : h)
        if (v < 1.0 - 1e-12)
          throw InvalidProfileError("DeformationProfile: conic family requires h >= 1");
      for (double v : h_prime)
        if (v < -1e-10)
          throw InvalidProfileError("DeformationProfile: conic family requires h' >= 0");
    }
  }

  /// Far-field integral int_{r_*}^{infty} rho^{-2} d rho_* = ln(r/(r-2M))/(2M)
  /// on the auxiliary background.
  double far_integral(double rr) const {
    const double M = params.M;
    return std::log(rr / (rr - 2.0 * M)) / (2.0 * M);
  }

  double h_at(double rs) const {
    if (rs <= r_star.front()) return 1.0;
    if (rs >= r_star.back()) {
      if (kind == DeformationKind::KerrAlgebraic) return 1.0;
      const double rr = radius_at(rs);
      return C1 + C2 * far_integral(rr);
    }
    const auto k = interval_of(rs);
    return detail::hermite_value(rs, r_star[k], r_star[k + 1], h[k], h[k + 1],
                                 h_prime[k], h_prime[k + 1]);
  }

  double h_prime_at(double rs) const {
    if (rs <= r_star.front()) return 0.0;
    if (rs >= r_star.back()) {
      if (kind == DeformationKind::KerrAlgebraic) return 0.0;
      const double rr = radius_at(rs);
      return -C2 / (rr * rr);
    }
    const auto k = interval_of(rs);
    return detail::hermite_value(rs, r_star[k], r_star[k + 1], h_prime[k], h_prime[k + 1],
                                 h_double_prime[k], h_double_prime[k + 1]);
  }

  double h_double_prime_at(double rs) const {
    if (rs <= r_star.front()) return 0.0;
    if (rs >= r_star.back()) {
      if (kind == DeformationKind::KerrAlgebraic) return 0.0;
      const double rr = radius_at(rs);
      return 2.0 * C2 * (1.0 - 2.0 * params.M / rr) / (rr * rr * rr);
    }
    // Linear interpolation; the curvature term itself prefers the exact source.
    const auto k = interval_of(rs);
    const double t = (rs - r_star[k]) / (r_star[k + 1] - r_star[k]);
    return (1.0 - t) * h_double_prime[k] + t * h_double_prime[k + 1];
  }

  /// Curvature term h''/h + 2(1-2M/r)h'/(rh) entering the deformed potential.
  double curvature_term(double rs, double rr) const {
    if (curvature_source) return curvature_source(rs);
    if (rs <= r_star.front()) return 0.0;
    if (rs >= r_star.back() && kind == DeformationKind::Conic) return 0.0;  // exact cancellation
    if (rs >= r_star.back()) return 0.0;
    const double hv = h_at(rs);
    return h_double_prime_at(rs) / hv +
           2.0 * (1.0 - 2.0 * params.M / rr) * h_prime_at(rs) / (rr * hv);
  }

 private:
  std::size_t interval_of(double rs) const {
    const auto it = std::upper_bound(r_star.begin(), r_star.end(), rs);
    std::size_t k = std::size_t(it - r_star.begin());
    if (k == 0) k = 1;
    if (k >= r_star.size()) k = r_star.size() - 1;
    return k - 1;
  }

  double radius_at(double rs) const {
    // Local inversion of the auxiliary tortoise map; profiles store params for this.
    return TortoiseMap(params).r_of_r_star(rs);
  }
};

}  // namespace bhmode
