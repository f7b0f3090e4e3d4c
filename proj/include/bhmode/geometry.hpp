/**
 * @brief Background-spacetime scalar quantities for the Kerr family and the
 *        auxiliary (Kerr-like, single-horizon) family: horizon radii, horizon
 *        angular frequency, tortoise-coordinate maps and the superradiance
 *        predicate.
 *
 * Geometric units G = c = 1 throughout.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <bhmode/errors.hpp>

namespace bhmode {

/// Which metric family a set of parameters describes.
enum class Family {
  Kerr,      ///< rotating black hole, subextremal: 0 <= |a| < M
  Auxiliary  ///< Kerr-like single-horizon metric with horizon at r = 2M
};

/// Black-hole mass/spin pair plus the family tag.
struct KerrParams {
  double M = 1.0;  ///< mass (> 0)
  double a = 0.0;  ///< spin per unit mass
  Family family = Family::Kerr;

  void validate() const {
    if (!(M > 0.0)) throw PreconditionError("KerrParams: M must be positive");
    if (family == Family::Kerr && !(std::abs(a) < M))
      throw PreconditionError("KerrParams: Kerr family requires |a| < M (subextremal)");
    if (family == Family::Auxiliary && !(a >= 0.0))
      throw PreconditionError("KerrParams: Auxiliary family requires a >= 0");
  }

  /// Delta(r) = (r - r_plus)(r - r_minus) for Kerr, evaluated in factored form
  /// so the near-horizon value keeps full precision in r - r_plus.
  double Delta(double r) const {
    const double s = std::sqrt(std::max(M * M - a * a, 0.0));
    return (r - (M + s)) * (r - (M - s));
  }
};

/// (r_plus, r_minus).  Auxiliary family: horizon at 2M, r_minus is a 0 sentinel.
struct HorizonRadii {
  double r_plus;
  double r_minus;
};

inline HorizonRadii horizon_radii(const KerrParams& p) {
  p.validate();
  if (p.family == Family::Auxiliary) return {2.0 * p.M, 0.0};
  const double s = std::sqrt(p.M * p.M - p.a * p.a);
  return {p.M + s, p.M - s};
}

/**
 * Horizon-limit frequency appearing in the ingoing boundary condition
 * u' + i(omega - varpi) u -> 0:
 *   Kerr:      varpi = a m / (2 M r_plus)
 *   Auxiliary: varpi = a m / (8 M^2)
 */
inline double horizon_frequency(const KerrParams& p, int m) {
  p.validate();
  if (p.family == Family::Auxiliary) return p.a * m / (8.0 * p.M * p.M);
  const double rp = horizon_radii(p).r_plus;
  return p.a * m / (2.0 * p.M * rp);
}

/// Surface gravity of the (outer) horizon; sets the e^{2 kappa r_*} approach rate.
inline double surface_gravity(const KerrParams& p) {
  p.validate();
  if (p.family == Family::Auxiliary) return 1.0 / (4.0 * p.M);
  const auto h = horizon_radii(p);
  return (h.r_plus - h.r_minus) / (2.0 * (h.r_plus * h.r_plus + p.a * p.a));
}

/// true iff omega (omega - varpi) < 0, the amplification band.
inline bool is_superradiant(const KerrParams& p, double omega, int m) {
  const double varpi = horizon_frequency(p, m);
  return omega * (omega - varpi) < 0.0;
}

/**
 * Monotone map r -> r_* on the exterior and its Newton inverse.
 *
 * Closed forms (zero integration constant, logs of dimensionless ratios):
 *   Kerr:      r_* = r + (2M r_+/(r_+-r_-)) ln((r-r_+)/2M) - (2M r_-/(r_+-r_-)) ln((r-r_-)/2M)
 *              (a = 0 limit: r + 2M ln(r/2M - 1))
 *   Auxiliary: r_* = r + 2M ln((r-2M)/2M)
 * The derivative dr_star/dr is (r^2+a^2)/Delta (Kerr) or (1 - 2M/r)^{-1}
 * (Auxiliary), positive
 * on the whole exterior, so the map is strictly increasing.
 */
class TortoiseMap {
 public:
  explicit TortoiseMap(const KerrParams& p, double convention_offset = 0.0)
      : params_(p), offset_(convention_offset) {
    p.validate();
    const auto h = horizon_radii(p);
    rp_ = h.r_plus;
    rm_ = h.r_minus;
    if (p.family == Family::Kerr) {
      if (rp_ - rm_ < 1e-14 * p.M)
        throw PreconditionError("TortoiseMap: extremal Kerr not supported");
      cp_ = 2.0 * p.M * rp_ / (rp_ - rm_);
      cm_ = 2.0 * p.M * rm_ / (rp_ - rm_);
    }
  }

  const KerrParams& params() const { return params_; }
  double horizon() const { return rp_; }
  double convention_offset() const { return offset_; }

  double drstar_dr(double r) const {
    check_exterior(r);
    if (params_.family == Family::Auxiliary) return r / (r - 2.0 * params_.M);
    return (r * r + params_.a * params_.a) / params_.Delta(r);
  }

  double r_star_of_r(double r) const {
    check_exterior(r);
    const double M = params_.M;
    if (params_.family == Family::Auxiliary)
      return r + 2.0 * M * std::log((r - 2.0 * M) / (2.0 * M)) + offset_;
    return r + cp_ * std::log((r - rp_) / (2.0 * M)) -
           cm_ * std::log((r - rm_) / (2.0 * M)) + offset_;
  }

  /**
   * Inverse map by Newton iteration on the closed form, seeded by
   * r ~ r_+ + 2M e^{(r_* - r_+)/c_+} near the horizon and r ~ r_* far out.
   * Converges to relative tolerance 1e-12 (bisection fallback keeps the
   * iterate inside the exterior).
   */
  double r_of_r_star(double rs, double seed_hint = 0.0) const {
    const double M = params_.M;
    const double x = rs - offset_;
    // Seed from the two asymptotic regimes of the closed form (or the caller's
    // warm start when it is a valid exterior radius).
    const double cpos = (params_.family == Family::Auxiliary) ? 2.0 * M : cp_;
    double r;
    if (seed_hint > rp_) {
      r = seed_hint;
    } else if (x > 4.0 * rp_) {
      r = x;  // far field: r_* ~ r + log corrections
    } else {
      const double e = std::exp((x - rp_) / cpos);
      r = rp_ + 2.0 * M * std::min(e, 1.0);  // near/intermediate seed
    }
    double lo = std::nextafter(rp_, std::numeric_limits<double>::infinity());
    double hi = std::max({4.0 * std::abs(x), 1e3 * rp_, 2.0 * r});
    r = std::clamp(r, lo, hi);
    for (int it = 0; it < 200; ++it) {
      const double f = r_star_of_r(r) - rs;
      if (f > 0.0) hi = std::min(hi, r);
      else lo = std::max(lo, r);
      double next = r - f / drstar_dr(r);
      if (!(next > lo && next < hi)) next = lo + 0.5 * (hi - lo);  // safeguarded bisection
      if (!(next > rp_)) next = lo;  // midpoint rounded onto the horizon
      if (next == r) break;          // double-precision fixed point
      r = next;
    }
    return r;
  }

 private:
  void check_exterior(double r) const {
    if (!(r > rp_))
      throw DomainError("TortoiseMap: r = " + std::to_string(r) +
                        " is at or below the horizon r_+ = " + std::to_string(rp_));
  }

  KerrParams params_;
  double offset_;
  double rp_ = 0.0, rm_ = 0.0;
  double cp_ = 0.0, cm_ = 0.0;  // log coefficients (Kerr)
};

/// Convenience factory mirroring the rest of the free-function API.
inline TortoiseMap tortoise(const KerrParams& p) { return TortoiseMap(p); }

}  // namespace bhmode
