/**
 * @brief Radial potentials for the three metric families, integration of the
 *        separated wave equation u'' + (omega^2 - V) u = 0 in the tortoise
 *        variable with outgoing (infinity) / ingoing (horizon) asymptotic
 *        data, conserved fluxes, flux equalization, and Wronskians.
 *
 * Boundary data is seeded from two-term asymptotic series at start points
 * chosen so the neglected potential tail is below asymptotic_floor; for
 * growing modes (omega_I > 0) the integrator's envelope renormalization keeps
 * the exponentially graded solutions in range.
 */
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include <bhmode/angular.hpp>
#include <bhmode/errors.hpp>
#include <bhmode/geometry.hpp>
#include <bhmode/ode.hpp>
#include <bhmode/potentials.hpp>
#include <bhmode/profile.hpp>

namespace bhmode {

/// Potential family selector; DeformedConic = auxiliary background with an h-profile.
enum class SpecFamily { Kerr, Auxiliary, DeformedConic };

/// Everything needed to evaluate the effective potential at one r_*.
struct PotentialSpec {
  SpecFamily family;
  KerrParams params;
  FrequencyTriad triad;
  AngularEigen eigen;
  std::shared_ptr<const DeformationProfile> h_profile;  ///< DeformedConic only
  std::shared_ptr<const ConstructedPotential> extra_V;  ///< optional real compact addition
  TortoiseMap map;

  PotentialSpec(SpecFamily f, const KerrParams& p, const FrequencyTriad& t,
                AngularEigen e,
                std::shared_ptr<const DeformationProfile> hp = nullptr,
                std::shared_ptr<const ConstructedPotential> ev = nullptr)
      : family(f), params(p), triad(t), eigen(std::move(e)),
        h_profile(std::move(hp)), extra_V(std::move(ev)), map(p) {
    p.validate();
    t.validate();
    if (f == SpecFamily::Kerr && p.family != Family::Kerr)
      throw PreconditionError("PotentialSpec: Kerr family requires Kerr params");
    if (f != SpecFamily::Kerr && p.family != Family::Auxiliary)
      throw PreconditionError("PotentialSpec: auxiliary/deformed family requires auxiliary params");
    if (f == SpecFamily::DeformedConic && !h_profile)
      throw PreconditionError("PotentialSpec: DeformedConic requires an h profile");
  }

  /// Copy with a different compact addition (shared background).
  PotentialSpec with_extra(std::shared_ptr<const ConstructedPotential> ev) const {
    PotentialSpec out = *this;
    out.extra_V = std::move(ev);
    return out;
  }
};

/// Frame-dragging/centrifugal part of the Kerr potential (the omega- and
/// lambda-dependent piece); complex for complex omega or lambda.
inline complexd kerr_frame_part(const KerrParams& p, complexd omega, complexd lambda,
                                int m, double r) {
  const double M = p.M, a = p.a;
  const double Delta = p.Delta(r);
  const double s = r * r + a * a;
  return (4.0 * M * r * a * double(m) * omega - a * a * double(m * m) +
          Delta * (lambda + a * a * omega * omega)) /
         (s * s);
}

/// Curvature part of the Kerr potential (omega-independent, real).
inline double kerr_curvature_part(const KerrParams& p, double r) {
  const double M = p.M, a = p.a;
  const double Delta = p.Delta(r);
  const double s = r * r + a * a;
  return Delta * (a * a * Delta + 2.0 * M * r * (r * r - a * a)) / (s * s * s * s);
}

/// Auxiliary-family potential at radius r.
inline complexd auxiliary_potential(const KerrParams& p, complexd omega, complexd lambda,
                                    int m, double r) {
  const double M = p.M, a = p.a;
  const double f = 1.0 - 2.0 * M / r;
  return (f * lambda + 2.0 * a * M * omega * double(m) / r -
          a * a * M * M * double(m * m) / (r * r * r * r)) /
             (r * r) +
         f * 2.0 * M / (r * r * r);
}

/// Deformed-conic potential at radius r for profile value h (without the
/// curvature term, which the profile supplies separately).
inline complexd deformed_frame_potential(const KerrParams& p, complexd omega,
                                         complexd lambda, int m, double r, double h) {
  const double M = p.M, a = p.a;
  const double f = 1.0 - 2.0 * M / r;
  return (f * lambda / (h * h) + 2.0 * a * M * omega * double(m) / (r * h) -
          a * a * M * M * double(m * m) / (r * r * r * r * h * h)) /
             (r * r) +
         f * 2.0 * M / (r * r * r);
}

/**
 * Effective potential V_total(r_*) such that the separated equation reads
 * u'' + (omega^2 - V_total) u = 0; includes the optional compact addition.
 * Complex output arises only from complex omega (and the induced lambda).
 */
inline complexd potential_at(const PotentialSpec& spec, double r_star,
                             double* r_warm_start = nullptr) {
  const double r = spec.map.r_of_r_star(r_star, r_warm_start ? *r_warm_start : 0.0);
  if (r_warm_start) *r_warm_start = r;
  const complexd omega = spec.triad.omega();
  const complexd lambda = spec.eigen.lambda;
  complexd V;
  switch (spec.family) {
    case SpecFamily::Kerr:
      V = kerr_frame_part(spec.params, omega, lambda, spec.triad.m, r) +
          kerr_curvature_part(spec.params, r);
      break;
    case SpecFamily::Auxiliary:
      V = auxiliary_potential(spec.params, omega, lambda, spec.triad.m, r);
      break;
    case SpecFamily::DeformedConic: {
      const double h = spec.h_profile->h_at(r_star);
      V = deformed_frame_potential(spec.params, omega, lambda, spec.triad.m, r, h) +
          spec.h_profile->curvature_term(r_star, r);
      break;
    }
  }
  if (spec.extra_V) V += spec.extra_V->value(r_star);
  return V;
}

/// Right-hand-side factor F(r_*) = V_total - omega^2 for u'' = F u.
inline std::function<complexd(double)> ode_rhs(const PotentialSpec& spec) {
  const complexd w2 = spec.triad.omega() * spec.triad.omega();
  auto warm = std::make_shared<double>(0.0);  // per-callback radius warm start
  return [spec, w2, warm](double rs) { return potential_at(spec, rs, warm.get()) - w2; };
}

/// Discretization of an r_* interval with the matching radii.
struct RadialGrid {
  std::vector<double> r_star_nodes;  ///< strictly increasing
  std::vector<double> r_nodes;
  double spacing = 0.0;  ///< nominal step
};

inline RadialGrid make_radial_grid(const TortoiseMap& map, double rs_lo, double rs_hi,
                                   std::size_t n) {
  if (!(rs_hi > rs_lo) || n < 2)
    throw PreconditionError("make_radial_grid: need rs_hi > rs_lo and n >= 2");
  RadialGrid g;
  g.spacing = (rs_hi - rs_lo) / double(n - 1);
  g.r_star_nodes.resize(n);
  g.r_nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double rs = (i + 1 == n) ? rs_hi : rs_lo + double(i) * g.spacing;
    g.r_star_nodes[i] = rs;
    g.r_nodes[i] = map.r_of_r_star(rs);
  }
  return g;
}

/// Grid from explicit (not necessarily uniform) r_* abscissas.
inline RadialGrid make_radial_grid(const TortoiseMap& map, std::vector<double> nodes) {
  if (nodes.size() < 2) throw PreconditionError("make_radial_grid: need >= 2 nodes");
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    if (!(nodes[i] < nodes[i + 1]))
      throw PreconditionError("make_radial_grid: nodes must increase");
  RadialGrid g;
  g.spacing = (nodes.back() - nodes.front()) / double(nodes.size() - 1);
  g.r_nodes.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) g.r_nodes[i] = map.r_of_r_star(nodes[i]);
  g.r_star_nodes = std::move(nodes);
  return g;
}

/// Which asymptotic condition a solution satisfies.
enum class BoundaryTag { FromInfinity, FromHorizon, Interior };

/// Grid samples of (u, u') for one mode solution.
struct RadialSolution {
  RadialGrid grid;
  std::vector<complexd> u;
  std::vector<complexd> u_prime;  ///< d/dr_*
  BoundaryTag boundary_tag = BoundaryTag::Interior;
  complexd asymptotic_amplitude{0.0, 0.0};
  FrequencyTriad triad;
  double varpi = 0.0;            ///< horizon frequency of the producing spec
  bool flux_applicable = true;   ///< false for omega_I > 0 (no conserved flux)
};

/// Start point + seeded state for an integration from one asymptotic end.
struct AsymptoticStart {
  double r_star;
  OdeState state;
};

namespace detail {

/// Truncated series in 1/r: c[j] is the coefficient of r^{-j}.
using FarSeries = std::vector<complexd>;

inline FarSeries fs_mul(const FarSeries& a, const FarSeries& b, std::size_t K) {
  FarSeries c(K, complexd{});
  for (std::size_t i = 0; i < K && i < a.size(); ++i)
    for (std::size_t j = 0; i + j < K && j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

/// Reciprocal series of a (a[0] != 0).
inline FarSeries fs_inv(const FarSeries& a, std::size_t K) {
  FarSeries c(K, complexd{});
  c[0] = 1.0 / a[0];
  for (std::size_t p = 1; p < K; ++p) {
    complexd s{};
    for (std::size_t j = 1; j <= p && j < a.size(); ++j) s += a[j] * c[p - j];
    c[p] = -s / a[0];
  }
  return c;
}

/// Large-r expansions F = sum f_j r^{-j} (dr/dr_star) and V = sum v_k r^{-k}.
struct FarFieldSeries {
  FarSeries f;
  FarSeries v;
};

inline FarFieldSeries far_field_series(const PotentialSpec& spec, std::size_t K) {
  const double M = spec.params.M, a = spec.params.a;
  const complexd omega = spec.triad.omega();
  const complexd lambda = spec.eigen.lambda;
  const double m = double(spec.triad.m);
  FarFieldSeries out;
  out.f.assign(K, complexd{});
  out.v.assign(K, complexd{});
  auto shift = [K](const FarSeries& s, std::size_t by) {
    FarSeries r(K, complexd{});
    for (std::size_t j = 0; j + by < K && j < s.size(); ++j) r[j + by] = s[j];
    return r;
  };
  auto add = [](FarSeries& dst, const FarSeries& s) {
    for (std::size_t j = 0; j < dst.size() && j < s.size(); ++j) dst[j] += s[j];
  };

  if (spec.family == SpecFamily::Kerr) {
    // Delta = r^2 d1, d1 = 1 - 2M/r + a^2/r^2; S = r^2 + a^2 = r^2 s1.
    const FarSeries d1{1.0, -2.0 * M, a * a};
    const FarSeries s1{1.0, 0.0, a * a};
    const FarSeries s1inv = fs_inv(s1, K);
    out.f = fs_mul(d1, s1inv, K);
    // Frame part: r^{-2} * [d1 (lambda + a^2 w^2) + 4Mamw/r - a^2 m^2/r^2] / s1^2.
    FarSeries num{lambda + a * a * omega * omega,
                  -2.0 * M * (lambda + a * a * omega * omega) + 4.0 * M * a * m * omega,
                  a * a * (lambda + a * a * omega * omega) - a * a * m * m};
    add(out.v, shift(fs_mul(num, fs_mul(s1inv, s1inv, K), K), 2));
    // Curvature part: r^{-3} * d1 * e / s1^4, e from a^2 Delta + 2Mr(r^2-a^2) = r^3 e.
    const FarSeries e{2.0 * M, a * a, -4.0 * M * a * a, a * a * a * a};
    const FarSeries s1inv4 = fs_mul(fs_mul(s1inv, s1inv, K), fs_mul(s1inv, s1inv, K), K);
    add(out.v, shift(fs_mul(d1, fs_mul(e, s1inv4, K), K), 3));
    return out;
  }

  // Auxiliary / conic share the tortoise map: F = 1 - 2M/r exactly.
  out.f[0] = 1.0;
  if (K > 1) out.f[1] = -2.0 * M;
  FarSeries hinv(K, complexd{}), hinv2(K, complexd{});
  if (spec.family == SpecFamily::DeformedConic) {
    // Far field h = C1 + C2 * (1/2M) ln(r/(r-2M)) = C1 + C2 sum (2M)^{k-1}/(k r^k).
    FarSeries h(K, complexd{});
    h[0] = spec.h_profile->C1;
    double pw = 1.0;
    for (std::size_t k = 1; k < K; ++k) {
      h[k] = spec.h_profile->C2 * pw / double(k);
      pw *= 2.0 * M;
    }
    hinv = fs_inv(h, K);
    hinv2 = fs_mul(hinv, hinv, K);
  } else {
    hinv[0] = hinv2[0] = 1.0;
  }
  // V = (1-2M/r) lambda hinv^2 / r^2 + 2aMwm hinv / r^3 - a^2M^2m^2 hinv^2 / r^6
  //     + (1-2M/r) 2M / r^3  (curvature of h vanishes identically far out).
  FarSeries fl(K, complexd{});
  fl[0] = 1.0;
  if (K > 1) fl[1] = -2.0 * M;
  add(out.v, shift(fs_mul(fl, hinv2, K), 2));
  for (auto& c : out.v) c *= lambda;
  FarSeries t2 = shift(hinv, 3);
  for (auto& c : t2) c *= 2.0 * a * M * omega * m;
  add(out.v, t2);
  FarSeries t3 = shift(hinv2, 6);
  for (auto& c : t3) c *= -a * a * M * M * m * m;
  add(out.v, t3);
  FarSeries t4 = shift(fl, 3);
  for (auto& c : t4) c *= 2.0 * M;
  add(out.v, t4);
  return out;
}

/**
 * Coefficients a_j of the outgoing series u = e^{i omega r_*} sum a_j r^{-j}
 * (a_0 = 1), from the order-by-order balance of
 *   2 i omega F w' + F (F w')' = V w,   F = dr/dr_*.
 */
inline FarSeries outgoing_series(const FarFieldSeries& ff, complexd omega, std::size_t K) {
  const complexd two_iw = complexd(0.0, 2.0) * omega;
  FarSeries a(K, complexd{});
  a[0] = 1.0;
  // g_m = coefficients of F w' = -sum_n n a_n f_{m-n-1}.
  FarSeries g(K, complexd{});
  for (std::size_t p = 2; p < K; ++p) {  // all needed v_k, f_j are inside the truncation
    // g_{p-1} without the a_{p-1} term is complete once a_0..a_{p-2} are known.
    complexd rhs{};
    for (std::size_t k = 2; k <= p; ++k)
      if (p - k < K && k < ff.v.size()) rhs += ff.v[k] * a[p - k];
    for (std::size_t m = 1; m <= p - 1; ++m)
      if (p - m - 1 < ff.f.size()) rhs += double(m) * g[m] * ff.f[p - m - 1];
    for (std::size_t n = 1; n + 1 <= p - 1; ++n)
      if (p - 1 - n < ff.f.size()) rhs += two_iw * double(n) * a[n] * ff.f[p - 1 - n];
    a[p - 1] = -rhs / (two_iw * double(p - 1));
    // Update g up to index p (now that a_{p-1} exists).
    for (std::size_t m = 1; m <= p && m < K; ++m) {
      complexd s{};
      for (std::size_t n = 1; n <= m - 1; ++n)
        if (m - n - 1 < ff.f.size()) s += double(n) * a[n] * ff.f[m - n - 1];
      g[m] = -s;
    }
  }
  return a;
}

inline double asymptotic_floor(const FrequencyTriad& t) {
  return 1e-10 * std::max(1.0, std::norm(t.omega()));
}

}  // namespace detail

/**
 * Seed state for the outgoing solution u ~ amplitude e^{i omega r_*}
 * sum_j a_j r^{-j} at a start radius where the (asymptotic) series tail is
 * below 1e-12; the exponential's real growth goes into the log-scale.
 */
inline AsymptoticStart asymptotic_start_infinity(const PotentialSpec& spec,
                                                 complexd amplitude,
                                                 double min_r_star = -1e300,
                                                 double r_start_factor = 1.0) {
  const complexd omega = spec.triad.omega();
  if (std::abs(omega) == 0.0)
    throw PreconditionError("asymptotic_start_infinity: omega must be nonzero");
  constexpr std::size_t K = 16;
  const auto ff = detail::far_field_series(spec, K);
  const auto a = detail::outgoing_series(ff, omega, K);
  const std::size_t N = K - 2;  // last computed coefficient

  // Start radius: last-term tail below 1e-12 and geometric decay of the final
  // terms (the series is asymptotic; the late-term ratios bound its onset).
  double r_start = std::pow(std::abs(a[N]) / 1e-12 + 1.0, 1.0 / double(N));
  for (std::size_t j = N / 2; j <= N; ++j)
    if (std::abs(a[j - 1]) > 0.0)
      r_start = std::max(r_start, 4.0 * std::abs(a[j]) / std::abs(a[j - 1]));
  r_start = std::max(r_start, 20.0 * spec.map.horizon());
  // Stay beyond any compact addition and any deformation window.
  if (spec.extra_V)
    r_start = std::max(r_start, spec.map.r_of_r_star(spec.extra_V->support_hi + 10.0));
  if (spec.h_profile)
    r_start = std::max(r_start, spec.map.r_of_r_star(spec.h_profile->R_plus_1 + 10.0));
  if (min_r_star > -1e299)
    r_start = std::max(r_start, spec.map.r_of_r_star(min_r_star) * 1.000001);
  r_start *= r_start_factor;

  const double rs = spec.map.r_star_of_r(r_start);
  complexd w{}, wdot{};
  double rp = 1.0;
  for (std::size_t j = 0; j <= N; ++j) {
    w += a[j] / rp;
    wdot += -double(j) * a[j] / (rp * r_start);
    rp *= r_start;
  }
  const double F = 1.0 / spec.map.drstar_dr(r_start);  // exact, not the series
  const complexd iw(0.0, 1.0);
  const complexd phase = std::exp(complexd(0.0, spec.triad.omega_R * rs));
  AsymptoticStart out;
  out.r_star = rs;
  out.state.u = amplitude * w * phase;
  out.state.up = amplitude * (iw * omega * w + F * wdot) * phase;
  out.state.log_scale = -spec.triad.omega_I * rs;
  return out;
}

/**
 * Seed state for the ingoing solution u ~ amplitude e^{-i sigma r_*}
 * (1 + b1 q + b2 q^2), q = e^{2 kappa r_*}, sigma = omega - varpi, with the
 * potential's approach V - V(r_+) = W1 q + W2 q^2 fitted from two samples.
 */
inline AsymptoticStart asymptotic_start_horizon(const PotentialSpec& spec,
                                                complexd amplitude,
                                                double max_r_star = 1e300,
                                                double extra_depth = 0.0) {
  const complexd omega = spec.triad.omega();
  const double varpi = horizon_frequency(spec.params, spec.triad.m);
  const double kappa = surface_gravity(spec.params);
  const complexd sigma = omega - varpi;
  const complexd V_hor = varpi * (2.0 * omega - varpi);

  // Two-depth fit of the approach coefficients.
  const double rs1 = std::log(1e-3) / (2.0 * kappa);
  const double rs2 = std::log(1e-2) / (2.0 * kappa);
  const double q1 = 1e-3, q2 = 1e-2;
  const complexd d1 = potential_at(spec, rs1) - V_hor;
  const complexd d2 = potential_at(spec, rs2) - V_hor;
  const double det = q1 * q2 * q2 - q2 * q1 * q1;
  const complexd W1 = (d1 * q2 * q2 - d2 * q1 * q1) / det;
  const complexd W2 = (d2 * q1 - d1 * q2) / det;

  const double floor = detail::asymptotic_floor(spec.triad);
  const double Wmag = std::abs(W1) + std::abs(W2) + 1e-300;
  double rs = std::min(std::log(floor / Wmag) / (2.0 * kappa), rs1 - 5.0);
  if (max_r_star < 1e299) rs = std::min(rs, max_r_star - 1.0);
  rs -= extra_depth;

  const double q = std::exp(2.0 * kappa * rs);
  const complexd is(0.0, 1.0);
  const complexd b1 = W1 / (4.0 * kappa * (kappa - is * sigma));
  const complexd b2 = (W2 + W1 * b1) / (8.0 * kappa * (2.0 * kappa - is * sigma));
  const complexd w = 1.0 + b1 * q + b2 * q * q;
  const complexd wq = 2.0 * kappa * b1 * q + 4.0 * kappa * b2 * q * q;
  const complexd phase = std::exp(complexd(0.0, -(sigma.real()) * rs));
  AsymptoticStart out;
  out.r_star = rs;
  out.state.u = amplitude * w * phase;
  out.state.up = amplitude * (-is * sigma * w + wq) * phase;
  out.state.log_scale = spec.triad.omega_I * rs;
  return out;
}

namespace detail {

inline RadialSolution integrate_on_grid(const PotentialSpec& spec, const RadialGrid& grid,
                                        complexd amplitude, const AsymptoticStart& start,
                                        double stop, BoundaryTag tag,
                                        const OdeOptions& opts) {
  RadialSolution sol;
  sol.grid = grid;
  sol.boundary_tag = tag;
  sol.asymptotic_amplitude = amplitude;
  sol.triad = spec.triad;
  sol.varpi = horizon_frequency(spec.params, spec.triad.m);
  sol.flux_applicable = (spec.triad.omega_I == 0.0);
  const std::size_t n = grid.r_star_nodes.size();
  sol.u.assign(n, complexd{});
  sol.u_prime.assign(n, complexd{});

  std::vector<double> samples = grid.r_star_nodes;
  if (tag == BoundaryTag::FromInfinity) std::reverse(samples.begin(), samples.end());
  auto on_sample = [&](double rs, const OdeState& st) {
    // Locate the node (samples came from the grid, so an exact match exists).
    const auto it = std::lower_bound(grid.r_star_nodes.begin(), grid.r_star_nodes.end(), rs);
    const std::size_t i = std::size_t(it - grid.r_star_nodes.begin());
    sol.u[i] = st.value();
    sol.u_prime[i] = st.deriv();
  };
  integrate_ode(ode_rhs(spec), start.r_star, stop, start.state, opts, samples, on_sample);
  return sol;
}

}  // namespace detail

/**
 * Outgoing solution on the grid: seeded at the far start point, integrated
 * inward, sampled exactly at the nodes.
 */
inline RadialSolution integrate_from_infinity(const PotentialSpec& spec,
                                              const RadialGrid& grid, complexd amplitude,
                                              const OdeOptions& opts = {}) {
  if (amplitude == complexd{})
    throw PreconditionError("integrate_from_infinity: amplitude must be nonzero");
  const auto start =
      asymptotic_start_infinity(spec, amplitude, grid.r_star_nodes.back());
  return detail::integrate_on_grid(spec, grid, amplitude, start,
                                   grid.r_star_nodes.front(), BoundaryTag::FromInfinity,
                                   opts);
}

/// Ingoing solution on the grid: seeded deep near the horizon, integrated outward.
inline RadialSolution integrate_from_horizon(const PotentialSpec& spec,
                                             const RadialGrid& grid, complexd amplitude,
                                             const OdeOptions& opts = {}) {
  if (amplitude == complexd{})
    throw PreconditionError("integrate_from_horizon: amplitude must be nonzero");
  const auto start =
      asymptotic_start_horizon(spec, amplitude, grid.r_star_nodes.front());
  return detail::integrate_on_grid(spec, grid, amplitude, start,
                                   grid.r_star_nodes.back(), BoundaryTag::FromHorizon,
                                   opts);
}

/// Im(u' conj(u)) at one node; conserved for real-omega, real-V equations.
inline double conserved_flux(const RadialSolution& sol, std::size_t node_index) {
  if (node_index >= sol.u.size())
    throw PreconditionError("conserved_flux: node index out of range");
  return std::imag(sol.u_prime[node_index] * std::conj(sol.u[node_index]));
}

/**
 * Real scale a3 with flux(a3 * u_inf) = flux(u_hor); exists iff both fluxes
 * share sign, i.e. iff the frequency is superradiant for the pair's (omega, m).
 */
inline double equalize_fluxes(const RadialSolution& u_inf, const RadialSolution& u_hor) {
  const double f_inf = conserved_flux(u_inf, u_inf.u.size() - 1);
  const double f_hor = conserved_flux(u_hor, 0);
  if (f_inf == 0.0 || f_hor == 0.0)
    throw PreconditionError("equalize_fluxes: zero flux");
  if (f_inf * f_hor < 0.0)
    throw NotSuperradiantError(
        "equalize_fluxes: fluxes have opposite signs; (omega, m) is not superradiant");
  return std::sqrt(f_hor / f_inf);
}

/// u1' u2 - u1 u2' at one shared-grid node.
inline complexd wronskian(const RadialSolution& u1, const RadialSolution& u2,
                          std::size_t node_index) {
  if (u1.grid.r_star_nodes.size() != u2.grid.r_star_nodes.size())
    throw PreconditionError("wronskian: solutions on different grids");
  for (std::size_t i = 0; i < u1.grid.r_star_nodes.size(); ++i)
    if (std::abs(u1.grid.r_star_nodes[i] - u2.grid.r_star_nodes[i]) > 1e-12)
      throw PreconditionError("wronskian: solutions on different grids");
  if (node_index >= u1.u.size())
    throw PreconditionError("wronskian: node index out of range");
  return u1.u_prime[node_index] * u2.u[node_index] - u1.u[node_index] * u2.u_prime[node_index];
}

}  // namespace bhmode
