/**
 * @brief Metric deformations realizing constructed potentials: the algebraic
 *        h(r) on the Kerr exterior (the compact potential is absorbed into a
 *        conformal-type factor of the metric), and the asymptotically conic
 *        profile on the auxiliary background obtained as the fixed point of a
 *        Picard iteration coupling the profile ODE to the mode construction.
 */
#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <bhmode/mode_builder.hpp>

namespace bhmode {

// ---------------------------------------------------------------------------
// Kerr family: algebraic deformation h^2 = 1 - V / Re(omega^2 - frame part)
// ---------------------------------------------------------------------------

namespace detail {

/// Complex denominator omega^2 - (frame part of the Kerr potential) at radius r.
inline complexd kerr_deformation_denominator(const KerrParams& params,
                                             const FrequencyTriad& triad,
                                             const AngularEigen& eigen, double r) {
  const complexd omega = triad.omega();
  return omega * omega -
         kerr_frame_part(params, omega, eigen.lambda, triad.m, r);
}

}  // namespace detail

/**
 * Imaginary counter-term G(x) fed to the construction so that, with h defined
 * below, the deformed separated equation closes exactly onto the constructed
 * one: G = -i V(x) Im(D)/Re(D) with D = omega^2 - frame part.  Vanishes for
 * real frequencies and off the support of V.
 */
inline std::function<complexd(double)> kerr_g_term(
    const KerrParams& params, const FrequencyTriad& triad, const AngularEigen& eigen,
    std::shared_ptr<const ConstructedPotential> V) {
  if (!V) throw PreconditionError("kerr_g_term: missing potential");
  TortoiseMap map(params);
  return [params, triad, eigen, V, map](double x) -> complexd {
    const double v = V->value(x);
    if (v == 0.0) return complexd{};
    const double r = map.r_of_r_star(x);
    const complexd D = detail::kerr_deformation_denominator(params, triad, eigen, r);
    return complexd(0.0, -1.0) * v * (D.imag() / D.real());
  };
}

/// Half the infimum of the curvature part of the Kerr potential over the
/// r_* interval [lo, hi]; bounds the admissible perturbation amplitude so that
/// the deformation below stays positive.
inline double kerr_curvature_infimum_bound(const KerrParams& params, double lo,
                                           double hi, int n_samples = 400) {
  TortoiseMap map(params);
  double warm = 0.0;
  double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n_samples; ++i) {
    const double x = lo + (hi - lo) * double(i) / n_samples;
    const double r = map.r_of_r_star(x, warm);
    warm = r;
    inf = std::min(inf, kerr_curvature_part(params, r));
  }
  if (!(inf > 0.0))
    throw PositivityViolatedError(
        "kerr_curvature_infimum_bound: curvature part not positive on the window");
  return 0.5 * inf;
}

/**
 * Deformation profile on the Kerr exterior: h^2(r) = 1 - V(x)/Re(D(r)) with
 * D = omega^2 - frame part, sampled over the support of V; h == 1 outside.
 * Throws PositivityViolatedError if h^2 fails to stay positive (the imaginary
 * frequency part or the perturbation amplitude is too large).
 */
inline DeformationProfile kerr_deformation_profile(const KerrParams& params,
                                                   const FrequencyTriad& triad,
                                                   const AngularEigen& eigen,
                                                   const ConstructedPotential& V,
                                                   int n_samples = 1201) {
  if (n_samples < 2)
    throw PreconditionError("kerr_deformation_profile: need at least two samples");
  const double lo = V.support_lo, hi = V.support_hi;
  if (!(hi > lo))
    throw PreconditionError("kerr_deformation_profile: empty potential support");
  TortoiseMap map(params);
  DeformationProfile profile;
  profile.kind = DeformationKind::KerrAlgebraic;
  profile.params = params;
  profile.R_plus = lo;
  profile.R_plus_1 = hi;
  profile.C1 = 1.0;
  profile.C2 = 0.0;
  const std::size_t n = std::size_t(n_samples);
  profile.r_star.resize(n);
  profile.r.resize(n);
  profile.h.resize(n);
  profile.h_prime.resize(n);
  profile.h_double_prime.resize(n);

  double warm = 0.0;
  auto h_of = [&](double x) {
    const double r = map.r_of_r_star(x, warm);
    warm = r;
    const double den =
        detail::kerr_deformation_denominator(params, triad, eigen, r).real();
    if (!(den > 0.0))
      throw PositivityViolatedError(
          "kerr_deformation_profile: Re(omega^2 - frame part) not positive at r = " +
          std::to_string(r));
    const double h2 = 1.0 - V.value(x) / den;
    if (!(h2 > 0.0))
      throw PositivityViolatedError(
          "kerr_deformation_profile: h^2 <= 0 at r_* = " + std::to_string(x));
    return std::sqrt(h2);
  };

  const double dx = (hi - lo) / double(n - 1);
  const double fd = dx / 8.0;  // step for the reported derivative samples
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + dx * double(i);
    profile.r_star[i] = x;
    profile.h[i] = h_of(x);
    profile.r[i] = warm;
    // Derivatives are reporting-only for this family (nothing downstream
    // consumes them); five-point central differences of the closed form.
    const double hm2 = h_of(x - 2 * fd), hm1 = h_of(x - fd), hp1 = h_of(x + fd),
                 hp2 = h_of(x + 2 * fd);
    profile.h_prime[i] = (hm2 - 8.0 * hm1 + 8.0 * hp1 - hp2) / (12.0 * fd);
    profile.h_double_prime[i] =
        (-hm2 + 16.0 * hm1 - 30.0 * profile.h[i] + 16.0 * hp1 - hp2) / (12.0 * fd * fd);
  }
  profile.validate();
  return profile;
}

/**
 * Pointwise witness that the deformation closes the equations: the supremum
 * over the sample grid of |h^2 w^2 - (h^2 P1 + P2) - (w^2 - (P1 + P2) + G - V)|
 * with w = omega, P1/P2 the frame/curvature parts and G the counter-term.
 * Zero up to rounding by construction of h.
 */
inline double kerr_deformation_identity_residual(const KerrParams& params,
                                                 const FrequencyTriad& triad,
                                                 const AngularEigen& eigen,
                                                 const ConstructedPotential& V,
                                                 const DeformationProfile& profile) {
  const complexd omega = triad.omega();
  const complexd w2 = omega * omega;
  double sup = 0.0;
  for (std::size_t i = 0; i < profile.r_star.size(); ++i) {
    const double x = profile.r_star[i];
    const double r = profile.r[i];
    const complexd P1 = kerr_frame_part(params, omega, eigen.lambda, triad.m, r);
    const double P2 = kerr_curvature_part(params, r);
    const double v = V.value(x);
    const complexd D = w2 - P1;
    const double h2 = 1.0 - v / D.real();
    const complexd G = complexd(0.0, -1.0) * v * (D.imag() / D.real());
    const complexd lhs = h2 * w2 - (h2 * P1 + P2);
    const complexd rhs = w2 - (P1 + P2) + G - v;
    sup = std::max(sup, std::abs(lhs - rhs));
  }
  return sup;
}

struct KerrDeformationOptions {
  ConstructionOptions construction;
  int max_outer_iter = 5;      ///< fixed point in the counter-term G
  double outer_tol = 1e-10;    ///< sup |V_k - V_{k-1}| / omega_R^2
  int profile_samples = 1201;
};

struct KerrDeformation {
  ModeCertificate certificate;
  DeformationProfile profile;
  double epsilon1_bound = 0.0;     ///< absolute perturbation bound used
  double identity_residual = 0.0;  ///< pointwise closure witness
  double g_update = 0.0;           ///< last relative change of V in the G iteration
  int outer_iterations = 0;
};

namespace detail {

/// sup |A - B| over n samples spanning the union of the two supports,
/// normalized by omega_R^2.
inline double relative_potential_change(const ConstructedPotential& A,
                                        const ConstructedPotential& B, double omega_R,
                                        int n = 800) {
  const double lo = std::min(A.support_lo, B.support_lo);
  const double hi = std::max(A.support_hi, B.support_hi);
  double sup = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * double(i) / n;
    sup = std::max(sup, std::abs(A.value(x) - B.value(x)));
  }
  return sup / (omega_R * omega_R);
}

}  // namespace detail

/**
 * Full Kerr deformation pipeline: construct the compact potential (with the
 * perturbation amplitude capped by the curvature infimum and, for growing
 * modes, the counter-term G iterated to a fixed point), then absorb it into
 * the metric through the algebraic profile.
 */
inline KerrDeformation deform_kerr(const KerrParams& params, const FrequencyTriad& triad,
                                   double r0, KerrDeformationOptions options = {}) {
  if (params.family != Family::Kerr)
    throw PreconditionError("deform_kerr: requires the Kerr family");
  const AngularEigen eigen =
      spheroidal_eigen(params.a * triad.omega(), triad.m, triad.l);
  const double wt2 = 0.25 * triad.omega_R * triad.omega_R;

  KerrDeformation out;
  // First pass fixes the support, from which the amplitude cap follows.
  ConstructionOptions copts = options.construction;
  out.certificate = construct_mode_potential(params, triad, r0, copts);
  auto V = out.certificate.spec->extra_V;
  out.epsilon1_bound =
      kerr_curvature_infimum_bound(params, V->support_lo, V->support_hi);
  copts.epsilon1 = std::min(1.0, out.epsilon1_bound / wt2);
  out.outer_iterations = 1;

  for (int k = 0; k < options.max_outer_iter; ++k) {
    copts.G = (triad.omega_I != 0.0)
                  ? kerr_g_term(params, triad, eigen, V)
                  : std::function<complexd(double)>{};
    ModeCertificate cert = construct_mode_potential(params, triad, r0, copts);
    auto V_new = cert.spec->extra_V;
    out.g_update = detail::relative_potential_change(*V_new, *V, triad.omega_R);
    out.certificate = std::move(cert);
    V = std::move(V_new);
    ++out.outer_iterations;
    if (triad.omega_I == 0.0 || out.g_update < options.outer_tol) break;
  }
  if (triad.omega_I != 0.0 && out.g_update >= 1e-6)
    throw ToleranceError("deform_kerr: counter-term iteration did not settle; last change " +
                         std::to_string(out.g_update));

  out.profile =
      kerr_deformation_profile(params, triad, eigen, *V, options.profile_samples);
  out.identity_residual =
      kerr_deformation_identity_residual(params, triad, eigen, *V, out.profile);
  return out;
}

// ---------------------------------------------------------------------------
// Auxiliary family: asymptotically conic profile via Picard iteration
// ---------------------------------------------------------------------------

struct ConicDeformationOptions {
  ConstructionOptions construction;
  int max_iter = 50;
  double contraction_tol = 1e-9;  ///< C^1 window norm of successive differences
  double sample_spacing = 0.25;   ///< profile node spacing in r_*
  double substep = 0.05;          ///< integrator step for the profile ODE
  double far_extension = 30.0;    ///< sampling past the support for the far fit
};

struct ConicDeformation {
  DeformationProfile profile;  ///< curvature source = the certified potential
  ModeCertificate certificate;
  std::vector<double> contraction_ratios;
  int iterations = 0;
};

namespace detail {

struct ProfileOdeResult {
  std::vector<double> xs, rs, h, hp, hpp;  ///< nodes on [R_plus, support_hi]
  double C1 = 1.0, C2 = 0.0;
  double far_residual = 0.0;
};

/// Integrate h'' + 2 r^{-1} (1 - 2M/r) h' = V h, h(R_plus) = 1, h'(R_plus) = 0
/// as the first-order system I' = r^2 V h, h' = I / r^2 (I = r^2 h'), with
/// classical RK4 on fixed substeps; the far constants come from a two-point
/// solve of h = C1 + C2 * far_integral at the outermost nodes, with the fit
/// residual checked on every node beyond the support.
inline ProfileOdeResult integrate_profile_ode(const KerrParams& params,
                                              const ConstructedPotential& V,
                                              double R_plus,
                                              const ConicDeformationOptions& opts) {
  const double R1 = V.support_hi;
  if (!(R1 > R_plus))
    throw PreconditionError("integrate_profile_ode: potential support ends before R_plus");
  TortoiseMap map(params);
  double warm = map.r_of_r_star(R_plus);

  auto radius = [&](double x) {
    warm = map.r_of_r_star(x, warm);
    return warm;
  };
  // State y = (h, I); dy/dx = (I / r^2, r^2 V h).
  auto deriv = [&](double x, double h, double I) {
    const double r = radius(x);
    const double r2 = r * r;
    return std::pair(I / r2, r2 * V.value(x) * h);
  };
  auto rk4_step = [&](double x, double& h, double& I, double dx) {
    auto [k1h, k1i] = deriv(x, h, I);
    auto [k2h, k2i] = deriv(x + 0.5 * dx, h + 0.5 * dx * k1h, I + 0.5 * dx * k1i);
    auto [k3h, k3i] = deriv(x + 0.5 * dx, h + 0.5 * dx * k2h, I + 0.5 * dx * k2i);
    auto [k4h, k4i] = deriv(x + dx, h + dx * k3h, I + dx * k3i);
    h += dx / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);
    I += dx / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
  };

  ProfileOdeResult out;
  double h = 1.0, I = 0.0, x = R_plus;
  auto record = [&](double at) {
    const double r = radius(at);
    const double hp = I / (r * r);
    out.xs.push_back(at);
    out.rs.push_back(r);
    out.h.push_back(h);
    out.hp.push_back(hp);
    out.hpp.push_back(V.value(at) * h - 2.0 / r * (1.0 - 2.0 * params.M / r) * hp);
  };
  const int n_nodes = std::max(2, int(std::ceil((R1 - R_plus) / opts.sample_spacing)) + 1);
  const double node_dx = (R1 - R_plus) / double(n_nodes - 1);
  const int sub = std::max(1, int(std::ceil(node_dx / opts.substep)));
  record(x);
  for (int i = 1; i < n_nodes; ++i) {
    const double target = R_plus + node_dx * double(i);
    const double dx = (target - x) / sub;
    for (int s = 0; s < sub; ++s) rk4_step(x + dx * s, h, I, dx);
    x = target;
    record(x);
  }

  // Continue beyond the support (V == 0 there: I stays constant) and fit the
  // far form h = C1 + C2 * int_{r_*}^inf r^-2.
  std::vector<double> far_x{x}, far_h{h}, far_F;
  const int n_far = std::max(3, int(std::ceil(opts.far_extension / opts.sample_spacing)));
  const double far_dx = opts.far_extension / double(n_far);
  for (int i = 0; i < n_far; ++i) {
    const double dx2 = far_dx / sub;
    for (int s = 0; s < sub; ++s) rk4_step(x + dx2 * s, h, I, dx2);
    x += far_dx;
    far_x.push_back(x);
    far_h.push_back(h);
  }
  DeformationProfile helper;  // only for the closed-form far integral
  helper.params = params;
  for (double fx : far_x) far_F.push_back(helper.far_integral(map.r_of_r_star(fx, warm)));
  const std::size_t nf = far_x.size();
  const double F1 = far_F[nf - 2], F2 = far_F[nf - 1];
  const double h1 = far_h[nf - 2], h2 = far_h[nf - 1];
  out.C2 = (h2 - h1) / (F2 - F1);
  out.C1 = h2 - out.C2 * F2;
  for (std::size_t i = 0; i < nf; ++i)
    out.far_residual =
        std::max(out.far_residual, std::abs(far_h[i] - out.C1 - out.C2 * far_F[i]));
  if (out.far_residual > 1e-8 * out.C1)
    throw ToleranceError("integrate_profile_ode: far-field fit residual " +
                         std::to_string(out.far_residual) + " exceeds 1e-8 * C1");
  return out;
}

/// Package an ODE solution as a profile (conic family).  The curvature source
/// is supplied by the caller: zero during the Picard iteration (the background
/// there is the frame-only deformed potential), the certified compact
/// potential for the final profile (the fixed-point relation).
inline DeformationProfile make_conic_profile(const KerrParams& params,
                                             const ProfileOdeResult& sol, double R_plus,
                                             double R_plus_1,
                                             std::function<double(double)> curvature) {
  DeformationProfile p;
  p.kind = DeformationKind::Conic;
  p.params = params;
  p.r_star = sol.xs;
  p.r = sol.rs;
  p.h = sol.h;
  p.h_prime = sol.hp;
  p.h_double_prime = sol.hpp;
  p.R_plus = R_plus;
  p.R_plus_1 = R_plus_1;
  p.C1 = sol.C1;
  p.C2 = sol.C2;
  p.curvature_source = std::move(curvature);
  p.validate();
  return p;
}

/// C^1 distance between a profile solution and the previous profile on the
/// solution's nodes.
inline double c1_distance(const ProfileOdeResult& sol, const DeformationProfile& prev) {
  double d = 0.0;
  for (std::size_t i = 0; i < sol.xs.size(); ++i)
    d = std::max(d, std::abs(sol.h[i] - prev.h_at(sol.xs[i])) +
                        std::abs(sol.hp[i] - prev.h_prime_at(sol.xs[i])));
  return d;
}

}  // namespace detail

/**
 * Asymptotically conic deformation: iterate (1) the generalized mode
 * construction on the current profile, (2) the profile ODE sourced by the
 * constructed potential, until successive profiles agree in C^1 on the
 * deformation window.  Returns the converged profile (whose curvature term
 * equals the final certified potential, making the certificate a mode of the
 * free equation on the deformed background) together with that certificate.
 */
inline ConicDeformation conic_deformation_profile(const KerrParams& params,
                                                  const FrequencyTriad& triad,
                                                  double R_plus,
                                                  ConicDeformationOptions options = {}) {
  if (params.family != Family::Auxiliary)
    throw PreconditionError("conic_deformation_profile: requires the auxiliary family");
  TortoiseMap map(params);
  const double r0 = map.r_of_r_star(R_plus);

  auto zero_curvature = [](double) { return 0.0; };
  // Seed profile: identically 1.
  auto seed = std::make_shared<DeformationProfile>();
  seed->kind = DeformationKind::Conic;
  seed->params = params;
  seed->r_star = {R_plus - 2.0, R_plus - 1.0};
  seed->r = {map.r_of_r_star(R_plus - 2.0), map.r_of_r_star(R_plus - 1.0)};
  seed->h = {1.0, 1.0};
  seed->h_prime = {0.0, 0.0};
  seed->h_double_prime = {0.0, 0.0};
  seed->R_plus = R_plus;
  seed->R_plus_1 = R_plus;
  seed->C1 = 1.0;
  seed->C2 = 0.0;
  seed->curvature_source = zero_curvature;

  ConicDeformation out;
  std::shared_ptr<const DeformationProfile> prev = seed;
  std::shared_ptr<const ConstructedPotential> V;
  double d_prev = std::numeric_limits<double>::infinity();
  double window_hint = 0.0;
  bool converged = false;
  detail::ProfileOdeResult sol;

  ConstructionOptions inner = options.construction;
  inner.certify_degree = false;  // degree certification only for the final run
  for (int n = 1; n <= options.max_iter; ++n) {
    inner.window_hint = window_hint;
    ModeCertificate cert =
        construct_mode_potential_generalized(prev, params, triad, r0, inner);
    V = cert.spec->extra_V;
    window_hint = V->support_hi - V->support_lo;
    sol = detail::integrate_profile_ode(params, *V, R_plus, options);
    const double d = detail::c1_distance(sol, *prev);
    out.iterations = n;
    if (n >= 2) {
      out.contraction_ratios.push_back(d / d_prev);
      const auto& cr = out.contraction_ratios;
      if (cr.size() >= 3 && cr[cr.size() - 1] >= 1.0 && cr[cr.size() - 2] >= 1.0 &&
          cr[cr.size() - 3] >= 1.0) {
        std::string msg = "conic_deformation_profile: no contraction at R_plus = " +
                          std::to_string(R_plus) + "; ratios";
        for (double r : cr) msg += " " + std::to_string(r);
        throw NoContractionError(msg);
      }
    }
    prev = std::make_shared<const DeformationProfile>(detail::make_conic_profile(
        params, sol, R_plus, V->support_hi, zero_curvature));
    d_prev = d;
    if (d < options.contraction_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::string msg =
        "conic_deformation_profile: C^1 difference still " + std::to_string(d_prev) +
        " after " + std::to_string(out.iterations) + " iterations; ratios";
    for (double r : out.contraction_ratios) msg += " " + std::to_string(r);
    throw NoContractionError(msg);
  }

  // Final pass on the converged profile, with degree certification as asked.
  ConstructionOptions final_opts = options.construction;
  final_opts.window_hint = window_hint;
  out.certificate =
      construct_mode_potential_generalized(prev, params, triad, r0, final_opts);
  auto V_fin = out.certificate.spec->extra_V;
  sol = detail::integrate_profile_ode(params, *V_fin, R_plus, options);
  out.profile = detail::make_conic_profile(
      params, sol, R_plus, V_fin->support_hi,
      [V_fin](double x) { return V_fin->value(x); });
  return out;
}

/**
 * Potential specification for the free wave equation on the deformed
 * background described by the profile.
 */
inline PotentialSpec deformed_separated_potential(
    std::shared_ptr<const DeformationProfile> profile, const FrequencyTriad& triad,
    const AngularEigen& eigen, const KerrParams& params) {
  if (!profile) throw PreconditionError("deformed_separated_potential: missing profile");
  profile->validate();
  // Smoothness guard: gross jumps in the second-derivative samples indicate a
  // corrupted profile (the genuine ones vary on the mollification scale).
  double sup = 0.0;
  for (double v : profile->h_double_prime) sup = std::max(sup, std::abs(v));
  for (std::size_t i = 0; i + 1 < profile->h_double_prime.size(); ++i) {
    const double jump =
        std::abs(profile->h_double_prime[i + 1] - profile->h_double_prime[i]);
    if (jump > std::max(1e-6, 0.5 * (sup + 1.0)))
      throw PreconditionError(
          "deformed_separated_potential: second-derivative samples jump at node " +
          std::to_string(i));
  }
  return PotentialSpec(SpecFamily::DeformedConic, params, triad, eigen,
                       std::move(profile));
}

}  // namespace bhmode
