/**
 * @brief Construction of smooth, nonnegative, compactly supported potentials
 *        that turn a superradiant frequency into a genuine (real or growing)
 *        mode: window flattening, the ellipse-tangent rough glue, the
 *        two-parameter perturbed potential with its Wronskian root,
 *        mollification, topological-degree certification of the root, and the
 *        L1 stability measurement under families of boundary data.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <bhmode/angular.hpp>
#include <bhmode/ellipse.hpp>
#include <bhmode/errors.hpp>
#include <bhmode/geometry.hpp>
#include <bhmode/ode.hpp>
#include <bhmode/potentials.hpp>
#include <bhmode/radial.hpp>

namespace bhmode {

/// Named residuals of a certified mode.
struct ResidualReport {
  double ode_residual_sup = 0.0;      ///< sup-node deviation under re-integration
  double outer_bc_residual = 0.0;     ///< far-side asymptotic-consistency mismatch
  double inner_bc_residual = 0.0;     ///< horizon-side asymptotic-consistency mismatch
  double wronskian_over_scale = 0.0;  ///< modehood: W[u_in, u_out] / scale
  double flux_balance = 0.0;          ///< real modes only
  bool flux_applicable = true;
  std::string notes;
};

/// Full parameter record of one construction.
struct ConstructionState {
  double x0 = 0.0;              ///< left anchor of the glue search
  double x1 = 0.0, x2 = 0.0;    ///< tangent interval of the rough potential
  double phi2 = 0.0;            ///< rotation of the second window solution
  double x1_bar = 0.0;          ///< perturbed left breakpoint
  double eta = 0.0;             ///< notch parameter
  double epsilon1 = 1.0;        ///< notch depth fraction
  double delta = 0.0;           ///< mollification width
  double eta0 = 0.0;            ///< admissible box half-width
  double delta0 = 0.0;          ///< boundary-data closeness budget
  std::array<complexd, 4> boundary_data{};  ///< (u_a, u_a', u_b, u_b')
  complexd lambda_scale{0.0, 0.0};
  double omega_window = 0.0;    ///< frequency of the flattened window equation
  double a = 0.0, b = 0.0;      ///< shooting interval carrying boundary_data
};

/// Window equation u'' + (omega_t^2 - V + Z) u = 0 on [a, b].
struct WindowDescriptor {
  double omega_t = 0.0;
  double omega_I = 0.0;                ///< informational; enters through Z
  std::function<complexd(double)> Z;   ///< extra complex term (null = 0)
  double a = 0.0, b = 0.0;
};

/// Certified output: potential, mode, residuals and the construction record.
struct ModeCertificate {
  std::shared_ptr<const PotentialSpec> spec;  ///< background + the constructed V
  RadialSolution mode;
  ResidualReport residual_report;
  ConstructionState construction;
  int winding = 0;                            ///< degree of the certified root
  double certificate_tolerance = 1e-6;
};

struct ConstructionOptions {
  double epsilon1 = 1.0;
  std::function<complexd(double)> G;   ///< extra equation term (null = 0)
  double certificate_tolerance = 1e-6;
  double window_hint = 0.0;            ///< initial window-length guess (0 = auto)
  double grid_spacing = 1.0;           ///< nominal certificate grid step in the window
  int max_window_iter = 10;
  bool certify_degree = true;
};

// ---------------------------------------------------------------------------
// Rough potential (common tangent glue)
// ---------------------------------------------------------------------------

struct RoughConstruction {
  PiecewisePotential potential;
  ConstructionState state;
  RadialSolution glued;
};

namespace detail {

/// Piecewise-linear r(r_star) lookup assembled from solution grids, for
/// bookkeeping radii of synthetic window grids.
inline double interp_radius(const std::vector<std::pair<double, double>>& pairs, double rs) {
  if (pairs.empty()) return rs;
  if (rs <= pairs.front().first) return pairs.front().second;
  if (rs >= pairs.back().first) return pairs.back().second;
  auto it = std::lower_bound(pairs.begin(), pairs.end(), std::make_pair(rs, -1e300));
  const auto [xb, rb] = *it;
  const auto [xa, ra] = *(it - 1);
  if (!(xb > xa)) return ra;
  return ra + (rb - ra) * (rs - xa) / (xb - xa);
}

}  // namespace detail

/**
 * Glue two equal-flux free-wave window solutions through a straight line:
 * returns the piecewise potential (value omega^2 on the tangent interval), the
 * construction record, and the C^1 glued solution.
 */
inline RoughConstruction build_rough_potential(const RadialSolution& u1,
                                               const RadialSolution& u2, double omega,
                                               double x0) {
  if (u1.u.empty() || u2.u.empty())
    throw PreconditionError("build_rough_potential: empty solutions");
  const double a_win = std::min(u1.grid.r_star_nodes.front(), u2.grid.r_star_nodes.front());
  const double b_win = std::max(u1.grid.r_star_nodes.back(), u2.grid.r_star_nodes.back());
  EllipseForm e1 = decompose(u1.u.front(), u1.u_prime.front(),
                             u1.grid.r_star_nodes.front(), omega);
  EllipseForm e2 = decompose(u2.u.back(), u2.u_prime.back(),
                             u2.grid.r_star_nodes.back(), omega);

  const double f1 = e1.flux(), f2 = e2.flux();
  if (f1 == 0.0 || f2 == 0.0)
    throw PreconditionError("build_rough_potential: zero flux");
  if (f1 * f2 < 0.0)
    throw NotSuperradiantError("build_rough_potential: fluxes of opposite sign");
  if (std::abs(f1 - f2) > 1e-8 * (std::abs(f1) + std::abs(f2)))
    throw PreconditionError("build_rough_potential: fluxes not equalized");
  // Proportional ellipses (constant ratio) carry no tangent family.
  const complexd cross = e1.A * e2.B - e2.A * e1.B;
  if (std::abs(cross) < 1e-12 * (e1.sup_bound() * e2.sup_bound()))
    throw DegenerateEllipsesError("build_rough_potential: proportional window solutions");

  const double C0 = e1.sup_bound() + e2.sup_bound();
  const double needed = 2.0 * M_PI / omega + M_PI * C0 * C0 / std::abs(f1) + 2.0;
  if (!(b_win - a_win > needed))
    throw WindowTooShortError("build_rough_potential: window shorter than the length bound");

  const auto glue = find_rotation_phase(e1, e2, x0 + 0.5);
  const EllipseForm e2r{e2.A * std::exp(complexd(0.0, glue.phi2)),
                        e2.B * std::exp(complexd(0.0, glue.phi2)), omega};

  RoughConstruction out;
  out.potential = PiecewisePotential{{glue.x1, glue.x2}, {omega * omega}};
  out.state.x0 = x0;
  out.state.x1 = glue.x1;
  out.state.x2 = glue.x2;
  out.state.phi2 = glue.phi2;
  out.state.x1_bar = glue.x1;
  out.state.eta = 0.0;
  out.state.omega_window = omega;
  out.state.a = a_win;
  out.state.b = b_win;
  out.state.boundary_data = {e1.at(a_win), e1.deriv(a_win), e2r.at(b_win), e2r.deriv(b_win)};

  // Glued solution on the union of source nodes plus the tangent interval.
  std::vector<std::pair<double, double>> rs_r;
  for (std::size_t i = 0; i < u1.grid.r_star_nodes.size(); ++i)
    rs_r.emplace_back(u1.grid.r_star_nodes[i], u1.grid.r_nodes[i]);
  for (std::size_t i = 0; i < u2.grid.r_star_nodes.size(); ++i)
    rs_r.emplace_back(u2.grid.r_star_nodes[i], u2.grid.r_nodes[i]);
  std::sort(rs_r.begin(), rs_r.end());

  std::vector<double> nodes;
  for (double x : u1.grid.r_star_nodes)
    if (x < glue.x1) nodes.push_back(x);
  const int n_line = 64;
  for (int i = 0; i <= n_line; ++i)
    nodes.push_back(glue.x1 + (glue.x2 - glue.x1) * double(i) / n_line);
  for (double x : u2.grid.r_star_nodes)
    if (x > glue.x2) nodes.push_back(x);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  RadialSolution g;
  g.grid.r_star_nodes = nodes;
  g.grid.r_nodes.resize(nodes.size());
  g.grid.spacing = nodes.size() > 1
                       ? (nodes.back() - nodes.front()) / double(nodes.size() - 1)
                       : 0.0;
  g.u.resize(nodes.size());
  g.u_prime.resize(nodes.size());
  g.boundary_tag = BoundaryTag::Interior;
  g.triad = u1.triad;
  g.varpi = u1.varpi;
  g.flux_applicable = u1.flux_applicable;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double x = nodes[i];
    g.grid.r_nodes[i] = detail::interp_radius(rs_r, x);
    if (x < glue.x1) {
      g.u[i] = e1.at(x);
      g.u_prime[i] = e1.deriv(x);
    } else if (x <= glue.x2) {
      g.u[i] = e1.at(glue.x1) + glue.velocity * (x - glue.x1);
      g.u_prime[i] = glue.velocity;
    } else {
      g.u[i] = e2r.at(x);
      g.u_prime[i] = e2r.deriv(x);
    }
  }
  out.glued = std::move(g);
  return out;
}

// ---------------------------------------------------------------------------
// Perturbed potential and Wronskian map
// ---------------------------------------------------------------------------

/**
 * Two-parameter family: support [x1_bar, x2] at value omega^2, with a notch of
 * depth (1 - eps1) omega^2 on [mid, mid + eta] for eta >= 0, or a bump of
 * height (1 + eps1) omega^2 on [mid - |eta|, mid] for eta < 0; mid is fixed at
 * the base point (x1 + x2)/2.
 */
inline PiecewisePotential perturbed_potential(const ConstructionState& s) {
  const double w2 = s.omega_window * s.omega_window;
  if (!(s.epsilon1 > 0.0 && s.epsilon1 <= 1.0))
    throw PreconditionError("perturbed_potential: epsilon1 must lie in (0, 1]");
  if (s.eta0 > 0.0 &&
      (std::abs(s.x1_bar - s.x1) > s.eta0 * (1.0 + 1e-9) ||
       std::abs(s.eta) > s.eta0 * (1.0 + 1e-9)))
    throw PreconditionError("perturbed_potential: (x1_bar, eta) outside the admissible box");
  const double mid = 0.5 * (s.x1 + s.x2);
  if (!(s.x1_bar < mid))
    throw PreconditionError("perturbed_potential: x1_bar must stay left of the midpoint");
  if (s.eta > 0.0) {
    if (!(mid + s.eta < s.x2))
      throw PreconditionError("perturbed_potential: notch reaches the right breakpoint");
    return PiecewisePotential{{s.x1_bar, mid, mid + s.eta, s.x2},
                              {w2, (1.0 - s.epsilon1) * w2, w2}};
  }
  if (s.eta < 0.0) {
    if (!(s.x1_bar < mid + s.eta))
      throw PreconditionError("perturbed_potential: bump reaches the left breakpoint");
    return PiecewisePotential{{s.x1_bar, mid + s.eta, mid, s.x2},
                              {w2, (1.0 + s.epsilon1) * w2, w2}};
  }
  return PiecewisePotential{{s.x1_bar, s.x2}, {w2}};
}

namespace detail {

struct WindowShot {
  complexd w;       ///< Wronskian of the two shooting solutions
  double scale;     ///< |l'||r| + |l||r'| at the matching point
  complexd ratio;   ///< left/right value ratio at the matching point
};

/// Shoot from both ends of the window under the (optionally mollified)
/// perturbed potential plus the descriptor's Z term; meet mid-window.
inline WindowShot window_shoot(const WindowDescriptor& desc, const ConstructionState& s,
                               double delta) {
  const auto pp = perturbed_potential(s);
  std::optional<SmoothPotential> sm;
  if (delta > 0.0) sm = mollify(pp, delta);
  const double wt2 = desc.omega_t * desc.omega_t;
  auto rhs = [&](double x) -> complexd {
    const double v = sm ? sm->value(x) : pp.value(x);
    complexd z = desc.Z ? desc.Z(x) : complexd{};
    return complexd(v - wt2, 0.0) - z;
  };
  if (!(desc.a < desc.b))
    throw PreconditionError("window_shoot: descriptor window is empty");
  const double xm = 0.5 * (desc.a + desc.b);
  // Force the integrator to land on every breakpoint (and kernel edge) so that
  // arbitrarily thin features are never stepped over.
  std::vector<double> events;
  for (double bpt : pp.breakpoints) {
    events.push_back(bpt);
    if (delta > 0.0) {
      events.push_back(bpt - delta);
      events.push_back(bpt + delta);
    }
  }
  std::sort(events.begin(), events.end());
  std::vector<double> ev_l, ev_r;
  for (double e : events) {
    if (e > desc.a && e < xm) ev_l.push_back(e);
    if (e > xm && e < desc.b) ev_r.push_back(e);
  }
  std::reverse(ev_r.begin(), ev_r.end());  // right shot integrates downward
  OdeOptions opts;
  // A very shallow notch changes u' by as little as ~1e-14 relative per
  // crossing; an absolute-tolerance floor above roundoff lets the controller
  // step through it sloppily, so drive the error control purely relatively.
  opts.rel_tol = 1e-14;
  opts.abs_tol = 1e-22;
  OdeState left{s.boundary_data[0], s.boundary_data[1], 0.0};
  OdeState right{s.boundary_data[2], s.boundary_data[3], 0.0};
  const OdeState l = integrate_ode(rhs, desc.a, xm, left, opts, ev_l);
  const OdeState r = integrate_ode(rhs, desc.b, xm, right, opts, ev_r);
  WindowShot out;
  const complexd lv = l.value(), ld = l.deriv(), rv = r.value(), rd = r.deriv();
  out.w = ld * rv - lv * rd;
  out.scale = std::abs(ld) * std::abs(rv) + std::abs(lv) * std::abs(rd) + 1e-300;
  out.ratio = (std::abs(rv) > 0.0) ? lv / rv : complexd{};
  return out;
}

}  // namespace detail

/**
 * Wronskian of the pair shot from the two ends of the window with the recorded
 * boundary data, under the delta-mollified perturbed potential; vanishes
 * exactly when the data glue into a single solution.
 */
inline complexd wronskian_map(const WindowDescriptor& desc, const ConstructionState& s,
                              double delta) {
  return detail::window_shoot(desc, s, delta).w;
}

/// The two closed-form partial derivatives of the Wronskian map at the base
/// point (x1_bar = x1, eta = 0, delta = 0, real window equation).
inline std::pair<complexd, complexd> analytic_wronskian_jacobian(const ConstructionState& s) {
  const EllipseForm e1 = decompose(s.boundary_data[0], s.boundary_data[1], s.a,
                                   s.omega_window);
  const double mid = 0.5 * (s.x1 + s.x2);
  const complexd u_x1 = e1.at(s.x1);
  const complexd u_mid = e1.at(s.x1) + e1.deriv(s.x1) * (mid - s.x1);
  const double w2 = s.omega_window * s.omega_window;
  return {-w2 * u_x1 * u_x1, -s.epsilon1 * w2 * u_mid * u_mid};
}

// ---------------------------------------------------------------------------
// Degree certification
// ---------------------------------------------------------------------------

/**
 * Winding number of a cyclically sampled boundary map around 0.  Inconclusive
 * (throws RootNotCertified) when the sampled values come within 10x of the
 * sampling resolution of the origin.
 */
inline int certify_root_by_degree(const std::vector<complexd>& w_boundary) {
  if (w_boundary.size() < 8)
    throw PreconditionError("certify_root_by_degree: need at least 8 boundary samples");
  const std::size_t n = w_boundary.size();
  // Per-segment safety: each hop must be small against the local magnitude, so
  // no segment can slip around the origin between samples.
  for (std::size_t i = 0; i < n; ++i) {
    const double wa = std::abs(w_boundary[i]), wb = std::abs(w_boundary[(i + 1) % n]);
    const double jump = std::abs(w_boundary[(i + 1) % n] - w_boundary[i]);
    if (!(std::min(wa, wb) > 2.0 * jump))
      throw RootNotCertifiedError(
          "certify_root_by_degree: boundary passes too close to the origin for the "
          "sampling resolution");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    total += std::arg(w_boundary[(i + 1) % n] / w_boundary[i]);
  return int(std::lround(total / (2.0 * M_PI)));
}

namespace detail {

/// Adaptive winding of w along a closed contour parametrized by t in [0, 1):
/// sample, refine segments with large phase or relative magnitude jumps, then
/// certify the degree from the samples.
inline int winding_on_contour(const std::function<complexd(double)>& w_of_t, int n0 = 64,
                              int max_pass = 8, std::size_t max_samples = 4096) {
  std::vector<double> ts(static_cast<std::size_t>(n0), 0.0);
  for (int i = 0; i < n0; ++i) ts[std::size_t(i)] = double(i) / n0;
  std::vector<complexd> ws(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) ws[i] = w_of_t(ts[i]);
  for (int pass = 0; pass < max_pass; ++pass) {
    std::vector<double> ts2;
    std::vector<complexd> ws2;
    bool refined = false;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      ts2.push_back(ts[i]);
      ws2.push_back(ws[i]);
      const std::size_t j = (i + 1) % ts.size();
      const double arg_jump = std::abs(std::arg(ws[j] / ws[i]));
      const double mag_jump =
          std::abs(ws[j] - ws[i]) / (std::min(std::abs(ws[i]), std::abs(ws[j])) + 1e-300);
      if (arg_jump > 0.8 || mag_jump > 0.4) {
        const double tm = (i + 1 == ts.size()) ? 0.5 * (ts[i] + 1.0) : 0.5 * (ts[i] + ts[j]);
        ts2.push_back(tm);
        ws2.push_back(w_of_t(tm));
        refined = true;
      }
    }
    ts.swap(ts2);
    ws.swap(ws2);
    if (!refined) break;
    if (ts.size() > max_samples)
      throw RootNotCertifiedError(
          "winding_on_contour: refinement exceeded the sample budget");
  }
  return certify_root_by_degree(ws);
}

/// Winding on the counterclockwise rectangle boundary (equals the degree).
inline int winding_on_box(const std::function<complexd(double, double)>& w, double cx,
                          double cy, double rx, double ry, int n0 = 64) {
  auto point = [&](double t) {
    t = (t - std::floor(t)) * 4.0;
    if (t < 1.0) return std::pair(cx - rx + 2.0 * rx * t, cy - ry);
    if (t < 2.0) return std::pair(cx + rx, cy - ry + 2.0 * ry * (t - 1.0));
    if (t < 3.0) return std::pair(cx + rx - 2.0 * rx * (t - 2.0), cy + ry);
    return std::pair(cx - rx, cy + ry - 2.0 * ry * (t - 3.0));
  };
  return winding_on_contour(
      [&](double t) {
        auto [x, y] = point(t);
        return w(x, y);
      },
      n0);
}

/**
 * Degree of w around (cx, cy) sampled on the Jacobian-preconditioned ellipse
 * (dx, dy) = J^{-1} (R e^{2 pi i t}): the image is close to a circle of radius
 * R, so an ill-conditioned Jacobian no longer forces dense sampling.  R is the
 * largest value keeping the contour inside |dx| <= rx, |dy| <= ry.  Returns
 * the degree on the spatial region (the parameter winding times sign det J).
 */
inline int winding_on_jacobian_ellipse(const std::function<complexd(double, double)>& w,
                                       double cx, double cy, complexd Jx, complexd Jy,
                                       double rx, double ry, int n0 = 64) {
  const double det = Jx.real() * Jy.imag() - Jy.real() * Jx.imag();
  if (std::abs(det) < 1e-300)
    throw RootNotCertifiedError("winding_on_jacobian_ellipse: singular Jacobian");
  auto displacement = [&](double t, double R) {
    const complexd target = std::polar(R, 2.0 * M_PI * t);
    const double dx = (target.real() * Jy.imag() - Jy.real() * target.imag()) / det;
    const double dy = (Jx.real() * target.imag() - target.real() * Jx.imag()) / det;
    return std::pair(dx, dy);
  };
  // Largest R with the unit-R contour scaled into the admissible rectangle.
  double max_dx = 0.0, max_dy = 0.0;
  for (int i = 0; i < 256; ++i) {
    auto [dx, dy] = displacement(double(i) / 256.0, 1.0);
    max_dx = std::max(max_dx, std::abs(dx));
    max_dy = std::max(max_dy, std::abs(dy));
  }
  double R = 0.9 * std::min(rx / (max_dx + 1e-300), ry / (max_dy + 1e-300));
  // Nonlinearity probe: on the preconditioned contour the image should be close
  // to R e^{2 pi i t}; if quadratic terms dominate (near-null Jacobian
  // direction), shrink R until the linear prediction actually holds.
  for (int shrink = 0;; ++shrink) {
    double mismatch = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double t = (k + 0.5) / 4.0;
      auto [dx, dy] = displacement(t, R);
      mismatch = std::max(
          mismatch, std::abs(w(cx + dx, cy + dy) - std::polar(R, 2.0 * M_PI * t)) / R);
    }
    if (mismatch <= 0.5) break;
    // Mismatch decays linearly in R when quadratic terms dominate, so a deep
    // shrink is cheap and safe; stop only when R would drown in roundoff.
    if (shrink >= 14 || R * 0.25 < 1e3 * std::abs(w(cx, cy)) + 1e-280)
      throw RootNotCertifiedError(
          "winding_on_jacobian_ellipse: contour stays nonlinear down to the smallest radius");
    R *= 0.25;
  }
  const int param_winding = winding_on_contour(
      [&](double t) {
        auto [dx, dy] = displacement(t, R);
        return w(cx + dx, cy + dy);
      },
      n0);
  return param_winding * (det > 0.0 ? 1 : -1);
}

// ---------------------------------------------------------------------------
// Damped Newton for the 2D root of the complex Wronskian map
// ---------------------------------------------------------------------------

struct NewtonResult {
  double x = 0.0, y = 0.0;
  complexd w{};
  double scale = 1.0;
  complexd Jx{}, Jy{};  ///< final (FD) Jacobian columns
  bool converged = false;
};

inline NewtonResult newton2(const std::function<WindowShot(double, double)>& f, double x0,
                            double y0, complexd Jx0, complexd Jy0, double span,
                            double tol_rel = 1e-11, int max_iter = 40) {
  NewtonResult st;
  st.x = x0;
  st.y = y0;
  st.Jx = Jx0;
  st.Jy = Jy0;
  WindowShot cur = f(st.x, st.y);
  st.w = cur.w;
  st.scale = cur.scale;
  const double h = std::max(1e-6 * span, 1e-9);
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(cur.w) <= tol_rel * cur.scale) {
      st.converged = true;
      break;
    }
    if (it > 0) {  // refresh the Jacobian by central differences
      st.Jx = (f(st.x + h, st.y).w - f(st.x - h, st.y).w) / (2.0 * h);
      st.Jy = (f(st.x, st.y + h).w - f(st.x, st.y - h).w) / (2.0 * h);
    }
    const double det = st.Jx.real() * st.Jy.imag() - st.Jy.real() * st.Jx.imag();
    if (std::abs(det) < 1e-300)
      throw ToleranceError("newton2: singular Wronskian Jacobian");
    const double dx = -(cur.w.real() * st.Jy.imag() - st.Jy.real() * cur.w.imag()) / det;
    const double dy = -(st.Jx.real() * cur.w.imag() - cur.w.real() * st.Jx.imag()) / det;
    double step = 1.0;
    bool accepted = false;
    for (int halve = 0; halve < 12; ++halve) {
      try {
        const WindowShot trial = f(st.x + step * dx, st.y + step * dy);
        if (std::abs(trial.w) < std::abs(cur.w) * (1.0 - 1e-4 * step) ||
            std::abs(trial.w) <= tol_rel * trial.scale) {
          st.x += step * dx;
          st.y += step * dy;
          cur = trial;
          accepted = true;
          break;
        }
      } catch (const PreconditionError&) {
        // trial left the admissible box; shrink
      }
      step *= 0.5;
    }
    st.w = cur.w;
    st.scale = cur.scale;
    if (!accepted)
      throw ToleranceError("newton2: line search stalled before reaching the root");
  }
  if (!st.converged && std::abs(cur.w) <= 1e-9 * cur.scale) st.converged = true;
  if (!st.converged)
    throw ToleranceError("newton2: no convergence within the iteration budget");
  return st;
}

// ---------------------------------------------------------------------------
// Flattening cutoff
// ---------------------------------------------------------------------------

inline double quintic_step(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

/// Cutoff theta with unit smoothstep collars on [xL, xR], optionally perturbed
/// by a small hump on the outer collar (the nondegeneracy nudge).
struct FlattenCutoff {
  double xL = 0.0, xR = 0.0;
  double hump = 0.0;
  double theta(double x) const {
    if (x <= xL || x >= xR) return 0.0;
    double t = std::min(quintic_step(x - xL), quintic_step(xR - x));
    if (hump != 0.0) {
      const double u = (x - (xR - 0.5)) / 0.4;
      t += hump * std::exp(1.0) * bump_raw(u);
    }
    return t;
  }
};

/// The flattening part of the constructed potential:
///   theta(x) * (3/4 omega_R^2 - V_background(x)),
/// evaluated against the real-frequency background (no compact addition).
inline std::function<double(double)> make_flatten(
    std::shared_ptr<const PotentialSpec> background, FlattenCutoff cutoff,
    double omega_R) {
  auto warm = std::make_shared<double>(0.0);
  const double target = 0.75 * omega_R * omega_R;
  return [background, cutoff, warm, target](double x) {
    const double th = cutoff.theta(x);
    if (th == 0.0) return 0.0;
    return th * (target - std::real(potential_at(*background, x, warm.get())));
  };
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Full construction pipeline
// ---------------------------------------------------------------------------

namespace detail {

struct WindowSetup {
  double xL, xR, x0;
  std::shared_ptr<const PotentialSpec> background;  ///< real-frequency, no extra
  std::shared_ptr<const ConstructedPotential> flatten_only;
  std::function<double(double)> flatten;
  EllipseForm e1, e2;      ///< normalized, flux-equalized window forms
  double norm1 = 1.0;      ///< scale applied to the horizon solution
  double scale2 = 1.0;     ///< total scale applied to the infinity solution
  RotationGlue glue;
};

/// Integrate the two window solutions, equalize fluxes, decompose to ellipse
/// forms, and find the rotation glue; throws NotSuperradiant out of the flux
/// equalization for frequencies on the wrong side of varpi.
inline WindowSetup window_stage(std::shared_ptr<const PotentialSpec> background,
                                double xL, double W, double hump) {
  WindowSetup ws;
  ws.xL = xL;
  ws.xR = xL + W;
  ws.x0 = xL + 2.0;
  ws.background = background;
  const double omega_R = background->triad.omega_R;
  const double wt = 0.5 * omega_R;

  detail::FlattenCutoff cutoff{ws.xL, ws.xR, hump};
  ws.flatten = detail::make_flatten(background, cutoff, omega_R);
  auto extra = std::make_shared<ConstructedPotential>();
  extra->flatten_part = ws.flatten;
  extra->support_lo = ws.xL;
  extra->support_hi = ws.xR;
  ws.flatten_only = extra;
  const PotentialSpec spec1 = background->with_extra(extra);

  OdeOptions tight;
  // The recorded ellipse data seed the Wronskian root; through a thick
  // barrier their error is amplified by the squared horizon-to-window
  // amplitude ratio, so integrate them at the roundoff floor and without an
  // absolute-tolerance floor (which would under-resolve a shallow notch).
  tight.rel_tol = 1e-14;
  tight.abs_tol = 1e-22;
  const auto grid_h = make_radial_grid(spec1.map, {ws.x0 - 1.0, ws.x0});
  const RadialSolution u_hor = integrate_from_horizon(spec1, grid_h, 1.0, tight);
  const auto grid_i = make_radial_grid(spec1.map, {ws.xR - 2.0, ws.xR});
  const RadialSolution u_inf = integrate_from_infinity(spec1, grid_i, 1.0, tight);

  const double s2 = equalize_fluxes(u_inf, u_hor);

  EllipseForm e1 = decompose(u_hor.u[1], u_hor.u_prime[1], ws.x0, wt);
  ws.norm1 = 1.0 / e1.sup_bound();
  e1.A *= ws.norm1;
  e1.B *= ws.norm1;
  ws.scale2 = s2 * ws.norm1;
  EllipseForm e2 = decompose(u_inf.u[0] * ws.scale2, u_inf.u_prime[0] * ws.scale2,
                             ws.xR - 2.0, wt);
  ws.e1 = e1;
  ws.e2 = e2;

  const complexd cross = e1.A * e2.B - e2.A * e1.B;
  if (std::abs(cross) < 1e-6 * (e1.sup_bound() * e2.sup_bound()))
    throw DegenerateEllipsesError("window_stage: near-proportional window solutions");

  // Seed far enough right of x0 that the perturbation box fits left of x1.
  ws.glue = find_rotation_phase(e1, e2, ws.x0 + 2.5);
  return ws;
}

/// integrate_on_grid with an extra equation term G (u'' = (V - w^2 - G) u).
inline RadialSolution integrate_with_G(const PotentialSpec& spec, const RadialGrid& grid,
                                       complexd amplitude,
                                       const std::function<complexd(double)>& G,
                                       BoundaryTag tag, const OdeOptions& opts) {
  const AsymptoticStart start =
      (tag == BoundaryTag::FromHorizon)
          ? asymptotic_start_horizon(spec, amplitude, grid.r_star_nodes.front())
          : asymptotic_start_infinity(spec, amplitude, grid.r_star_nodes.back());
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
  auto base = ode_rhs(spec);
  auto rhs = [&](double x) { return base(x) - (G ? G(x) : complexd{}); };
  const double stop = (tag == BoundaryTag::FromHorizon) ? grid.r_star_nodes.back()
                                                        : grid.r_star_nodes.front();
  integrate_ode(rhs, start.r_star, stop, start.state, opts, samples,
                [&](double rs, const OdeState& st) {
                  const auto it = std::lower_bound(grid.r_star_nodes.begin(),
                                                   grid.r_star_nodes.end(), rs);
                  const std::size_t i = std::size_t(it - grid.r_star_nodes.begin());
                  sol.u[i] = st.value();
                  sol.u_prime[i] = st.deriv();
                });
  return sol;
}

inline ModeCertificate construct_impl(SpecFamily family, const KerrParams& params,
                                      const FrequencyTriad& triad, double r0,
                                      const ConstructionOptions& options,
                                      std::shared_ptr<const DeformationProfile> h_profile) {
  params.validate();
  triad.validate();
  if (!(triad.omega_R > 0.0))
    throw PreconditionError(
        "construct_mode_potential: omega_R must be positive (negative-frequency modes "
        "follow by conjugation)");
  const double omega_R = triad.omega_R;
  const double wt = 0.5 * omega_R;

  const FrequencyTriad triad_R{omega_R, 0.0, triad.m, triad.l};
  const AngularEigen eigen_R =
      spheroidal_eigen(complexd(params.a * omega_R, 0.0), triad.m, triad.l);
  auto background = std::make_shared<PotentialSpec>(family, params, triad_R, eigen_R,
                                                    h_profile);

  const double xL = background->map.r_star_of_r(r0);

  // --- Window-length fixed point -------------------------------------------
  double W = options.window_hint > 0.0 ? options.window_hint : 2.0 * M_PI / wt + 60.0;
  double hump = 0.0;
  std::optional<WindowSetup> ws;
  int nudges = 0;
  for (int it = 0; it < options.max_window_iter; ++it) {
    try {
      ws = window_stage(background, xL, W, hump);
    } catch (const DegenerateEllipsesError&) {
      if (++nudges > 3) throw;
      hump += 0.01;  // perturb the cutoff on the outer collar and retry
      --it;
      continue;
    }
    const double C0 = ws->e1.sup_bound() + ws->e2.sup_bound();
    const double L0 = std::abs(ws->e1.flux());
    const double W_target = 2.0 * M_PI / wt + M_PI * C0 * C0 / L0 + 6.0;
    const bool fits = ws->glue.x2 <= ws->xR - 3.0;
    if (fits && W >= W_target * 0.999) break;
    W = std::max(W_target, fits ? W : 1.5 * W);
    ws.reset();
  }
  if (!ws)
    throw WindowTooShortError(
        "construct_mode_potential: window-length fixed point did not settle");

  // Trim: the guaranteed window hosts a tangent, but the one found usually
  // lands far earlier; shrink to just past it (re-converging the glue, which
  // shifts when the outer collar moves) so later integrations stay short.
  double W_try = (ws->glue.x2 - xL) + 10.0;
  for (int it = 0; it < 12 && W_try < W - 20.0; ++it) {
    try {
      WindowSetup trimmed = window_stage(background, xL, W_try, hump);
      if (trimmed.glue.x2 > trimmed.xR - 3.0) {
        // Moving the outer collar shifted the tangent past the trimmed edge;
        // chase it with a slightly longer window.
        W_try = (trimmed.glue.x2 - xL) + 10.0;
        continue;
      }
      ws = std::move(trimmed);
      W = W_try;
      W_try = (ws->glue.x2 - xL) + 10.0;
    } catch (const ToleranceError&) {
      break;  // no tangent inside the trimmed window: keep the current one
    } catch (const DegenerateEllipsesError&) {
      break;
    }
  }

  // r0 admissibility: 0 <= V_background <= omega_R^2 / 2 across the window.
  {
    auto warm = std::make_shared<double>(0.0);
    for (int i = 0; i <= 400; ++i) {
      const double x = ws->xL + (ws->xR - ws->xL) * double(i) / 400.0;
      const double v = std::real(potential_at(*background, x, warm.get()));
      if (!(v >= -1e-12 && v <= 0.5 * omega_R * omega_R + 1e-12))
        throw PreconditionError(
            "construct_mode_potential: r0 below the admissible threshold (background "
            "potential leaves [0, omega_R^2/2] on the window)");
    }
  }

  // --- Construction state, perturbation box, mollification width ------------
  const double x1 = ws->glue.x1, x2 = ws->glue.x2;
  const double mid = 0.5 * (x1 + x2);
  const double L = x2 - x1;
  ConstructionState state;
  state.x0 = ws->x0;
  state.x1 = x1;
  state.x2 = x2;
  state.phi2 = ws->glue.phi2;
  state.x1_bar = x1;
  state.eta = 0.0;
  state.epsilon1 = std::clamp(options.epsilon1, 1e-12, 1.0);
  state.omega_window = wt;
  state.a = ws->x0;
  state.b = x2 + 2.0;
  double delta = std::min({1e-3 * L, 0.1 * (mid - x1), 1.0});
  double eta0 = std::min({0.05 * L, 0.3 * (mid - x1), 0.3 * (x2 - mid), x1 - ws->x0 - 1.5});
  if (!(eta0 > 4.0 * delta)) delta = eta0 / 8.0;
  // The notch depth scales with epsilon1, but the mollification error it must
  // absorb scales with delta alone; shrink delta proportionally so the root's
  // eta stays well inside the admissible box even for very shallow notches.
  delta *= state.epsilon1;
  if (!(delta > 0.0 && eta0 > 0.0))
    throw WindowTooShortError("construct_mode_potential: no room for the perturbation box");
  state.delta = delta;
  state.eta0 = eta0;
  state.delta0 = 1e-2;
  const EllipseForm e2r{ws->e2.A * std::exp(complexd(0.0, state.phi2)),
                        ws->e2.B * std::exp(complexd(0.0, state.phi2)), wt};
  state.boundary_data = {ws->e1.at(state.a), ws->e1.deriv(state.a), e2r.at(state.b),
                         e2r.deriv(state.b)};

  // --- Real-stage Wronskian root --------------------------------------------
  WindowDescriptor desc0{wt, 0.0, nullptr, state.a, state.b};
  auto objective0 = [&](double xb, double eta) {
    ConstructionState s = state;
    s.x1_bar = xb;
    s.eta = eta;
    return window_shoot(desc0, s, delta);
  };
  const auto [Jx0, Jy0] = analytic_wronskian_jacobian(state);
  NewtonResult root = newton2(objective0, x1, 0.0, Jx0, Jy0, L);

  const bool complex_stage = (triad.omega_I != 0.0) || bool(options.G);
  std::shared_ptr<const PotentialSpec> spec_stage = background;
  WindowDescriptor desc_stage = desc0;
  ConstructionState state_stage = state;
  std::function<WindowShot(double, double)> objective = objective0;

  if (complex_stage) {
    const AngularEigen eigen_C =
        spheroidal_eigen(params.a * triad.omega(), triad.m, triad.l);
    auto bgC = std::make_shared<PotentialSpec>(family, params, triad, eigen_C, h_profile);
    const PotentialSpec specC1 = bgC->with_extra(ws->flatten_only);
    OdeOptions tight;
    tight.rel_tol = 1e-14;
    tight.abs_tol = 1e-22;
    const auto grid_h = make_radial_grid(specC1.map, {state.a - 1.0, state.a});
    const RadialSolution uhC =
        integrate_with_G(specC1, grid_h, 1.0, options.G, BoundaryTag::FromHorizon, tight);
    const auto grid_i = make_radial_grid(specC1.map, {state.b, state.b + 1.0});
    const RadialSolution uiC =
        integrate_with_G(specC1, grid_i, 1.0, options.G, BoundaryTag::FromInfinity, tight);
    const complexd rot = std::exp(complexd(0.0, state.phi2));
    state_stage.boundary_data = {uhC.u[1] * ws->norm1, uhC.u_prime[1] * ws->norm1,
                                 uiC.u[0] * ws->scale2 * rot,
                                 uiC.u_prime[0] * ws->scale2 * rot};
    const complexd w2c = triad.omega() * triad.omega();
    auto warmZ = std::make_shared<double>(0.0);
    auto flatten = ws->flatten;
    auto G = options.G;
    const double wt2 = wt * wt;
    std::function<complexd(double)> Z = [bgC, warmZ, flatten, G, w2c, wt2](double x) {
      const complexd v = potential_at(*bgC, x, warmZ.get());
      return w2c + (G ? G(x) : complexd{}) - wt2 - v - flatten(x);
    };
    desc_stage = WindowDescriptor{wt, triad.omega_I, Z, state.a, state.b};
    spec_stage = bgC;
    objective = [desc_stage, state_stage, delta](double xb, double eta) {
      ConstructionState s = state_stage;
      s.x1_bar = xb;
      s.eta = eta;
      return window_shoot(desc_stage, s, delta);
    };
    root = newton2(objective, root.x, root.y, root.Jx, root.Jy, L);
  }

  state_stage.x1_bar = root.x;
  state_stage.eta = root.y;

  // --- Degree certification -------------------------------------------------
  int winding = 0;
  if (options.certify_degree) {
    const double h = std::max(1e-6 * L, 1e-9);
    const complexd Jx = (objective(root.x + h, root.y).w - objective(root.x - h, root.y).w) /
                        (2.0 * h);
    const complexd Jy = (objective(root.x, root.y + h).w - objective(root.x, root.y - h).w) /
                        (2.0 * h);
    const double det = Jx.real() * Jy.imag() - Jy.real() * Jx.imag();
    const double disp = std::hypot(root.x - x1, root.y) + 4.0 * delta + 1e-3 * L;
    // The Jacobian direction rotates on the scale of half a window wavelength,
    // so the box must stay well inside one rotation period.
    const double rot_scale = 0.2 / wt;
    double rx = std::min({eta0, 4.0 * disp, rot_scale, mid - root.x - 2.0 * delta,
                          0.9 * (eta0 - std::abs(root.x - x1))});
    double ry = std::min({eta0, 4.0 * disp, rot_scale, 0.5 * (x2 - mid),
                          0.5 * (mid - root.x), 0.9 * (eta0 - std::abs(root.y))});
    if (!(rx > 0.0 && ry > 0.0))
      throw RootNotCertifiedError(
          "construct_mode_potential: no admissible box left around the root");
    bool certified = false;
    for (int attempt = 0; attempt < 4 && !certified; ++attempt) {
      try {
        winding = winding_on_jacobian_ellipse(
            [&](double xb, double eta) { return objective(xb, eta).w; }, root.x, root.y,
            Jx, Jy, rx, ry);
        certified = (std::abs(winding) == 1) && (winding == (det > 0.0 ? 1 : -1));
        if (!certified) break;
      } catch (const RootNotCertifiedError&) {
        rx *= 0.5;
        ry *= 0.5;
      }
    }
    if (!certified)
      throw RootNotCertifiedError(
          "construct_mode_potential: degree test inconclusive around the Wronskian root");
  }

  // --- Assembly and residuals ----------------------------------------------
  auto extra_final = std::make_shared<ConstructedPotential>();
  extra_final->flatten_part = ws->flatten;
  extra_final->bump = mollify(perturbed_potential(state_stage), delta);
  extra_final->support_lo = ws->xL;
  extra_final->support_hi = ws->xR;
  auto spec_final =
      std::make_shared<PotentialSpec>(spec_stage->with_extra(extra_final));

  // Pointwise bounds of the constructed addition.
  {
    const double hi_allowed = 2.0 * omega_R * omega_R;
    for (int i = 0; i <= 1000; ++i) {
      const double x = ws->xL + (ws->xR - ws->xL) * double(i) / 1000.0;
      const double v = extra_final->value(x);
      if (!(v >= -1e-9 * omega_R * omega_R && v <= hi_allowed * (1.0 + 1e-9)))
        throw PositivityViolatedError(
            "construct_mode_potential: constructed potential leaves [0, 2 omega_R^2]");
    }
  }

  OdeOptions tight;
  tight.rel_tol = 1e-14;
  tight.abs_tol = 1e-22;
  const AsymptoticStart hstart = asymptotic_start_horizon(*spec_final, 1.0);
  std::vector<double> nodes;
  const double gs = std::max(options.grid_spacing, 1e-3);
  for (double x = hstart.r_star; x < ws->xL; x += 0.5) nodes.push_back(x);
  for (double x = ws->xL; x < ws->xR; x += gs) nodes.push_back(x);
  for (double x = ws->xR; x <= ws->xR + 20.0 + 1e-9; x += 0.5) nodes.push_back(x);
  // Force landings on the (possibly very thin) mollified edges so that the
  // integrator cannot step across them.
  for (double bpt : extra_final->bump->source.breakpoints)
    for (double e : {bpt - delta, bpt, bpt + delta})
      if (e > nodes.front() && e < nodes.back()) nodes.push_back(e);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [](double u, double v) { return std::abs(u - v) < 1e-12; }),
              nodes.end());
  const RadialGrid grid = make_radial_grid(spec_final->map, nodes);

  const RadialSolution u_in =
      integrate_with_G(*spec_final, grid, 1.0, options.G, BoundaryTag::FromHorizon, tight);
  const RadialSolution u_out =
      integrate_with_G(*spec_final, grid, 1.0, options.G, BoundaryTag::FromInfinity, tight);

  // Proportionality scale at the most robust node, then the Wronskian residual.
  std::size_t imatch = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < grid.r_star_nodes.size(); ++i) {
    const double q = std::min(std::abs(u_in.u[i]), std::abs(u_out.u[i]));
    if (q > best) {
      best = q;
      imatch = i;
    }
  }
  const complexd lambda = u_in.u[imatch] / u_out.u[imatch];
  state_stage.lambda_scale = lambda;
  double wmax = 0.0;
  for (std::size_t i = 0; i < grid.r_star_nodes.size(); i += grid.r_star_nodes.size() / 16 + 1) {
    const double sc = std::abs(u_in.u_prime[i]) * std::abs(u_out.u[i]) +
                      std::abs(u_in.u[i]) * std::abs(u_out.u_prime[i]) + 1e-300;
    wmax = std::max(wmax, std::abs(u_in.u_prime[i] * u_out.u[i] -
                                   u_in.u[i] * u_out.u_prime[i]) /
                              sc);
  }

  RadialSolution mode = u_in;
  double sup = 0.0;
  for (const auto& v : mode.u) sup = std::max(sup, std::abs(v));
  for (auto& v : mode.u) v /= sup;
  for (auto& v : mode.u_prime) v /= sup;

  ResidualReport report;
  report.wronskian_over_scale = wmax;
  report.flux_applicable = (triad.omega_I == 0.0) && !options.G;
  if (report.flux_applicable) {
    const double f_front = conserved_flux(mode, 0);
    const double f_back = conserved_flux(mode, mode.u.size() - 1);
    report.flux_balance =
        std::abs(f_back - f_front) / (std::abs(f_back) + std::abs(f_front) + 1e-300);
  }

  {  // Independent re-integration at doubled node resolution and a different
     // tolerance (hence a different step sequence): sup-node deviation after
     // a one-complex-scale fit.
    OdeOptions sharp;
    sharp.rel_tol = 1e-13;
    sharp.abs_tol = 1e-21;
    std::vector<double> nodes2;
    nodes2.reserve(2 * grid.r_star_nodes.size());
    for (std::size_t i = 0; i < grid.r_star_nodes.size(); ++i) {
      nodes2.push_back(grid.r_star_nodes[i]);
      if (i + 1 < grid.r_star_nodes.size())
        nodes2.push_back(0.5 * (grid.r_star_nodes[i] + grid.r_star_nodes[i + 1]));
    }
    const RadialGrid grid2 = make_radial_grid(spec_final->map, nodes2);
    const RadialSolution re =
        integrate_with_G(*spec_final, grid2, 1.0, options.G, BoundaryTag::FromHorizon, sharp);
    std::size_t iref = 0;
    double bb = -1.0;
    for (std::size_t i = 0; i < mode.u.size(); ++i)
      if (std::abs(re.u[2 * i]) > bb) {
        bb = std::abs(re.u[2 * i]);
        iref = i;
      }
    const complexd lam = re.u[2 * iref] / mode.u[iref];
    double dev = 0.0;
    for (std::size_t i = 0; i < mode.u.size(); ++i)
      dev = std::max(dev, std::abs(re.u[2 * i] - lam * mode.u[i]));
    report.ode_residual_sup = dev / std::abs(lam);
  }

  {  // Boundary-consistency residuals from displaced asymptotic seeds.
    auto base_rhs = ode_rhs(*spec_final);
    auto G = options.G;
    std::function<complexd(double)> rhs_full = [base_rhs, G](double x) {
      return base_rhs(x) - (G ? G(x) : complexd{});
    };
    const AsymptoticStart s1 = asymptotic_start_infinity(*spec_final, 1.0,
                                                         grid.r_star_nodes.back());
    const AsymptoticStart s2 = asymptotic_start_infinity(*spec_final, 1.0,
                                                         grid.r_star_nodes.back(), 1.5);
    const OdeState back = integrate_ode(rhs_full, s2.r_star, s1.r_star, s2.state, tight);
    const double mag = std::exp(back.log_scale - s1.state.log_scale);
    report.outer_bc_residual =
        std::abs(back.u * mag - s1.state.u) / (std::abs(s1.state.u) + 1e-300);
    const AsymptoticStart h1 = asymptotic_start_horizon(*spec_final, 1.0);
    const AsymptoticStart h2 = asymptotic_start_horizon(*spec_final, 1.0, 1e300, 8.0);
    const OdeState hb = integrate_ode(rhs_full, h2.r_star, h1.r_star, h2.state, tight);
    const double hmag = std::exp(hb.log_scale - h1.state.log_scale);
    report.inner_bc_residual =
        std::abs(hb.u * hmag - h1.state.u) / (std::abs(h1.state.u) + 1e-300);
  }

  report.notes = "window [" + std::to_string(ws->xL) + ", " + std::to_string(ws->xR) +
                 "], glue [" + std::to_string(x1) + ", " + std::to_string(x2) + "]";

  ModeCertificate cert;
  cert.spec = spec_final;
  cert.mode = std::move(mode);
  cert.residual_report = report;
  cert.construction = state_stage;
  cert.winding = winding;
  cert.certificate_tolerance = options.certificate_tolerance;

  const double tol = options.certificate_tolerance;
  if (report.ode_residual_sup > tol || report.outer_bc_residual > tol ||
      report.inner_bc_residual > tol || report.wronskian_over_scale > tol ||
      (report.flux_applicable && report.flux_balance > tol))
    throw ToleranceError("construct_mode_potential: certificate residuals exceed " +
                         std::to_string(tol) + " (" + report.notes + ")");
  return cert;
}

}  // namespace detail

/// Mode-potential construction on the Kerr or auxiliary background.
inline ModeCertificate construct_mode_potential(const KerrParams& params,
                                                const FrequencyTriad& triad, double r0,
                                                const ConstructionOptions& options = {}) {
  const SpecFamily family =
      params.family == Family::Kerr ? SpecFamily::Kerr : SpecFamily::Auxiliary;
  return detail::construct_impl(family, params, triad, r0, options, nullptr);
}

/// Generalized construction on an h-deformed auxiliary background.  The
/// profile must be admissible: continuous, >= 1 everywhere, == 1 on the left.
inline ModeCertificate construct_mode_potential_generalized(
    std::shared_ptr<const DeformationProfile> h_profile, const KerrParams& params,
    const FrequencyTriad& triad, double r0, const ConstructionOptions& options = {}) {
  if (!h_profile)
    throw PreconditionError("construct_mode_potential_generalized: missing profile");
  h_profile->validate();
  for (double rs : {h_profile->R_plus - 5.0, h_profile->R_plus - 50.0})
    if (std::abs(h_profile->h_at(rs) - 1.0) > 1e-12)
      throw InvalidProfileError(
          "construct_mode_potential_generalized: h must be identically 1 left of R_plus");
  {
    const double lo = h_profile->R_plus, hi = h_profile->R_plus_1 + 10.0;
    for (int i = 0; i <= 200; ++i) {
      const double rs = lo + (hi - lo) * double(i) / 200.0;
      if (h_profile->h_at(rs) < 1.0 - 1e-10)
        throw InvalidProfileError("construct_mode_potential_generalized: h < 1 detected");
    }
  }
  return detail::construct_impl(SpecFamily::DeformedConic, params, triad, r0, options,
                                std::move(h_profile));
}

// ---------------------------------------------------------------------------
// L1 stability under families of boundary data
// ---------------------------------------------------------------------------

/// A one-parameter family of window problems: fixed geometry, s-dependent
/// boundary data (and optionally an s-dependent extra equation term).
struct DataFamily {
  WindowDescriptor descriptor;
  ConstructionState base_state;  ///< carries the base glue and box
  std::function<std::array<complexd, 4>(double)> data_of_s;
  std::function<std::function<complexd(double)>(double)> Z_of_s;  ///< optional
};

struct StabilityCurve {
  std::vector<double> s;
  std::vector<double> l1_step;          ///< L1 distance between consecutive potentials
  std::vector<std::array<double, 2>> roots;
  double lipschitz = 0.0;               ///< max step ratio l1 / |ds|
};

/**
 * Re-solve the Wronskian root for each member of the family and measure the
 * L1 distance between consecutive constructed potentials; any per-sample
 * failure aborts with the failing s in the message.
 */
inline StabilityCurve stability_under_family(const DataFamily& family,
                                             const std::vector<double>& s_grid) {
  if (s_grid.size() < 2)
    throw PreconditionError("stability_under_family: need at least 2 samples");
  StabilityCurve out;
  const double L = family.base_state.x2 - family.base_state.x1;
  double px = family.base_state.x1_bar, py = family.base_state.eta;
  std::optional<SmoothPotential> prev;
  for (double s : s_grid) {
    ConstructionState st = family.base_state;
    st.boundary_data = family.data_of_s(s);
    WindowDescriptor desc = family.descriptor;
    if (family.Z_of_s) desc.Z = family.Z_of_s(s);
    auto obj = [&](double xb, double eta) {
      ConstructionState t = st;
      t.x1_bar = xb;
      t.eta = eta;
      return detail::window_shoot(desc, t, st.delta);
    };
    detail::NewtonResult root;
    try {
      ConstructionState base = st;
      base.x1_bar = st.x1;
      base.eta = 0.0;
      const auto [jx, jy] = analytic_wronskian_jacobian(base);
      root = detail::newton2(obj, px, py, jx, jy, L);
    } catch (const std::exception& e) {
      throw ToleranceError("stability_under_family: construction failed at s = " +
                           std::to_string(s) + ": " + e.what());
    }
    px = root.x;
    py = root.y;
    st.x1_bar = root.x;
    st.eta = root.y;
    SmoothPotential V = mollify(perturbed_potential(st), st.delta);
    out.roots.push_back({root.x, root.y});
    if (prev) {
      std::vector<double> refine = V.source.breakpoints;
      refine.insert(refine.end(), prev->source.breakpoints.begin(),
                    prev->source.breakpoints.end());
      const double lo = std::min(prev->support_lo(), V.support_lo()) - 1.0;
      const double hi = std::max(prev->support_hi(), V.support_hi()) + 1.0;
      const double d = l1_distance([&](double x) { return V.value(x); },
                                   [&](double x) { return prev->value(x); }, lo, hi,
                                   refine, 4.0 * st.delta);
      out.l1_step.push_back(d);
      const double ds = std::abs(s - out.s.back());
      if (ds > 0.0) out.lipschitz = std::max(out.lipschitz, d / ds);
    }
    out.s.push_back(s);
    prev = std::move(V);
  }
  return out;
}

}  // namespace bhmode
