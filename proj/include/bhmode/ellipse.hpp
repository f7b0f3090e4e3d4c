/**
 * @brief Ellipse decomposition of free-wave solutions and the common-tangent
 *        glue: a solution of u'' + w^2 u = 0 traces the centered ellipse
 *        u(x) = A e^{iwx} + B e^{-iwx}; two such solutions with equal flux
 *        trace equal-area ellipses, which admit four common tangent lines.
 *        A straight line segment between tangency points is itself a solution
 *        of u'' = 0, i.e. of the equation with potential w^2 on the segment,
 *        so matching the tangency parameters (via a rotation of the second
 *        solution) produces a C^1 glue through a piecewise-constant potential.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <bhmode/errors.hpp>

namespace bhmode {

using complexd = std::complex<double>;

/// u(x) = A e^{i omega x} + B e^{-i omega x}; omega > 0 real.
struct EllipseForm {
  complexd A{0.0, 0.0};
  complexd B{0.0, 0.0};
  double omega = 0.0;

  complexd at(double x) const {
    return A * std::exp(complexd(0.0, omega * x)) + B * std::exp(complexd(0.0, -omega * x));
  }
  complexd deriv(double x) const {
    const complexd iw(0.0, omega);
    return iw * (A * std::exp(complexd(0.0, omega * x)) -
                 B * std::exp(complexd(0.0, -omega * x)));
  }

  double flux() const { return omega * (std::norm(A) - std::norm(B)); }
  double sup_bound() const { return std::abs(A) + std::abs(B); }  ///< C0 = |A|+|B|

  // Geometry: semi-axes p >= |q| along directions e^{i gamma}, i e^{i gamma}.
  double p() const { return std::abs(A) + std::abs(B); }
  double q_signed() const { return std::abs(A) - std::abs(B); }
  double gamma() const { return 0.5 * (std::arg(A) + std::arg(B)); }
};

/// Unique (A, B) with u(x) = A e^{iwx} + B e^{-iwx} matching (u, u') at x.
inline EllipseForm decompose(complexd u, complexd u_prime, double x, double omega) {
  if (omega == 0.0) throw PreconditionError("decompose: omega must be nonzero");
  const complexd iw(0.0, omega);
  const complexd ep = std::exp(complexd(0.0, omega * x));
  return EllipseForm{0.5 * (u + u_prime / iw) / ep, 0.5 * (u - u_prime / iw) * ep, omega};
}

/// Parameter x in [0, 2 pi / omega) with e.at(x) = P (P on the ellipse).
inline double ellipse_param_of_point(const EllipseForm& e, complexd P) {
  if (std::abs(e.A) < 1e-300 || std::abs(e.B) < 1e-300)
    throw DegenerateEllipsesError("ellipse_param_of_point: circular (degenerate) form");
  // A z^2 - P z + B = 0 in z = e^{i omega x}; the on-ellipse root has |z| = 1.
  const complexd disc = std::sqrt(P * P - 4.0 * e.A * e.B);
  const complexd z1 = (P + disc) / (2.0 * e.A);
  const complexd z2 = (P - disc) / (2.0 * e.A);
  const complexd z = (std::abs(std::abs(z1) - 1.0) <= std::abs(std::abs(z2) - 1.0)) ? z1 : z2;
  double x = std::arg(z) / e.omega;
  const double period = 2.0 * M_PI / e.omega;
  x -= period * std::floor(x / period);
  return x;
}

/// One common tangent line of two concentric ellipses: outward unit normal
/// e^{it}, support distance s, and the tangency points/parameters.
struct TangentLine {
  double t = 0.0;       ///< normal angle
  double support = 0.0; ///< distance of the line from the center
  complexd P1{0.0, 0.0};
  complexd P2{0.0, 0.0};
  double x1 = 0.0;      ///< parameter of P1 on e1, principal in [0, 2 pi/omega)
  double x2 = 0.0;      ///< parameter of P2 on e2, principal
};

namespace detail {

/// Support distance of a centered ellipse in normal direction t.
inline double ellipse_support(const EllipseForm& e, double t) {
  const double c = std::cos(t - e.gamma()), s = std::sin(t - e.gamma());
  const double p = e.p(), q = e.q_signed();
  return std::sqrt(p * p * c * c + q * q * s * s);
}

/// Tangency point with outward normal e^{it}.
inline complexd ellipse_tangency(const EllipseForm& e, double t) {
  const double c = std::cos(t - e.gamma()), s = std::sin(t - e.gamma());
  const double p = e.p(), q = e.q_signed();
  const double sup = std::sqrt(p * p * c * c + q * q * s * s);
  return std::exp(complexd(0.0, e.gamma())) * complexd(p * p * c, q * q * s) / sup;
}

/// Normal angles t (4 values in [0, 2 pi)) where the support functions agree.
inline std::vector<double> common_tangent_normals(const EllipseForm& e1,
                                                  const EllipseForm& e2) {
  const double p1 = e1.p(), q1 = std::abs(e1.q_signed());
  const double p2 = e2.p(), q2 = std::abs(e2.q_signed());
  const double scale = p1 * p1 + p2 * p2;
  if (std::abs(p1 - p2) < 1e-12 * std::sqrt(scale) ||
      std::abs(q1 - q2) < 1e-12 * std::sqrt(scale))
    throw DegenerateEllipsesError("common_tangents: coinciding semi-axes");
  const double K1 = (p1 * p1 - q1 * q1) * std::cos(2.0 * e1.gamma()) -
                    (p2 * p2 - q2 * q2) * std::cos(2.0 * e2.gamma());
  const double K2 = (p1 * p1 - q1 * q1) * std::sin(2.0 * e1.gamma()) -
                    (p2 * p2 - q2 * q2) * std::sin(2.0 * e2.gamma());
  const double K3 = (p2 * p2 + q2 * q2) - (p1 * p1 + q1 * q1);
  const double R = std::hypot(K1, K2);
  if (!(R > 1e-14 * scale))
    throw DegenerateEllipsesError("common_tangents: aligned equal-eccentricity pair");
  const double ratio = K3 / R;
  if (std::abs(ratio) > 1.0 + 1e-12)
    throw DegenerateEllipsesError("common_tangents: no exterior common tangent");
  const double chi = std::atan2(K2, K1);
  const double c = std::acos(std::clamp(ratio, -1.0, 1.0));
  std::vector<double> ts{0.5 * (chi + c), 0.5 * (chi - c), 0.5 * (chi + c) + M_PI,
                         0.5 * (chi - c) + M_PI};
  for (double& t : ts) t -= 2.0 * M_PI * std::floor(t / (2.0 * M_PI));
  return ts;
}

}  // namespace detail

/**
 * Four exterior common tangents of two concentric equal-orientation ellipses;
 * throws DegenerateEllipses when semi-axes coincide (no 4-tangent family).
 */
inline std::vector<TangentLine> common_tangents(const EllipseForm& e1,
                                                const EllipseForm& e2_rotated) {
  if (e1.flux() * e2_rotated.flux() <= 0.0)
    throw PreconditionError("common_tangents: fluxes must be nonzero with equal sign");
  std::vector<TangentLine> out;
  for (double t : detail::common_tangent_normals(e1, e2_rotated)) {
    TangentLine L;
    L.t = t;
    L.support = detail::ellipse_support(e1, t);
    L.P1 = detail::ellipse_tangency(e1, t);
    L.P2 = detail::ellipse_tangency(e2_rotated, t);
    L.x1 = ellipse_param_of_point(e1, L.P1);
    L.x2 = ellipse_param_of_point(e2_rotated, L.P2);
    out.push_back(L);
  }
  return out;
}

/// Result of the rotation-phase search.
struct RotationGlue {
  double phi2 = 0.0;  ///< rotation of the second solution, in [0, 2 pi)
  double x1 = 0.0;    ///< departure abscissa (on u1)
  double x2 = 0.0;    ///< arrival abscissa (on e^{i phi2} u2), x2 > x1
  complexd P1{0.0, 0.0};
  complexd P2{0.0, 0.0};
  complexd velocity{0.0, 0.0};  ///< shared line velocity = u1'(x1)
};

namespace detail {

/// Wrap v into (-period/2, period/2].
inline double wrap_period(double v, double period) {
  v -= period * std::round(v / period);
  if (v <= -0.5 * period) v += period;
  return v;
}

struct BranchSample {
  bool valid = false;
  double f = 0.0;   ///< wrapped parameter discrepancy (root target)
  double x1 = 0.0, x2 = 0.0;
  complexd P1{0.0, 0.0}, P2{0.0, 0.0}, v{0.0, 0.0};
};

/// Evaluate branch k (of the 4 tangents) at rotation phi.
inline BranchSample rotation_branch_sample(const EllipseForm& e1, const EllipseForm& e2,
                                           double phi, int k, double x_seed) {
  BranchSample out;
  const EllipseForm e2r{e2.A * std::exp(complexd(0.0, phi)),
                        e2.B * std::exp(complexd(0.0, phi)), e2.omega};
  std::vector<double> ts;
  try {
    ts = common_tangent_normals(e1, e2r);
  } catch (const DegenerateEllipsesError&) {
    return out;
  }
  const double t = ts[std::size_t(k)];
  const double period = 2.0 * M_PI / e1.omega;
  out.P1 = ellipse_tangency(e1, t);
  out.P2 = ellipse_tangency(e2r, t);
  double x1 = ellipse_param_of_point(e1, out.P1);
  x1 += period * std::ceil((x_seed - x1) / period);  // first representative >= x_seed
  out.x1 = x1;
  out.v = e1.deriv(x1);
  const complexd travel = (out.P2 - out.P1) / out.v;
  if (!(travel.real() > 1e-9)) return out;  // line runs backwards on this branch
  out.x2 = x1 + travel.real();
  const double x2_ell = ellipse_param_of_point(e2r, out.P2);
  out.f = wrap_period(out.x2 - x2_ell, period);
  out.valid = true;
  return out;
}

}  // namespace detail

/**
 * Rotation phase phi2 such that a common tangent of e1 and e^{i phi2} e2
 * arrives at the arrival ellipse exactly at its tangency parameter: the line
 * from u1(x1) with velocity u1'(x1) reaches e^{i phi2} u2(x2) at x = x2 with
 * matched velocity, x1 >= x_seed, and x2 - x1 within the travel bound.
 *
 * The search is parametrized by the departure abscissa x1 rather than by the
 * rotation.  For a given x1 the whole configuration is closed-form: matching
 * speeds |u2'(y)| = |u1'(x1)| fixes the arrival parameter y up to a branch
 * sign (an arccos), the rotation is read off from the velocity phases, and
 * with equal fluxes the rotated tangent offsets agree identically, so the
 * line through u1(x1) is automatically tangent to the rotated arrival
 * ellipse.  The glue closes when the line's arrival abscissa lands on a
 * half-period representative of y; the mismatch G(x1) = x1 + c - y (c the
 * line travel) is continuous on each admissible x1 band, so every half-period
 * level of G bracketed by neighbouring samples is a guaranteed root.  Roots
 * are tried in order of increasing travel and the first verified one wins,
 * which keeps the search O(thousands) of evaluations even when the travel is
 * millions of periods long (thick-barrier gluing).
 */
inline RotationGlue find_rotation_phase(const EllipseForm& e1, const EllipseForm& e2,
                                        double x_seed) {
  const double w = e1.omega;
  if (!(w > 0.0)) throw PreconditionError("find_rotation_phase: omega must be positive");
  const double period = 2.0 * M_PI / w;
  const double half = 0.5 * period;
  const double bound =
      M_PI * std::pow(e1.sup_bound() + e2.sup_bound(), 2) / std::abs(e1.flux());
  const double a1 = std::abs(e1.A), b1 = std::abs(e1.B);
  const double a2 = std::abs(e2.A), b2 = std::abs(e2.B);
  if (a1 * b1 < 1e-300 || a2 * b2 < 1e-300)
    throw DegenerateEllipsesError("find_rotation_phase: circular (degenerate) form");
  const double d1 = std::arg(e1.A * std::conj(e1.B));
  const double d2 = std::arg(e2.A * std::conj(e2.B));
  const double scale = e1.p() + e2.p();

  struct Cand {
    bool ok = false;
    double G = 0.0, y = 0.0, c = 0.0, phi = 0.0;
    complexd P1{0.0, 0.0}, P2{0.0, 0.0}, v{0.0, 0.0};
  };
  auto eval = [&](double x1, int s) -> Cand {
    Cand o;
    const complexd v = e1.deriv(x1);
    const double sp2 = std::norm(v) / (w * w);
    double rho = (a2 * a2 + b2 * b2 - sp2) / (2.0 * a2 * b2);
    if (rho < -1.0 - 1e-9 || rho > 1.0 + 1e-9) return o;
    rho = std::clamp(rho, -1.0, 1.0);
    const double y = (double(s) * std::acos(rho) - d2) / (2.0 * w);
    const complexd du2 = e2.deriv(y);
    if (std::abs(du2) < 1e-300) return o;
    const complexd rot = v / du2;  // unit modulus by construction of y
    o.P1 = e1.at(x1);
    o.P2 = rot * e2.at(y);
    o.v = v;
    o.c = std::real((o.P2 - o.P1) / v);
    o.phi = std::arg(rot);
    o.y = y;
    o.G = x1 + o.c - y;
    o.ok = true;
    return o;
  };

  // Admissible x1 bands: |u1'(x1)|^2 / w^2 = a1^2 + b1^2 - 2 a1 b1 cos(2 w x1 + d1)
  // must fall inside the speed range [(a2-b2)^2, (a2+b2)^2] of the arrival form.
  const double cl = std::max(
      (a1 * a1 + b1 * b1 - (a2 + b2) * (a2 + b2)) / (2.0 * a1 * b1), -1.0);
  const double ch = std::min(
      (a1 * a1 + b1 * b1 - (a2 - b2) * (a2 - b2)) / (2.0 * a1 * b1), 1.0);
  if (!(cl <= ch))
    throw ToleranceError(
        "find_rotation_phase: speed ranges of the two forms do not overlap");
  const double psi_lo = std::acos(ch), psi_hi = std::acos(cl);  // acos decreasing
  std::vector<std::pair<double, double>> bands;  // x1 intervals within the sweep
  const long n_lo = long(std::floor((2.0 * w * x_seed + d1) / (2.0 * M_PI))) - 1;
  for (long n = n_lo; n <= n_lo + 3; ++n) {
    for (const auto& [pl, ph] :
         {std::pair<double, double>{psi_lo, psi_hi},
          std::pair<double, double>{2.0 * M_PI - psi_hi, 2.0 * M_PI - psi_lo}}) {
      double xa = (pl + 2.0 * M_PI * double(n) - d1) / (2.0 * w);
      double xb = (ph + 2.0 * M_PI * double(n) - d1) / (2.0 * w);
      xa = std::max(xa, x_seed);
      xb = std::min(xb, x_seed + period);
      if (xb > xa + 1e-14) bands.emplace_back(xa, xb);
    }
  }

  // Sample G over each band/branch, enumerate bracketed half-period levels.
  struct Root {
    double c_est, xa, xb;
    Cand ca, cb;
    long j;
    int s;
  };
  std::vector<Root> roots;
  for (const auto& [xa, xb] : bands) {
    const int M = std::max(64, std::min(2048, int(std::ceil((xb - xa) / period * 4096.0))));
    for (int s : {+1, -1}) {
      Cand prev = eval(xa, s);
      for (int i = 1; i <= M; ++i) {
        const double x = xa + (xb - xa) * double(i) / M;
        const Cand cur = eval(x, s);
        if (prev.ok && cur.ok) {
          const double glo = std::min(prev.G, cur.G), ghi = std::max(prev.G, cur.G);
          const double offset = 0.5 * (prev.G - prev.c + cur.G - cur.c);  // = x1 - y
          long jlo = long(std::ceil(glo / half - 1e-12));
          const long jhi = long(std::floor(ghi / half + 1e-12));
          // The travel at level j is j*half - (x1 - y): increasing in j, so when a
          // segment brackets many levels only the lowest few can be optimal.
          jlo = std::max(jlo, long(std::ceil((offset + 1e-9) / half)));
          for (long j = jlo; j <= std::min(jhi, jlo + 8); ++j) {
            const double c_est = double(j) * half - offset;
            if (c_est > 1e-9 && c_est <= bound + 1e-9)
              roots.push_back({c_est, xa + (xb - xa) * double(i - 1) / M, x, prev, cur, j, s});
          }
        }
        prev = cur;
      }
    }
  }
  std::sort(roots.begin(), roots.end(),
            [](const Root& l, const Root& r) { return l.c_est < r.c_est; });

  int attempts = 0;
  for (const Root& r : roots) {
    if (++attempts > 256) break;
    const double target = double(r.j) * half;
    double lo = r.xa, hi = r.xb;
    double glo = r.ca.G - target;
    Cand root = (std::abs(glo) <= std::abs(r.cb.G - target)) ? r.ca : r.cb;
    for (int it = 0; it < 100 && hi - lo > 1e-16 * (1.0 + std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      const Cand cm = eval(mid, r.s);
      if (!cm.ok) break;
      root = cm;
      if (glo * (cm.G - target) <= 0.0) hi = mid;
      else { lo = mid; glo = cm.G - target; }
    }
    // Verify the assembled glue directly against the C^1 matching conditions.
    const double x1_root = root.G - root.c + root.y;  // = x1 by definition of G
    const double x2_root = x1_root + root.c;
    const double phi_f = root.phi + M_PI * double(r.j & 1L);
    const complexd rot = std::exp(complexd(0.0, phi_f));
    const double err = std::abs(root.P1 + root.c * root.v - rot * e2.at(x2_root)) +
                       std::abs(root.v - rot * e2.deriv(x2_root));
    if (root.c > 1e-9 && root.c <= bound + 1e-9 && err <= 1e-10 * scale) {
      RotationGlue g;
      g.phi2 = phi_f - 2.0 * M_PI * std::floor(phi_f / (2.0 * M_PI));
      g.x1 = x1_root;
      g.x2 = x2_root;
      g.P1 = root.P1;
      g.P2 = root.P2;
      g.velocity = root.v;
      return g;
    }
  }
  throw ToleranceError(
      "find_rotation_phase: no admissible root over the full sweep (degenerate input?)");
}

}  // namespace bhmode
