#include <doctest.h>

#include <cmath>
#include <complex>

#include <bhmode/mode_builder.hpp>

using namespace bhmode;

namespace {

// A synthetic window problem with an exact solution: free wave e1 on the left,
// straight line across [x1, x2] (where V = w^2), free wave on the right whose
// data is the C^1 continuation of the line.  The Wronskian map vanishes at the
// base point by construction.
struct Synthetic {
  double w = 0.5;
  EllipseForm e1{complexd(0.6, 0.2), complexd(0.3, -0.1), 0.5};
  double x1 = 10.0, x2 = 30.0, a = 4.0, b = 34.0;
  EllipseForm e2{complexd(0.0, 0.0), complexd(0.0, 0.0), 0.5};
  ConstructionState state;
  WindowDescriptor desc;

  Synthetic() {
    const complexd v = e1.deriv(x1);
    const complexd uL = e1.at(x1) + v * (x2 - x1);
    e2 = decompose(uL, v, x2, w);
    state.x0 = a - 2.0;
    state.x1 = x1;
    state.x2 = x2;
    state.x1_bar = x1;
    state.eta = 0.0;
    state.epsilon1 = 1.0;
    state.omega_window = w;
    state.a = a;
    state.b = b;
    state.eta0 = 2.0;
    state.delta = 0.0;
    state.boundary_data = {e1.at(a), e1.deriv(a), e2.at(b), e2.deriv(b)};
    desc = WindowDescriptor{w, 0.0, nullptr, a, b};
  }
};

}  // namespace

TEST_CASE("perturbed potential: geometry and the integral identity") {
  Synthetic s;
  const double w2 = s.w * s.w;
  const double mid = 0.5 * (s.state.x1 + s.state.x2);

  ConstructionState base = s.state;
  const auto p0 = perturbed_potential(base);
  CHECK(p0.breakpoints.size() == 2);
  CHECK(p0.value(15.0) == w2);
  CHECK(p0.value(9.0) == 0.0);

  ConstructionState notch = base;
  notch.eta = 1.2;
  const auto pn = perturbed_potential(notch);
  CHECK(pn.value(mid + 0.5) == doctest::Approx((1.0 - 1.0) * w2));
  CHECK(pn.value(mid - 0.5) == w2);
  CHECK(pn.value(mid + 1.5) == w2);
  // Integral difference: -eps1 w^2 eta.
  const double dI = (pn.l1_norm() - p0.l1_norm());
  CHECK(dI == doctest::Approx(-1.0 * w2 * 1.2).epsilon(1e-12));

  ConstructionState bump = base;
  bump.eta = -0.8;
  bump.epsilon1 = 0.5;
  const auto pb = perturbed_potential(bump);
  CHECK(pb.value(mid - 0.4) == doctest::Approx(1.5 * w2));
  CHECK(pb.value(mid + 0.4) == w2);
  const double dIb = (pb.l1_norm() - p0.l1_norm());
  CHECK(dIb == doctest::Approx(0.5 * w2 * 0.8).epsilon(1e-12));

  // Box and geometry violations.
  ConstructionState far = base;
  far.x1_bar = s.state.x1 + 3.0;  // beyond eta0 = 2
  CHECK_THROWS_AS(perturbed_potential(far), PreconditionError);
  ConstructionState bad = base;
  bad.eta0 = 0.0;           // box check off
  bad.x1_bar = mid + 1.0;   // but x1_bar past the midpoint
  CHECK_THROWS_AS(perturbed_potential(bad), PreconditionError);
  ConstructionState eps = base;
  eps.epsilon1 = 0.0;
  CHECK_THROWS_AS(perturbed_potential(eps), PreconditionError);
}

TEST_CASE("wronskian map vanishes at the exact glue and stays small mollified") {
  Synthetic s;
  const auto shot = detail::window_shoot(s.desc, s.state, 0.0);
  CHECK(std::abs(shot.w) < 1e-9 * shot.scale);
  // Mollified: still small (the kernel is symmetric; the leading effect is
  // second order in delta).
  const auto shot2 = detail::window_shoot(s.desc, s.state, 0.02);
  CHECK(std::abs(shot2.w) < 1e-2 * shot2.scale);
  CHECK(std::abs(shot2.w) >= 0.0);
}

TEST_CASE("analytic Wronskian Jacobian matches central finite differences") {
  Synthetic s;
  const auto [Jx, Jy] = analytic_wronskian_jacobian(s.state);
  const double h = 1e-5 * (s.b - s.a);

  auto w_at = [&](double xb, double eta) {
    ConstructionState st = s.state;
    st.x1_bar = xb;
    st.eta = eta;
    return wronskian_map(s.desc, st, 0.0);
  };
  const complexd fd_x = (w_at(s.x1 + h, 0.0) - w_at(s.x1 - h, 0.0)) / (2.0 * h);
  const complexd fd_y = (w_at(s.x1, h) - w_at(s.x1, -h)) / (2.0 * h);
  CHECK(std::abs(fd_x - Jx) < 1e-5 * std::abs(Jx));
  CHECK(std::abs(fd_y - Jy) < 1e-5 * std::abs(Jy));

  // Halving eps1 halves the eta derivative.
  ConstructionState half = s.state;
  half.epsilon1 = 0.5;
  const auto [Jx2, Jy2] = analytic_wronskian_jacobian(half);
  CHECK(std::abs(Jy2 - 0.5 * Jy) < 1e-12 * std::abs(Jy));
  CHECK(std::abs(Jx2 - Jx) < 1e-12 * std::abs(Jx));
}

TEST_CASE("damped Newton recovers the root after perturbing the right data") {
  Synthetic s;
  ConstructionState st = s.state;
  // Perturb the value only (a global phase would leave the root fixed).
  st.boundary_data[2] *= std::exp(complexd(0.0, 3e-4));
  const double delta = 0.02;
  auto obj = [&](double xb, double eta) {
    ConstructionState t = st;
    t.x1_bar = xb;
    t.eta = eta;
    return detail::window_shoot(s.desc, t, delta);
  };
  const auto [Jx, Jy] = analytic_wronskian_jacobian(st);
  const auto root = detail::newton2(obj, s.x1, 0.0, Jx, Jy, s.x2 - s.x1);
  CHECK(root.converged);
  CHECK(std::abs(root.w) <= 1e-9 * root.scale);
  CHECK(std::abs(root.x - s.x1) < s.state.eta0);
  CHECK(std::abs(root.y) < s.state.eta0);

  // Degree of the root is +-1 and matches the Jacobian orientation; a control
  // box away from the root winds zero.
  const int wind = detail::winding_on_box(
      [&](double xb, double eta) { return obj(xb, eta).w; }, root.x, root.y, 0.3, 0.3);
  CHECK(std::abs(wind) == 1);
  const double det = root.Jx.real() * root.Jy.imag() - root.Jy.real() * root.Jx.imag();
  CHECK(wind == (det > 0.0 ? 1 : -1));
  const int control = detail::winding_on_box(
      [&](double xb, double eta) { return obj(xb, eta).w; }, root.x + 1.2, root.y + 1.2,
      0.3, 0.3);
  CHECK(control == 0);
}

TEST_CASE("degree certification on synthetic boundary maps") {
  std::vector<complexd> idn, conj, tiny;
  for (int k = 0; k < 64; ++k) {
    const double t = 2.0 * M_PI * k / 64.0;
    idn.push_back(std::polar(1.0, t));
    conj.push_back(std::polar(1.0, -t));
    tiny.push_back(std::polar(1e-12, t) + complexd(0.5, 0.0));
  }
  CHECK(certify_root_by_degree(idn) == 1);
  CHECK(certify_root_by_degree(conj) == -1);
  // A loop passing too close to the origin relative to the sampling is refused.
  std::vector<complexd> close;
  for (int k = 0; k < 16; ++k)
    close.push_back(std::polar(1.0, 2.0 * M_PI * k / 16.0) + complexd(0.999, 0.0));
  CHECK_THROWS_AS(certify_root_by_degree(close), RootNotCertifiedError);
  // A loop not enclosing the origin winds zero.
  CHECK(certify_root_by_degree(tiny) == 0);
}

namespace {

RadialSolution free_wave_solution(const EllipseForm& e, double lo, double hi,
                                  BoundaryTag tag) {
  RadialSolution s;
  s.grid.r_star_nodes = {lo, hi};
  s.grid.r_nodes = {lo, hi};
  s.grid.spacing = hi - lo;
  s.u = {e.at(lo), e.at(hi)};
  s.u_prime = {e.deriv(lo), e.deriv(hi)};
  s.boundary_tag = tag;
  s.flux_applicable = true;
  return s;
}

}  // namespace

TEST_CASE("rough potential: C^1 glue through the common tangent line") {
  const double w = 0.5;
  EllipseForm e1{complexd(0.6, 0.2), complexd(0.3, -0.1), w};  // flux 0.15
  EllipseForm e2{std::polar(0.8, 1.1), std::polar(std::sqrt(0.64 - 0.3), -0.4), w};
  const auto u1 = free_wave_solution(e1, 4.0, 5.0, BoundaryTag::FromHorizon);
  const auto u2 = free_wave_solution(e2, 139.0, 140.0, BoundaryTag::FromInfinity);

  const auto rough = build_rough_potential(u1, u2, w, 4.0);
  CHECK(rough.potential.breakpoints.size() == 2);
  CHECK(rough.potential.values[0] == doctest::Approx(w * w));
  CHECK(rough.state.x1 > 4.5);
  CHECK(rough.state.x2 > rough.state.x1);
  CHECK(rough.state.x2 - rough.state.x1 <=
        M_PI * std::pow(e1.sup_bound() + e2.sup_bound(), 2) / 0.15 + 1e-9);

  // The glued solution is the left wave, then the line, then the rotated right
  // wave; verify C^1 joins from the sampled arrays.
  const auto& g = rough.glued;
  const complexd rot = std::exp(complexd(0.0, rough.state.phi2));
  for (std::size_t i = 0; i < g.grid.r_star_nodes.size(); ++i) {
    const double x = g.grid.r_star_nodes[i];
    if (x < rough.state.x1) {
      CHECK(std::abs(g.u[i] - e1.at(x)) < 1e-9);
    } else if (x > rough.state.x2) {
      CHECK(std::abs(g.u[i] - rot * e2.at(x)) < 1e-9);
    } else {
      // Affine across the tangent interval with the common velocity.
      CHECK(std::abs(g.u_prime[i] - e1.deriv(rough.state.x1)) < 1e-9);
    }
  }
  // Join values agree at both breakpoints.
  const complexd v = e1.deriv(rough.state.x1);
  const complexd arrive = e1.at(rough.state.x1) + v * (rough.state.x2 - rough.state.x1);
  CHECK(std::abs(arrive - rot * e2.at(rough.state.x2)) < 1e-8);

  // Unequal fluxes rejected.
  EllipseForm e3{complexd(1.2, 0.0), complexd(0.3, 0.0), w};
  const auto u3 = free_wave_solution(e3, 139.0, 140.0, BoundaryTag::FromInfinity);
  CHECK_THROWS_AS(build_rough_potential(u1, u3, w, 4.0), PreconditionError);
  // Opposite fluxes identify the non-superradiant case.
  EllipseForm e4{std::polar(0.4, 0.3), std::polar(std::sqrt(0.16 + 0.3), 0.9), w};
  const auto u4 = free_wave_solution(e4, 139.0, 140.0, BoundaryTag::FromInfinity);
  CHECK_THROWS_AS(build_rough_potential(u1, u4, w, 4.0), NotSuperradiantError);
  // Window shorter than the travel bound.
  const auto u5 = free_wave_solution(e2, 19.0, 20.0, BoundaryTag::FromInfinity);
  CHECK_THROWS_AS(build_rough_potential(u1, u5, w, 4.0), WindowTooShortError);
}

TEST_CASE("stability under a family of boundary data") {
  Synthetic s;
  DataFamily fam;
  fam.descriptor = s.desc;
  fam.base_state = s.state;
  fam.base_state.delta = 0.02;

  // Constant family: zero L1 motion.
  fam.data_of_s = [&](double) { return s.state.boundary_data; };
  const auto flat = stability_under_family(fam, {0.0, 0.5, 1.0});
  CHECK(flat.lipschitz == doctest::Approx(0.0).epsilon(1e-12));

  // Smooth phase family: finite, grid-stable Lipschitz constant.
  fam.data_of_s = [&](double sv) {
    auto d = s.state.boundary_data;
    d[2] *= std::exp(complexd(0.0, 5e-4 * sv));  // value only: shape changes
    return d;
  };
  const auto c1 = stability_under_family(fam, {0.0, 0.5, 1.0});
  const auto c2 = stability_under_family(fam, {0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(c1.lipschitz > 0.0);
  CHECK(c2.lipschitz > 0.0);
  CHECK(c2.lipschitz / c1.lipschitz > 0.3);
  CHECK(c2.lipschitz / c1.lipschitz < 3.0);
}

TEST_CASE("full construction on the auxiliary background") {
  const KerrParams params{1.0, 2.0, Family::Auxiliary};  // varpi = 0.5 for m = 2
  const FrequencyTriad triad{0.4, 0.0, 2, 2};
  const double r0 = 9.0;

  const auto cert = construct_mode_potential(params, triad, r0);

  CHECK(std::abs(cert.winding) == 1);
  const auto& rep = cert.residual_report;
  CHECK(rep.ode_residual_sup <= 1e-6);
  CHECK(rep.outer_bc_residual <= 1e-6);
  CHECK(rep.inner_bc_residual <= 1e-6);
  CHECK(rep.wronskian_over_scale <= 1e-6);
  CHECK(rep.flux_applicable);
  CHECK(rep.flux_balance <= 1e-6);

  // The constructed addition is compactly supported and within bounds.
  REQUIRE(bool(cert.spec->extra_V));
  const auto& ev = *cert.spec->extra_V;
  CHECK(ev.value(ev.support_lo - 1.0) == 0.0);
  CHECK(ev.value(ev.support_hi + 1.0) == 0.0);
  const double cap = 2.0 * triad.omega_R * triad.omega_R;
  for (int i = 0; i <= 200; ++i) {
    const double x = ev.support_lo + (ev.support_hi - ev.support_lo) * i / 200.0;
    const double v = ev.value(x);
    CHECK(v >= -1e-9);
    CHECK(v <= cap * (1.0 + 1e-9));
  }

  // Construction record is coherent.
  CHECK(cert.construction.x1 < cert.construction.x2);
  CHECK(std::abs(cert.construction.x1_bar - cert.construction.x1) <=
        cert.construction.eta0 * (1.0 + 1e-9));
  CHECK(std::abs(cert.construction.eta) <= cert.construction.eta0 * (1.0 + 1e-9));
  CHECK(cert.construction.delta > 0.0);
  // Mode is normalized.
  double sup = 0.0;
  for (const auto& u : cert.mode.u) sup = std::max(sup, std::abs(u));
  CHECK(sup == doctest::Approx(1.0).epsilon(1e-12));

  // Non-superradiant frequencies fail at flux equalization.
  const FrequencyTriad bad{0.55, 0.0, 2, 2};
  CHECK_THROWS_AS(construct_mode_potential(params, bad, r0), NotSuperradiantError);
  // Inadmissible r0 (potential exceeds omega_R^2/2 on the window).
  CHECK_THROWS_AS(construct_mode_potential(params, triad, 4.0), PreconditionError);
}

TEST_CASE("generalized construction with h == 1 reproduces the base bitwise") {
  const KerrParams params{1.0, 2.0, Family::Auxiliary};
  const FrequencyTriad triad{0.4, 0.0, 2, 2};
  const double r0 = 9.0;

  auto unit = std::make_shared<DeformationProfile>();
  unit->kind = DeformationKind::Conic;
  unit->params = params;
  unit->r_star = {-6.0, -5.0};
  unit->r = {TortoiseMap(params).r_of_r_star(-6.0), TortoiseMap(params).r_of_r_star(-5.0)};
  unit->h = {1.0, 1.0};
  unit->h_prime = {0.0, 0.0};
  unit->h_double_prime = {0.0, 0.0};
  unit->R_plus = -6.0;
  unit->R_plus_1 = -5.0;
  unit->C1 = 1.0;
  unit->C2 = 0.0;

  const auto base = construct_mode_potential(params, triad, r0);
  const auto gen = construct_mode_potential_generalized(unit, params, triad, r0);
  REQUIRE(gen.mode.u.size() == base.mode.u.size());
  for (std::size_t i = 0; i < base.mode.u.size(); ++i) {
    CHECK(gen.mode.u[i] == base.mode.u[i]);
    CHECK(gen.mode.u_prime[i] == base.mode.u_prime[i]);
  }
  CHECK(gen.construction.x1_bar == base.construction.x1_bar);
  CHECK(gen.construction.eta == base.construction.eta);

  // Inadmissible profiles are refused.
  auto dip = std::make_shared<DeformationProfile>(*unit);
  dip->h = {1.0, 0.5};
  CHECK_THROWS_AS(construct_mode_potential_generalized(dip, params, triad, r0),
                  InvalidProfileError);
  CHECK_THROWS_AS(
      construct_mode_potential_generalized(nullptr, params, triad, r0), PreconditionError);
}
