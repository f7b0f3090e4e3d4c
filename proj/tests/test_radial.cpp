#include <doctest.h>

#include <cmath>
#include <complex>

#include <bhmode/radial.hpp>

using namespace bhmode;

namespace {

PotentialSpec kerr_spec(double M, double a, double wr, double wi, int m, int l) {
  KerrParams p{M, a, Family::Kerr};
  FrequencyTriad t{wr, wi, m, l};
  auto eig = spheroidal_eigen(complexd(a, 0.0) * t.omega(), m, l);
  return PotentialSpec(SpecFamily::Kerr, p, t, std::move(eig));
}

PotentialSpec aux_spec(double M, double a, double wr, double wi, int m, int l) {
  KerrParams p{M, a, Family::Auxiliary};
  FrequencyTriad t{wr, wi, m, l};
  return PotentialSpec(SpecFamily::Auxiliary, p, t, spherical_eigen(m, l));
}

}  // namespace

TEST_CASE("potential values: closed-form spot checks") {
  SUBCASE("Kerr a=0, (m,l)=(0,0): pure curvature term (1-2M/r)2M/r^3") {
    auto spec = kerr_spec(1.0, 0.0, 0.37, 0.0, 0, 0);
    for (double r : {2.5, 3.0, 5.0, 12.0}) {
      const double rs = spec.map.r_star_of_r(r);
      const complexd V = potential_at(spec, rs);
      CHECK(V.real() ==
            doctest::Approx((1.0 - 2.0 / r) * 2.0 / (r * r * r)).epsilon(1e-10));
      CHECK(V.imag() == doctest::Approx(0.0).epsilon(1e-14));
    }
  }
  SUBCASE("Auxiliary M=1, a=0, (m,l)=(0,1) at r=3: (1/3)(2/9) + (1/3)(2/27)") {
    auto spec = aux_spec(1.0, 0.0, 0.2, 0.0, 0, 1);
    const double rs = spec.map.r_star_of_r(3.0);
    const complexd V = potential_at(spec, rs);
    CHECK(V.real() == doctest::Approx((2.0 / 27.0) + (2.0 / 81.0)).epsilon(1e-10));
  }
  SUBCASE("decay: V r^2 bounded as r -> infinity") {
    auto spec = kerr_spec(1.0, 0.5, 0.25, 0.0, 2, 2);
    for (double r : {1e2, 1e4, 1e6}) {
      const double rs = spec.map.r_star_of_r(r);
      CHECK(std::abs(potential_at(spec, rs)) * r * r < 10.0);
    }
  }
  SUBCASE("horizon limit: V -> varpi(2 omega - varpi)") {
    auto spec = kerr_spec(1.0, 0.5, 0.25, 0.0, 2, 2);
    const double varpi = horizon_frequency(spec.params, 2);
    const complexd V = potential_at(spec, -80.0);
    CHECK(V.real() == doctest::Approx(varpi * (2.0 * 0.25 - varpi)).epsilon(1e-8));
  }
}

TEST_CASE("outgoing solution: flux omega |amplitude|^2 at every node") {
  auto spec = kerr_spec(1.0, 0.5, 0.25, 0.0, 2, 2);
  auto grid = make_radial_grid(spec.map, -60.0, 60.0, 121);
  const complexd amp(0.8, -0.3);
  auto sol = integrate_from_infinity(spec, grid, amp);
  REQUIRE(sol.u.size() == 121);
  CHECK(sol.boundary_tag == BoundaryTag::FromInfinity);
  const double expect = 0.25 * std::norm(amp);
  for (std::size_t i = 0; i < sol.u.size(); ++i)
    CHECK(conserved_flux(sol, i) == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("ingoing solution: superradiant sign and flux constancy") {
  auto spec = kerr_spec(1.0, 0.5, 0.1, 0.0, 2, 2);
  const double varpi = horizon_frequency(spec.params, 2);
  REQUIRE(is_superradiant(spec.params, 0.1, 2));
  auto grid = make_radial_grid(spec.map, -60.0, 60.0, 121);
  auto sol = integrate_from_horizon(spec, grid, complexd(1.0, 0.0));
  const double f0 = conserved_flux(sol, 0);
  CHECK(f0 == doctest::Approx(-(0.1 - varpi)).epsilon(1e-8));
  CHECK(f0 > 0.0);  // superradiant: horizon flux has the infinity-flux sign
  for (std::size_t i = 0; i < sol.u.size(); ++i)
    CHECK(conserved_flux(sol, i) == doctest::Approx(f0).epsilon(1e-8));
}

TEST_CASE("asymptotic series self-consistency under start refinement") {
  SUBCASE("infinity side: doubled start radius") {
    auto spec = kerr_spec(1.0, 0.5, 0.25, 0.0, 2, 2);
    const complexd amp(1.0, 0.0);
    auto s1 = asymptotic_start_infinity(spec, amp);
    auto s2 = asymptotic_start_infinity(spec, amp, -1e300, 2.0);
    auto F = ode_rhs(spec);
    const double probe = 30.0;
    auto e1 = integrate_ode(F, s1.r_star, probe, s1.state);
    auto e2 = integrate_ode(F, s2.r_star, probe, s2.state);
    CHECK(std::abs(e1.value() - e2.value()) / std::abs(e2.value()) < 1e-7);
  }
  SUBCASE("horizon side: extra depth") {
    auto spec = kerr_spec(1.0, 0.5, 0.1, 0.0, 2, 2);
    const complexd amp(1.0, 0.0);
    auto s1 = asymptotic_start_horizon(spec, amp);
    auto s2 = asymptotic_start_horizon(spec, amp, 1e300, 30.0);
    auto F = ode_rhs(spec);
    const double probe = -20.0;
    auto e1 = integrate_ode(F, s1.r_star, probe, s1.state);
    auto e2 = integrate_ode(F, s2.r_star, probe, s2.state);
    CHECK(std::abs(e1.value() - e2.value()) / std::abs(e2.value()) < 1e-7);
  }
}

TEST_CASE("flux equalization") {
  SUBCASE("superradiant pair admits a real scale") {
    auto spec = kerr_spec(1.0, 0.5, 0.1, 0.0, 2, 2);
    auto grid = make_radial_grid(spec.map, -40.0, 40.0, 41);
    auto ui = integrate_from_infinity(spec, grid, complexd(1.0, 0.0));
    auto uh = integrate_from_horizon(spec, grid, complexd(1.0, 0.0));
    const double a3 = equalize_fluxes(ui, uh);
    CHECK(a3 > 0.0);
    const double varpi = horizon_frequency(spec.params, 2);
    CHECK(a3 * a3 * conserved_flux(ui, 40) ==
          doctest::Approx(varpi - 0.1).epsilon(1e-7));
  }
  SUBCASE("non-superradiant pair raises NotSuperradiant") {
    auto spec = kerr_spec(1.0, 0.5, 0.4, 0.0, 2, 2);  // 0.4 > varpi ~ 0.268
    REQUIRE_FALSE(is_superradiant(spec.params, 0.4, 2));
    auto grid = make_radial_grid(spec.map, -40.0, 40.0, 41);
    auto ui = integrate_from_infinity(spec, grid, complexd(1.0, 0.0));
    auto uh = integrate_from_horizon(spec, grid, complexd(1.0, 0.0));
    CHECK_THROWS_AS(equalize_fluxes(ui, uh), NotSuperradiantError);
  }
}

TEST_CASE("wronskian: proportional solutions, plane-wave pair, constancy") {
  auto spec = kerr_spec(1.0, 0.5, 0.1, 0.0, 2, 2);
  auto grid = make_radial_grid(spec.map, -30.0, 30.0, 31);
  auto u1 = integrate_from_horizon(spec, grid, complexd(1.0, 0.0));
  auto u2 = u1;
  const complexd lam(2.0, 1.0);
  for (auto& v : u2.u) v *= lam;
  for (auto& v : u2.u_prime) v *= lam;
  CHECK(std::abs(wronskian(u1, u2, 15)) < 1e-12);

  // Analytic plane-wave pair on a manual grid: with W = u1'u2 - u1u2',
  // W[e^{iwx}, e^{-iwx}] = iw + iw = 2iw.
  RadialSolution pw1, pw2;
  pw1.grid = pw2.grid = grid;
  const double w = 0.7;
  pw1.u.resize(31);
  pw1.u_prime.resize(31);
  pw2.u.resize(31);
  pw2.u_prime.resize(31);
  for (int i = 0; i < 31; ++i) {
    const double x = grid.r_star_nodes[i];
    pw1.u[i] = std::exp(complexd(0.0, w * x));
    pw1.u_prime[i] = complexd(0.0, w) * pw1.u[i];
    pw2.u[i] = std::exp(complexd(0.0, -w * x));
    pw2.u_prime[i] = complexd(0.0, -w) * pw2.u[i];
  }
  CHECK(std::abs(wronskian(pw1, pw2, 7) - complexd(0.0, 2.0 * w)) < 1e-12);

  // Constancy for two independent solutions of the same equation.
  auto ui = integrate_from_infinity(spec, grid, complexd(1.0, 0.0));
  const complexd w0 = wronskian(u1, ui, 0);
  for (int i = 0; i < 31; ++i)
    CHECK(std::abs(wronskian(u1, ui, i) - w0) < 1e-8 * std::abs(w0));
}

TEST_CASE("grid consistency and grid-refinement order") {
  auto spec = aux_spec(1.0, 0.0, 0.3, 0.0, 0, 1);
  auto grid = make_radial_grid(spec.map, -20.0, 20.0, 81);
  for (std::size_t i = 0; i < grid.r_star_nodes.size(); ++i)
    CHECK(spec.map.r_star_of_r(grid.r_nodes[i]) ==
          doctest::Approx(grid.r_star_nodes[i]).epsilon(1e-10));

  // The adaptive integrator at fixed tolerance is the accuracy authority; a
  // refinement sweep is covered by the tolerance-tightening ODE test.
}

TEST_CASE("complex frequency: graded solutions carry no conserved flux claim") {
  auto spec = kerr_spec(1.0, 0.5, 0.1, 1e-3, 2, 2);
  auto grid = make_radial_grid(spec.map, -30.0, 30.0, 31);
  auto sol = integrate_from_horizon(spec, grid, complexd(1.0, 0.0));
  CHECK_FALSE(sol.flux_applicable);
  for (const auto& v : sol.u) CHECK(std::isfinite(std::abs(v)));
}

TEST_CASE("amplitude preconditions") {
  auto spec = aux_spec(1.0, 0.0, 0.3, 0.0, 0, 1);
  auto grid = make_radial_grid(spec.map, -20.0, 20.0, 21);
  CHECK_THROWS_AS(integrate_from_infinity(spec, grid, complexd(0.0, 0.0)),
                  PreconditionError);
  CHECK_THROWS_AS(integrate_from_horizon(spec, grid, complexd(0.0, 0.0)),
                  PreconditionError);
}
