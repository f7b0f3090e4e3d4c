#include <doctest.h>

#include <cmath>
#include <complex>

#include <bhmode/ode.hpp>

using namespace bhmode;

TEST_CASE("free oscillator: u'' = -u reproduces e^{ix}") {
  auto F = [](double) { return complexd(-1.0, 0.0); };
  OdeState init{complexd(1.0, 0.0), complexd(0.0, 1.0), 0.0};
  const double L = 50.0;
  const auto end = integrate_ode(F, 0.0, L, init);
  CHECK(std::abs(end.value() - std::exp(complexd(0.0, L))) < 1e-8);
  CHECK(std::abs(end.deriv() - complexd(0.0, 1.0) * std::exp(complexd(0.0, L))) < 1e-8);
}

TEST_CASE("backward integration and sample landing") {
  auto F = [](double) { return complexd(-4.0, 0.0); };  // omega = 2
  OdeState init{complexd(1.0, 0.0), complexd(0.0, 2.0), 0.0};
  std::vector<double> samples{10.0, 7.5, 3.1, 0.0};
  std::vector<double> got_x;
  std::vector<complexd> got_u;
  integrate_ode(F, 10.0, 0.0, init, {}, samples,
                [&](double x, const OdeState& s) {
                  got_x.push_back(x);
                  got_u.push_back(s.value());
                });
  REQUIRE(got_x.size() == 4);
  for (std::size_t i = 0; i < got_x.size(); ++i) {
    CHECK(got_x[i] == samples[i]);  // exact landing
    const complexd expect = std::exp(complexd(0.0, 2.0 * (got_x[i] - 10.0)));
    CHECK(std::abs(got_u[i] - expect) < 1e-8);
  }
}

TEST_CASE("exponential growth with renormalization: u'' = u over a long range") {
  auto F = [](double) { return complexd(1.0, 0.0); };
  OdeState init{complexd(1.0, 0.0), complexd(1.0, 0.0), 0.0};  // pure e^{x}
  const double L = 800.0;  // e^{800} overflows without the envelope scaling
  const auto end = integrate_ode(F, 0.0, L, init);
  const double log_u = std::log(std::abs(end.u)) + end.log_scale;
  CHECK(log_u == doctest::Approx(L).epsilon(1e-9));
  CHECK(std::abs(end.up / end.u - 1.0) < 1e-8);
  CHECK_THROWS_AS((void)end.value(), IntegrationError);  // e^{800} exceeds the double range
}

TEST_CASE("airy-type variable coefficient checked against a fine reference") {
  auto F = [](double x) { return complexd(x, 0.0); };  // u'' = x u (Airy)
  OdeState init{complexd(1.0, 0.0), complexd(0.0, 0.0), 0.0};
  OdeOptions loose;
  const auto a = integrate_ode(F, 0.0, -6.0, init, loose);
  OdeOptions tight;
  tight.abs_tol = tight.rel_tol = 1e-13;
  const auto b = integrate_ode(F, 0.0, -6.0, init, tight);
  CHECK(std::abs(a.value() - b.value()) < 1e-8);
}

TEST_CASE("fourth-order convergence under tolerance tightening") {
  // Not a strict order fit, but the error must drop by ~1e3 when tolerances
  // drop by 1e4 (order >= 3.5 behaviour of the embedded pair).
  auto F = [](double x) { return complexd(-1.0 - 0.3 * std::sin(x), 0.0); };
  OdeState init{complexd(1.0, 0.0), complexd(0.0, 1.0), 0.0};
  OdeOptions t1, t2, t3;
  t1.abs_tol = t1.rel_tol = 1e-6;
  t2.abs_tol = t2.rel_tol = 1e-10;
  t3.abs_tol = t3.rel_tol = 1e-14;
  const auto r1 = integrate_ode(F, 0.0, 30.0, init, t1);
  const auto r2 = integrate_ode(F, 0.0, 30.0, init, t2);
  const auto r3 = integrate_ode(F, 0.0, 30.0, init, t3);
  const double e1 = std::abs(r1.value() - r3.value());
  const double e2 = std::abs(r2.value() - r3.value());
  CHECK(e2 < 1e-2 * e1 + 1e-14);
}

TEST_CASE("sample at the start point is emitted with the initial state") {
  auto F = [](double) { return complexd(-1.0, 0.0); };
  OdeState init{complexd(2.0, 0.0), complexd(0.0, 2.0), 0.0};
  bool seen = false;
  integrate_ode(F, 5.0, 0.0, init, {}, {5.0, 2.0},
                [&](double x, const OdeState& s) {
                  if (x == 5.0) {
                    seen = true;
                    CHECK(std::abs(s.value() - complexd(2.0, 0.0)) == 0.0);
                  }
                });
  CHECK(seen);
}
