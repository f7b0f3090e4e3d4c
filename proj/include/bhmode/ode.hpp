/**
 * @brief Adaptive integration of the scalar second-order complex ODE
 *        u'' = F(x) u  (F complex, piecewise smooth) by an embedded
 *        Dormand-Prince 5(4) pair with PI step control.
 *
 * The state envelope is renormalized between steps (accumulating a log-scale
 * factor) so exponentially graded solutions never overflow; sampled values are
 * rescaled back on output and guarded against overflow at 1e280.
 */
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include <bhmode/errors.hpp>

namespace bhmode {

using complexd = std::complex<double>;

struct OdeOptions {
  double abs_tol = 1e-11;
  double rel_tol = 1e-11;
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0.0;  ///< 0 = automatic
};

/// Endpoint state of an integration: (u, u') times exp(log_scale).
struct OdeState {
  complexd u{0.0, 0.0};
  complexd up{0.0, 0.0};
  double log_scale = 0.0;

  complexd value() const { return apply(u); }
  complexd deriv() const { return apply(up); }

 private:
  complexd apply(complexd z) const {
    if (log_scale > 640.0)
      throw IntegrationError("OdeState: sampled value overflows the double range");
    return z * std::exp(log_scale);
  }
};

namespace detail {

struct Dp5Step {
  std::array<complexd, 2> y;
  double err;
};

/// One Dormand-Prince 5(4) step from x with size h; rhs is y0' = y1, y1' = F(x) y0.
inline Dp5Step dp5_step(const std::function<complexd(double)>& F, double x, double h,
                        const std::array<complexd, 2>& y, double atol, double rtol) {
  auto rhs = [&F](double xx, const std::array<complexd, 2>& yy) {
    return std::array<complexd, 2>{yy[1], F(xx) * yy[0]};
  };
  static const double c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static const double a2[] = {1.0 / 5};
  static const double a3[] = {3.0 / 40, 9.0 / 40};
  static const double a4[] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
  static const double a5[] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729};
  static const double a6[] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                              -5103.0 / 18656};
  static const double b5[] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784,
                              11.0 / 84, 0.0};
  static const double b4[] = {5179.0 / 57600, 0.0, 7571.0 / 16695, 393.0 / 640,
                              -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

  std::array<std::array<complexd, 2>, 7> k;
  k[0] = rhs(x, y);
  auto stage = [&](const double* a, int n, double cc) {
    std::array<complexd, 2> yy = y;
    for (int j = 0; j < n; ++j)
      for (int d = 0; d < 2; ++d) yy[d] += h * a[j] * k[j][d];
    return rhs(x + cc * h, yy);
  };
  k[1] = stage(a2, 1, c[1]);
  k[2] = stage(a3, 2, c[2]);
  k[3] = stage(a4, 3, c[3]);
  k[4] = stage(a5, 4, c[4]);
  k[5] = stage(a6, 5, c[5]);
  std::array<complexd, 2> y5 = y;
  for (int j = 0; j < 6; ++j)
    for (int d = 0; d < 2; ++d) y5[d] += h * b5[j] * k[j][d];
  k[6] = rhs(x + h, y5);

  double err = 0.0;
  for (int d = 0; d < 2; ++d) {
    complexd e{0.0, 0.0};
    for (int j = 0; j < 7; ++j) e += h * (b5[j] - b4[j]) * k[j][d];
    const double scale = atol + rtol * std::max(std::abs(y[d]), std::abs(y5[d]));
    err = std::max(err, std::abs(e) / scale);
  }
  return {y5, err};
}

}  // namespace detail

/**
 * Integrate u'' = F(x) u from x0 to x1 (either direction) with initial data
 * (u0, u0') carrying an incoming log-scale.  Optional sample points (must lie
 * between x0 and x1, ordered in the direction of integration) trigger the
 * callback with the state exactly at those abscissas.
 */
inline OdeState integrate_ode(
    const std::function<complexd(double)>& F, double x0, double x1, OdeState init,
    const OdeOptions& opts = {},
    const std::vector<double>& samples = {},
    const std::function<void(double, const OdeState&)>& on_sample = nullptr) {
  const double dir = (x1 >= x0) ? 1.0 : -1.0;
  std::array<complexd, 2> y{init.u, init.up};
  double ls = init.log_scale;
  double x = x0;

  double h = opts.initial_step;
  if (h == 0.0) {
    const double f0 = std::sqrt(std::abs(F(x0))) + 1e-3;
    h = std::min(0.2 / f0, std::abs(x1 - x0));
  }
  h = dir * std::min(std::abs(h), opts.max_step);

  std::size_t next_sample = 0;
  auto emit_samples_at = [&](double xx) {
    while (next_sample < samples.size() &&
           (dir > 0 ? samples[next_sample] <= xx : samples[next_sample] >= xx)) {
      if (on_sample) on_sample(samples[next_sample], OdeState{y[0], y[1], ls});
      ++next_sample;
    }
  };

  emit_samples_at(x0);  // samples at the start point get the initial state
  if (std::abs(x1 - x0) < 1e-300) return {y[0], y[1], ls};

  long steps = 0;
  while (dir * (x1 - x) > 0.0) {
    // Clamp onto the endpoint and onto the next sample point, landing exactly.
    double target = x + h;
    if (dir * (target - x1) >= 0.0) target = x1;
    if (next_sample < samples.size() && dir * (target - samples[next_sample]) > 0.0)
      target = samples[next_sample];
    const double hstep = target - x;

    const auto trial = detail::dp5_step(F, x, hstep, y, opts.abs_tol, opts.rel_tol);
    if (trial.err <= 1.0 || std::abs(hstep) < 1e-13 * std::max(1.0, std::abs(x))) {
      x = target;
      y = trial.y;
      // Envelope renormalization against overflow.
      const double mag = std::max(std::abs(y[0]), std::abs(y[1]));
      if (mag > 1e100 || (mag > 0.0 && mag < 1e-100)) {
        y[0] /= mag;
        y[1] /= mag;
        ls += std::log(mag);
      }
      emit_samples_at(x);
    }
    const double fac = (trial.err > 0.0)
                           ? std::clamp(0.9 * std::pow(trial.err, -0.2), 0.2, 5.0)
                           : 5.0;
    h = dir * std::min(std::abs(hstep) * fac, opts.max_step);
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(x)))
      throw IntegrationError("integrate_ode: step underflow at x = " + std::to_string(x));
    if (++steps > 200'000'000L)
      throw IntegrationError("integrate_ode: step budget exhausted");
  }
  emit_samples_at(x1);
  return {y[0], y[1], ls};
}

}  // namespace bhmode
