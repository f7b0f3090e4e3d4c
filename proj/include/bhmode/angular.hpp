/**
 * @brief Angular Sturm-Liouville problem: separation constant lambda and
 *        eigenfunction samples.  Spheroidal (oblateness parameter c = a*omega)
 *        for the Kerr family, spherical (lambda = l(l+1)) for the auxiliary
 *        and deformed families.
 *
 * Operator (theta on (0, pi), bounded-at-poles boundary condition):
 *   -(sin t)^{-1} d/dt( sin t dS/dt ) + ( m^2/sin^2 t - c^2 cos^2 t ) S = lambda S.
 * Discretized in the normalized associated-Legendre basis, where cos^2(theta)
 * couples l to l and l +/- 2 only, giving a real symmetric matrix.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include <bhmode/errors.hpp>

namespace bhmode {

using complexd = std::complex<double>;

/// Mode labels (omega_R + i omega_I, m, l).
struct FrequencyTriad {
  double omega_R = 0.0;
  double omega_I = 0.0;  ///< growth rate, >= 0
  int m = 0;
  int l = 0;

  complexd omega() const { return {omega_R, omega_I}; }

  void validate() const {
    if (l < std::abs(m)) throw PreconditionError("FrequencyTriad: requires l >= |m|");
    if (omega_I < 0.0) throw PreconditionError("FrequencyTriad: omega_I must be >= 0");
    if (omega_I > 0.1 * std::max(1.0, std::abs(omega_R)))
      throw PreconditionError(
          "FrequencyTriad: omega_I exceeds the perturbative bound 0.1*max(1,|omega_R|)");
  }
};

/// Separation constant + eigenfunction samples on a Gauss-Legendre theta grid.
struct AngularEigen {
  complexd lambda{0.0, 0.0};
  std::vector<double> theta_nodes;   ///< theta_i (from Gauss-Legendre in cos t)
  std::vector<double> quad_weights;  ///< weights for integration in d(cos t)
  std::vector<double> S_samples;     ///< real eigenfunction values, L2(sin t dt)-normalized
  double norm = 1.0;                 ///< measured L2 norm after normalization (== 1)
  double cos2_expectation = 0.0;     ///< <S| cos^2 theta |S>, reused for d lambda/d omega
  int m = 0;
  int l = 0;
};

namespace detail {

/// Coupling coefficient: cos(t) Ytilde_{l,m} = a_{l,m} Ytilde_{l+1,m} + a_{l-1,m} Ytilde_{l-1,m}.
inline double cos_coupling(int l, int m) {
  if (l < std::abs(m)) return 0.0;
  const double num = double(l - m + 1) * double(l + m + 1);
  const double den = double(2 * l + 1) * double(2 * l + 3);
  return std::sqrt(num / den);
}

/// Gauss-Legendre nodes/weights on [-1, 1] (Newton on Legendre polynomials).
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

/// Normalized associated Legendre values Ytilde_{l,m}(x) for l = |m|..lmax at one x,
/// with int_{-1}^{1} Ytilde^2 dx = 1; stable upward recurrence.
inline void normalized_assoc_legendre(int mm, int lmax, double x, std::vector<double>& out) {
  const int am = std::abs(mm);
  out.assign(lmax - am + 1, 0.0);
  // Sectoral seed: c_am^2 = (2am+1)! / (2^{2am+1} (am!)^2), computed in logs.
  double logc2 = -std::log(2.0) * (2.0 * am + 1.0);
  for (int k = 1; k <= 2 * am + 1; ++k) logc2 += std::log(double(k));
  for (int k = 1; k <= am; ++k) logc2 -= 2.0 * std::log(double(k));
  const double s2 = 1.0 - x * x;
  double seed = std::exp(0.5 * (logc2 + am * std::log(std::max(s2, 1e-300))));
  out[0] = seed;
  if (lmax == am) return;
  out[1] = std::sqrt(2.0 * am + 3.0) * x * seed;
  for (int l = am + 1; l < lmax; ++l) {
    const double alm = cos_coupling(l, am);
    const double alm1 = cos_coupling(l - 1, am);
    out[l + 1 - am] = (x * out[l - am] - alm1 * out[l - 1 - am]) / alm;
  }
}

/// Eigen-decomposition of the truncated operator at real c2 = Re(c^2);
/// returns ascending eigenvalues and vectors in the l = |m|.. basis.
inline void angular_matrix_eigen(double c2, int mm, int nbasis,
                                 Eigen::VectorXd& evals, Eigen::MatrixXd& evecs) {
  const int am = std::abs(mm);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nbasis, nbasis);
  for (int i = 0; i < nbasis; ++i) {
    const int l = am + i;
    const double al = cos_coupling(l, am);
    const double alm1 = cos_coupling(l - 1, am);
    H(i, i) = double(l) * double(l + 1) - c2 * (al * al + alm1 * alm1);
    if (i + 2 < nbasis) {
      const double alp1 = cos_coupling(l + 1, am);
      H(i, i + 2) = H(i + 2, i) = -c2 * al * alp1;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H);
  evals = solver.eigenvalues();
  evecs = solver.eigenvectors();
}

}  // namespace detail

/**
 * l-th eigenpair of the angular operator at oblateness parameter c (counting
 * from l = |m| at c = 0, continued continuously in c).  Complex c is handled
 * by first-order perturbation in Im(c^2) about the real part:
 *   lambda(c^2) ~ lambda(Re c^2) - i Im(c^2) <S|cos^2|S>.
 * Throws on eigenvalue-branch degeneracy (gap < 1e-8) or non-convergence of
 * the basis truncation (target 1e-12 change under doubling).
 */
inline AngularEigen spheroidal_eigen(complexd c, int m, int l) {
  if (l < std::abs(m)) throw PreconditionError("spheroidal_eigen: requires l >= |m|");
  if (std::abs(c.imag()) > 0.1 * std::max(1.0, std::abs(c.real())) + 1e-15)
    throw PreconditionError("spheroidal_eigen: |Im c| outside the perturbative bound");

  const double c2_target = std::norm(c) > 0.0 ? (c * c).real() : 0.0;
  const double c2_imag = (c * c).imag();
  const int am = std::abs(m);
  const int kindex = l - am;

  // Truncation loop: start at l + 40 basis functions, double to convergence.
  int nbasis = l - am + 41;
  double lam_prev = 0.0;
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  int pick = kindex;
  for (int round = 0;; ++round) {
    // Branch tracking: continue from c^2 = 0 in steps of at most 0.05 in |c|,
    // keeping the nearest eigenvalue (guards against branch swaps).
    const int nsteps = std::max(1, int(std::ceil(std::sqrt(std::abs(c2_target)) / 0.05)));
    double lam_track = double(l) * double(l + 1);
    for (int s = 1; s <= nsteps; ++s) {
      const double c2s = c2_target * double(s) / double(nsteps);
      detail::angular_matrix_eigen(c2s, m, nbasis, evals, evecs);
      int best = 0;
      double bestd = std::abs(evals(0) - lam_track);
      for (int i = 1; i < evals.size(); ++i) {
        const double d = std::abs(evals(i) - lam_track);
        if (d < bestd) { bestd = d; best = i; }
      }
      pick = best;
      lam_track = evals(pick);
    }
    if (nsteps == 1 && c2_target == 0.0) {
      detail::angular_matrix_eigen(0.0, m, nbasis, evals, evecs);
      pick = kindex;
    }
    const double lam = evals(pick);
    if (round > 0 && std::abs(lam - lam_prev) < 1e-12 * std::max(1.0, std::abs(lam))) break;
    if (round >= 6)
      throw ToleranceError("spheroidal_eigen: basis truncation did not converge; residual " +
                           std::to_string(std::abs(lam - lam_prev)));
    lam_prev = lam;
    nbasis *= 2;
  }

  // Degeneracy guard at the requested c.
  for (int i = 0; i < evals.size(); ++i) {
    if (i != pick && std::abs(evals(i) - evals(pick)) < 1e-8)
      throw PreconditionError("spheroidal_eigen: eigenvalue branch degeneracy at requested c");
  }

  AngularEigen out;
  out.m = m;
  out.l = l;
  const Eigen::VectorXd v = evecs.col(pick);

  // <S|cos^2|S> from the tridiagonal-in-steps-of-2 coupling matrix.
  double mu = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const int li = am + i;
    const double al = detail::cos_coupling(li, am);
    const double alm1 = detail::cos_coupling(li - 1, am);
    mu += v(i) * v(i) * (al * al + alm1 * alm1);
    if (i + 2 < v.size()) {
      const double alp1 = detail::cos_coupling(li + 1, am);
      mu += 2.0 * v(i) * v(i + 2) * al * alp1;
    }
  }
  out.cos2_expectation = mu;
  out.lambda = complexd(evals(pick), -c2_imag * mu);

  // Eigenfunction samples on a Gauss-Legendre grid in x = cos(theta).
  const int nq = std::max(64, 2 * int(v.size()));
  std::vector<double> x, w;
  detail::gauss_legendre(nq, x, w);
  out.theta_nodes.resize(nq);
  out.quad_weights = w;
  out.S_samples.resize(nq);
  std::vector<double> basis;
  double nrm2 = 0.0;
  for (int i = 0; i < nq; ++i) {
    out.theta_nodes[i] = std::acos(x[i]);
    detail::normalized_assoc_legendre(m, am + int(v.size()) - 1, x[i], basis);
    double s = 0.0;
    for (int j = 0; j < v.size(); ++j) s += v(j) * basis[j];
    out.S_samples[i] = s;
    nrm2 += w[i] * s * s;
  }
  const double nrm = std::sqrt(nrm2);
  for (auto& s : out.S_samples) s /= nrm;
  out.norm = 1.0;
  return out;
}

/// Spherical case: lambda = l(l+1) exactly, Legendre eigenfunction samples.
inline AngularEigen spherical_eigen(int m, int l) {
  return spheroidal_eigen(complexd(0.0, 0.0), m, l);
}

}  // namespace bhmode
