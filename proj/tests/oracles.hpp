#pragma once
// Reference results computed through independent routes (quadratic formula,
// cofactor expansion, eigendecomposition) so library answers are checked
// against something other than themselves.

#include <Eigen/Eigenvalues>
#include <complex>
#include <utility>

namespace oracle {

using cd = std::complex<double>;

/// Roots of s^2 - tr s + det, smaller real part first.
inline std::pair<cd, cd> quadratic_eigs(const Eigen::Matrix2d& m) {
  const cd tr(m.trace(), 0.0);
  const cd root = std::sqrt(tr * tr - 4.0 * cd(m.determinant(), 0.0));
  cd lo = 0.5 * (tr - root), hi = 0.5 * (tr + root);
  if (lo.real() > hi.real()) std::swap(lo, hi);
  return {lo, hi};
}

/// Cofactor expansion along the first row.
inline cd det3(const Eigen::Matrix3cd& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

/// e^{a t} via eigendecomposition (a must be diagonalizable).
inline Eigen::Matrix2d expm(const Eigen::Matrix2d& a, double t) {
  Eigen::EigenSolver<Eigen::Matrix2d> es(a);
  const Eigen::Matrix2cd v = es.eigenvectors();
  Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
  d(0, 0) = std::exp(es.eigenvalues()(0) * t);
  d(1, 1) = std::exp(es.eigenvalues()(1) * t);
  return (v * d * v.inverse()).real();
}

/// Steady state of dx/dt = A x + E u under u = amp sin(w t): per-state
/// amplitude and phase from the transfer gain (jwI - A)^{-1} E.
struct SinusoidSteadyState {
  Eigen::Vector2cd gain;
  double at(int i, double amp, double w, double t) const {
    return amp * std::abs(gain(i)) * std::sin(w * t + std::arg(gain(i)));
  }
};

inline SinusoidSteadyState sinusoid_steady_state(const Eigen::Matrix2d& a,
                                                 const Eigen::Vector2d& e, double w) {
  const Eigen::Matrix2cd m =
      cd(0.0, w) * Eigen::Matrix2cd::Identity() - a.cast<cd>();
  SinusoidSteadyState r;
  r.gain = m.lu().solve(e.cast<cd>());
  return r;
}

}  // namespace oracle
