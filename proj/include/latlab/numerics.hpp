#pragma once
// Small dense linear-algebra helpers and a fixed-step RK4 integrator.
// Everything here is deterministic: no threading, no hidden state, no RNG.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace latlab {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

inline constexpr double kDefaultRankTol = 1e-9;

/// Uniform time grid: n_steps integration steps of width dt starting at t0.
/// A trace over the grid holds n_steps + 1 samples (both endpoints included).
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1e-3;
  std::size_t n_steps = 1;

  TimeGrid() = default;
  TimeGrid(double t0_, double dt_, std::size_t n_steps_) : t0(t0_), dt(dt_), n_steps(n_steps_) {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be > 0");
    if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
  }

  double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  double duration() const { return static_cast<double>(n_steps) * dt; }
  std::size_t samples() const { return n_steps + 1; }
};

struct NonFiniteError : std::runtime_error {
  std::size_t step;
  explicit NonFiniteError(std::size_t step_)
      : std::runtime_error("integration produced a non-finite state at step " +
                           std::to_string(step_)),
        step(step_) {}
};

/// Both roots of lambda^2 - tr(m) lambda + det(m), by the quadratic formula.
/// Ordered by ascending real part; ties break by descending imaginary part,
/// so a conjugate pair comes back as (a + bi, a - bi) with b >= 0.
std::pair<cplx, cplx> eig2x2(const Mat2& m);

/// Numerical rank by row reduction with partial pivoting. A pivot is accepted
/// iff |pivot| > tol * (largest entry magnitude of the input); the tolerance
/// is relative, so rank is invariant under global nonzero scaling. The zero
/// matrix has rank 0 for every tol.
int rank_with_tol(const CMat& m, double tol = kDefaultRankTol);

/// Unit-norm right null vector when m is column-rank deficient at tol,
/// otherwise empty. A returned v satisfies |m v|_inf <= 10 * tol * |m|_inf.
std::optional<CVec> null_direction(const CMat& m, double tol = kDefaultRankTol);

// Expression-friendly wrappers: accept any dense Eigen expression, real or
// complex scalar, without forcing a named temporary at the call site.
template <typename Derived>
int rank_with_tol(const Eigen::MatrixBase<Derived>& m, double tol = kDefaultRankTol) {
  return rank_with_tol(CMat(m.template cast<cplx>()), tol);
}

template <typename Derived>
std::optional<CVec> null_direction(const Eigen::MatrixBase<Derived>& m,
                                   double tol = kDefaultRankTol) {
  return null_direction(CMat(m.template cast<cplx>()), tol);
}

namespace detail {
inline bool state_is_finite(double x) { return std::isfinite(x); }
template <typename Derived>
bool state_is_finite(const Eigen::MatrixBase<Derived>& x) {
  return x.allFinite();
}
}  // namespace detail

/// One classical RK4 step of dx/dt = deriv(t, x). The callback is responsible
/// for sampling its own inputs at the substep times t, t + dt/2, t + dt.
template <typename State, typename Deriv>
State rk4_step(Deriv&& deriv, double t, const State& x, double dt) {
  const State k1 = deriv(t, x);
  const State k2 = deriv(t + 0.5 * dt, State(x + 0.5 * dt * k1));
  const State k3 = deriv(t + 0.5 * dt, State(x + 0.5 * dt * k2));
  const State k4 = deriv(t + dt, State(x + dt * k3));
  return State(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

/// Fixed-step RK4 over a grid. deriv(t, x, u); inputs(t) is sampled
/// zero-order-hold at the substep times. Returns n_steps + 1 states starting
/// with x0. Throws NonFiniteError carrying the offending step index.
template <typename State, typename Deriv, typename Inputs>
std::vector<State> integrate_rk4(Deriv&& deriv, const State& x0, Inputs&& inputs,
                                 const TimeGrid& grid) {
  std::vector<State> out;
  out.reserve(grid.samples());
  out.push_back(x0);
  State x = x0;
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    auto f = [&](double tau, const State& s) { return deriv(tau, s, inputs(tau)); };
    x = rk4_step(f, grid.time_at(i), x, grid.dt);
    if (!detail::state_is_finite(x)) throw NonFiniteError(i);
    out.push_back(x);
  }
  return out;
}

}  // namespace latlab
