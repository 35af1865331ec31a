#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hydrolimit/error.hpp"
#include "hydrolimit/fourier.hpp"

namespace hydrolimit {

/// Densities at the cell centers (j + 1/2)/M of a uniform periodic grid.
/// Rows are species; the Burgers equation uses a single row.
template <typename Scalar>
struct GridState {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix density;
  Scalar time = Scalar(0);

  [[nodiscard]] Eigen::Index cells() const noexcept { return density.cols(); }
  [[nodiscard]] Eigen::Index species() const noexcept { return density.rows(); }
  [[nodiscard]] Scalar dx() const noexcept { return Scalar(1) / static_cast<Scalar>(cells()); }
  [[nodiscard]] Scalar center(Eigen::Index j) const noexcept {
    return (static_cast<Scalar>(j) + Scalar(0.5)) * dx();
  }
  /// Per-species integral sum_j rho_k(j) dx.
  [[nodiscard]] Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mass() const {
    return density.rowwise().sum() * dx();
  }
};

template <typename Scalar>
struct PdeParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Scalar lambda = Scalar(1);
  Scalar mu = Scalar(0);  // Burgers drift
  Matrix alpha;           // n-species couplings, antisymmetric
  int drift_sign = +1;
};

enum class PdeModel { burgers, nspecies };

using GridStated = GridState<double>;
using PdeParamsd = PdeParams<double>;

namespace detail {

template <typename Scalar>
constexpr Scalar kRangeSlack = Scalar(1e-8);

/// Row-wise periodic shift: out(:, j) = in(:, j + offset mod M).
template <typename Derived>
auto roll(const Eigen::MatrixBase<Derived>& in, Eigen::Index offset) {
  using Plain = typename Derived::PlainObject;
  const Eigen::Index m = in.cols();
  Plain out(in.rows(), m);
  const Eigen::Index s = ((offset % m) + m) % m;
  out.leftCols(m - s) = in.rightCols(m - s);
  if (s > 0) out.rightCols(s) = in.leftCols(s);
  return out;
}

template <typename Scalar>
void check_range(const typename GridState<Scalar>::Matrix& rho) {
  const Scalar lo = rho.minCoeff();
  const Scalar hi = rho.maxCoeff();
  if (lo < -kRangeSlack<Scalar> || hi > Scalar(1) + kRangeSlack<Scalar> || !std::isfinite(lo) ||
      !std::isfinite(hi)) {
    throw Error(Errc::OutOfRange, "density left [0,1]: min " + std::to_string(double(lo)) +
                                      ", max " + std::to_string(double(hi)));
  }
}

template <typename Scalar>
void check_dt(Scalar dt, Scalar bound) {
  if (!(dt > Scalar(0))) throw Error(Errc::InvalidArgument, "time step must be positive");
  if (dt > bound * (Scalar(1) + Scalar(1e-12))) {
    throw Error(Errc::CflViolation, "dt = " + std::to_string(double(dt)) +
                                        " exceeds the stability bound " +
                                        std::to_string(double(bound)));
  }
}

}  // namespace detail

/// dx^2 / (2 lambda + |mu| dx)
template <typename Scalar>
Scalar burgers_cfl_bound(Scalar dx, const PdeParams<Scalar>& p) {
  return dx * dx / (Scalar(2) * p.lambda + std::abs(p.mu) * dx);
}

/// dx^2 / (2 lambda + lambda max|alpha| dx)
template <typename Scalar>
Scalar nspecies_cfl_bound(Scalar dx, const PdeParams<Scalar>& p) {
  const Scalar a = p.alpha.size() > 0 ? p.alpha.cwiseAbs().maxCoeff() : Scalar(0);
  return dx * dx / (Scalar(2) * p.lambda + p.lambda * a * dx);
}

template <typename Scalar>
Scalar cfl_bound(PdeModel model, Scalar dx, const PdeParams<Scalar>& p) {
  return model == PdeModel::burgers ? burgers_cfl_bound(dx, p) : nspecies_cfl_bound(dx, p);
}

/// One explicit step of d_t rho = lambda rho_xx + sign mu d_x(rho - rho^2):
/// centered second difference plus centered difference of the flux mu (rho - rho^2).
template <typename Scalar>
GridState<Scalar> step_burgers(const GridState<Scalar>& state, const PdeParams<Scalar>& p,
                               Scalar dt) {
  if (state.species() != 1) {
    throw Error(Errc::InvalidArgument, "Burgers state holds a single density row");
  }
  const Scalar dx = state.dx();
  detail::check_dt(dt, burgers_cfl_bound(dx, p));
  const auto& rho = state.density;
  const auto right = detail::roll(rho, 1);
  const auto left = detail::roll(rho, -1);
  const auto flux = [&](const auto& r) { return (r.array() - r.array().square()).matrix().eval(); };
  const Scalar drift = static_cast<Scalar>(p.drift_sign) * p.mu;

  GridState<Scalar> next{rho, state.time + dt};
  next.density.array() +=
      dt * (p.lambda * (right - Scalar(2) * rho + left).array() / (dx * dx) +
            drift * (flux(right) - flux(left)).array() / (Scalar(2) * dx));
  detail::check_range<Scalar>(next.density);
  return next;
}

/// One explicit step of
///   d_t rho_k = lambda [ rho_k'' + sign d_x( sum_{l != k} alpha(l,k) rho_k rho_l ) ].
template <typename Scalar>
GridState<Scalar> step_nspecies(const GridState<Scalar>& state, const PdeParams<Scalar>& p,
                                Scalar dt) {
  const Eigen::Index n = state.species();
  if (p.alpha.rows() != n || p.alpha.cols() != n) {
    throw Error(Errc::InvalidArgument, "alpha must be n x n for n = " + std::to_string(n));
  }
  const Scalar dx = state.dx();
  detail::check_dt(dt, nspecies_cfl_bound(dx, p));
  const auto& rho = state.density;

  // G_k = rho_k sum_{l != k} alpha(l,k) rho_l; alpha^T rho sums over l, remove the l == k term
  typename GridState<Scalar>::Matrix coupling = p.alpha.transpose() * rho;
  coupling -= (p.alpha.diagonal().asDiagonal() * rho);
  coupling = (coupling.array() * rho.array()).matrix();

  const auto right = detail::roll(rho, 1);
  const auto left = detail::roll(rho, -1);
  const auto g_right = detail::roll(coupling, 1);
  const auto g_left = detail::roll(coupling, -1);
  const Scalar sign = static_cast<Scalar>(p.drift_sign);

  GridState<Scalar> next{rho, state.time + dt};
  next.density.array() +=
      dt * p.lambda *
      ((right - Scalar(2) * rho + left).array() / (dx * dx) +
       sign * (g_right - g_left).array() / (Scalar(2) * dx));
  detail::check_range<Scalar>(next.density);
  return next;
}

template <typename Scalar>
struct PdeTrajectory {
  std::vector<Scalar> times;
  std::vector<GridState<Scalar>> states;
  Scalar dt = Scalar(0);
  std::size_t steps = 0;
};

/// Marches to each checkpoint with dt = cfl_fraction * bound, shortening the last step
/// before a checkpoint so states land exactly on it.
template <typename Scalar>
PdeTrajectory<Scalar> solve(const GridState<Scalar>& initial, const PdeParams<Scalar>& p,
                            PdeModel model, Scalar horizon, std::span<const Scalar> checkpoints,
                            Scalar cfl_fraction = Scalar(0.4)) {
  if (!(horizon >= Scalar(0))) throw Error(Errc::InvalidArgument, "horizon must be nonnegative");
  if (!(cfl_fraction > Scalar(0) && cfl_fraction <= Scalar(1))) {
    throw Error(Errc::InvalidArgument, "cfl fraction must lie in (0, 1]");
  }
  for (std::size_t j = 0; j < checkpoints.size(); ++j) {
    if (checkpoints[j] < Scalar(0) || checkpoints[j] > horizon ||
        (j > 0 && checkpoints[j] < checkpoints[j - 1])) {
      throw Error(Errc::InvalidArgument, "checkpoints must be sorted inside [0, T]");
    }
  }
  if (!(p.lambda > Scalar(0))) throw Error(Errc::InvalidArgument, "lambda must be positive");
  if (p.drift_sign != 1 && p.drift_sign != -1) {
    throw Error(Errc::InvalidArgument, "drift sign must be +1 or -1");
  }

  PdeTrajectory<Scalar> out;
  out.dt = cfl_fraction * cfl_bound(model, initial.dx(), p);
  GridState<Scalar> state = initial;
  state.time = Scalar(0);
  Scalar t = Scalar(0);
  for (const Scalar target : checkpoints) {
    while (t < target) {
      const Scalar remaining = target - t;
      // avoid a sliver step right before the checkpoint
      const Scalar dt = remaining <= out.dt * Scalar(1.000001) ? remaining : out.dt;
      state = model == PdeModel::burgers ? step_burgers(state, p, dt) : step_nspecies(state, p, dt);
      t = (dt == remaining) ? target : t + dt;
      state.time = t;
      ++out.steps;
    }
    out.times.push_back(target);
    out.states.push_back(state);
  }
  return out;
}

/// rho(x, t) for d_t rho = lambda rho_xx from rho_0 = `initial`, at cell centers.
template <typename Scalar = double>
GridState<Scalar> analytic_heat_solution(const FourierSeries& initial, Scalar lambda, Scalar t,
                                         Eigen::Index cells) {
  FourierSeries decayed = initial;
  const Scalar four_pi2 = Scalar(4) * std::numbers::pi_v<Scalar> * std::numbers::pi_v<Scalar>;
  for (std::size_t m = 1; m <= decayed.modes(); ++m) {
    const Scalar factor =
        std::exp(-four_pi2 * static_cast<Scalar>(m * m) * lambda * t);
    if (m <= decayed.cos_coeffs.size()) decayed.cos_coeffs[m - 1] *= factor;
    if (m <= decayed.sin_coeffs.size()) decayed.sin_coeffs[m - 1] *= factor;
  }
  GridState<Scalar> state{GridState<Scalar>::Matrix::Zero(1, cells), t};
  for (Eigen::Index j = 0; j < cells; ++j) state.density(0, j) = decayed(state.center(j));
  return state;
}

/// Samples each profile at the cell centers.
template <typename Scalar = double>
GridState<Scalar> sample_grid(std::span<const FourierSeries> profiles, Eigen::Index cells) {
  GridState<Scalar> state{
      GridState<Scalar>::Matrix::Zero(static_cast<Eigen::Index>(profiles.size()), cells),
      Scalar(0)};
  for (Eigen::Index k = 0; k < state.species(); ++k) {
    for (Eigen::Index j = 0; j < cells; ++j) {
      state.density(k, j) = profiles[static_cast<std::size_t>(k)](state.center(j));
    }
  }
  return state;
}

/// Averages cells onto `bins` equal bins (bins must divide the cell count).
template <typename Scalar>
typename GridState<Scalar>::Matrix bin_average(const GridState<Scalar>& state, Eigen::Index bins) {
  if (bins <= 0 || state.cells() % bins != 0) {
    throw Error(Errc::BinMismatch, std::to_string(bins) + " bins do not divide " +
                                       std::to_string(state.cells()) + " cells");
  }
  const Eigen::Index per = state.cells() / bins;
  typename GridState<Scalar>::Matrix out(state.species(), bins);
  for (Eigen::Index b = 0; b < bins; ++b) {
    out.col(b) = state.density.middleCols(b * per, per).rowwise().mean();
  }
  return out;
}

}  // namespace hydrolimit
