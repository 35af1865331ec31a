#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "hydrolimit/dynamics.hpp"
#include "hydrolimit/fourier.hpp"
#include "hydrolimit/lattice.hpp"

namespace hydrolimit {

/// Time factor s(t) of a separable test function phi(x,t) = p(x) s(t).
class TimeFactor {
 public:
  enum class Kind {
    decay,     // (1 - t/T)^2, vanishes at T
    bump,      // t (1 - t/T), s'(0) = 1
    constant,  // 1; not in the vanishing class, used for diagnostics
  };

  TimeFactor(Kind kind, double horizon);
  static TimeFactor decay(double horizon) { return {Kind::decay, horizon}; }

  [[nodiscard]] double value(double t) const noexcept;
  [[nodiscard]] double derivative(double t) const noexcept;
  [[nodiscard]] double sup() const noexcept;
  [[nodiscard]] double horizon() const noexcept { return horizon_; }
  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
  double horizon_;
};

/// One periodic test function per species, phi_k(x,t) = p_k(x) s(t). For two species
/// this is the pair (phi_a, phi_b).
class TestFunctions {
 public:
  TestFunctions(std::vector<FourierSeries> spatial, TimeFactor time);
  static TestFunctions pair(FourierSeries phi_a, FourierSeries phi_b, TimeFactor time);

  [[nodiscard]] std::size_t species_count() const noexcept { return spatial_.size(); }
  [[nodiscard]] const FourierSeries& spatial(std::size_t k) const { return spatial_.at(k); }
  [[nodiscard]] const TimeFactor& time_factor() const noexcept { return time_; }

  [[nodiscard]] double value(std::size_t k, double x, double t) const;
  [[nodiscard]] double dt(std::size_t k, double x, double t) const;
  [[nodiscard]] double dx(std::size_t k, double x, double t, int order = 1) const;
  /// |Phi| bound: sup over species, x and t of |phi_k|.
  [[nodiscard]] double sup_norm() const noexcept;

  TestFunctions operator+(const TestFunctions& other) const;
  TestFunctions scaled(double factor) const;

 private:
  std::vector<FourierSeries> spatial_;
  TimeFactor time_;
};

/// Bin-averaged empirical measure: density(k, j) = share of species k in bin j.
struct EmpiricalProfile {
  Eigen::MatrixXd density;  // species x bins
  double time = 0.0;

  [[nodiscard]] std::size_t bins() const noexcept { return static_cast<std::size_t>(density.cols()); }
};

/// Throws BinMismatch unless `bins` divides N.
EmpiricalProfile empirical_profile(const RingConfiguration& config, std::size_t bins,
                                   double time = 0.0);

/// log Z_t = (1/N) sum_i phi_{X_i}(i/N, t).
double log_Z(const RingConfiguration& config, const TestFunctions& tf, double t);
/// theta_t = (1/N) sum_i d/dt phi_{X_i}(i/N, t).
double theta(const RingConfiguration& config, const TestFunctions& tf, double t);
/// L_t = sum over enabled reactions of rate * (exp(change in log Z) - 1); Omega[Z] = L Z.
double generator_term(const RingConfiguration& config, const TestFunctions& tf,
                      const RateTable& rates, double t);
/// R_t = sum over enabled reactions of rate * (exp(change in log Z) - 1)^2.
double fluctuation_term(const RingConfiguration& config, const TestFunctions& tf,
                        const RateTable& rates, double t);

struct MartingalePath {
  std::vector<double> time;
  std::vector<double> Z;
  std::vector<double> theta;
  std::vector<double> L;
  std::vector<double> R;
  std::vector<double> U;
  double step = 0.0;
  std::size_t series_order = 0;  // 0 when the exact per-bond sum was used
};

/// Streams events into U_t = Z_t - Z_0 - int_0^t (L_s + theta_s) Z_s ds.
///
/// The integral uses the trapezoid rule on the union of the uniform grid and the event
/// times. L and R are kept as truncated power series in s(t) whose coefficients
/// (rate-weighted moments of the per-reaction log Z increments) are updated per event and
/// recomputed from scratch at every grid point. If the increments are too large for a
/// short series the tracker falls back to the exact O(N) sums.
class MartingaleTracker final : public EventSink {
 public:
  /// Throws GridTooCoarse when step > T/100.
  MartingaleTracker(const RingConfiguration& initial, const TestFunctions& tf,
                    const RateTable& rates, double horizon, double step);

  void on_event(double time, const Event& event, const RingConfiguration& after) override;
  void on_finish(double horizon, const RingConfiguration& final_config) override;

  [[nodiscard]] const MartingalePath& path() const noexcept { return path_; }

 private:
  struct Sample {
    double Z, theta, L, R;
  };
  void advance_to(double t);
  void recompute_moments();
  void accumulate_bond(std::size_t bond, double sign);
  [[nodiscard]] Sample sample(double t) const;
  [[nodiscard]] double site_value(std::size_t site, Species k) const {
    return table_[site * n_species_ + k];
  }

  const RateTable* rates_;
  TestFunctions tf_;
  std::vector<Species> sites_;
  std::size_t n_species_;
  std::vector<double> table_;  // p_k(i/N) / N
  std::size_t order_ = 0;
  std::vector<double> moments_;  // moments_[m] = sum rate * d^m
  std::vector<double> inv_factorial_;
  double linear_sum_ = 0.0;  // (1/N) sum_i p_{X_i}(i/N)
  std::vector<double> grid_;
  std::size_t next_grid_ = 0;
  double t_cur_ = 0.0;
  double f_cur_ = 0.0;
  double integral_ = 0.0;
  double z0_ = 1.0;
  MartingalePath path_;
};

/// Replays a trajectory recorded with SimulateOptions::record_events.
MartingalePath martingale_path(const Trajectory& trajectory, const TestFunctions& tf,
                               const RateTable& rates, double step);

/// Density of one species on a uniform periodic cell grid at a sequence of times;
/// cell j covers [(j + offset)/M, (j + 1 + offset)/M) and holds a constant value.
/// Site-resolution lattice data uses offset -1/2 so that site i is centered on i/N.
struct DensityHistory {
  std::vector<double> times;  // starts at 0, ends at the horizon
  Eigen::MatrixXd density;    // cells x times
  double offset = 0.0;
};

/// Weak form of the Cauchy problem for the density of the first species:
///   int_0^T int_0^1 [rho (phi_t + lambda phi_xx) - sign mu rho (1 - rho) phi_x] dx dt
///     + int_0^1 rho(x,0) phi(x,0) dx,
/// for phi(x,t) = p(x) s(t). Space integrals are exact over each cell; the time integral
/// is composite Simpson on `times` (trapezoid on a leftover final interval). sign = +1 is the Burgers orientation
/// d_t rho = lambda rho_xx + mu d_x(rho - rho^2).
double weak_residual(const DensityHistory& source, const FourierSeries& spatial,
                     const TimeFactor& time, double lambda, double mu, int drift_sign = +1);

/// Same weak form for species k of the coupled system
///   d_t rho_k = lambda [rho_k'' + sign d_x(sum_{l != k} alpha(l,k) rho_k rho_l)].
/// With two species and alpha(1,0) = mu / lambda it equals the scalar version.
double weak_residual(std::span<const DensityHistory> species, std::size_t k,
                     const FourierSeries& spatial, const TimeFactor& time, double lambda,
                     const Eigen::MatrixXd& alpha, int drift_sign = +1);

}  // namespace hydrolimit
