#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hydrolimit/experiment.hpp"
#include "hydrolimit/observables.hpp"
#include "hydrolimit/pde.hpp"

namespace hydrolimit {

enum class Norm { L1, L2 };
std::string_view to_string(Norm norm) noexcept;

/// Species-averaged bin distance between two species x bins matrices:
/// L1 = (1/n) sum_k (1/B) sum_j |p - q|, L2 = sqrt((1/n) sum_k (1/B) sum_j (p - q)^2).
/// Throws BinMismatch on a shape mismatch.
double distance(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q, Norm norm);
double distance(const EmpiricalProfile& p, const EmpiricalProfile& q, Norm norm);
/// `q` is averaged onto p's bins first (cells must be a multiple of the bin count).
double distance(const EmpiricalProfile& p, const GridStated& q, Norm norm);

/// Linear interpolation of cell-centered values at the sites i/N, averaged per bin.
/// Puts a PDE state on the same footing as empirical_profile of an N-site ring.
Eigen::MatrixXd site_bin_average(const GridStated& state, std::size_t n_sites, std::size_t bins);

struct RunOptions {
  std::size_t threads = 1;
  std::function<void(const std::string&)> progress;  // calls are serialized
};

/// Seeds of replica r: one for the initial sample, one for the dynamics.
std::uint64_t sampling_seed(std::uint64_t base, std::size_t replica) noexcept;
std::uint64_t dynamics_seed(std::uint64_t base, std::size_t replica) noexcept;

/// Ensemble-mean site occupations of one system size at a set of times.
struct Ensemble {
  std::size_t sites = 0;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> mean;  // per time: species x sites
  std::size_t replicas = 0;           // successful replicas
  std::size_t failures = 0;
  std::uint64_t events = 0;
  double seconds = 0.0;
};

/// Called in a worker thread after each successful replica with its index and trajectory.
using ReplicaHook = std::function<void(std::size_t replica, const Trajectory& trajectory)>;

/// Runs config.replicas replicas at N sites and averages occupations at `times`.
/// Occupations are summed as integers so the result does not depend on scheduling.
Ensemble run_ensemble(const ExperimentConfig& config, std::size_t n_sites,
                      const std::vector<double>& times, const RunOptions& options,
                      const ReplicaHook& hook = {});

/// Macroscopic reference used by the studies: analytic heat solution for the symmetric
/// two-species model, the Burgers solver for asep, the coupled solver for nspecies.
/// fixed_dt > 0 replaces the default step cfl_fraction * bound.
struct Reference {
  std::string kind;  // "heat", "burgers" or "nspecies"
  std::vector<double> times;
  std::vector<GridStated> states;  // species x M, one per time
  double dt = 0.0;
  std::size_t steps = 0;
};

Reference reference_solution(const ExperimentConfig& config, int drift_sign,
                             const std::vector<double>& times, std::size_t cells,
                             bool analytic_if_symmetric = true, double fixed_dt = 0.0);

// ---------------------------------------------------------------------------

struct DistanceRecord {
  std::size_t sites;
  double time;
  Norm norm;
  double distance;
  std::size_t replicas;
  int drift_sign;
};

struct SizeSummary {
  std::size_t sites = 0;
  std::size_t replicas = 0;
  std::size_t failures = 0;
  std::uint64_t events = 0;
  double seconds = 0.0;
  std::vector<Eigen::MatrixXd> empirical;  // per checkpoint: species x bins
  std::vector<Eigen::MatrixXd> reference;
  std::vector<double> replica_l1;  // per replica, final checkpoint
  double replica_l1_mean = 0.0;
  double replica_l1_std = 0.0;
};

struct ComparisonReport {
  std::vector<double> checkpoints;
  std::vector<SizeSummary> sizes;
  std::vector<DistanceRecord> distances;
  std::optional<double> slope;  // log-log slope of L1 d(N, t_final) vs N
  int drift_sign = +1;
  bool drift_auto = false;
  std::optional<std::pair<double, double>> drift_scores;  // L1 for +1 and -1
  std::string reference;
  std::vector<std::uint64_t> seeds;  // sampling seeds of the replicas
  std::size_t failures = 0;
  std::vector<std::pair<std::string, double>> runtimes;
};

/// Ensemble-averaged profiles vs the macroscopic reference, per N and checkpoint.
ComparisonReport run_convergence_study(const ExperimentConfig& config,
                                       const RunOptions& options = {});

/// Drift orientation for the given ensembles: the fixed policy, or in auto mode the
/// sign whose reference is closer (L1, largest N) at the first checkpoint with t > 0.
/// Returns the sign and, in auto mode, the two scores.
std::pair<int, std::optional<std::pair<double, double>>> resolve_drift_sign(
    const ExperimentConfig& config, const Ensemble& largest,
    const std::vector<double>& checkpoints);

// ---------------------------------------------------------------------------

struct MartingaleSummary {
  std::size_t sites = 0;
  std::size_t replicas = 0;
  std::size_t failures = 0;
  double mean_U = 0.0;
  double var_U = 0.0;
  double stderr_U = 0.0;
  double max_abs_L = 0.0;  // replica mean of max_t |L_t|
  double max_NR = 0.0;     // replica mean of max_t N R_t
  double max_abs_L_all = 0.0;
  double max_NR_all = 0.0;
  std::size_t series_order = 0;  // largest used
  std::vector<double> U_T;       // per replica
  MartingalePath first_path;     // replica 0
  std::uint64_t events = 0;
  double seconds = 0.0;
};

struct MartingaleReport {
  std::vector<MartingaleSummary> sizes;
  std::optional<double> variance_slope;
  double step = 0.0;
  std::size_t failures = 0;
  std::vector<std::pair<std::string, double>> runtimes;
};

MartingaleReport run_martingale_study(const ExperimentConfig& config,
                                      const RunOptions& options = {});

// ---------------------------------------------------------------------------

struct ResidualRecord {
  std::string source;      // "pde", "empirical" or "empirical_mean"
  std::size_t resolution;  // M or N
  std::size_t function;    // family member, from 1
  double residual;
  int drift_sign;
};

struct ResidualReport {
  std::vector<ResidualRecord> rows;
  std::vector<std::size_t> grids;  // PDE grids M/4, M/2, M
  std::vector<std::size_t> sizes;
  std::vector<bool> pde_monotone;        // per function: |r| decreasing in M
  std::vector<bool> empirical_monotone;       // per function: RMS residual decreasing in N
  std::vector<bool> empirical_mean_monotone;  // per function: |ensemble-mean residual| decreasing
  std::vector<double> pde_ratio_coarse;  // per function: |r(M/4)| / |r(M/2)|
  std::vector<double> pde_ratio_fine;    // per function: |r(M/2)| / |r(M)|
  int drift_sign = +1;
  std::size_t failures = 0;
  std::vector<std::pair<std::string, double>> runtimes;

  [[nodiscard]] double residual(const std::string& source, std::size_t resolution,
                                std::size_t function) const;
};

/// Weak-form residuals of the first species for family members 1..test_functions:
///   pde             solver output on M/4, M/2 and M cells
///   empirical       root mean square over replicas of single-trajectory residuals on
///                   resolved_residual_bins() bins
///   empirical_mean  residual of the ensemble-mean density at site resolution
ResidualReport run_weak_residual_study(const ExperimentConfig& config,
                                       const RunOptions& options = {});

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hydrolimit
