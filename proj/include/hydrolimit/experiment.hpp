#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hydrolimit/dynamics.hpp"
#include "hydrolimit/fourier.hpp"
#include "hydrolimit/lattice.hpp"
#include "hydrolimit/observables.hpp"

namespace hydrolimit {

/// Drift orientation used for the macroscopic equations: fixed, or resolved from data.
struct DriftPolicy {
  bool automatic = true;
  int sign = +1;  // used when !automatic
  friend bool operator==(const DriftPolicy&, const DriftPolicy&) = default;
};

/// Everything a study needs; produced by parse_config with all defaults resolved.
struct ExperimentConfig {
  // [model]
  ModelKind model = ModelKind::asep;
  std::vector<std::string> species{"A", "B"};
  std::vector<FourierSeries> initial;  // one per species, summing to 1
  SampleMode sample_mode = SampleMode::random;

  // [scaling]
  double lambda = 1.0;
  double mu = 0.0;
  Eigen::MatrixXd alpha;  // nspecies only
  std::optional<FoldRates> fold;

  // [study]
  std::vector<std::size_t> sizes;
  std::size_t replicas = 16;
  std::size_t bins = 32;
  double horizon = 0.05;
  std::vector<double> checkpoints;
  std::uint64_t seed = 1;
  DriftPolicy drift;
  std::size_t test_functions = 5;
  std::size_t martingale_function = 1;  // family member on the first species; 0 means phi = 0
  double martingale_step = 0.0;  // 0 resolves to T/1000
  std::size_t residual_nodes = 200;
  std::size_t residual_bins = 0;  // bins for single-trajectory residuals; 0: same as bins

  // [pde]
  std::size_t grid_cells = 256;
  double cfl_fraction = 0.4;

  // [output]
  bool write_profiles = true;
  bool write_configurations = false;

  [[nodiscard]] std::size_t species_count() const noexcept { return species.size(); }
  [[nodiscard]] SpeciesAlphabet alphabet() const { return SpeciesAlphabet(species); }
  [[nodiscard]] ScalingSpec scaling() const;
  [[nodiscard]] std::vector<DensityProfile> initial_profiles() const;
  /// Test-function family member j >= 1: cos(2 pi m x) for odd j, sin(2 pi m x) for even j,
  /// m = (j + 1) / 2.
  [[nodiscard]] static FourierSeries family_member(std::size_t j);
  /// family_member(martingale_function) (1 - t/T)^2 on the first species, zero on the others.
  [[nodiscard]] TestFunctions martingale_test_functions() const;
  [[nodiscard]] std::size_t resolved_residual_bins() const {
    return residual_bins > 0 ? residual_bins : bins;
  }
  [[nodiscard]] double resolved_martingale_step() const {
    return martingale_step > 0.0 ? martingale_step : horizon / 1000.0;
  }

  /// Checks every cross-field constraint; throws ConstraintViolation.
  void validate() const;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

}  // namespace hydrolimit
