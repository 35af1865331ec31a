#include "hydrolimit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hydrolimit/error.hpp"

namespace hydrolimit {
namespace {

[[noreturn]] void violation(const std::string& what) {
  throw Error(Errc::ConstraintViolation, what);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

ScalingSpec ExperimentConfig::scaling() const {
  ScalingSpec spec;
  spec.model = model;
  spec.lambda = lambda;
  spec.mu = mu;
  spec.alpha = alpha;
  spec.fold = fold;
  return spec;
}

std::vector<DensityProfile> ExperimentConfig::initial_profiles() const {
  std::vector<DensityProfile> out;
  out.reserve(initial.size());
  for (const auto& f : initial) out.emplace_back([f](double x) { return f(x); });
  return out;
}

FourierSeries ExperimentConfig::family_member(std::size_t j) {
  if (j == 0) throw Error(Errc::InvalidArgument, "family members are numbered from 1");
  const std::size_t m = (j + 1) / 2;
  FourierSeries f;
  if (j % 2 == 1) {
    f.cos_coeffs.assign(m, 0.0);
    f.cos_coeffs[m - 1] = 1.0;
  } else {
    f.sin_coeffs.assign(m, 0.0);
    f.sin_coeffs[m - 1] = 1.0;
  }
  return f;
}

TestFunctions ExperimentConfig::martingale_test_functions() const {
  std::vector<FourierSeries> spatial(species_count());
  if (martingale_function > 0) spatial[0] = family_member(martingale_function);
  return {std::move(spatial), TimeFactor::decay(horizon)};
}

void ExperimentConfig::validate() const {
  const std::size_t n = species_count();
  if (n < 2) violation("need at least two species");
  try {
    (void)alphabet();
  } catch (const Error& e) {
    violation(e.what());
  }
  if (model == ModelKind::asep && n != 2) violation("model asep has exactly two species");
  if (n > 255) violation("at most 255 species");

  // initial profiles: one per species, pointwise on the simplex
  if (initial.size() != n) violation("need one initial profile per species");
  FourierSeries sum;
  for (const auto& f : initial) {
    sum.constant += f.constant;
    if (f.cos_coeffs.size() > sum.cos_coeffs.size()) sum.cos_coeffs.resize(f.cos_coeffs.size());
    if (f.sin_coeffs.size() > sum.sin_coeffs.size()) sum.sin_coeffs.resize(f.sin_coeffs.size());
    for (std::size_t m = 0; m < f.cos_coeffs.size(); ++m) sum.cos_coeffs[m] += f.cos_coeffs[m];
    for (std::size_t m = 0; m < f.sin_coeffs.size(); ++m) sum.sin_coeffs[m] += f.sin_coeffs[m];
  }
  constexpr double kSimplexTol = 1e-12;
  bool unit = std::abs(sum.constant - 1.0) <= kSimplexTol;
  for (double c : sum.cos_coeffs) unit = unit && std::abs(c) <= kSimplexTol;
  for (double c : sum.sin_coeffs) unit = unit && std::abs(c) <= kSimplexTol;
  if (!unit) violation("initial profiles must sum to 1 coefficient-wise");
  constexpr int kProbe = 4096;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& f = initial[k];
    bool ok = finite(f.constant);
    for (double c : f.cos_coeffs) ok = ok && finite(c);
    for (double c : f.sin_coeffs) ok = ok && finite(c);
    if (!ok) violation("initial profile of " + species[k] + " has a non-finite coefficient");
    for (int i = 0; i < kProbe; ++i) {
      const double v = f(static_cast<double>(i) / kProbe);
      if (v < -1e-12 || v > 1.0 + 1e-12) {
        violation("initial profile of " + species[k] + " leaves [0, 1] near x = " +
                  std::to_string(static_cast<double>(i) / kProbe));
      }
    }
  }

  if (!(lambda > 0.0) || !finite(lambda)) violation("lambda must be positive and finite");
  if (!finite(mu)) violation("mu must be finite");

  if (sizes.empty()) violation("N list is empty");
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    if (sizes[j] < 3) violation("every N must be at least 3");
    if (sizes[j] > (std::size_t{1} << 31)) violation("N too large");
    if (j > 0 && sizes[j] <= sizes[j - 1]) violation("N list must be strictly increasing");
    if (sizes[j] < bins) violation("every N must be at least the bin count");
    if (sizes[j] % bins != 0) {
      violation("bins = " + std::to_string(bins) + " must divide N = " + std::to_string(sizes[j]));
    }
    if (residual_bins != 0 && sizes[j] % residual_bins != 0) {
      violation("residual_bins must divide every N");
    }
  }
  const auto n_min = static_cast<double>(sizes.front());

  if (model == ModelKind::asep) {
    if (alpha.size() != 0) violation("alpha belongs to model nspecies");
    if (fold) violation("folds need model nspecies with an even alphabet of at least 4");
    // the backward rate lambda N^2 - |mu| N / 2 is smallest at the smallest N
    if (std::abs(mu) > 2.0 * lambda * n_min) {
      violation("|mu| = " + std::to_string(std::abs(mu)) + " exceeds 2 lambda N = " +
                std::to_string(2.0 * lambda * n_min) + " at N = " + std::to_string(sizes.front()));
    }
  } else {
    if (mu != 0.0) violation("mu belongs to model asep; use alpha");
    if (alpha.rows() != static_cast<Eigen::Index>(n) || alpha.cols() != alpha.rows()) {
      violation("alpha must be " + std::to_string(n) + " x " + std::to_string(n));
    }
    if (!alpha.allFinite()) violation("alpha must be finite");
    if ((alpha + alpha.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      violation("alpha must be antisymmetric");
    }
    if (fold) {
      if (n % 2 != 0 || n < 4) violation("folds need an even alphabet of at least 4 species");
      if (fold->gamma.size() != n || fold->delta.size() != n) {
        violation("fold_gamma and fold_delta need one entry per species");
      }
      for (std::size_t k = 0; k < n; ++k) {
        if (!(fold->gamma[k] >= 0.0) || !(fold->delta[k] >= 0.0) || !finite(fold->gamma[k]) ||
            !finite(fold->delta[k])) {
          violation("fold rates must be finite and nonnegative");
        }
      }
    }
  }

  if (replicas < 1) violation("replicas must be at least 1");
  if (bins < 1) violation("bins must be at least 1");
  if (!(horizon >= 0.0) || !finite(horizon)) violation("T must be finite and nonnegative");
  if (checkpoints.empty()) violation("checkpoint list is empty");
  for (std::size_t j = 0; j < checkpoints.size(); ++j) {
    if (!(checkpoints[j] >= 0.0 && checkpoints[j] <= horizon)) {
      violation("checkpoints must lie in [0, T]");
    }
    if (j > 0 && checkpoints[j] <= checkpoints[j - 1]) {
      violation("checkpoints must be strictly increasing");
    }
  }
  if (!drift.automatic && drift.sign != 1 && drift.sign != -1) {
    violation("drift_sign must be auto, 1 or -1");
  }
  if (test_functions < 3) violation("test_functions must be at least 3");
  if (martingale_step < 0.0 || !finite(martingale_step)) {
    violation("martingale_step must be nonnegative");
  }
  if (horizon > 0.0 && resolved_martingale_step() > horizon / 100.0) {
    violation("martingale_step must be at most T/100");
  }
  if (residual_nodes < 2) violation("residual_nodes must be at least 2");

  if (grid_cells < 4) violation("grid_cells must be at least 4");
  if (grid_cells % 4 != 0) violation("grid_cells must be divisible by 4 for the refinement study");
  if (grid_cells % bins != 0) violation("bins must divide grid_cells");
  if (!(cfl_fraction > 0.0 && cfl_fraction <= 1.0)) violation("cfl_fraction must lie in (0, 1]");
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  const bool alpha_eq = a.alpha.rows() == b.alpha.rows() && a.alpha.cols() == b.alpha.cols() &&
                        (a.alpha.size() == 0 || a.alpha == b.alpha);
  return a.model == b.model && a.species == b.species && a.initial == b.initial &&
         a.sample_mode == b.sample_mode && a.lambda == b.lambda && a.mu == b.mu && alpha_eq &&
         a.fold == b.fold && a.sizes == b.sizes && a.replicas == b.replicas && a.bins == b.bins &&
         a.horizon == b.horizon && a.checkpoints == b.checkpoints && a.seed == b.seed &&
         a.drift == b.drift && a.test_functions == b.test_functions &&
         a.martingale_function == b.martingale_function &&
         a.martingale_step == b.martingale_step && a.residual_nodes == b.residual_nodes &&
         a.residual_bins == b.residual_bins && a.grid_cells == b.grid_cells &&
         a.cfl_fraction == b.cfl_fraction && a.write_profiles == b.write_profiles &&
         a.write_configurations == b.write_configurations;
}

}  // namespace hydrolimit
