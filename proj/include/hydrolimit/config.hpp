#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "hydrolimit/experiment.hpp"

namespace hydrolimit {

/// Parses the flat-section config format:
///
///   [model]    type, species, initial_<label>, sample_mode
///   [scaling]  lambda, mu, alpha, fold_gamma, fold_delta
///   [study]    N, replicas, bins, T, checkpoints, seed, drift_sign, test_functions,
///              martingale_function, martingale_step, residual_nodes, residual_bins
///   [pde]      M, cfl_fraction
///   [output]   profiles, configurations
///
/// One `key = value` per line; values are numbers, "strings", true/false or [arrays].
/// `#` starts a comment. Initial profiles are Fourier coefficient lists
/// [c0, a1, b1, a2, b2, ...]; one species may be omitted and is then 1 minus the others.
///
/// Throws ParseError (with the line number), UnknownKey or ConstraintViolation.
ExperimentConfig parse_config(std::string_view text);

/// Canonical document listing every key with its resolved value.
std::string serialize_config(const ExperimentConfig& config);

/// Reads and parses a file; IoError when it cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace hydrolimit
