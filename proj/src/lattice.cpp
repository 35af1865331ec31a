#include "hydrolimit/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hydrolimit/error.hpp"
#include "hydrolimit/random.hpp"

namespace hydrolimit {

namespace {
constexpr double kSimplexTolerance = 1e-9;
}

SpeciesAlphabet::SpeciesAlphabet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw Error(Errc::InvalidArgument, "an alphabet needs at least two species");
  }
  if (labels_.size() > 255) throw Error(Errc::InvalidArgument, "at most 255 species");
  std::set<std::string> unique(labels_.begin(), labels_.end());
  if (unique.size() != labels_.size()) {
    throw Error(Errc::InvalidArgument, "species labels must be distinct");
  }
  for (const auto& l : labels_) {
    if (l.empty()) throw Error(Errc::InvalidArgument, "empty species label");
  }
}

SpeciesAlphabet SpeciesAlphabet::letters(std::size_t n) {
  if (n > 26) throw Error(Errc::InvalidArgument, "letters() supports at most 26 species");
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < n; ++k) labels.emplace_back(1, static_cast<char>('A' + k));
  return SpeciesAlphabet(std::move(labels));
}

Species SpeciesAlphabet::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw Error(Errc::UnknownSpecies, "no species labelled '" + label + "'");
  return static_cast<Species>(it - labels_.begin());
}

RingConfiguration::RingConfiguration(SpeciesAlphabet alphabet, std::vector<Species> sites)
    : alphabet_(std::move(alphabet)), sites_(std::move(sites)) {}

std::string RingConfiguration::to_string() const {
  const bool single_char = std::all_of(alphabet_.labels().begin(), alphabet_.labels().end(),
                                       [](const std::string& l) { return l.size() == 1; });
  std::string out;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (!single_char && i > 0) out += ',';
    out += alphabet_.label(sites_[i]);
  }
  return out;
}

RingConfiguration new_ring(std::size_t n_sites, const SpeciesAlphabet& alphabet,
                           std::span<const Species> assignment) {
  if (n_sites == 0) throw Error(Errc::InvalidArgument, "ring needs at least one site");
  if (assignment.size() != n_sites) {
    throw Error(Errc::LengthMismatch, "assignment has " + std::to_string(assignment.size()) +
                                          " entries for " + std::to_string(n_sites) + " sites");
  }
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= alphabet.size()) {
      throw Error(Errc::UnknownSpecies, "site " + std::to_string(i) + " holds species " +
                                            std::to_string(assignment[i]));
    }
  }
  return RingConfiguration(alphabet, std::vector<Species>(assignment.begin(), assignment.end()));
}

RingConfiguration new_ring(std::size_t n_sites, const SpeciesAlphabet& alphabet,
                           std::initializer_list<Species> assignment) {
  return new_ring(n_sites, alphabet, std::span<const Species>(assignment.begin(), assignment.size()));
}

std::vector<std::size_t> species_counts(const RingConfiguration& config) {
  std::vector<std::size_t> counts(config.species_count(), 0);
  for (Species s : config.sites()) ++counts[s];
  return counts;
}

RingConfiguration sample_from_profile(std::span<const DensityProfile> profiles,
                                      const SpeciesAlphabet& alphabet, std::size_t n_sites,
                                      std::uint64_t seed, SampleMode mode) {
  const std::size_t n = alphabet.size();
  if (profiles.size() != n) {
    throw Error(Errc::LengthMismatch, "need one density profile per species");
  }
  if (n_sites == 0) throw Error(Errc::InvalidArgument, "ring needs at least one site");

  // rho_k(i/N), validated on the simplex
  std::vector<double> rho(n_sites * n);
  for (std::size_t i = 0; i < n_sites; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n_sites);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = profiles[k](x);
      if (!(v >= -kSimplexTolerance && v <= 1.0 + kSimplexTolerance)) {
        throw Error(Errc::ProfileNotStochastic,
                    "density " + std::to_string(v) + " outside [0,1] at x=" + std::to_string(x));
      }
      rho[i * n + k] = std::clamp(v, 0.0, 1.0);
      total += v;
    }
    if (std::abs(total - 1.0) > kSimplexTolerance) {
      throw Error(Errc::ProfileNotStochastic,
                  "densities sum to " + std::to_string(total) + " at x=" + std::to_string(x));
    }
  }

  std::vector<Species> sites(n_sites);
  if (mode == SampleMode::random) {
    Rng rng(seed);
    for (std::size_t i = 0; i < n_sites; ++i) {
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t k = 0;
      for (; k + 1 < n; ++k) {
        acc += rho[i * n + k];
        if (u < acc) break;
      }
      sites[i] = static_cast<Species>(k);
    }
  } else {
    std::vector<double> deficit(n, 0.0);
    for (std::size_t i = 0; i < n_sites; ++i) {
      for (std::size_t k = 0; k < n; ++k) deficit[k] += rho[i * n + k];
      const auto best = static_cast<std::size_t>(
          std::max_element(deficit.begin(), deficit.end()) - deficit.begin());
      sites[i] = static_cast<Species>(best);
      deficit[best] -= 1.0;
    }
  }
  return RingConfiguration(alphabet, std::move(sites));
}

}  // namespace hydrolimit
