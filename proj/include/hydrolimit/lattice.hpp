#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hydrolimit {

using Species = std::uint8_t;

/// Ordered, distinct species labels. Index k is the species id.
class SpeciesAlphabet {
 public:
  explicit SpeciesAlphabet(std::vector<std::string> labels);

  /// "A", "B", "C", ... for n species.
  static SpeciesAlphabet letters(std::size_t n);

  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] const std::string& label(std::size_t k) const { return labels_.at(k); }
  [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
  /// Throws UnknownSpecies for a label not in the alphabet.
  [[nodiscard]] Species index_of(const std::string& label) const;

  friend bool operator==(const SpeciesAlphabet&, const SpeciesAlphabet&) = default;

 private:
  std::vector<std::string> labels_;
};

/// One species per site of Z/NZ. Site indices are taken mod N.
class RingConfiguration {
 public:
  RingConfiguration(SpeciesAlphabet alphabet, std::vector<Species> sites);

  [[nodiscard]] std::size_t size() const noexcept { return sites_.size(); }
  [[nodiscard]] std::size_t species_count() const noexcept { return alphabet_.size(); }
  [[nodiscard]] const SpeciesAlphabet& alphabet() const noexcept { return alphabet_; }

  [[nodiscard]] Species at(std::ptrdiff_t i) const noexcept { return sites_[wrap(i)]; }
  [[nodiscard]] Species operator[](std::size_t i) const noexcept { return sites_[i]; }
  [[nodiscard]] std::span<const Species> sites() const noexcept { return sites_; }

  /// Unchecked write; callers keep the value inside the alphabet.
  void set(std::size_t i, Species k) noexcept { sites_[i] = k; }

  [[nodiscard]] std::size_t wrap(std::ptrdiff_t i) const noexcept {
    const auto n = static_cast<std::ptrdiff_t>(sites_.size());
    return static_cast<std::size_t>(((i % n) + n) % n);
  }

  /// Labels concatenated ("ABAB"), or separated by ',' when any label is longer than one char.
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const RingConfiguration&, const RingConfiguration&) = default;

 private:
  SpeciesAlphabet alphabet_;
  std::vector<Species> sites_;
};

RingConfiguration new_ring(std::size_t n_sites, const SpeciesAlphabet& alphabet,
                           std::span<const Species> assignment);
RingConfiguration new_ring(std::size_t n_sites, const SpeciesAlphabet& alphabet,
                           std::initializer_list<Species> assignment);

std::vector<std::size_t> species_counts(const RingConfiguration& config);

using DensityProfile = std::function<double(double)>;

enum class SampleMode { random, deterministic };

/// Draws a microscopic configuration whose density profile approximates `profiles`.
///
/// random: site i independently takes species k with probability rho_k(i/N).
/// deterministic: cumulative-remainder rounding along the ring; each site goes to the
/// species with the largest running deficit sum_{j<=i} rho_k(j/N) - assigned_k
/// (ties to the lower index). For two species the final counts are exactly
/// round(sum_i rho_k(i/N)). `seed` is ignored in this mode.
///
/// Throws ProfileNotStochastic when sum_k rho_k(i/N) differs from 1 by more than 1e-9
/// or a value leaves [0, 1] at some sampled point.
RingConfiguration sample_from_profile(std::span<const DensityProfile> profiles,
                                      const SpeciesAlphabet& alphabet, std::size_t n_sites,
                                      std::uint64_t seed, SampleMode mode);

}  // namespace hydrolimit
