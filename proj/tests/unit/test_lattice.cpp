#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "hydrolimit/error.hpp"
#include "hydrolimit/lattice.hpp"

using namespace hydrolimit;

namespace {

const SpeciesAlphabet kAB = SpeciesAlphabet::letters(2);

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("alphabet labels and lookup") {
  const auto abc = SpeciesAlphabet::letters(3);
  CHECK(abc.size() == 3);
  CHECK(abc.label(2) == "C");
  CHECK(abc.index_of("B") == 1);
  CHECK(code_of([&] { (void)abc.index_of("D"); }) == Errc::UnknownSpecies);
  CHECK_THROWS_AS(SpeciesAlphabet({"A"}), Error);
  CHECK_THROWS_AS(SpeciesAlphabet({"A", "A"}), Error);
}

TEST_CASE("new_ring builds configurations") {
  const auto ring = new_ring(4, kAB, {0, 1, 0, 1});
  CHECK(ring.size() == 4);
  CHECK(ring.to_string() == "ABAB");
  CHECK(species_counts(ring) == std::vector<std::size_t>{2, 2});

  const auto abc = new_ring(3, SpeciesAlphabet::letters(3), {0, 1, 2});
  CHECK(species_counts(abc) == std::vector<std::size_t>{1, 1, 1});

  CHECK(code_of([] { (void)new_ring(4, kAB, {0, 1, 0}); }) == Errc::LengthMismatch);
  CHECK(code_of([] { (void)new_ring(2, kAB, {0, 2}); }) == Errc::UnknownSpecies);
}

TEST_CASE("ring indexing is periodic") {
  const auto ring = new_ring(3, SpeciesAlphabet::letters(3), {0, 1, 2});
  CHECK(ring.at(-1) == 2);
  CHECK(ring.at(3) == 0);
  CHECK(ring.at(7) == 1);
}

TEST_CASE("species_counts") {
  CHECK(species_counts(new_ring(4, kAB, {0, 0, 0, 0})) == std::vector<std::size_t>{4, 0});
  CHECK(species_counts(new_ring(4, kAB, {0, 1, 0, 1})) == std::vector<std::size_t>{2, 2});
  const std::vector<DensityProfile> profiles{[](double x) { return x; },
                                             [](double x) { return 1.0 - x; }};
  for (std::size_t n : {3u, 17u, 100u}) {
    const auto c = sample_from_profile(profiles, kAB, n, 5, SampleMode::random);
    const auto counts = species_counts(c);
    CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == n);
  }
}

TEST_CASE("sample_from_profile") {
  const std::vector<DensityProfile> all_a{[](double) { return 1.0; }, [](double) { return 0.0; }};
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const auto c = sample_from_profile(all_a, kAB, 50, seed, SampleMode::random);
    CHECK(species_counts(c)[0] == 50);
  }

  const std::vector<DensityProfile> half{[](double) { return 0.5; }, [](double) { return 0.5; }};
  SUBCASE("random mode fraction") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto c = sample_from_profile(half, kAB, 10000, seed, SampleMode::random);
      const double fraction = static_cast<double>(species_counts(c)[0]) / 10000.0;
      CHECK(fraction >= 0.45);
      CHECK(fraction <= 0.55);
    }
  }
  SUBCASE("deterministic mode") {
    const auto c = sample_from_profile(half, kAB, 10, 0, SampleMode::deterministic);
    CHECK(species_counts(c)[0] == 5);
    CHECK(c == sample_from_profile(half, kAB, 10, 12345, SampleMode::deterministic));
  }
  SUBCASE("deterministic counts follow the rounded mass") {
    const std::vector<DensityProfile> ramp{[](double x) { return 0.2 + 0.5 * x; },
                                           [](double x) { return 0.8 - 0.5 * x; }};
    const std::size_t n = 37;
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) mass += 0.2 + 0.5 * static_cast<double>(i) / n;
    const auto c = sample_from_profile(ramp, kAB, n, 0, SampleMode::deterministic);
    CHECK(species_counts(c)[0] == static_cast<std::size_t>(std::lround(mass)));
  }
  SUBCASE("site marginals match the profile") {
    // site i is A with probability rho(i/N); 3 sigma binomial band over 4000 draws
    const std::vector<DensityProfile> ramp{[](double x) { return 0.1 + 0.8 * x; },
                                           [](double x) { return 0.9 - 0.8 * x; }};
    const std::size_t n = 8, draws = 4000;
    std::vector<double> hits(n, 0.0);
    for (std::uint64_t seed = 0; seed < draws; ++seed) {
      const auto c = sample_from_profile(ramp, kAB, n, seed, SampleMode::random);
      for (std::size_t i = 0; i < n; ++i) hits[i] += c[i] == 0 ? 1.0 : 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double p = 0.1 + 0.8 * static_cast<double>(i) / n;
      const double sigma = std::sqrt(p * (1 - p) / draws);
      CHECK(std::abs(hits[i] / draws - p) <= 3 * sigma);
    }
  }
  SUBCASE("same inputs give the same configuration") {
    const auto a = sample_from_profile(half, kAB, 200, 42, SampleMode::random);
    const auto b = sample_from_profile(half, kAB, 200, 42, SampleMode::random);
    CHECK(a == b);
    CHECK(a != sample_from_profile(half, kAB, 200, 43, SampleMode::random));
  }
  SUBCASE("simplex violations") {
    const std::vector<DensityProfile> bad{[](double) { return 0.5; }, [](double) { return 0.6; }};
    CHECK(code_of([&] { (void)sample_from_profile(bad, kAB, 10, 1, SampleMode::random); }) ==
          Errc::ProfileNotStochastic);
    const std::vector<DensityProfile> negative{[](double) { return 1.5; },
                                               [](double) { return -0.5; }};
    CHECK(code_of([&] {
            (void)sample_from_profile(negative, kAB, 10, 1, SampleMode::deterministic);
          }) == Errc::ProfileNotStochastic);
    const std::vector<DensityProfile> tiny{[](double) { return 0.5 + 1e-10; },
                                           [](double) { return 0.5; }};
    CHECK_NOTHROW((void)sample_from_profile(tiny, kAB, 10, 1, SampleMode::random));
  }
}
