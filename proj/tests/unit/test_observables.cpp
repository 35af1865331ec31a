#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hydrolimit/dynamics.hpp"
#include "hydrolimit/error.hpp"
#include "hydrolimit/observables.hpp"
#include "hydrolimit/pde.hpp"

using namespace hydrolimit;

namespace {

const SpeciesAlphabet kAB = SpeciesAlphabet::letters(2);
constexpr double kPi = std::numbers::pi;

ScalingSpec asep(double lambda, double mu) {
  ScalingSpec s;
  s.lambda = lambda;
  s.mu = mu;
  return s;
}

FourierSeries constant(double c) { return FourierSeries{c, {}, {}}; }
FourierSeries cos1(double a = 1.0) { return FourierSeries{0.0, {a}, {}}; }

RingConfiguration random_ring(std::size_t n, std::uint64_t seed, double density = 0.5) {
  Rng rng(seed);
  std::vector<Species> s(n);
  for (auto& v : s) v = rng.uniform() < density ? 0 : 1;
  return new_ring(n, kAB, s);
}

// Direct sum over bonds of rate * (exp(d) - 1)^power with d the change in log Z.
double brute_force(const RingConfiguration& c, const TestFunctions& tf, const RateTable& rates,
                   double t, int power) {
  const std::size_t n = c.size();
  const double nn = static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const Species a = c[i], b = c[j];
    if (a == b) continue;
    const double xi = static_cast<double>(i) / nn, xj = static_cast<double>(j) / nn;
    const double d = (tf.value(b, xi, t) + tf.value(a, xj, t) - tf.value(a, xi, t) -
                      tf.value(b, xj, t)) / nn;
    total += rates.exchange(a, b) * std::pow(std::exp(d) - 1.0, power);
  }
  return total;
}

}  // namespace

TEST_CASE("time factors") {
  const auto decay = TimeFactor::decay(2.0);
  CHECK(decay.value(0) == 1.0);
  CHECK(decay.value(2.0) == 0.0);
  CHECK(decay.derivative(0) == doctest::Approx(-1.0));
  const TimeFactor bump(TimeFactor::Kind::bump, 2.0);
  CHECK(bump.value(0) == 0.0);
  CHECK(bump.derivative(0) == doctest::Approx(1.0));
  CHECK(bump.value(2.0) == 0.0);
  CHECK_THROWS_AS(TimeFactor(TimeFactor::Kind::decay, 0.0), Error);
}

TEST_CASE("empirical_profile") {
  const auto all_a = new_ring(8, kAB, std::vector<Species>(8, 0));
  const auto p = empirical_profile(all_a, 4);
  CHECK(p.density.row(0).minCoeff() == 1.0);
  CHECK(p.density.row(1).maxCoeff() == 0.0);

  const auto alt = new_ring(8, kAB, {0, 1, 0, 1, 0, 1, 0, 1});
  const auto q = empirical_profile(alt, 2);
  CHECK(q.density(0, 0) == 0.5);
  CHECK(q.density(0, 1) == 0.5);

  std::vector<Species> half(100, 1);
  for (int i = 0; i < 50; ++i) half[i] = 0;
  const auto h = empirical_profile(new_ring(100, kAB, half), 4);
  CHECK(h.density(0, 0) == 1.0);
  CHECK(h.density(0, 1) == 1.0);
  CHECK(h.density(0, 2) == 0.0);
  CHECK(h.density(0, 3) == 0.0);

  const auto r = empirical_profile(random_ring(120, 3), 8);
  for (Eigen::Index j = 0; j < 8; ++j) CHECK(r.density.col(j).sum() == doctest::Approx(1.0));

  CHECK_THROWS_WITH_AS((void)empirical_profile(alt, 3), doctest::Contains("BinMismatch"), Error);
}

TEST_CASE("log_Z and theta") {
  const auto c = new_ring(10, kAB, {0, 0, 1, 0, 1, 1, 1, 0, 1, 1});  // m = 4
  const auto constant_time = TimeFactor(TimeFactor::Kind::constant, 1.0);
  CHECK(log_Z(c, TestFunctions::pair(constant(0), constant(0), constant_time), 0.3) == 0.0);
  CHECK(log_Z(c, TestFunctions::pair(constant(1), constant(0), constant_time), 0.3) ==
        doctest::Approx(0.4));

  const auto tf = TestFunctions::pair(cos1(0.7), FourierSeries{0.1, {}, {0.4}},
                                      TimeFactor::decay(1.0));
  const auto shifted = TestFunctions::pair(FourierSeries{0.5, {0.7}, {}},
                                           FourierSeries{0.6, {}, {0.4}}, constant_time);
  const auto base = TestFunctions::pair(cos1(0.7), FourierSeries{0.1, {}, {0.4}}, constant_time);
  CHECK(log_Z(c, shifted, 0.2) == doctest::Approx(log_Z(c, base, 0.2) + 0.5));
  for (double t : {0.0, 0.4, 0.9}) CHECK(std::abs(log_Z(c, tf, t)) <= tf.sup_norm() + 1e-15);

  CHECK(theta(c, base, 0.5) == 0.0);
  const TimeFactor bump(TimeFactor::Kind::bump, 1.0);
  CHECK(theta(c, TestFunctions::pair(constant(1), constant(0), bump), 0.0) ==
        doctest::Approx(0.4));
  const auto tf2 = TestFunctions::pair(constant(0.2), cos1(0.3), TimeFactor::decay(1.0));
  CHECK(theta(c, tf + tf2, 0.3) == doctest::Approx(theta(c, tf, 0.3) + theta(c, tf2, 0.3)));
}

TEST_CASE("generator and fluctuation terms") {
  const auto constant_time = TimeFactor(TimeFactor::Kind::constant, 1.0);
  const auto rates4 = build_rate_table(asep(1, 0), 4);
  const auto abab = new_ring(4, kAB, {0, 1, 0, 1});
  const auto psi = TestFunctions::pair(cos1(), constant(0), constant_time);

  SUBCASE("N = 4 hand evaluation") {
    // bond increments of log Z are -1/4, +1/4, +1/4, -1/4; every rate is 16
    const double expected = 32.0 * (2.0 * std::cosh(0.25) - 2.0);
    CHECK(generator_term(abab, psi, rates4, 0.0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(generator_term(abab, psi, rates4, 0.0) ==
          doctest::Approx(brute_force(abab, psi, rates4, 0.0, 1)).epsilon(1e-14));
  }
  SUBCASE("vanishing cases") {
    const auto same = TestFunctions::pair(cos1(), cos1(), constant_time);
    CHECK(generator_term(abab, same, rates4, 0.0) == 0.0);
    CHECK(fluctuation_term(abab, same, rates4, 0.0) == 0.0);
    const auto all_a = new_ring(4, kAB, {0, 0, 0, 0});
    CHECK(generator_term(all_a, psi, rates4, 0.0) == 0.0);
  }
  SUBCASE("random configurations against the direct sum") {
    const auto rates = build_rate_table(asep(1.3, 5.0), 64);
    const auto tf = TestFunctions::pair(FourierSeries{0.2, {0.5, -0.1}, {0.3}}, cos1(-0.4),
                                        TimeFactor::decay(0.05));
    const auto twice = tf.scaled(2.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto c = random_ring(64, seed);
      const double t = 0.01 * static_cast<double>(seed - 1);
      const double L = generator_term(c, tf, rates, t);
      const double R = fluctuation_term(c, tf, rates, t);
      // L cancels between bonds; compare against the size of the summands
      const double scale = rates.exchange(0, 1) * tf.sup_norm();
      CHECK(std::abs(L - brute_force(c, tf, rates, t, 1)) <= 1e-12 * scale);
      CHECK(R == doctest::Approx(brute_force(c, tf, rates, t, 2)).epsilon(1e-12));
      CHECK(R >= 0.0);
      CHECK(std::abs(R - (generator_term(c, twice, rates, t) - 2 * L)) <= 1e-12 * std::max(1.0, R));
    }
  }
  SUBCASE("N R is stable under doubling N") {
    const auto tf = TestFunctions::pair(cos1(), constant(0), constant_time);
    const auto small = random_ring(2048, 11);
    const auto large = random_ring(4096, 12);
    const double r_small = fluctuation_term(small, tf, build_rate_table(asep(1, 0), 2048), 0.0);
    const double r_large = fluctuation_term(large, tf, build_rate_table(asep(1, 0), 4096), 0.0);
    CHECK(r_large / r_small == doctest::Approx(0.5).epsilon(0.1));
  }
  SUBCASE("three species") {
    ScalingSpec s;
    s.model = ModelKind::nspecies;
    s.alpha = Eigen::MatrixXd::Zero(3, 3);
    s.alpha(0, 1) = 1;
    s.alpha(1, 0) = -1;
    s.alpha(1, 2) = 2;
    s.alpha(2, 1) = -2;
    const auto rates = build_rate_table(s, 30);
    Rng rng(9);
    std::vector<Species> sites(30);
    for (auto& v : sites) v = static_cast<Species>(rng.bits() % 3);
    const auto c = new_ring(30, SpeciesAlphabet::letters(3), sites);
    const TestFunctions tf({cos1(0.3), FourierSeries{0.0, {}, {0.8}}, constant(0.1)},
                           TimeFactor::decay(1.0));
    CHECK(generator_term(c, tf, rates, 0.2) ==
          doctest::Approx(brute_force(c, tf, rates, 0.2, 1)).epsilon(1e-12));
    CHECK(fluctuation_term(c, tf, rates, 0.2) ==
          doctest::Approx(brute_force(c, tf, rates, 0.2, 2)).epsilon(1e-12));
  }
}

TEST_CASE("martingale path") {
  const double T = 0.05;
  const auto rates = build_rate_table(asep(1, 2), 128);
  const auto c = random_ring(128, 21);

  SUBCASE("equal test functions give U = 0") {
    const auto tf = TestFunctions::pair(cos1(0.8), cos1(0.8), TimeFactor::decay(T));
    MartingaleTracker tracker(c, tf, rates, T, T / 1000);
    SimulateOptions opt;
    opt.sink = &tracker;
    (void)simulate(c, rates, T, {}, 4, opt);
    const auto& path = tracker.path();
    CHECK(path.U.front() == 0.0);
    double worst = 0.0;
    for (std::size_t j = 0; j < path.U.size(); ++j) {
      worst = std::max(worst, std::abs(path.U[j]));
      CHECK(path.L[j] == 0.0);
    }
    CHECK(worst <= 1e-6);
  }
  SUBCASE("streaming and replay agree; Z stays positive") {
    const auto tf = TestFunctions::pair(FourierSeries{0.0, {1.0}, {0.5}}, constant(0),
                                        TimeFactor::decay(T));
    MartingaleTracker tracker(c, tf, rates, T, T / 500);
    SimulateOptions opt;
    opt.sink = &tracker;
    opt.record_events = true;
    const auto traj = simulate(c, rates, T, {}, 8, opt);
    const auto replay = martingale_path(traj, tf, rates, T / 500);
    const auto& path = tracker.path();
    REQUIRE(path.U.size() == replay.U.size());
    CHECK(path.step == doctest::Approx(T / 500));
    CHECK(path.U.front() == 0.0);
    for (std::size_t j = 0; j < path.U.size(); ++j) {
      CHECK(path.Z[j] > 0.0);
      CHECK(path.U[j] == doctest::Approx(replay.U[j]).epsilon(1e-9));
      CHECK(path.L[j] == doctest::Approx(replay.L[j]).epsilon(1e-9));
    }
    // the streamed L matches the exact bond sum on the final configuration
    CHECK(path.L.back() == doctest::Approx(generator_term(traj.snapshots.empty()
                                                              ? traj.initial
                                                              : traj.snapshots.back(),
                                                          tf, rates, T))
                               .epsilon(1e-6));
  }
  SUBCASE("grid guard") {
    const auto tf = TestFunctions::pair(cos1(), constant(0), TimeFactor::decay(T));
    CHECK_THROWS_WITH_AS(MartingaleTracker(c, tf, rates, T, T / 50),
                         doctest::Contains("GridTooCoarse"), Error);
    CHECK_NOTHROW(MartingaleTracker(c, tf, rates, T, T / 100));
  }
}

TEST_CASE("weak residual") {
  const double T = 0.05;
  const auto decay = TimeFactor::decay(T);
  const std::size_t nodes = 201, cells = 64;
  DensityHistory constant_history;
  for (std::size_t j = 0; j < nodes; ++j) constant_history.times.push_back(T * j / (nodes - 1));
  constant_history.density = Eigen::MatrixXd::Constant(cells, nodes, 0.3);
  const FourierSeries p1{0.0, {1.0}, {}}, p2{0.0, {0.0, 0.4}, {0.0, -0.3}};

  SUBCASE("constant density") {
    for (const auto& p : {p1, p2, FourierSeries{0.0, {}, {1.0}}}) {
      CHECK(std::abs(weak_residual(constant_history, p, decay, 1.0, 2.0)) <= 1e-12);
    }
    // a constant test function still sees the telescoping time term
    CHECK(std::abs(weak_residual(constant_history, constant(1.0), decay, 1.0, 2.0)) <= 1e-12);
  }
  SUBCASE("heat solution") {
    const auto rho0 = cosine_profile(0.5, 0.3);
    DensityHistory h;
    h.times = constant_history.times;
    h.density.resize(256, nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
      h.density.col(j) = analytic_heat_solution(rho0, 1.0, h.times[j], 256).density.row(0).transpose();
    }
    h.offset = 0.0;
    CHECK(std::abs(weak_residual(h, p1, decay, 1.0, 0.0)) <= 1e-6);
    const double sum = weak_residual(h, FourierSeries{0.0, {1.0, 0.4}, {0.0, -0.3}}, decay, 1.0, 0.0);
    CHECK(sum == doctest::Approx(weak_residual(h, p1, decay, 1.0, 0.0) +
                                 weak_residual(h, p2, decay, 1.0, 0.0)));
  }
  SUBCASE("two-species form equals the scalar form") {
    DensityHistory a, b;
    a.times = b.times = constant_history.times;
    a.density.resize(cells, nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
      for (std::size_t i = 0; i < cells; ++i) {
        a.density(i, j) = 0.5 + 0.3 * std::cos(2 * kPi * (i + 0.5) / cells) * std::exp(-a.times[j]);
      }
    }
    b.density = 1.0 - a.density.array();
    Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(2, 2);
    alpha(1, 0) = 2.0 / 1.5;
    alpha(0, 1) = -alpha(1, 0);
    const std::vector<DensityHistory> both{a, b};
    for (int sign : {+1, -1}) {
      CHECK(weak_residual(both, 0, p2, decay, 1.5, alpha, sign) ==
            doctest::Approx(weak_residual(a, p2, decay, 1.5, 2.0, sign)).epsilon(1e-12));
    }
  }
  SUBCASE("malformed histories") {
    DensityHistory bad = constant_history;
    bad.times[0] = 0.001;
    CHECK_THROWS_AS((void)weak_residual(bad, p1, decay, 1.0, 0.0), Error);
  }
}
