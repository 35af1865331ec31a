#include <doctest.h>

#include <cmath>
#include <vector>

#include "hydrolimit/error.hpp"
#include "hydrolimit/pde.hpp"

using namespace hydrolimit;

namespace {

PdeParamsd burgers(double lambda, double mu, int sign = +1) {
  PdeParamsd p;
  p.lambda = lambda;
  p.mu = mu;
  p.drift_sign = sign;
  return p;
}

PdeParamsd abc(double a) {
  PdeParamsd p;
  p.alpha = Eigen::MatrixXd::Zero(3, 3);
  p.alpha(0, 1) = p.alpha(1, 2) = p.alpha(2, 0) = a;
  p.alpha(1, 0) = p.alpha(2, 1) = p.alpha(0, 2) = -a;
  return p;
}

GridStated cosine_state(Eigen::Index cells, double amplitude = 0.3) {
  const std::vector<FourierSeries> f{cosine_profile(0.5, amplitude)};
  return sample_grid(std::span<const FourierSeries>(f), cells);
}

GridStated simplex_state(Eigen::Index cells) {
  const std::vector<FourierSeries> f{FourierSeries{1.0 / 3, {0.2}, {}},
                                     FourierSeries{1.0 / 3, {-0.1}, {0.15}},
                                     FourierSeries{1.0 / 3, {-0.1}, {-0.15}}};
  return sample_grid(std::span<const FourierSeries>(f), cells);
}

double heat_error(Eigen::Index cells) {
  const std::vector<double> cp{0.05};
  const auto traj = solve(cosine_state(cells), burgers(1, 0), PdeModel::burgers, 0.05,
                          std::span<const double>(cp));
  const auto exact = analytic_heat_solution(cosine_profile(0.5, 0.3), 1.0, 0.05, cells);
  return (traj.states.back().density - exact.density).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("constant states are fixed points") {
  GridStated s{Eigen::MatrixXd::Constant(1, 32, 0.37), 0.0};
  const auto p = burgers(1, 3);
  const double dt = burgers_cfl_bound(s.dx(), p);
  const auto next = step_burgers(s, p, dt);
  CHECK(next.density == s.density);
  CHECK(next.time == dt);

  GridStated u{Eigen::MatrixXd::Constant(3, 32, 1.0 / 3), 0.0};
  const auto q = abc(2.0);
  const auto after = step_nspecies(u, q, nspecies_cfl_bound(u.dx(), q));
  CHECK((after.density - u.density).cwiseAbs().maxCoeff() <= 1e-16);
}

TEST_CASE("heat oracle and order of accuracy") {
  const double e128 = heat_error(128), e256 = heat_error(256);
  CHECK(e256 <= 1e-4);
  CHECK(e128 / e256 >= 3.2);
  CHECK(e128 / e256 <= 4.8);
  const double order = std::log2(e128 / e256);
  CHECK(order >= 1.8);
  CHECK(order <= 2.2);
}

TEST_CASE("mass conservation over 10^4 steps") {
  auto s = cosine_state(128, 0.4);
  const auto p = burgers(1, 4, -1);
  const double dt = 0.4 * burgers_cfl_bound(s.dx(), p);
  const double m0 = s.mass()(0);
  for (int i = 0; i < 10000; ++i) s = step_burgers(s, p, dt);
  CHECK(std::abs(s.mass()(0) - m0) <= 1e-10 * m0);
  CHECK(s.density.minCoeff() >= -1e-8);
  CHECK(s.density.maxCoeff() <= 1 + 1e-8);

  auto u = simplex_state(96);
  const auto q = abc(1.0);
  const double dtq = 0.4 * nspecies_cfl_bound(u.dx(), q);
  const Eigen::VectorXd mass0 = u.mass();
  for (int i = 0; i < 10000; ++i) u = step_nspecies(u, q, dtq);
  for (Eigen::Index k = 0; k < 3; ++k) {
    CHECK(std::abs(u.mass()(k) - mass0(k)) <= 1e-10 * mass0(k));
  }
  const Eigen::RowVectorXd total = u.density.colwise().sum();
  CHECK((total.array() - 1.0).abs().maxCoeff() <= 1e-8);
}

TEST_CASE("two-species system reduces to Burgers") {
  const double lambda = 1.3, mu = 2.0;
  for (int sign : {+1, -1}) {
    GridStated b = cosine_state(64, 0.35);
    GridStated n{Eigen::MatrixXd(2, 64), 0.0};
    n.density.row(0) = b.density.row(0);
    n.density.row(1) = 1.0 - b.density.row(0).array();
    const auto pb = burgers(lambda, mu, sign);
    PdeParamsd pn;
    pn.lambda = lambda;
    pn.drift_sign = sign;
    pn.alpha = Eigen::MatrixXd::Zero(2, 2);
    pn.alpha(1, 0) = mu / lambda;
    pn.alpha(0, 1) = -mu / lambda;
    const double dt =
        0.4 * std::min(burgers_cfl_bound(b.dx(), pb), nspecies_cfl_bound(n.dx(), pn));
    for (int i = 0; i < 2000; ++i) {
      b = step_burgers(b, pb, dt);
      n = step_nspecies(n, pn, dt);
    }
    CHECK((n.density.row(0) - b.density.row(0)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((n.density.row(1) - (1.0 - b.density.row(0).array()).matrix()).cwiseAbs().maxCoeff() <=
          1e-8);
  }
}

TEST_CASE("step errors") {
  auto s = cosine_state(64);
  const auto p = burgers(1, 1);
  const double bound = burgers_cfl_bound(s.dx(), p);
  CHECK_THROWS_WITH_AS((void)step_burgers(s, p, 1.01 * bound), doctest::Contains("CflViolation"),
                       Error);
  CHECK_NOTHROW((void)step_burgers(s, p, bound));
  GridStated over{Eigen::MatrixXd::Constant(1, 16, 1.2), 0.0};
  CHECK_THROWS_WITH_AS((void)step_burgers(over, p, 0.5 * burgers_cfl_bound(over.dx(), p)),
                       doctest::Contains("OutOfRange"), Error);
  auto u = simplex_state(32);
  const auto q = abc(1.0);
  CHECK_THROWS_WITH_AS((void)step_nspecies(u, q, 2 * nspecies_cfl_bound(u.dx(), q)),
                       doctest::Contains("CflViolation"), Error);
  PdeParamsd wrong = q;
  wrong.alpha = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS((void)step_nspecies(u, wrong, 1e-6), Error);
}

TEST_CASE("solve") {
  const auto s = cosine_state(64);
  SUBCASE("zero horizon") {
    const std::vector<double> cp{0.0};
    const auto traj = solve(s, burgers(1, 1), PdeModel::burgers, 0.0, std::span<const double>(cp));
    REQUIRE(traj.states.size() == 1);
    CHECK(traj.states[0].density == s.density);
    CHECK(traj.steps == 0);
  }
  SUBCASE("checkpoints land exactly") {
    const std::vector<double> cp{0.001, 0.0123, 0.02};
    const auto traj = solve(s, burgers(1, 1), PdeModel::burgers, 0.02, std::span<const double>(cp));
    REQUIRE(traj.states.size() == 3);
    for (std::size_t j = 0; j < 3; ++j) CHECK(traj.states[j].time == cp[j]);
    CHECK(traj.dt == doctest::Approx(0.4 * burgers_cfl_bound(s.dx(), burgers(1, 1))));
    CHECK(traj.steps > 0);
  }
  SUBCASE("bad checkpoints") {
    const std::vector<double> outside{0.5};
    CHECK_THROWS_AS((void)solve(s, burgers(1, 1), PdeModel::burgers, 0.1,
                                std::span<const double>(outside)),
                    Error);
    const std::vector<double> negative{-0.1};
    CHECK_THROWS_AS((void)solve(s, burgers(1, 1), PdeModel::burgers, 0.1,
                                std::span<const double>(negative)),
                    Error);
  }
  SUBCASE("maximum principle") {
    const std::vector<double> cp{0.05};
    const auto traj = solve(cosine_state(128, 0.49), burgers(1, 4), PdeModel::burgers, 0.05,
                            std::span<const double>(cp));
    CHECK(traj.states.back().density.minCoeff() >= -1e-8);
    CHECK(traj.states.back().density.maxCoeff() <= 1 + 1e-8);
  }
}

TEST_CASE("analytic heat solution") {
  const FourierSeries f{0.5, {0.2, 0.05}, {0.1}};
  const auto at0 = analytic_heat_solution(f, 1.0, 0.0, 50);
  for (Eigen::Index j = 0; j < 50; ++j) CHECK(at0.density(0, j) == doctest::Approx(f(at0.center(j))));

  const auto flat = analytic_heat_solution(FourierSeries{0.7, {}, {}}, 1.0, 3.0, 10);
  CHECK((flat.density.array() == 0.7).all());

  const double t = 0.02;
  const auto one = analytic_heat_solution(cosine_profile(0.5, 0.3), 1.0, t, 40);
  const double factor = std::exp(-4 * std::numbers::pi * std::numbers::pi * t);
  for (Eigen::Index j = 0; j < 40; ++j) {
    CHECK(one.density(0, j) ==
          doctest::Approx(0.5 + 0.3 * factor * std::cos(2 * std::numbers::pi * one.center(j))));
  }
}

TEST_CASE("bin_average") {
  GridStated s{Eigen::MatrixXd(1, 4), 0.0};
  s.density << 1, 0, 0.5, 0.5;
  const auto b = bin_average(s, 2);
  CHECK(b(0, 0) == 0.5);
  CHECK(b(0, 1) == 0.5);
  CHECK_THROWS_WITH_AS((void)bin_average(s, 3), doctest::Contains("BinMismatch"), Error);
}
