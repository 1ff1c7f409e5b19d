#include <cmath>

#include "doctest.h"
#include "peg/game_engine.hpp"

using namespace peg;

namespace {

GameConfig rational_game() {
  GameConfig cfg;
  cfg.q_r = Matrix::Identity(3, 3);
  cfg.r = 0.9 * Matrix::Identity(3, 3);
  cfg.pi = Matrix::Identity(3, 3);
  cfg.q = 0.9;
  cfg.x0 = Vector(3);
  cfg.x0 << -10.0, -5.0, -5.0;
  return cfg;
}

const Matrix kI = Matrix::Identity(3, 3);
const double kYStar = 5.3289473684210527;  // 0.9 * 150 / (2 * 38/3)

}  // namespace

TEST_CASE("y_hat on the rational game is the constant 135/25.333") {
  const GameConfig cfg = rational_game();
  const CptParams pursuer = CptParams::rational(Role::pursuer);
  const CptParams evader = CptParams::rational(Role::evader);
  for (double y : {0.5, 1.0, 20.0}) {
    const auto [value, eq] = y_hat(y, cfg, pursuer, evader);
    CHECK(value == doctest::Approx(kYStar).epsilon(1e-7));
    CHECK((eq.p1 - 6.0 * kI).norm() <= 1e-7);
  }
}

TEST_CASE("scalar fixed point converges to y*") {
  const GameConfig cfg = rational_game();
  const FixedPointResult fp = solve_fixed_point(
      cfg, CptParams::rational(Role::pursuer),
      CptParams::rational(Role::evader));
  CHECK(fp.y_star == doctest::Approx(kYStar).epsilon(1e-5));
  CHECK(fp.solution.y_star == doctest::Approx(fp.y_star));
  CHECK((fp.solution.p1 - 6.0 * kI).norm() <= 1e-6);
  CHECK((fp.solution.p2 + 6.0 * kI).norm() <= 1e-6);
  CHECK(fp.y_lo <= fp.y_star);
  CHECK(fp.y_hi >= fp.y_star);
  CHECK(fp.evaluations.size() >= 2);
  // Residual of the consistency condition at the returned point.
  const auto [value, eq] = y_hat(fp.y_star, cfg,
                                 CptParams::rational(Role::pursuer),
                                 CptParams::rational(Role::evader));
  CHECK(std::abs(value - fp.y_star) <= 1e-6 * std::max(1.0, fp.y_star));
}

TEST_CASE("rational scenario-2 game has no fixed point") {
  GameConfig cfg = rational_game();
  std::swap(cfg.r, cfg.pi);
  CHECK_THROWS_AS(solve_fixed_point(cfg, CptParams::rational(Role::pursuer),
                                    CptParams::rational(Role::evader)),
                  NoBracket);
}

TEST_CASE("simulate matches the exact exponential on a diagonal loop") {
  Vector x0(3);
  x0 << 1.0, 2.0, 2.0;
  const double dt = 1e-3;
  const Trajectory traj = simulate(-kI, x0, dt, 2.0, 0.9);
  REQUIRE(traj.times.size() == 2001);
  REQUIRE(traj.states.size() == traj.times.size());
  REQUIRE(traj.dist.size() == traj.times.size());
  REQUIRE(traj.y_running.size() == traj.times.size());
  CHECK(traj.dt == doctest::Approx(dt));
  CHECK((traj.states[1000] - std::exp(-1.0) * x0).norm() <= 1e-9);
  CHECK(traj.dist[1000] ==
        doctest::Approx(3.0 * std::exp(-1.0)).epsilon(1e-9));
  // q * integral ||x||^2 = 0.9 * 9 * (1 - e^{-4}) / 2.
  CHECK(traj.y_running.back() ==
        doctest::Approx(0.9 * 9.0 * (1.0 - std::exp(-4.0)) / 2.0)
            .epsilon(1e-5));
  CHECK_FALSE(traj.captured);  // ||x(2)|| = 3 e^{-2} > 1e-3

  const Trajectory fast = simulate(-12.0 * kI, x0, dt, 2.0, 0.9);
  CHECK(fast.captured);
}

TEST_CASE("performance statistics on the rational capture trajectory") {
  const GameConfig cfg = rational_game();
  const Matrix a_cl = -(6.0 / 0.9 + 6.0) * kI;
  const Trajectory traj = simulate(a_cl, cfg.x0, 1e-3, 20.0, cfg.q);
  CHECK(traj.captured);
  const PerformanceStats stats =
      performance_stats(traj, cfg, 6.0 * kI, -6.0 * kI);
  CHECK(stats.sigma == doctest::Approx(traj.y_running.back()));
  CHECK(stats.sigma == doctest::Approx(kYStar).epsilon(1e-4));
  // Integrand x'(Q_r + K1 R^{-1} K1 - K2 Pi^{-1} K2)x with the optimal
  // feedback: (1 + 40 - 36) ||x||^2 = 5 ||x||^2, so J_run = 5 sigma / q.
  CHECK(stats.j_run ==
        doctest::Approx(5.0 * stats.sigma / cfg.q).epsilon(1e-6));
}

TEST_CASE("Monte Carlo sampling is seeded and unbiased") {
  const GameConfig cfg = rational_game();
  const Matrix a_cl = -(6.0 / 0.9 + 6.0) * kI;
  const Trajectory traj = simulate(a_cl, cfg.x0, 1e-3, 20.0, cfg.q);
  const Matrix p1 = 6.0 * kI;
  const Matrix p2 = -6.0 * kI;
  const MonteCarloStats a = monte_carlo_J(traj, cfg, p1, p2, 2000, 42);
  const MonteCarloStats b = monte_carlo_J(traj, cfg, p1, p2, 2000, 42);
  CHECK(a.mean == b.mean);
  CHECK(a.stddev == b.stddev);
  const MonteCarloStats c = monte_carlo_J(traj, cfg, p1, p2, 2000, 43);
  CHECK(a.mean != c.mean);

  const PerformanceStats stats = performance_stats(traj, cfg, p1, p2);
  CHECK(std::abs(a.mean - stats.j_run) <= 5.0 * a.mean_se);
  // sigma of J is q * integral x'x / q = y_running / q... the sampler draws
  // xi ~ N(0, q^2) against integral x'x, so std ~= sigma.
  CHECK(std::abs(a.stddev / stats.sigma - 1.0) <= 0.1);
  CHECK(a.n == 2000);
}

TEST_CASE("appendix-form decay certificate") {
  // Loop -Delta_S W with Delta_S = I/9, W = 2I: x(t) = e^{-2t/9} x0 and
  // V = x'Wx/2 meets the certified rate 2 * (1/9) * 4 / 2 = 4/9 exactly.
  Vector x0(3);
  x0 << -10.0, -5.0, -5.0;
  const Matrix delta_s = kI / 9.0;
  const Matrix w = 2.0 * kI;
  const Trajectory traj = simulate(-delta_s * w, x0, 1e-3, 5.0, 0.9);
  const DecayReport report =
      decay_check(traj, 2.0, 2.0, delta_s, w, ClosedLoopForm::appendix_d);
  CHECK(report.holds);
  CHECK(report.rate == doctest::Approx(4.0 / 9.0).epsilon(1e-10));
  CHECK(report.first_violation == -1);
}

TEST_CASE("appendix-form decay rejects a mismatched loop") {
  Vector x0 = Vector::Ones(3);
  const Trajectory traj = simulate(-kI, x0, 1e-2, 1.0, 0.9);
  CHECK_THROWS_AS(decay_check(traj, 2.0, 2.0, kI / 9.0, 2.0 * kI,
                              ClosedLoopForm::appendix_d),
                  DynamicsFormMismatch);
}

TEST_CASE("controller-form decay fit") {
  const GameConfig cfg = rational_game();
  const Matrix a_cl = -(6.0 / 0.9 + 6.0) * kI;
  const Trajectory traj = simulate(a_cl, cfg.x0, 1e-3, 0.5, cfg.q);
  const DecayReport report = decay_check(traj, 0.0, 0.0, kI / 9.0,
                                         6.0 * kI, ClosedLoopForm::controller);
  CHECK(report.holds);
  CHECK(report.fit_r2 > 0.99);
  // V = x'P1x/2 decays as e^{-2 * 12.667 t}.
  CHECK(report.rate == doctest::Approx(2.0 * (6.0 / 0.9 + 6.0)).epsilon(1e-3));
}

TEST_CASE("local Nash spot check holds at the rational equilibrium") {
  const GameConfig cfg = rational_game();
  const FixedPointResult fp = solve_fixed_point(
      cfg, CptParams::rational(Role::pursuer),
      CptParams::rational(Role::evader));
  const NashReport report = nash_spot_check(
      fp.solution, cfg, CptParams::rational(Role::pursuer),
      CptParams::rational(Role::evader), 20,
      0.01 * fp.solution.p1.norm(), 7);
  CHECK(report.n_checked == 20);
  CHECK(report.pursuer_violations == 0);
  CHECK(report.evader_violations == 0);
  // Transformed-game loop -R^{-1}K1 - Pi^{-1}K2 = -(2/3) I with running
  // weight (4 + 40 - 36) I = 8 I gives M = 6 I, so J = 6 * 150 = 900.
  CHECK(report.j1_eq == doctest::Approx(900.0).epsilon(1e-6));
  CHECK(report.j2_eq == doctest::Approx(900.0).epsilon(1e-6));
}
