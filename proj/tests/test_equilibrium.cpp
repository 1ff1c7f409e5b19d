#include <cmath>

#include "doctest.h"
#include "peg/equilibrium.hpp"

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

}  // namespace

TEST_CASE("scenario classification") {
  CHECK(classify_scenario(0.9 * kI, kI).label == Scenario::S1);
  CHECK(classify_scenario(kI, 0.9 * kI).label == Scenario::S2);
  CHECK(classify_scenario(kI, kI).label == Scenario::S3);
  // Indefinite difference of the inverses: neither ordering holds.
  Matrix r = kI;
  r(0, 0) = 0.5;
  r(1, 1) = 2.0;
  CHECK(classify_scenario(r, kI).label == Scenario::Unclassified);

  const ScenarioInfo s1 = classify_scenario(0.9 * kI, kI);
  REQUIRE(s1.delta_s.has_value());
  CHECK((*s1.delta_s - kI / 9.0).norm() <= 1e-12);
}

TEST_CASE("GameConfig validation") {
  GameConfig cfg = rational_game();
  CHECK_NOTHROW(cfg.validate());
  cfg.r(0, 0) = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
  cfg = rational_game();
  cfg.q = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
}

TEST_CASE("rational saddle-point gain is 3I") {
  const GameConfig cfg = rational_game();
  const Matrix p = solve_rational(cfg);
  CHECK((p - 3.0 * kI).norm() <= 1e-10);
  GameConfig swapped = cfg;
  std::swap(swapped.r, swapped.pi);
  CHECK_THROWS_AS(solve_rational(swapped), NotScenario1);
}

TEST_CASE("Brouwer step at the rational point: corrected vs strict") {
  const GameConfig cfg = rational_game();
  const ScenarioInfo scenario = classify_scenario(cfg.r, cfg.pi);
  const Matrix w0 = Matrix::Zero(3, 3);

  const BrouwerStep corrected =
      brouwer_step(w0, cfg, 0.0, 0.0, scenario, SqrtMode::corrected);
  CHECK((corrected.x - 6.0 * kI).norm() <= 1e-10);
  CHECK((corrected.y - 6.0 * kI).norm() <= 1e-10);
  CHECK(corrected.t.norm() <= 1e-10);
  // X delta_S X reproduces the quadratic target 4 Q_r.
  CHECK((corrected.x * (*scenario.delta_s) * corrected.x - 4.0 * kI).norm() <=
        1e-10);

  const BrouwerStep strict =
      brouwer_step(w0, cfg, 0.0, 0.0, scenario, SqrtMode::strict);
  CHECK((strict.x - 18.0 * kI).norm() <= 1e-10);
  // The strict branch does not satisfy the congruence: 18 * (1/9) * 18 = 36.
  const double residual = max_eigenvalue(
      strict.x * (*scenario.delta_s) * strict.x - 4.0 * kI);
  CHECK(residual == doctest::Approx(32.0).epsilon(1e-9));
}

TEST_CASE("Brouwer guard failure names the condition") {
  const GameConfig cfg = rational_game();
  const ScenarioInfo scenario = classify_scenario(cfg.r, cfg.pi);
  // |W| = 10 violates 4 A1 - W Pi^{-1} W > 0 (4 - 100 < 0).
  CHECK_THROWS_AS(brouwer_step(10.0 * kI, cfg, 0.0, 0.0, scenario,
                               SqrtMode::corrected),
                  SquareRootDomain);
}

TEST_CASE("solve_coupled recovers the rational equilibrium") {
  const GameConfig cfg = rational_game();
  const EquilibriumSolution eq = solve_coupled(cfg, 0.0, 0.0, 0.0, 0.0);
  CHECK((eq.p1 - 6.0 * kI).norm() <= 1e-8);
  CHECK((eq.p2 + 6.0 * kI).norm() <= 1e-8);
  CHECK(eq.residual1 <= 1e-8);
  CHECK(eq.residual2 <= 1e-8);
  const auto [r1, r2] = are_residuals(cfg, 0.0, 0.0, eq.p1, eq.p2);
  CHECK(r1 <= 1e-8);
  CHECK(r2 <= 1e-8);
  CHECK((eq.a_cl + (6.0 / 0.9 + 6.0) * kI).norm() <= 1e-7);
}

TEST_CASE("solve_coupled works from a scenario-2 start") {
  GameConfig cfg = rational_game();
  std::swap(cfg.r, cfg.pi);  // R = I, Pi = 0.9 I
  // Strong enough loss aversion flips the sign structure so an equilibrium
  // exists: a1 + a2 < 0 with psi2 = chi+ (1 - eps2), eps2 = 9.
  const double psi2 = 0.3989422804014327 * (1.0 - 9.0);
  const EquilibriumSolution eq = solve_coupled(cfg, 0.0, psi2, 0.0, 0.0);
  CHECK(min_eigenvalue(eq.p1) > 0.0);
  CHECK(max_eigenvalue(eq.p2) < 0.0);
  const auto [r1, r2] = are_residuals(cfg, 0.0, psi2, eq.p1, eq.p2);
  CHECK(r1 <= 1e-8);
  CHECK(r2 <= 1e-8);
}

TEST_CASE("solve_coupled prefers the nonnegative-difference root") {
  // At eps2 = 4 two admissible roots exist; the W >= 0 one is the only one
  // the box certificate can cover, so the solver must land there.
  const GameConfig cfg = rational_game();
  const double psi2 = 0.3989422804014327 * (1.0 - 4.0);
  const EquilibriumSolution eq = solve_coupled(cfg, 0.0, psi2, 0.0, 0.0);
  CHECK(min_eigenvalue(eq.p1) > 0.0);
  CHECK(max_eigenvalue(eq.p2) < 0.0);
  const Matrix w = symmetrize(eq.p1 + eq.p2);
  CHECK(min_eigenvalue(w) > -1e-6);
  CHECK(eq.p1(0, 0) == doctest::Approx(4.7357).epsilon(1e-3));
  const auto [r1, r2] = are_residuals(cfg, 0.0, psi2, eq.p1, eq.p2);
  CHECK(r1 <= 1e-8);
  CHECK(r2 <= 1e-8);
}

TEST_CASE("stacked construction agrees with the fixed-point solver") {
  // The construction needs -(Q_r + psi2 q I) positive definite, so it only
  // applies once the evader's shift is strong enough (here eps2 = 4).
  const GameConfig cfg = rational_game();
  const double psi2 = 0.3989422804014327 * (1.0 - 4.0);
  const auto [p1, p2] = solve_prop5(cfg, 0.0, psi2);
  CHECK(min_eigenvalue(p1) > 0.0);
  CHECK(max_eigenvalue(p2) < 0.0);
  const auto [r1, r2] = are_residuals(cfg, 0.0, psi2, p1, p2);
  CHECK(r1 <= 1e-8);
  CHECK(r2 <= 1e-8);
  // At the rational shift the required sign structure degenerates.
  CHECK_THROWS_AS(solve_prop5(cfg, 0.0, 0.0), PairingInfeasible);
}

TEST_CASE("equal-control-effort solution and its balance guard") {
  GameConfig cfg;
  cfg.q_r = kI;
  cfg.r = kI;
  cfg.pi = kI;
  cfg.q = 1.0;
  cfg.x0 = Vector::Ones(3);
  // Balance: (Q_r + psi1 q I) + (Q_r + psi2 q I) = 0 with psi1 = 0, psi2 = -2.
  const auto [p1, p2] = scenario3_solution(cfg, 0.0, -2.0, 1.0);
  CHECK((p1 - 3.0 * kI).norm() <= 1e-10);  // S = 2I, kappa = 1
  CHECK((p2 + kI).norm() <= 1e-10);
  const auto [r1, r2] = are_residuals(cfg, 0.0, -2.0, p1, p2);
  CHECK(r1 <= 1e-9);
  CHECK(r2 <= 1e-9);
  CHECK_THROWS_AS(scenario3_solution(cfg, 0.0, -1.0, 1.0),
                  InconsistentScenario3);
}

TEST_CASE("closed-loop matrix forms") {
  const GameConfig cfg = rational_game();
  const Matrix p1 = 6.0 * kI;
  const Matrix p2 = -6.0 * kI;
  const Matrix controller =
      closed_loop_matrix(p1, p2, cfg, ClosedLoopForm::controller);
  CHECK((controller + (6.0 / 0.9 + 6.0) * kI).norm() <= 1e-10);
  const Matrix paper =
      closed_loop_matrix(p1, p2, cfg, ClosedLoopForm::paper28);
  CHECK((paper + (6.0 / 0.9 - 6.0) * kI).norm() <= 1e-10);
  const Matrix appendix =
      closed_loop_matrix(p1, p2, cfg, ClosedLoopForm::appendix_d);
  CHECK(appendix.norm() <= 1e-10);  // W = 0 at the rational point
}
