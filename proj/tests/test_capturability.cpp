#include <cmath>

#include "doctest.h"
#include "peg/capturability.hpp"

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

const ConditionEntry* find_condition(const ConditionReport& report, int id) {
  for (const auto& c : report.conditions)
    if (c.id == id) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("rational lemma margins") {
  const LemmaResult s1 = check_lemma(0.9 * kI, kI);
  CHECK(s1.capture);
  CHECK(s1.margin == doctest::Approx(1.0 / 9.0).epsilon(1e-10));
  const LemmaResult s2 = check_lemma(kI, 0.9 * kI);
  CHECK_FALSE(s2.capture);
  CHECK(s2.margin == doctest::Approx(-1.0 / 9.0).epsilon(1e-10));
  const LemmaResult s3 = check_lemma(kI, kI);
  CHECK_FALSE(s3.capture);
  CHECK(s3.margin == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("boundary matrices at the rational degenerate box") {
  const GameConfig cfg = rational_game();
  const ScenarioInfo scenario = classify_scenario(cfg.r, cfg.pi);
  const BoundaryMatrices b = boundary_matrices(
      cfg, 0.0, 0.0, BoundPair{0.0, 0.0}, scenario, SqrtMode::corrected);
  // d = D = 0: both X operands are 4 Q_r, both Y operands are -4 A2 = 4 Q_r;
  // the square roots all collapse to the rational gain 6 I.
  CHECK((b.x_min - 6.0 * kI).norm() <= 1e-10);
  CHECK((b.x_max - 6.0 * kI).norm() <= 1e-10);
  CHECK((b.y_min - 6.0 * kI).norm() <= 1e-10);
  CHECK((b.y_max - 6.0 * kI).norm() <= 1e-10);
}

TEST_CASE("boundary matrices reject an over-wide box") {
  const GameConfig cfg = rational_game();
  const ScenarioInfo scenario = classify_scenario(cfg.r, cfg.pi);
  CHECK_THROWS_AS(boundary_matrices(cfg, 0.0, 0.0, BoundPair{0.0, 10.0},
                                    scenario, SqrtMode::corrected),
                  OperandNotPD);
  try {
    boundary_matrices(cfg, 0.0, 0.0, BoundPair{0.0, 10.0}, scenario,
                      SqrtMode::corrected);
  } catch (const OperandNotPD& e) {
    CHECK(e.condition_id == 30);  // 4 A1 - D^2 Pi^{-1} fails first
  }
}

TEST_CASE("theorem conditions pass on the rational instance") {
  const GameConfig cfg = rational_game();
  const ConditionReport report =
      check_theorem1(cfg, 0.0, 0.0, BoundPair{0.0, 0.0});
  CHECK(report.scenario == Scenario::S1);
  CHECK(report.overall);
  REQUIRE(report.conditions.size() == 4);
  for (int id : {30, 31, 32, 33}) {
    const ConditionEntry* c = find_condition(report, id);
    REQUIRE(c != nullptr);
    CHECK(c->pass);
  }
  // At d = D = 0 the ordering conditions are tight.
  CHECK(std::abs(find_condition(report, 32)->margin) <= 1e-9);
  CHECK(std::abs(find_condition(report, 33)->margin) <= 1e-9);
  CHECK(find_condition(report, 30)->margin > 1.0);
}

TEST_CASE("theorem conditions report failure without throwing") {
  const GameConfig cfg = rational_game();
  const ConditionReport report =
      check_theorem1(cfg, 0.0, 0.0, BoundPair{0.0, 10.0});
  CHECK_FALSE(report.overall);
  bool some_failed = false;
  for (const auto& c : report.conditions) some_failed |= !c.pass;
  CHECK(some_failed);
}

TEST_CASE("scenario-2 conditions use ids 34-37") {
  GameConfig cfg = rational_game();
  std::swap(cfg.r, cfg.pi);
  const double psi2 = 0.3989422804014327 * (1.0 - 9.0);
  const auto bounds = search_bounds(cfg, 0.0, psi2);
  REQUIRE(bounds.has_value());
  const ConditionReport report = check_theorem1(cfg, 0.0, psi2, *bounds);
  CHECK(report.scenario == Scenario::S2);
  CHECK(report.overall);
  for (int id : {34, 35, 36, 37}) CHECK(find_condition(report, id) != nullptr);
}

TEST_CASE("search_bounds finds the rational degenerate box") {
  const GameConfig cfg = rational_game();
  const auto bounds = search_bounds(cfg, 0.0, 0.0);
  REQUIRE(bounds.has_value());
  CHECK(bounds->d <= bounds->big_d);
  CHECK(bounds->d >= 0.0);
  CHECK(check_theorem1(cfg, 0.0, 0.0, *bounds).overall);
  // The rational fixed point W = 0 must be inside the certified box.
  CHECK(bounds->d <= 1e-6);
}

TEST_CASE("search_bounds reports infeasibility for a rational escape game") {
  GameConfig cfg = rational_game();
  std::swap(cfg.r, cfg.pi);  // scenario 2 with rational players: no capture
  CHECK_FALSE(search_bounds(cfg, 0.0, 0.0).has_value());
}

TEST_CASE("single-point feasible set is still found") {
  // eps2 = 4 on the scenario-1 matrices: |T'(w*)| > 1, so the only
  // certifiable box is the fixed point itself.
  const GameConfig cfg = rational_game();
  const double psi2 = 0.3989422804014327 * (1.0 - 4.0);
  const auto bounds = search_bounds(cfg, 0.0, psi2);
  REQUIRE(bounds.has_value());
  CHECK(check_theorem1(cfg, 0.0, psi2, *bounds).overall);
  CHECK(bounds->big_d - bounds->d <= 1e-3);
  CHECK(bounds->d == doctest::Approx(1.2215).epsilon(1e-2));
}
