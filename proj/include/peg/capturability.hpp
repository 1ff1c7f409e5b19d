// Capture-condition checks: the rational necessary-and-sufficient test,
// the scenario-matched sufficient conditions with their boundary matrices,
// and a grid search for feasible bound pairs (d, D).
#pragma once

#include <optional>
#include <vector>

#include "peg/equilibrium.hpp"
#include "peg/numerics.hpp"

namespace peg {

struct BoundPair {
  double d = 0.0;
  double big_d = 0.0;  // d <= big_d
};

struct LemmaResult {
  bool capture = false;
  double margin = 0.0;  // lambda_min(R^{-1} - Pi^{-1})
};

struct BoundaryMatrices {
  Matrix x_min, x_max, y_min, y_max;
};

struct ConditionEntry {
  int id = 0;        // 30..33 (S1), 34..37 (S2), 39 (S3), 139 = derived S3 sum
  bool pass = false;
  double margin = 0.0;  // min eigenvalue of the tested expression
  std::string description;
};

struct ConditionReport {
  Scenario scenario = Scenario::Unclassified;
  BoundPair bounds;
  std::vector<ConditionEntry> conditions;
  bool overall = false;
  std::optional<BoundaryMatrices> boundary;
};

struct OperandNotPD : std::runtime_error {
  int condition_id;
  OperandNotPD(int id, const std::string& what)
      : std::runtime_error(what), condition_id(id) {}
};

// Rational capture test: lambda_min(R^{-1} - Pi^{-1}) > 0.
LemmaResult check_lemma(const Matrix& r, const Matrix& pi);

// The four scenario-matched boundary matrices; throws OperandNotPD naming
// the failing inner operand (which doubles as condition 30/31 or 34/35).
BoundaryMatrices boundary_matrices(const GameConfig& cfg, double psi1,
                                   double psi2, const BoundPair& bounds,
                                   const ScenarioInfo& scenario,
                                   SqrtMode mode);

// Evaluates every condition of the scenario-matched sufficient-condition
// set with margins; failures are report entries, never exceptions.
ConditionReport check_theorem1(const GameConfig& cfg, double psi1,
                               double psi2, const BoundPair& bounds,
                               SqrtMode mode = SqrtMode::corrected);

// Coarse-to-fine grid search for a feasible (d, D); returns the pair
// maximizing the worst condition margin (lexicographically smallest on
// ties), or nothing when the feasible set is empty.
std::optional<BoundPair> search_bounds(const GameConfig& cfg, double psi1,
                                       double psi2,
                                       SqrtMode mode = SqrtMode::corrected);

}  // namespace peg
