// Solvers for the rational Riccati equation and the coupled CPT algebraic
// Riccati equations: the damped Brouwer fixed-point iteration of the
// difference variable W = P1 + P2, a stacked orthogonal construction, and
// the degenerate equal-control-effort case.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "peg/numerics.hpp"

namespace peg {

struct GameConfig {
  Matrix q_r = Matrix::Identity(3, 3);  // state weight
  Matrix r = Matrix::Identity(3, 3);    // pursuer control weight
  Matrix pi = Matrix::Identity(3, 3);   // evader control weight
  double q = 1.0;                       // std-dev scale of the weight noise
  Vector x0 = Vector::Zero(3);          // initial relative state

  void validate() const;  // throws std::domain_error listing all violations
};

enum class Scenario { S1, S2, S3, Unclassified };

std::string to_string(Scenario s);

struct ScenarioInfo {
  Scenario label = Scenario::Unclassified;
  // R^{-1} - Pi^{-1} (S1) or Pi^{-1} - R^{-1} (S2); unset otherwise.
  std::optional<Matrix> delta_s;
};

enum class SqrtMode { corrected, strict };

enum class ClosedLoopForm { controller, paper28, appendix_d };

struct EquilibriumSolution {
  Matrix p1;               // pursuer gain matrix, positive definite
  Matrix p2;               // evader gain matrix, negative definite
  double psi1 = 0.0;
  double psi2 = 0.0;
  double y_star = 0.0;     // filled by the outer fixed point
  Matrix a_cl;             // controller-form closed loop
  Matrix m;                // Lyapunov certificate, filled by the outer loop
  double residual1 = 0.0;  // Frobenius residuals of the two coupled AREs
  double residual2 = 0.0;
  int iterations = 0;
};

struct SquareRootDomain : std::runtime_error {
  explicit SquareRootDomain(const std::string& what)
      : std::runtime_error(what) {}
};

struct NotScenario1 : std::runtime_error {
  explicit NotScenario1(const std::string& what) : std::runtime_error(what) {}
};

struct NoConvergence : std::runtime_error {
  explicit NoConvergence(const std::string& what)
      : std::runtime_error(what) {}
};

struct PairingInfeasible : std::runtime_error {
  explicit PairingInfeasible(const std::string& what)
      : std::runtime_error(what) {}
};

struct InconsistentScenario3 : std::runtime_error {
  explicit InconsistentScenario3(const std::string& what)
      : std::runtime_error(what) {}
};

ScenarioInfo classify_scenario(const Matrix& r, const Matrix& pi);

// Rational saddle-point gain: P solving P Delta_S P = Q_r (scenario 1 only).
Matrix solve_rational(const GameConfig& cfg);

struct BrouwerStep {
  Matrix x;  // positive definite branch solving its quadratic congruence
  Matrix y;  // positive definite branch
  Matrix t;  // X - Y
};

// One application of the fixed-point map T(W) = X(W) - Y(W); throws
// SquareRootDomain naming the violated operand when a guard fails.
BrouwerStep brouwer_step(const Matrix& w, const GameConfig& cfg, double psi1,
                         double psi2, const ScenarioInfo& scenario,
                         SqrtMode mode);

Matrix brouwer_map(const Matrix& w, const GameConfig& cfg, double psi1,
                   double psi2, const ScenarioInfo& scenario, SqrtMode mode);

struct CoupledOptions {
  double damping = 0.5;
  int max_iter = 500;
  double tol = 1e-10;
  SqrtMode mode = SqrtMode::corrected;
  bool newton_fallback = true;
};

// Damped iteration of the Brouwer map from W0 = ((d + D) / 2) I; recovers
// P1 = X(W*), P2 = -Y(W*). Falls back to Newton on the stacked ARE residual
// when plain damped iteration stalls.
EquilibriumSolution solve_coupled(const GameConfig& cfg, double psi1,
                                  double psi2, double d, double big_d,
                                  const CoupledOptions& options = {});

// Frobenius residuals of the two coupled AREs at (P1, P2).
std::pair<double, double> are_residuals(const GameConfig& cfg, double psi1,
                                        double psi2, const Matrix& p1,
                                        const Matrix& p2);

// Stacked orthogonal construction: builds the 6x6 quadratic-form matrix
// G = S1^{-1/2} S2 S1^{-1/2} and pairs its spectrum against
// H = (Q_r+Psi1 qI)^{-1/2}(-Q_r-Psi2 qI)(Q_r+Psi1 qI)^{-1/2}.
// Accepts only when the ARE residuals pass and P1 > 0 > P2.
std::pair<Matrix, Matrix> solve_prop5(const GameConfig& cfg, double psi1,
                                      double psi2);

// Equal-control-effort solution: P1 = S + kappa I, P2 = -kappa I with
// S R^{-1} S = 4(Q_r + Psi1 qI). Requires the balance condition
// (Q_r + Psi1 qI) + (Q_r + Psi2 qI) = 0.
std::pair<Matrix, Matrix> scenario3_solution(const GameConfig& cfg,
                                             double psi1, double psi2,
                                             double kappa = 1.0);

// controller: -R^{-1} P1 + Pi^{-1} P2 (substitution of the optimal gains
// into xdot = u - v); paper28: -R^{-1} P1 - Pi^{-1} P2; appendix_d:
// -Delta_S (P1 + P2).
Matrix closed_loop_matrix(const Matrix& p1, const Matrix& p2,
                          const GameConfig& cfg,
                          ClosedLoopForm form = ClosedLoopForm::controller);

}  // namespace peg
