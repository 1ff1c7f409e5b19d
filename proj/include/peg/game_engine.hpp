// Outer layer of the solver: the scalar fixed point tying the CPT shift to
// the closed-loop trajectory energy, RK4 simulation of the capture
// trajectory, performance statistics, and the Monte Carlo / decay / local
// Nash spot checks.
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "peg/capturability.hpp"
#include "peg/cpt.hpp"
#include "peg/equilibrium.hpp"
#include "peg/numerics.hpp"

namespace peg {

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> dist;       // ||x(t)||
  std::vector<double> y_running;  // q * integral of x^T x, trapezoidal
  double dt = 0.0;
  Matrix a;  // loop matrix the trajectory was generated under
  double capture_radius = 1e-3;
  bool captured = false;
};

struct FixedPointResult {
  double y_star = 0.0;
  double y_lo = 0.0;  // bracket that was bisected
  double y_hi = 0.0;
  std::vector<std::pair<double, double>> evaluations;  // (y, Y_hat(y))
  EquilibriumSolution solution;
};

struct EngineOptions {
  CoupledOptions coupled;
  // Seed for the inner iteration; W0 = ((d + D)/2) I. Defaults to the origin.
  std::optional<BoundPair> bounds;
  double y_tol = 1e-6;          // |Y_hat(y) - y| <= y_tol * max(1, y)
  double y_floor_scale = 1e-8;  // floor = scale * max(1, ||x0||^2)
  double y_cap_scale = 1e6;     // bracket cap = scale * max(1, ||x0||^2)
  double scenario3_kappa = 1.0;
  double dt = 1e-3;
  double horizon = 20.0;
  double capture_radius = 1e-3;
};

struct InnerSolveFailed : std::runtime_error {
  explicit InnerSolveFailed(const std::string& what)
      : std::runtime_error(what) {}
};

struct NoBracket : std::runtime_error {
  explicit NoBracket(const std::string& what) : std::runtime_error(what) {}
};

struct DynamicsFormMismatch : std::runtime_error {
  explicit DynamicsFormMismatch(const std::string& what)
      : std::runtime_error(what) {}
};

// One evaluation of the induced map: Psi_i at H = y, inner equilibrium
// solve, closed loop (controller form, required Hurwitz), Lyapunov
// certificate M with A^T M + M A = -q I, and Y_hat = x0^T M x0.
std::pair<double, EquilibriumSolution> y_hat(double y, const GameConfig& cfg,
                                             const CptParams& pursuer,
                                             const CptParams& evader,
                                             const ChiPair& chi1,
                                             const ChiPair& chi2,
                                             const EngineOptions& opt = {});
std::pair<double, EquilibriumSolution> y_hat(double y, const GameConfig& cfg,
                                             const CptParams& pursuer,
                                             const CptParams& evader,
                                             const EngineOptions& opt = {});

// Brackets a sign change of g(y) = Y_hat(y) - y by doubling from the floor,
// then bisects to |g| <= y_tol * max(1, y). The smallest detected fixed
// point is returned; every evaluation is recorded.
FixedPointResult solve_fixed_point(const GameConfig& cfg,
                                   const CptParams& pursuer,
                                   const CptParams& evader,
                                   const EngineOptions& opt = {});

// Classical RK4 on xdot = A x with trapezoidal accumulation of
// y = q * integral x^T x. Capture verdict: ||x(horizon)|| <= radius.
Trajectory simulate(const Matrix& a, const Vector& x0, double dt,
                    double horizon, double q, double capture_radius = 1e-3);

struct PerformanceStats {
  double j_run = 0.0;  // trapezoidal integral of x'Q_r x + u'Ru - v'Pi v
  double sigma = 0.0;  // q * integral x'x; identical to final y_running
};

PerformanceStats performance_stats(const Trajectory& traj,
                                   const GameConfig& cfg, const Matrix& p1,
                                   const Matrix& p2);

struct MonteCarloStats {
  double mean = 0.0;
  double stddev = 0.0;
  double mean_se = 0.0;  // stddev / sqrt(n)
  double std_se = 0.0;   // stddev / sqrt(2n)
  int n = 0;
};

// Samples J_k = J_run + xi_k * (integral x'x) with xi ~ N(0, q^2); the
// generator is seeded per call, so identical seeds reproduce samples.
MonteCarloStats monte_carlo_J(const Trajectory& traj, const GameConfig& cfg,
                              const Matrix& p1, const Matrix& p2, int n,
                              std::uint64_t seed);

struct DecayReport {
  bool holds = false;
  double rate = 0.0;     // certified rate (appendix form) or fitted rate
  double fit_r2 = 0.0;   // exponential-fit quality (controller form)
  int first_violation = -1;
  double first_violation_time = 0.0;
};

// Appendix form: the loop must equal -Delta_S * W (else
// DynamicsFormMismatch) and V(t) = x'Wx/2 must satisfy
// V(t) <= V(0) exp(-rho t) at every sample with
// rho = 2 lambda_min(Delta_S) lambda_min(W)^2 / lambda_max(W).
// Controller form: V must decrease strictly; an exponential rate is fitted
// and reported, not asserted against the certified rho.
DecayReport decay_check(const Trajectory& traj, double d, double big_d,
                        const Matrix& delta_s, const Matrix& w,
                        ClosedLoopForm form);

struct NashReport {
  int n_checked = 0;
  int pursuer_violations = 0;
  int evader_violations = 0;
  int pursuer_unstable = 0;  // consistent: infinite cost for the minimizer
  int evader_rejected = 0;   // destabilizing evader deviations are discarded
  double worst_pursuer_margin = 0.0;  // most negative J1(pert) - J1(eq)
  double worst_evader_margin = 0.0;   // most positive J2(pert) - J2(eq)
  double j1_eq = 0.0;
  double j2_eq = 0.0;
};

// Local best-response check of the gain pair in the transformed game the
// coupled equations actually solve: player i pays
// integral of x' 4(Q_r + Psi_i q I) x + u'Ru - v'Pi v along
// xdot = (-R^{-1}K1 - Pi^{-1}K2) x. At (P1, P2) both stationarity
// conditions reduce to the coupled equations, so the pursuer must not
// improve by perturbing P1 (J1 decreasing) nor the evader by perturbing P2
// (J2 increasing); tolerance 1e-6 relative.
NashReport nash_spot_check(const EquilibriumSolution& eq,
                           const GameConfig& cfg, const CptParams& pursuer,
                           const CptParams& evader, int n_perturbations,
                           double magnitude, std::uint64_t seed);

}  // namespace peg
