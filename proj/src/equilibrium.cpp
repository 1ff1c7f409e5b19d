#include "peg/equilibrium.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace peg {

void GameConfig::validate() const {
  std::ostringstream bad;
  auto check_pd = [&](const Matrix& m, const char* name) {
    if (m.rows() != 3 || m.cols() != 3) {
      bad << name << " must be 3x3; ";
      return;
    }
    if ((m - m.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
      bad << name << " must be symmetric; ";
    } else if (min_eigenvalue(m) <= pd_tolerance(m)) {
      bad << name << " must be positive definite; ";
    }
  };
  check_pd(q_r, "Q_r");
  check_pd(r, "R");
  check_pd(pi, "Pi");
  if (!(q > 0.0)) bad << "q must be > 0; ";
  if (x0.size() != 3) bad << "x0 must be a 3-vector; ";
  if (!bad.str().empty()) throw std::domain_error("GameConfig: " + bad.str());
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::S1: return "S1";
    case Scenario::S2: return "S2";
    case Scenario::S3: return "S3";
    default: return "Unclassified";
  }
}

ScenarioInfo classify_scenario(const Matrix& r, const Matrix& pi) {
  const Matrix r_inv = r.inverse();
  const Matrix pi_inv = pi.inverse();
  const Matrix diff = symmetrize(r_inv - pi_inv);
  const double scale = std::max(r_inv.norm(), pi_inv.norm());
  ScenarioInfo info;
  if (diff.norm() <= 1e-10 * std::max(1.0, scale)) {
    info.label = Scenario::S3;
    return info;
  }
  const double lo = min_eigenvalue(diff);
  const double hi = max_eigenvalue(diff);
  if (lo > 0.0) {
    info.label = Scenario::S1;
    info.delta_s = diff;
  } else if (hi < 0.0) {
    info.label = Scenario::S2;
    info.delta_s = Matrix(-diff);
  }
  return info;
}

Matrix solve_rational(const GameConfig& cfg) {
  cfg.validate();
  const ScenarioInfo info = classify_scenario(cfg.r, cfg.pi);
  if (info.label != Scenario::S1) {
    throw NotScenario1(
        "solve_rational: R^{-1} - Pi^{-1} is not positive definite, capture "
        "is not achievable in the rational game (scenario " +
        to_string(info.label) + ")");
  }
  return congruence_sqrt(cfg.q_r, *info.delta_s);
}

namespace {

Matrix half_sandwich(const Matrix& operand, const Matrix& delta,
                     SqrtMode mode) {
  if (mode == SqrtMode::corrected) return congruence_sqrt(operand, delta);
  const Matrix delta_half_inv = sym_sqrt(delta).inverse();
  return symmetrize(delta_half_inv * psd_sqrt(operand) * delta_half_inv);
}

void require_pd(const Matrix& operand, const char* what) {
  const double lo = min_eigenvalue(operand);
  if (lo <= pd_tolerance(operand)) {
    std::ostringstream msg;
    msg << what << " is not positive definite (lambda_min = " << lo << ")";
    throw SquareRootDomain(msg.str());
  }
}

}  // namespace

BrouwerStep brouwer_step(const Matrix& w, const GameConfig& cfg, double psi1,
                         double psi2, const ScenarioInfo& scenario,
                         SqrtMode mode) {
  if (scenario.label != Scenario::S1 && scenario.label != Scenario::S2) {
    throw SquareRootDomain("brouwer_step: requires scenario S1 or S2");
  }
  const Matrix& delta = *scenario.delta_s;
  const Matrix a1 = cfg.q_r + psi1 * cfg.q * Matrix::Identity(3, 3);
  const Matrix a2 = cfg.q_r + psi2 * cfg.q * Matrix::Identity(3, 3);
  const Matrix w_pi_w = symmetrize(w * cfg.pi.inverse() * w);
  const Matrix w_r_w = symmetrize(w * cfg.r.inverse() * w);

  Matrix op_x, op_y;
  if (scenario.label == Scenario::S1) {
    op_x = 4.0 * a1 - w_pi_w;
    op_y = w_r_w + 4.0 * a2;
    require_pd(op_x, "4(Q_r+Psi1 qI) - W Pi^{-1} W (condition 30 guard)");
    require_pd(op_y, "W R^{-1} W + 4(Q_r+Psi2 qI) (condition 31 guard)");
  } else {
    op_x = w_pi_w - 4.0 * a1;
    op_y = -4.0 * a2 - w_r_w;
    require_pd(op_x, "W Pi^{-1} W - 4(Q_r+Psi1 qI) (condition 34 guard)");
    require_pd(op_y, "-4(Q_r+Psi2 qI) - W R^{-1} W (condition 35 guard)");
  }

  BrouwerStep step;
  step.x = half_sandwich(op_x, delta, mode);
  step.y = half_sandwich(op_y, delta, mode);
  step.t = step.x - step.y;
  return step;
}

Matrix brouwer_map(const Matrix& w, const GameConfig& cfg, double psi1,
                   double psi2, const ScenarioInfo& scenario, SqrtMode mode) {
  return brouwer_step(w, cfg, psi1, psi2, scenario, mode).t;
}

std::pair<double, double> are_residuals(const GameConfig& cfg, double psi1,
                                        double psi2, const Matrix& p1,
                                        const Matrix& p2) {
  const Matrix id = Matrix::Identity(3, 3);
  const Matrix r_inv = cfg.r.inverse();
  const Matrix pi_inv = cfg.pi.inverse();
  const Matrix eq1 = 4.0 * (cfg.q_r + psi1 * cfg.q * id) - p1 * r_inv * p1 -
                     p2 * pi_inv * p2 - p1 * pi_inv * p2 - p2 * pi_inv * p1;
  const Matrix eq2 = 4.0 * (cfg.q_r + psi2 * cfg.q * id) + p1 * r_inv * p1 +
                     p2 * pi_inv * p2 + p2 * r_inv * p1 + p1 * r_inv * p2;
  return {eq1.norm(), eq2.norm()};
}

namespace {

// Stacked ARE residual over the 12-dimensional symmetric parametrization,
// used as a Newton fallback when the damped Brouwer iteration stalls.
struct StackedResidual {
  const GameConfig& cfg;
  double psi1, psi2;

  static Matrix unpack(const Vector& v, int offset) {
    Matrix m(3, 3);
    m << v[offset + 0], v[offset + 1], v[offset + 2],
         v[offset + 1], v[offset + 3], v[offset + 4],
         v[offset + 2], v[offset + 4], v[offset + 5];
    return m;
  }

  static void pack(const Matrix& m, Vector* v, int offset) {
    (*v)[offset + 0] = m(0, 0);
    (*v)[offset + 1] = m(0, 1);
    (*v)[offset + 2] = m(0, 2);
    (*v)[offset + 3] = m(1, 1);
    (*v)[offset + 4] = m(1, 2);
    (*v)[offset + 5] = m(2, 2);
  }

  Vector operator()(const Vector& v) const {
    const Matrix p1 = unpack(v, 0);
    const Matrix p2 = unpack(v, 6);
    const Matrix id = Matrix::Identity(3, 3);
    const Matrix r_inv = cfg.r.inverse();
    const Matrix pi_inv = cfg.pi.inverse();
    const Matrix eq1 = symmetrize(4.0 * (cfg.q_r + psi1 * cfg.q * id) -
                                  p1 * r_inv * p1 - p2 * pi_inv * p2 -
                                  p1 * pi_inv * p2 - p2 * pi_inv * p1);
    const Matrix eq2 = symmetrize(4.0 * (cfg.q_r + psi2 * cfg.q * id) +
                                  p1 * r_inv * p1 + p2 * pi_inv * p2 +
                                  p2 * r_inv * p1 + p1 * r_inv * p2);
    Vector f(12);
    pack(eq1, &f, 0);
    pack(eq2, &f, 6);
    return f;
  }
};

bool newton_refine(const GameConfig& cfg, double psi1, double psi2,
                   Matrix* p1, Matrix* p2, double target) {
  StackedResidual fr{cfg, psi1, psi2};
  Vector x(12);
  StackedResidual::pack(*p1, &x, 0);
  StackedResidual::pack(*p2, &x, 6);
  Vector f = fr(x);
  for (int iter = 0; iter < 200; ++iter) {
    if (f.norm() <= target) break;
    Matrix jac(12, 12);
    for (int j = 0; j < 12; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
      Vector xp = x;
      xp[j] += h;
      jac.col(j) = (fr(xp) - f) / h;
    }
    const Vector step = jac.colPivHouseholderQr().solve(-f);
    double t = 1.0;
    bool improved = false;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      const Vector xn = x + t * step;
      const Vector fn = fr(xn);
      if (fn.norm() < f.norm()) {
        x = xn;
        f = fn;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (f.norm() > target) return false;
  *p1 = StackedResidual::unpack(x, 0);
  *p2 = StackedResidual::unpack(x, 6);
  return true;
}

// Scalar |W| window on which both square-root guards can hold; used to
// reseed the iteration when the caller's seed is inadmissible and to steer
// the solve toward a nonnegative difference variable.
std::pair<double, double> admissible_window(const GameConfig& cfg,
                                            double psi1, double psi2,
                                            const ScenarioInfo& scenario) {
  const Matrix id = Matrix::Identity(3, 3);
  const Matrix a1 = cfg.q_r + psi1 * cfg.q * id;
  const Matrix a2 = cfg.q_r + psi2 * cfg.q * id;
  const Matrix pi_half = sym_sqrt(cfg.pi);
  const Matrix r_half = sym_sqrt(cfg.r);
  double lo2, hi2;
  if (scenario.label == Scenario::S1) {
    hi2 = min_eigenvalue(pi_half * (4.0 * a1) * pi_half);
    lo2 = std::max(0.0, max_eigenvalue(r_half * (-4.0 * a2) * r_half));
  } else {
    lo2 = std::max(0.0, max_eigenvalue(pi_half * (4.0 * a1) * pi_half));
    hi2 = min_eigenvalue(r_half * (-4.0 * a2) * r_half);
  }
  if (!(hi2 > lo2)) {
    std::ostringstream msg;
    msg << "solve_coupled: the square-root guards admit no difference "
           "variable (|W| window ["
        << (lo2 > 0.0 ? std::sqrt(lo2) : 0.0) << ", "
        << (hi2 > 0.0 ? std::sqrt(hi2) : 0.0) << "] is empty)";
    throw SquareRootDomain(msg.str());
  }
  return {std::sqrt(std::max(0.0, lo2)), std::sqrt(hi2)};
}

double admissible_seed(const GameConfig& cfg, double psi1, double psi2,
                       const ScenarioInfo& scenario) {
  const auto [lo, hi] = admissible_window(cfg, psi1, psi2, scenario);
  return 0.5 * (lo + hi);
}

}  // namespace

EquilibriumSolution solve_coupled(const GameConfig& cfg, double psi1,
                                  double psi2, double d, double big_d,
                                  const CoupledOptions& options) {
  cfg.validate();
  const ScenarioInfo scenario = classify_scenario(cfg.r, cfg.pi);
  if (scenario.label != Scenario::S1 && scenario.label != Scenario::S2) {
    throw SquareRootDomain("solve_coupled: requires scenario S1 or S2");
  }

  Matrix w = 0.5 * (d + big_d) * Matrix::Identity(3, 3);
  BrouwerStep step;
  try {
    step = brouwer_step(w, cfg, psi1, psi2, scenario, options.mode);
  } catch (const SquareRootDomain&) {
    w = admissible_seed(cfg, psi1, psi2, scenario) * Matrix::Identity(3, 3);
    step = brouwer_step(w, cfg, psi1, psi2, scenario, options.mode);
  }
  int iterations = 0;
  double gap = (step.t - w).norm();
  while (gap > options.tol && iterations < options.max_iter) {
    // Backtrack toward the current iterate when the damped update leaves
    // the region where the square-root guards hold; the map need not be a
    // self-map away from the theorem's box.
    Matrix w_next = (1.0 - options.damping) * w + options.damping * step.t;
    bool stepped = false;
    for (int bt = 0; bt < 12; ++bt) {
      try {
        step = brouwer_step(w_next, cfg, psi1, psi2, scenario, options.mode);
        stepped = true;
        break;
      } catch (const SquareRootDomain&) {
        w_next = 0.5 * (w + w_next);
      }
    }
    if (!stepped) break;  // leave it to the Newton fallback
    w = w_next;
    gap = (step.t - w).norm();
    ++iterations;
  }

  Matrix p1 = step.x;
  Matrix p2 = -step.y;
  const double residual_target = 1e-8 * std::max(1.0, 4.0 * cfg.q_r.norm());
  auto [res1, res2] = are_residuals(cfg, psi1, psi2, p1, p2);

  if (gap > options.tol || std::max(res1, res2) > residual_target) {
    const bool ok = options.newton_fallback &&
                    newton_refine(cfg, psi1, psi2, &p1, &p2,
                                  0.1 * residual_target);
    if (!ok) {
      std::ostringstream msg;
      msg << "solve_coupled: no convergence after " << iterations
          << " damped iterations (|T(W)-W| = " << gap
          << ", residuals = " << res1 << ", " << res2 << ")";
      throw NoConvergence(msg.str());
    }
    std::tie(res1, res2) = are_residuals(cfg, psi1, psi2, p1, p2);
    // The Newton fallback solves the raw residual system; reject roots that
    // violate the definiteness the equilibrium requires.
    if (min_eigenvalue(symmetrize(p1)) <= pd_tolerance(p1) ||
        max_eigenvalue(symmetrize(p2)) >= -pd_tolerance(p2)) {
      throw NoConvergence(
          "solve_coupled: refined root violates P1 > 0 > P2");
    }
  }

  // The coupled equations can have several admissible roots; the theorem's
  // box construction lives on W = P1 + P2 >= d I >= 0, so when the solve
  // landed on a root with a negative difference variable, look for a
  // nonnegative-W companion root by reseeding across the guard window.
  const double w_slack = 1e-7 * std::max(1.0, p1.norm());
  if (min_eigenvalue(symmetrize(p1 + p2)) < -w_slack) {
    try {
      const auto [w_lo, w_hi] = admissible_window(cfg, psi1, psi2, scenario);
      const int n_seeds = 9;
      for (int k = 0; k < n_seeds; ++k) {
        const double w0 =
            w_lo + (w_hi - w_lo) * (k + 0.5) / n_seeds;
        if (!(w0 >= 0.0)) continue;
        Matrix q1, q2;
        try {
          const BrouwerStep s0 = brouwer_step(w0 * Matrix::Identity(3, 3),
                                              cfg, psi1, psi2, scenario,
                                              options.mode);
          q1 = s0.x;
          q2 = -s0.y;
        } catch (const SquareRootDomain&) {
          continue;
        }
        if (!newton_refine(cfg, psi1, psi2, &q1, &q2, 0.1 * residual_target)) {
          continue;
        }
        if (min_eigenvalue(symmetrize(q1)) > pd_tolerance(q1) &&
            max_eigenvalue(symmetrize(q2)) < -pd_tolerance(q2) &&
            min_eigenvalue(symmetrize(q1 + q2)) >= -w_slack) {
          p1 = q1;
          p2 = q2;
          std::tie(res1, res2) = are_residuals(cfg, psi1, psi2, p1, p2);
          break;
        }
      }
    } catch (const std::exception&) {
      // No admissible window: keep the negative-W root.
    }
  }

  EquilibriumSolution sol;
  sol.p1 = symmetrize(p1);
  sol.p2 = symmetrize(p2);
  sol.psi1 = psi1;
  sol.psi2 = psi2;
  sol.a_cl = closed_loop_matrix(sol.p1, sol.p2, cfg);
  sol.residual1 = res1;
  sol.residual2 = res2;
  sol.iterations = iterations;
  return sol;
}

namespace {

Matrix stack_block(const Matrix& tl, const Matrix& tr, const Matrix& bl,
                   const Matrix& br) {
  Matrix out(6, 6);
  out << tl, tr, bl, br;
  return out;
}

bool commute(const Matrix& a, const Matrix& b) {
  const double scale = std::max(1.0, a.norm() * b.norm());
  return (a * b - b * a).norm() <= 1e-10 * scale;
}

// Per-mode solve for simultaneously diagonalizable inputs: each common
// eigen-direction reduces the stacked construction to a 2x2 quadratic-form
// pairing.
bool prop5_commuting(const GameConfig& cfg, const Matrix& a1,
                     const Matrix& a2, Matrix* p1_out, Matrix* p2_out) {
  if (!commute(cfg.q_r, cfg.r) || !commute(cfg.q_r, cfg.pi) ||
      !commute(cfg.r, cfg.pi)) {
    return false;
  }
  // Any orthonormal eigenbasis of an irrational combination diagonalizes all
  // of them when they pairwise commute.
  const Matrix z = cfg.q_r + std::sqrt(2.0) * cfg.r + std::sqrt(3.0) * cfg.pi;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(z));
  const Matrix v = es.eigenvectors();
  auto diag_of = [&](const Matrix& m) -> std::optional<Vector> {
    const Matrix d = v.transpose() * m * v;
    Matrix off = d;
    off.diagonal().setZero();
    if (off.norm() > 1e-9 * std::max(1.0, m.norm())) return std::nullopt;
    return Vector(d.diagonal());
  };
  const auto da1 = diag_of(a1);
  const auto da2 = diag_of(a2);
  const auto dr = diag_of(cfg.r);
  const auto dpi = diag_of(cfg.pi);
  if (!da1 || !da2 || !dr || !dpi) return false;

  Vector p1_modes(3), p2_modes(3);
  for (int k = 0; k < 3; ++k) {
    const double a1k = (*da1)[k];
    const double a2k = (*da2)[k];
    const double ir = 1.0 / (*dr)[k];
    const double ip = 1.0 / (*dpi)[k];
    if (!(a1k > 0.0) || !(-a2k > 0.0)) return false;
    Eigen::Matrix2d s1, s2;
    s1 << ir, ip, ip, ip;
    s2 << ir, ir, ir, ip;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es1(s1);
    if (es1.eigenvalues().minCoeff() <= 0.0) return false;
    const Eigen::Matrix2d s1_half =
        es1.operatorSqrt();
    const Eigen::Matrix2d g =
        s1_half.inverse() * s2 * s1_half.inverse();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eg(g);
    const double la = eg.eigenvalues()[0];
    const double lb = eg.eigenvalues()[1];
    const double h = -a2k / a1k;
    if (h < la - 1e-12 || h > lb + 1e-12) return false;
    const double c2 = lb > la ? std::clamp((lb - h) / (lb - la), 0.0, 1.0)
                              : 1.0;
    const double c = std::sqrt(c2);
    const double s = std::sqrt(1.0 - c2);
    bool found = false;
    for (const double sigma : {1.0, -1.0}) {
      for (const double tau : {1.0, -1.0}) {
        const Eigen::Vector2d u =
            tau * (c * eg.eigenvectors().col(0) +
                   sigma * s * eg.eigenvectors().col(1));
        const Eigen::Vector2d p =
            2.0 * std::sqrt(a1k) * (s1_half.inverse() * u);
        if (p[0] > 0.0 && p[1] < 0.0) {
          p1_modes[k] = p[0];
          p2_modes[k] = p[1];
          found = true;
          break;
        }
      }
      if (found) break;
    }
    if (!found) return false;
  }
  *p1_out = v * p1_modes.asDiagonal() * v.transpose();
  *p2_out = v * p2_modes.asDiagonal() * v.transpose();
  return true;
}

}  // namespace

std::pair<Matrix, Matrix> solve_prop5(const GameConfig& cfg, double psi1,
                                      double psi2) {
  cfg.validate();
  const Matrix id = Matrix::Identity(3, 3);
  const Matrix a1 = cfg.q_r + psi1 * cfg.q * id;
  const Matrix a2 = cfg.q_r + psi2 * cfg.q * id;
  if (min_eigenvalue(a1) <= pd_tolerance(a1)) {
    throw PairingInfeasible("solve_prop5: Q_r + Psi1 qI is not positive definite");
  }
  if (min_eigenvalue(Matrix(-a2)) <= pd_tolerance(a2)) {
    throw PairingInfeasible("solve_prop5: -(Q_r + Psi2 qI) is not positive definite");
  }
  const double residual_target = 1e-8 * std::max(1.0, 4.0 * cfg.q_r.norm());

  auto accept = [&](const Matrix& p1, const Matrix& p2) {
    const double asym =
        (p1 - p1.transpose()).norm() + (p2 - p2.transpose()).norm();
    if (asym > 1e-6 * std::max(1.0, p1.norm() + p2.norm())) return false;
    const Matrix p1s = symmetrize(p1);
    const Matrix p2s = symmetrize(p2);
    if (min_eigenvalue(p1s) <= 0.0 || max_eigenvalue(p2s) >= 0.0) return false;
    auto [r1, r2] = are_residuals(cfg, psi1, psi2, p1s, p2s);
    return std::max(r1, r2) <= residual_target;
  };

  Matrix p1, p2;
  if (prop5_commuting(cfg, a1, a2, &p1, &p2) && accept(p1, p2)) {
    return {symmetrize(p1), symmetrize(p2)};
  }

  // General spectral pairing on the full stacked forms.
  const Matrix r_inv = cfg.r.inverse();
  const Matrix pi_inv = cfg.pi.inverse();
  const Matrix s1 = stack_block(r_inv, pi_inv, pi_inv, pi_inv);
  const Matrix s2 = stack_block(r_inv, r_inv, r_inv, pi_inv);
  if (min_eigenvalue(s1) <= pd_tolerance(s1)) {
    throw PairingInfeasible("solve_prop5: stacked matrix S1 is not positive definite");
  }
  const Matrix s1_half = sym_sqrt(s1);
  const Matrix s1_half_inv = s1_half.inverse();
  const Matrix g = symmetrize(s1_half_inv * s2 * s1_half_inv);
  const Matrix a1_half = sym_sqrt(a1);
  const Matrix a1_half_inv = a1_half.inverse();
  const Matrix h = symmetrize(a1_half_inv * (-a2) * a1_half_inv);

  Eigen::SelfAdjointEigenSolver<Matrix> eg(g);
  Eigen::SelfAdjointEigenSolver<Matrix> eh(h);
  const Vector lam = eg.eigenvalues();
  const Matrix vg = eg.eigenvectors();
  const Vector mu = eh.eigenvalues();
  const Matrix wh = eh.eigenvectors();

  // For each target eigenvalue pick either an exact match or the tightest
  // bracketing pair of unused G eigenvalues.
  std::array<bool, 6> used{};
  struct ColumnPlan {
    int a = -1, b = -1;  // indices into lam; b < 0 means exact match
    double cos2 = 1.0;
  };
  std::array<ColumnPlan, 3> plan;
  for (int j = 0; j < 3; ++j) {
    ColumnPlan cp;
    for (int i = 0; i < 6; ++i) {
      if (!used[i] && std::abs(lam[i] - mu[j]) <= 1e-9) {
        cp.a = i;
        break;
      }
    }
    if (cp.a < 0) {
      int best_a = -1, best_b = -1;
      for (int i = 0; i < 6; ++i) {
        if (used[i]) continue;
        if (lam[i] <= mu[j] && (best_a < 0 || lam[i] > lam[best_a])) best_a = i;
        if (lam[i] >= mu[j] && (best_b < 0 || lam[i] < lam[best_b])) best_b = i;
      }
      if (best_a < 0 || best_b < 0) {
        throw PairingInfeasible(
            "solve_prop5: no eigenvalue pairing brackets a target eigenvalue");
      }
      cp.a = best_a;
      cp.b = best_b;
      cp.cos2 = lam[best_b] > lam[best_a]
                    ? (lam[best_b] - mu[j]) / (lam[best_b] - lam[best_a])
                    : 1.0;
    }
    used[cp.a] = true;
    if (cp.b >= 0) used[cp.b] = true;
    plan[j] = cp;
  }

  double best_score = std::numeric_limits<double>::infinity();
  Matrix best_p1, best_p2;
  for (int signs = 0; signs < 64; ++signs) {
    Matrix u_cols(6, 3);
    for (int j = 0; j < 3; ++j) {
      const double sigma = (signs >> (2 * j)) & 1 ? -1.0 : 1.0;
      const double tau = (signs >> (2 * j + 1)) & 1 ? -1.0 : 1.0;
      const ColumnPlan& cp = plan[j];
      if (cp.b < 0) {
        u_cols.col(j) = tau * vg.col(cp.a);
      } else {
        const double c = std::sqrt(std::clamp(cp.cos2, 0.0, 1.0));
        const double s = std::sqrt(std::clamp(1.0 - cp.cos2, 0.0, 1.0));
        u_cols.col(j) = tau * (c * vg.col(cp.a) + sigma * s * vg.col(cp.b));
      }
    }
    const Matrix u = u_cols * wh.transpose();
    const Matrix p_stack = 2.0 * s1_half_inv * u * a1_half;
    const Matrix p1c = p_stack.topRows(3);
    const Matrix p2c = p_stack.bottomRows(3);
    auto [r1, r2] = are_residuals(cfg, psi1, psi2, symmetrize(p1c),
                                  symmetrize(p2c));
    const double asym =
        (p1c - p1c.transpose()).norm() + (p2c - p2c.transpose()).norm();
    const double score = std::max(r1, r2) + asym;
    if (score < best_score) {
      best_score = score;
      best_p1 = p1c;
      best_p2 = p2c;
    }
  }
  if (best_p1.size() == 0 || !accept(best_p1, best_p2)) {
    std::ostringstream msg;
    msg << "solve_prop5: spectral pairing produced no admissible solution "
           "(best score "
        << best_score << ")";
    throw PairingInfeasible(msg.str());
  }
  return {symmetrize(best_p1), symmetrize(best_p2)};
}

std::pair<Matrix, Matrix> scenario3_solution(const GameConfig& cfg,
                                             double psi1, double psi2,
                                             double kappa) {
  cfg.validate();
  if (!(kappa > 0.0)) {
    throw std::domain_error("scenario3_solution: kappa must be > 0");
  }
  const Matrix id = Matrix::Identity(3, 3);
  const Matrix a1 = cfg.q_r + psi1 * cfg.q * id;
  const Matrix a2 = cfg.q_r + psi2 * cfg.q * id;
  const Matrix sum_form = 4.0 * a1 + 4.0 * a2;
  const double tol = 1e-8 * std::max(1.0, 4.0 * cfg.q_r.norm());
  if (sum_form.norm() > tol) {
    // Report both the published difference form and the derived sum form.
    const Matrix diff_form = 2.0 * cfg.q_r + (psi1 - psi2) * cfg.q * id;
    std::ostringstream msg;
    msg << "scenario3_solution: balance condition violated; "
        << "||2Q_r + (Psi1 - Psi2) qI||_F = " << diff_form.norm()
        << ", ||4(Q_r + Psi1 qI) + 4(Q_r + Psi2 qI)||_F = " << sum_form.norm();
    throw InconsistentScenario3(msg.str());
  }
  const Matrix s = 2.0 * congruence_sqrt(a1, Matrix(cfg.r.inverse()));
  const Matrix p1 = s + kappa * id;
  const Matrix p2 = -kappa * id;
  return {p1, p2};
}

Matrix closed_loop_matrix(const Matrix& p1, const Matrix& p2,
                          const GameConfig& cfg, ClosedLoopForm form) {
  const Matrix r_inv = cfg.r.inverse();
  const Matrix pi_inv = cfg.pi.inverse();
  switch (form) {
    case ClosedLoopForm::controller:
      return -r_inv * p1 + pi_inv * p2;
    case ClosedLoopForm::paper28:
      return -r_inv * p1 - pi_inv * p2;
    case ClosedLoopForm::appendix_d: {
      const ScenarioInfo info = classify_scenario(cfg.r, cfg.pi);
      if (!info.delta_s) {
        throw SquareRootDomain(
            "closed_loop_matrix: appendix-D form needs a defined Delta_S "
            "(scenario S1 or S2)");
      }
      return -(*info.delta_s) * (p1 + p2);
    }
  }
  throw std::logic_error("closed_loop_matrix: unknown form");
}

}  // namespace peg
