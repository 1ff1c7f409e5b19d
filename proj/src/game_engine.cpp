#include "peg/game_engine.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace peg {

namespace {

double y_floor_of(const GameConfig& cfg, const EngineOptions& opt) {
  return opt.y_floor_scale * std::max(1.0, cfg.x0.squaredNorm());
}

std::string spectrum_string(const Matrix& a) {
  const Eigen::EigenSolver<Matrix> es(a);
  std::ostringstream out;
  for (int i = 0; i < a.rows(); ++i) {
    if (i) out << ", ";
    out << es.eigenvalues()[i].real();
    if (std::abs(es.eigenvalues()[i].imag()) > 0.0) {
      out << (es.eigenvalues()[i].imag() >= 0 ? "+" : "")
          << es.eigenvalues()[i].imag() << "i";
    }
  }
  return out.str();
}

}  // namespace

std::pair<double, EquilibriumSolution> y_hat(double y, const GameConfig& cfg,
                                             const CptParams& pursuer,
                                             const CptParams& evader,
                                             const ChiPair& chi1,
                                             const ChiPair& chi2,
                                             const EngineOptions& opt) {
  if (!(y >= y_floor_of(cfg, opt))) {
    throw std::domain_error("y_hat: y below the evaluation floor");
  }
  const double psi1 = psi(pursuer, y, chi1);
  const double psi2 = psi(evader, y, chi2);
  const ScenarioInfo scenario = classify_scenario(cfg.r, cfg.pi);

  EquilibriumSolution sol;
  try {
    if (scenario.label == Scenario::S3) {
      const auto [p1, p2] =
          scenario3_solution(cfg, psi1, psi2, opt.scenario3_kappa);
      sol.p1 = p1;
      sol.p2 = p2;
      sol.psi1 = psi1;
      sol.psi2 = psi2;
      sol.a_cl = closed_loop_matrix(p1, p2, cfg);
      std::tie(sol.residual1, sol.residual2) =
          are_residuals(cfg, psi1, psi2, p1, p2);
    } else {
      const double d = opt.bounds ? opt.bounds->d : 0.0;
      const double big_d = opt.bounds ? opt.bounds->big_d : 0.0;
      sol = solve_coupled(cfg, psi1, psi2, d, big_d, opt.coupled);
    }
  } catch (const NotHurwitz&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw InnerSolveFailed(std::string("inner solve at y = ") +
                           std::to_string(y) + ": " + e.what());
  }

  if (!is_hurwitz(sol.a_cl)) {
    throw NotHurwitz("y_hat: closed loop not Hurwitz at y = " +
                     std::to_string(y) +
                     " (spectrum: " + spectrum_string(sol.a_cl) + ")");
  }
  sol.m = solve_lyapunov(sol.a_cl,
                         cfg.q * Matrix::Identity(cfg.x0.size(), cfg.x0.size()));
  const double value = cfg.x0.dot(sol.m * cfg.x0);
  return {value, sol};
}

std::pair<double, EquilibriumSolution> y_hat(double y, const GameConfig& cfg,
                                             const CptParams& pursuer,
                                             const CptParams& evader,
                                             const EngineOptions& opt) {
  return y_hat(y, cfg, pursuer, evader, chi(pursuer), chi(evader), opt);
}

FixedPointResult solve_fixed_point(const GameConfig& cfg,
                                   const CptParams& pursuer,
                                   const CptParams& evader,
                                   const EngineOptions& opt) {
  cfg.validate();
  const ChiPair chi1 = chi(pursuer);
  const ChiPair chi2 = chi(evader);
  const double floor = y_floor_of(cfg, opt);
  const double cap = opt.y_cap_scale * std::max(1.0, cfg.x0.squaredNorm());

  FixedPointResult result;
  auto eval = [&](double y) -> std::pair<double, EquilibriumSolution> {
    auto out = y_hat(y, cfg, pursuer, evader, chi1, chi2, opt);
    result.evaluations.emplace_back(y, out.first);
    return out;
  };
  auto done = [&](double y, double g) {
    return std::abs(g) <= opt.y_tol * std::max(1.0, y);
  };

  // Bracket a sign change of g(y) = Y_hat(y) - y by doubling from the floor.
  double lo = 0.0, hi = 0.0, g_lo = 0.0, g_hi = 0.0;
  bool have_prev = false, bracketed = false;
  double prev_y = 0.0, prev_g = 0.0;
  EquilibriumSolution last_sol;
  double last_y = 0.0, last_g = 0.0;
  bool have_last = false;
  int failed_samples = 0;
  std::string last_failure;
  for (double y = floor; y <= cap; y *= 2.0) {
    double g;
    try {
      auto [value, sol] = eval(y);
      g = value - y;
      last_sol = sol;
      last_y = y;
      last_g = g;
      have_last = true;
    } catch (const std::exception& e) {
      have_prev = false;  // an invalid sample breaks bracket continuity
      ++failed_samples;
      last_failure = e.what();
      continue;
    }
    if (done(y, g)) {
      lo = hi = y;
      g_lo = g_hi = g;
      bracketed = true;
      break;
    }
    if (have_prev && ((prev_g > 0.0) != (g > 0.0))) {
      lo = prev_y;
      hi = y;
      g_lo = prev_g;
      g_hi = g;
      bracketed = true;
      break;
    }
    prev_y = y;
    prev_g = g;
    have_prev = true;
  }
  if (!bracketed) {
    std::ostringstream msg;
    msg << "solve_fixed_point: no sign change of Y_hat(y) - y on [" << floor
        << ", " << cap << "]; " << result.evaluations.size()
        << " samples evaluated, " << failed_samples << " failed";
    if (failed_samples > 0) msg << " (last: " << last_failure << ")";
    for (const auto& [y, v] : result.evaluations) {
      msg << " (" << y << ", " << v << ")";
    }
    throw NoBracket(msg.str());
  }

  result.y_lo = lo;
  result.y_hi = hi;
  double y_star = have_last ? last_y : lo;
  if (!(lo == hi && done(lo, g_lo))) {
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      auto [value, sol] = eval(mid);
      const double g = value - mid;
      last_sol = sol;
      last_y = mid;
      last_g = g;
      y_star = mid;
      if (done(mid, g)) break;
      if ((g > 0.0) == (g_lo > 0.0)) {
        lo = mid;
        g_lo = g;
      } else {
        hi = mid;
        g_hi = g;
      }
    }
  } else {
    y_star = lo;
  }

  if (!(std::abs(last_g) <= opt.y_tol * std::max(1.0, y_star))) {
    throw NoBracket("solve_fixed_point: bisection failed to reach the "
                    "fixed-point tolerance");
  }
  result.y_star = y_star;
  result.solution = last_sol;
  result.solution.y_star = y_star;
  return result;
}

Trajectory simulate(const Matrix& a, const Vector& x0, double dt,
                    double horizon, double q, double capture_radius) {
  if (!(dt > 0.0) || !(horizon >= dt)) {
    throw std::domain_error("simulate: requires dt > 0 and horizon >= dt");
  }
  if (a.rows() != a.cols() || a.rows() != x0.size()) {
    throw DimensionMismatch("simulate: A and x0 dimensions disagree");
  }
  const auto steps = static_cast<long>(std::llround(horizon / dt));
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  // One RK4 step of a linear system is the degree-4 Taylor polynomial of
  // exp(dt A); precompute it once.
  const Matrix ha = dt * a;
  const Matrix phi =
      id + ha * (id + 0.5 * ha * (id + (ha / 3.0) * (id + 0.25 * ha)));

  Trajectory traj;
  traj.dt = dt;
  traj.a = a;
  traj.capture_radius = capture_radius;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.dist.reserve(steps + 1);
  traj.y_running.reserve(steps + 1);

  Vector x = x0;
  double y = 0.0;
  double prev_sq = x.squaredNorm();
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  traj.dist.push_back(std::sqrt(prev_sq));
  traj.y_running.push_back(0.0);
  for (long k = 1; k <= steps; ++k) {
    x = phi * x;
    const double sq = x.squaredNorm();
    y += 0.5 * q * dt * (prev_sq + sq);
    prev_sq = sq;
    traj.times.push_back(k * dt);
    traj.states.push_back(x);
    traj.dist.push_back(std::sqrt(sq));
    traj.y_running.push_back(y);
  }
  traj.captured = traj.dist.back() <= capture_radius;
  return traj;
}

PerformanceStats performance_stats(const Trajectory& traj,
                                   const GameConfig& cfg, const Matrix& p1,
                                   const Matrix& p2) {
  // u = -R^{-1} P1 x and v = -Pi^{-1} P2 x turn the running cost into a
  // single quadratic form.
  const Matrix c = symmetrize(cfg.q_r + p1 * cfg.r.inverse() * p1 -
                              p2 * cfg.pi.inverse() * p2);
  PerformanceStats out;
  double prev = traj.states.front().dot(c * traj.states.front());
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    const double cur = traj.states[k].dot(c * traj.states[k]);
    out.j_run += 0.5 * traj.dt * (prev + cur);
    prev = cur;
  }
  out.sigma = traj.y_running.back();
  return out;
}

namespace {

double uniform01(std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return u > 0.0 ? u : 0x1.0p-53;
}

// Box-Muller; avoids the implementation-defined std::normal_distribution so
// identical seeds give identical samples on every platform.
double gaussian(std::mt19937_64& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace

MonteCarloStats monte_carlo_J(const Trajectory& traj, const GameConfig& cfg,
                              const Matrix& p1, const Matrix& p2, int n,
                              std::uint64_t seed) {
  if (n < 1) throw std::domain_error("monte_carlo_J: n must be >= 1");
  const PerformanceStats stats = performance_stats(traj, cfg, p1, p2);
  std::mt19937_64 rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < n; ++k) {
    const double j = stats.j_run + stats.sigma * gaussian(rng);
    sum += j;
    sum_sq += j * j;
  }
  MonteCarloStats out;
  out.n = n;
  out.mean = sum / n;
  const double var =
      n > 1 ? std::max(0.0, (sum_sq - n * out.mean * out.mean) / (n - 1))
            : 0.0;
  out.stddev = std::sqrt(var);
  out.mean_se = out.stddev / std::sqrt(static_cast<double>(n));
  out.std_se = out.stddev / std::sqrt(2.0 * n);
  return out;
}

DecayReport decay_check(const Trajectory& traj, double d, double big_d,
                        const Matrix& delta_s, const Matrix& w,
                        ClosedLoopForm form) {
  const long n = static_cast<long>(traj.times.size());
  DecayReport report;
  auto v_of = [&](long k) { return 0.5 * traj.states[k].dot(w * traj.states[k]); };
  const double v0 = v_of(0);
  const double slack = 1e-9 * std::max(1.0, v0);

  if (form == ClosedLoopForm::appendix_d) {
    const Matrix expected = -delta_s * w;
    if ((traj.a - expected).norm() >
        1e-9 * std::max(1.0, expected.norm())) {
      throw DynamicsFormMismatch(
          "decay_check: trajectory loop matrix is not -Delta_S * W");
    }
    const Matrix id = Matrix::Identity(w.rows(), w.cols());
    if (!loewner_geq(w, d * id, 1e-9) || !loewner_geq(big_d * id, w, 1e-9)) {
      throw DynamicsFormMismatch("decay_check: W outside [dI, DI]");
    }
    const double w_min = min_eigenvalue(w);
    const double w_max = max_eigenvalue(w);
    report.rate = 2.0 * min_eigenvalue(delta_s) * w_min * w_min / w_max;
    report.holds = true;
    for (long k = 0; k < n; ++k) {
      const double bound = v0 * std::exp(-report.rate * traj.times[k]);
      if (v_of(k) > bound + slack) {
        report.holds = false;
        report.first_violation = static_cast<int>(k);
        report.first_violation_time = traj.times[k];
        break;
      }
    }
    return report;
  }

  // Controller-style loop: strict monotone decrease plus a fitted rate.
  report.holds = true;
  double prev = v0;
  for (long k = 1; k < n; ++k) {
    const double cur = v_of(k);
    if (cur >= prev + slack || (v0 > slack && cur > prev * (1.0 + 1e-9))) {
      report.holds = false;
      report.first_violation = static_cast<int>(k);
      report.first_violation_time = traj.times[k];
      break;
    }
    prev = cur;
  }
  // Least-squares fit of ln V against t over the usable samples.
  double st = 0, sv = 0, stt = 0, stv = 0, svv = 0;
  long m = 0;
  for (long k = 0; k < n; ++k) {
    const double v = v_of(k);
    if (!(v > 1e-300)) break;
    const double lv = std::log(v);
    st += traj.times[k];
    sv += lv;
    stt += traj.times[k] * traj.times[k];
    stv += traj.times[k] * lv;
    svv += lv * lv;
    ++m;
  }
  if (m >= 2) {
    const double denom = m * stt - st * st;
    if (denom > 0.0) {
      const double slope = (m * stv - st * sv) / denom;
      report.rate = -slope;
      const double ss_tot = svv - sv * sv / m;
      const double ss_res =
          ss_tot - slope * slope * denom / m;
      report.fit_r2 = ss_tot > 0.0 ? 1.0 - std::max(0.0, ss_res) / ss_tot : 1.0;
    }
  }
  (void)d;
  (void)big_d;
  (void)delta_s;
  return report;
}

namespace {

// Infinite-horizon cost of the transformed game for one player: the loop is
// -R^{-1}K1 - Pi^{-1}K2 and the running cost x'(weight + K1 R^{-1} K1 -
// K2 Pi^{-1} K2)x, evaluated exactly through the Lyapunov certificate.
// Throws NotHurwitz for destabilizing gain pairs.
double transformed_cost(const GameConfig& cfg, const Matrix& weight,
                        const Matrix& k1, const Matrix& k2) {
  const Matrix r_inv = cfg.r.inverse();
  const Matrix pi_inv = cfg.pi.inverse();
  const Matrix a = -r_inv * k1 - pi_inv * k2;
  const Matrix c =
      symmetrize(weight + k1 * r_inv * k1 - k2 * pi_inv * k2);
  const Matrix m = solve_lyapunov(a, c);
  return cfg.x0.dot(m * cfg.x0);
}

Matrix random_symmetric(std::mt19937_64& rng, int n, double frobenius) {
  Matrix e(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) e(i, j) = gaussian(rng);
  }
  e = symmetrize(e);
  const double norm = e.norm();
  if (norm > 0.0) e *= frobenius / norm;
  return e;
}

}  // namespace

NashReport nash_spot_check(const EquilibriumSolution& eq,
                           const GameConfig& cfg, const CptParams& pursuer,
                           const CptParams& evader, int n_perturbations,
                           double magnitude, std::uint64_t seed) {
  (void)pursuer;
  (void)evader;
  const int n = static_cast<int>(cfg.x0.size());
  const Matrix id = Matrix::Identity(n, n);
  const Matrix weight1 = 4.0 * (cfg.q_r + eq.psi1 * cfg.q * id);
  const Matrix weight2 = 4.0 * (cfg.q_r + eq.psi2 * cfg.q * id);
  constexpr double tol_rel = 1e-6;

  NashReport report;
  report.n_checked = n_perturbations;
  report.j1_eq = transformed_cost(cfg, weight1, eq.p1, eq.p2);
  report.j2_eq = transformed_cost(cfg, weight2, eq.p1, eq.p2);
  const double tol1 = tol_rel * std::max(1.0, std::abs(report.j1_eq));
  const double tol2 = tol_rel * std::max(1.0, std::abs(report.j2_eq));

  std::mt19937_64 rng(seed);
  for (int k = 0; k < n_perturbations; ++k) {
    const Matrix e1 = random_symmetric(rng, n, magnitude);
    try {
      const double j1 = transformed_cost(cfg, weight1, eq.p1 + e1, eq.p2);
      const double margin = j1 - report.j1_eq;
      report.worst_pursuer_margin =
          std::min(report.worst_pursuer_margin, margin);
      if (margin < -tol1) ++report.pursuer_violations;
    } catch (const NotHurwitz&) {
      ++report.pursuer_unstable;  // infinite cost: consistent with a minimum
    }

    const Matrix e2 = random_symmetric(rng, n, magnitude);
    try {
      const double j2 = transformed_cost(cfg, weight2, eq.p1, eq.p2 + e2);
      const double margin = j2 - report.j2_eq;
      report.worst_evader_margin =
          std::max(report.worst_evader_margin, margin);
      if (margin > tol2) ++report.evader_violations;
    } catch (const NotHurwitz&) {
      ++report.evader_rejected;  // a destabilizing evader deviation says
                                 // nothing about the maximizer's optimality
    }
  }
  return report;
}

}  // namespace peg
