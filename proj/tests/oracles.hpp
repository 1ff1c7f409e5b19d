// Independent desk oracles used only by the tests: an adaptive Simpson
// integrator, a p-domain evaluation of the chi constants, and the gamma
// closed form valid without probability distortion.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "peg/cpt.hpp"
#include "peg/numerics.hpp"

namespace peg::testing {

inline double simpson_rec(const std::function<double(double)>& f, double a,
                          double b, double fa, double fm, double fb,
                          double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (std::abs(diff) <= 15.0 * tol || depth > 2000 || b - a < 1e-14 * (1.0 + std::abs(a))) {
    return left + right + diff / 15.0;
  }
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f,
                               double a, double b, double tol) {
  if (b <= a) return 0.0;
  // Split geometrically from a so a vast, mostly-flat interval cannot fool
  // the initial coarse estimate into early acceptance.
  double total = 0.0;
  double lo = a;
  double step = std::min(1.0, b - a);
  while (lo < b) {
    const double hi = std::min(lo + step, b);
    const double fa = f(lo);
    const double m = 0.5 * (lo + hi);
    const double fm = f(m);
    const double fb = f(hi);
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_rec(f, lo, hi, fa, fm, fb, whole, tol, 0);
    lo = hi;
    step *= 2.0;
  }
  return total;
}

// Upper-tail standard normal quantile from L = -ln Phi(-z), by Newton on
// the Mills-ratio asymptotic; used where exp(-L) underflows.
inline double tail_quantile(double big_l) {
  if (big_l < 690.0) {
    const double p = std::exp(-big_l);
    return p < 0.5 ? -norm_quantile(p) : 0.0;
  }
  double z = std::sqrt(2.0 * big_l);
  for (int i = 0; i < 12; ++i) {
    const double z2 = z * z;
    const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2);
    const double val = 0.5 * z2 + std::log(z) +
                       0.5 * std::log(2.0 * 3.14159265358979323846) -
                       std::log(series) - big_l;
    z -= val / (z + 1.0 / z);
  }
  return z;
}

// chi+ = int_{1/2}^1 [Phi^{-1}(x)]^alpha w'(x) dx under x = 1 - e^{-v};
// chi- = int_0^{1/2} [-Phi^{-1}(x)]^beta w'(x) dx under x = e^{-v}.
struct ChiOracle {
  double plus = 0.0;
  double minus = 0.0;
};

inline ChiOracle chi_oracle(const CptParams& params, double tol = 1e-9) {
  const double alpha = params.alpha;
  const double beta = params.beta;
  const double gamma = params.gamma;
  const double ln2 = std::log(2.0);

  auto gain = [&](double v) -> double {
    const double p = std::exp(-v);  // upper-tail mass 1 - x
    if (!(p < 0.5)) return 0.0;
    const double z = p > 0.0 ? -norm_quantile(p) : tail_quantile(v);
    const double s = -std::log1p(-p);  // -ln x
    if (!(s > 0.0)) return 0.0;
    const double w_prime =
        std::exp(-std::pow(s, gamma)) * gamma * std::pow(s, gamma - 1.0) /
        (1.0 - p);
    return std::pow(z, alpha) * w_prime * p;
  };
  const double v_gain_max = std::max(60.0, 40.0 / gamma);

  auto loss = [&](double v) -> double {
    if (!(v > ln2)) return 0.0;
    const double z = tail_quantile(v);  // -Phi^{-1}(e^{-v})
    return std::pow(z, beta) * std::exp(-std::pow(v, gamma)) * gamma *
           std::pow(v, gamma - 1.0);
  };
  const double v_loss_max = std::pow(40.0, 1.0 / gamma) + 1.0;

  ChiOracle out;
  out.plus = adaptive_simpson(gain, ln2, v_gain_max, tol);
  out.minus = adaptive_simpson(loss, ln2, v_loss_max, tol);
  return out;
}

// E[(Z^+)^p] for Z standard normal: no-distortion closed form.
inline double half_moment(double p) {
  return 0.5 * std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (p + 1.0)) /
         std::sqrt(3.14159265358979323846);
}

}  // namespace peg::testing
