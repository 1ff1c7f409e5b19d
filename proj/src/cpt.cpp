#include "peg/cpt.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "peg/numerics.hpp"

namespace peg {

void CptParams::validate() const {
  std::ostringstream bad;
  if (!(gamma > 0.0 && gamma <= 1.0)) bad << "gamma must lie in (0, 1]; ";
  if (!(epsilon >= 1.0)) bad << "epsilon must be >= 1; ";
  if (role == Role::pursuer) {
    if (!(alpha > 0.0 && alpha <= 1.0)) bad << "pursuer alpha must lie in (0, 1]; ";
    if (!(beta > 0.0 && beta <= 1.0)) bad << "pursuer beta must lie in (0, 1]; ";
  } else {
    if (!(alpha > 0.0)) bad << "evader alpha must be > 0; ";
    if (!(beta > 0.0)) bad << "evader beta must be > 0; ";
  }
  if (!bad.str().empty()) throw std::domain_error("CptParams: " + bad.str());
}

UtilityValue utility(double j, double j_ref, const CptParams& params) {
  const double delta = j - j_ref;
  if (params.role == Role::pursuer) {
    if (delta <= 0.0) return {UtilityBranch::gain, std::pow(-delta, params.alpha)};
    return {UtilityBranch::loss, params.epsilon * std::pow(delta, params.beta)};
  }
  if (delta >= 0.0) return {UtilityBranch::gain, std::pow(delta, params.alpha)};
  return {UtilityBranch::loss, params.epsilon * std::pow(-delta, params.beta)};
}

double weight(double p, double gamma) {
  if (!(p > 0.0)) throw std::domain_error("weight: p must be > 0");
  if (p >= 1.0) return 1.0;
  return std::exp(-std::pow(-std::log(p), gamma));
}

double weight_derivative(double p, double gamma) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("weight_derivative: p must lie in (0, 1)");
  }
  const double s = -std::log(p);
  return weight(p, gamma) * gamma * std::pow(s, gamma - 1.0) / p;
}

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

// 15-point Gauss-Legendre rule on [-1, 1].
constexpr double kGlNode[15] = {
    0.0,
    -0.2011940939974345, 0.2011940939974345,
    -0.3941513470775634, 0.3941513470775634,
    -0.5709721726085388, 0.5709721726085388,
    -0.7244177313601700, 0.7244177313601700,
    -0.8482065834104272, 0.8482065834104272,
    -0.9372733924007059, 0.9372733924007059,
    -0.9879925180204854, 0.9879925180204854};
constexpr double kGlWeight[15] = {
    0.2025782419255613,
    0.1984314853271116, 0.1984314853271116,
    0.1861610000155622, 0.1861610000155622,
    0.1662692058169939, 0.1662692058169939,
    0.1395706779261543, 0.1395706779261543,
    0.1071592204671719, 0.1071592204671719,
    0.0703660474881081, 0.0703660474881081,
    0.0307532419961173, 0.0307532419961173};

double gl_panel(const std::function<double(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < 15; ++i) acc += kGlWeight[i] * f(mid + half * kGlNode[i]);
  return acc * half;
}

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
};

void adaptive_gl_rec(const std::function<double(double)>& f, double a,
                     double b, double whole, double tol, int depth,
                     AdaptiveResult* out) {
  if (depth > 48) {
    throw QuadratureError("adaptive quadrature did not reach the accuracy "
                          "target (max refinement depth exceeded)");
  }
  const double mid = 0.5 * (a + b);
  const double left = gl_panel(f, a, mid);
  const double right = gl_panel(f, mid, b);
  const double diff = std::abs(left + right - whole);
  if (diff < tol) {
    out->value += left + right;
    out->error += diff;
    return;
  }
  adaptive_gl_rec(f, a, mid, left, 0.5 * tol, depth + 1, out);
  adaptive_gl_rec(f, mid, b, right, 0.5 * tol, depth + 1, out);
}

AdaptiveResult adaptive_gl(const std::function<double(double)>& f, double a,
                           double b, double tol) {
  AdaptiveResult out;
  if (b <= a) return out;
  adaptive_gl_rec(f, a, b, gl_panel(f, a, b), tol, 0, &out);
  return out;
}

// Integrates f over [a, b] where f ~ (t - a)^exponent near a; the algebraic
// endpoint singularity stalls plain bisection for small exponents, so the
// head is flattened with t = a + u^m before refining.
AdaptiveResult adaptive_gl_singular(const std::function<double(double)>& f,
                                    double a, double b, double exponent,
                                    double tol) {
  const int m = exponent >= 1.0
                    ? 1
                    : static_cast<int>(
                          std::ceil(2.0 / std::max(exponent, 0.03125)));
  if (m == 1) return adaptive_gl(f, a, b, tol);
  const double split = std::min(a + 1.0, b);
  auto head_integrand = [&](double u) {
    const double um1 = std::pow(u, m - 1);
    return f(a + um1 * u) * m * um1;
  };
  AdaptiveResult head =
      adaptive_gl(head_integrand, 0.0, std::pow(split - a, 1.0 / m), tol);
  const AdaptiveResult tail = adaptive_gl(f, split, b, tol);
  head.value += tail.value;
  head.error += tail.error;
  return head;
}

// -ln Phi(-t) for t >= 0, stable far into the tail where Phi(-t) underflows.
double neg_log_tail_cdf(double t) {
  if (t < 30.0) {
    return -std::log(norm_cdf(-t));
  }
  // Phi(-t) = phi(t)/t (1 - 1/t^2 + 3/t^4 - 15/t^6 + ...)
  const double t2 = t * t;
  const double series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2);
  return 0.5 * t2 + std::log(t) + std::log(kSqrt2Pi) - std::log(series);
}

// Inverse of neg_log_tail_cdf: returns t >= 0 with -ln Phi(-t) = L.
double tail_quantile_from_log(double big_l) {
  if (big_l < 600.0) {
    const double p = std::exp(-big_l);
    return p < 0.5 ? -norm_quantile(p) : 0.0;
  }
  double t = std::sqrt(2.0 * big_l);
  for (int i = 0; i < 8; ++i) {
    const double f = neg_log_tail_cdf(t) - big_l;
    t -= f / (t + 1.0 / t);
  }
  return t;
}

// w(Phi(-t)) for t real, stable for large t.
double weight_of_tail(double t, double gamma) {
  if (t <= 0.0) return weight(norm_cdf(-t), gamma);
  return std::exp(-std::pow(neg_log_tail_cdf(t), gamma));
}

}  // namespace

ChiPair chi(const CptParams& params) {
  params.validate();
  const double alpha = params.alpha;
  const double beta = params.beta;
  const double gamma = params.gamma;

  // Gain branch in the z = Phi^{-1}(x) domain: the transformed integrand
  // z^alpha w'(Phi(z)) phi(z) is smooth, with Gaussian-type decay once
  // gamma z^2 / 2 grows; truncate where the tail mass is below e^{-40}.
  const double z_max = std::max(10.0, std::sqrt(80.0 / gamma));
  auto gain_integrand = [&](double z) {
    if (z <= 0.0) z = 0.0;
    double s;  // -ln Phi(z)
    if (z < 5.0) {
      s = -std::log(norm_cdf(z));
    } else {
      const double q = norm_cdf(-z);
      s = q > 0.0 ? -std::log1p(-q) : q;
    }
    if (s <= 0.0) return 0.0;
    const double phi_z = std::exp(-0.5 * z * z) / kSqrt2Pi;
    const double w_prime_density =
        std::exp(-std::pow(s, gamma) + s) * gamma * std::pow(s, gamma - 1.0);
    return std::pow(z, alpha) * w_prime_density * phi_z;
  };

  // Loss branch under s = (-ln p)^gamma, which turns the measure dw into
  // e^{-s} ds; truncate at s = 40 (tail below 4e-18).
  const double s_lo = std::pow(std::log(2.0), gamma);
  const double s_hi = 40.0;
  auto loss_integrand = [&](double s) {
    const double big_l = std::pow(s, 1.0 / gamma);  // -ln p
    const double z = tail_quantile_from_log(big_l);
    return std::pow(z, beta) * std::exp(-s);
  };

  ChiPair out;
  // z^alpha at z = 0 and z(s)^beta ~ (s - s_lo)^beta at s_lo are the only
  // non-smooth points of the transformed integrands.
  const AdaptiveResult gain =
      adaptive_gl_singular(gain_integrand, 0.0, z_max, alpha, 1e-10);
  const AdaptiveResult loss =
      adaptive_gl_singular(loss_integrand, s_lo, s_hi, beta, 1e-10);
  out.plus = gain.value;
  out.minus = loss.value;
  out.err_plus = gain.error;
  out.err_minus = loss.error;
  if (!(out.plus > 0.0) || !(out.minus > 0.0) || !std::isfinite(out.plus) ||
      !std::isfinite(out.minus)) {
    throw QuadratureError("chi: non-positive or non-finite integral");
  }
  return out;
}

double psi(const CptParams& params, double h, const ChiPair& chi_pair) {
  if (!(h >= 1e-8)) {
    throw std::domain_error("psi: H must be >= 1e-8");
  }
  const double core =
      params.alpha * chi_pair.plus * std::pow(h, params.alpha - 1.0) -
      params.epsilon * params.beta * chi_pair.minus *
          std::pow(h, params.beta - 1.0);
  return params.role == Role::pursuer ? -core : core;
}

double psi(const CptParams& params, double h) {
  return psi(params, h, chi(params));
}

double cpt_value_direct(double j_mean, double sigma,
                        const CptParams& params) {
  (void)j_mean;  // the reference point is the mean, so only sigma matters
  params.validate();
  if (!(sigma > 0.0)) throw std::domain_error("cpt_value_direct: sigma <= 0");
  const double gamma = params.gamma;

  auto survival_integral = [&](double exponent, double scale, double t_star,
                               const std::function<double(double)>& tail_w) {
    const double h_max = scale * std::pow(sigma * t_star, exponent);
    auto f = [&](double h) {
      const double t = std::pow(h / scale, 1.0 / exponent) / sigma;
      return tail_w(t);
    };
    return adaptive_gl(f, 0.0, h_max, 1e-11 * (1.0 + h_max)).value;
  };

  // Gain branch: the weight is applied from the cumulative side (the dual
  // form 1 - w(F) of the decumulative transform), which is what collapses
  // to the chi+ quantile integral. 1 - w(Phi(t)) ~ (-ln Phi)^gamma in the
  // tail, so truncate where that drops below 1e-12.
  auto gain_tail = [&](double t) {
    const double q = norm_cdf(-t);  // upper-tail mass
    const double s = q > 0.0 ? -std::log1p(-q) : q;  // -ln Phi(t)
    if (!(s > 0.0)) return 0.0;
    return -std::expm1(-std::pow(s, gamma));
  };
  const double t_plus =
      tail_quantile_from_log(-std::log(1e-12) / gamma) + 1.0;

  // Loss branch: plain decumulative weighting w(P(loss > h)), truncated
  // where w(Phi(-t)) itself drops below 1e-12.
  auto loss_tail = [&](double t) { return weight_of_tail(t, gamma); };
  const double l_star = std::pow(-std::log(1e-12), 1.0 / gamma);
  const double t_minus = tail_quantile_from_log(l_star) + 1.0;

  const double gain = survival_integral(params.alpha, 1.0, t_plus, gain_tail);
  const double loss =
      survival_integral(params.beta, params.epsilon, t_minus, loss_tail);
  return gain - loss;
}

double cpt_index(double j_run, double sigma, const CptParams& params) {
  if (sigma < 0.0) throw std::domain_error("cpt_index: sigma < 0");
  if (sigma == 0.0) return j_run;
  const ChiPair c = chi(params);
  const double value = std::pow(sigma, params.alpha) * c.plus -
                       params.epsilon * std::pow(sigma, params.beta) * c.minus;
  return params.role == Role::pursuer ? j_run - value : j_run + value;
}

}  // namespace peg
