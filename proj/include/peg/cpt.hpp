// Cumulative-prospect-theory building blocks: branch utilities, the
// probability weighting function w(p) = exp{-(-log p)^gamma}, the chi
// quadrature constants, the scalar irrationality parameter Psi, and a
// direct survival-integral evaluation of the prospect value used as a
// cross-check of the closed form.
#pragma once

#include <stdexcept>
#include <string>

namespace peg {

enum class Role { pursuer, evader };

struct CptParams {
  double alpha = 1.0;    // gain sensitivity exponent
  double beta = 1.0;     // loss sensitivity exponent
  double gamma = 1.0;    // probability distortion exponent, (0, 1]
  double epsilon = 1.0;  // loss multiplier, >= 1
  Role role = Role::pursuer;

  // Throws std::domain_error on an out-of-range parameter. Pursuer exponents
  // are restricted to (0, 1]; evader exponents only need to be positive.
  void validate() const;

  static CptParams rational(Role role) { return CptParams{1, 1, 1, 1, role}; }
};

struct ChiPair {
  double plus = 0.0;   // gain-branch integral
  double minus = 0.0;  // loss-branch integral
  double err_plus = 0.0;
  double err_minus = 0.0;
};

struct QuadratureError : std::runtime_error {
  explicit QuadratureError(const std::string& what)
      : std::runtime_error(what) {}
};

enum class UtilityBranch { gain, loss };

struct UtilityValue {
  UtilityBranch branch = UtilityBranch::gain;
  double magnitude = 0.0;
};

// Branch utility of an outcome J against the reference J_ref. At J == J_ref
// both branches vanish; the value is reported on the gain branch.
UtilityValue utility(double j, double j_ref, const CptParams& params);

// w(p) = exp{-(-log p)^gamma} on (0, 1]; identity at gamma = 1.
double weight(double p, double gamma);

// w'(p) = w(p) * gamma * (-ln p)^{gamma-1} / p on the open interval.
double weight_derivative(double p, double gamma);

// chi+ = int_{1/2}^1 [Phi^{-1}(x)]^alpha dw(x),
// chi- = int_0^{1/2} [-Phi^{-1}(x)]^beta dw(x),
// each to ~1e-9 absolute via substitutions that remove the endpoint
// singularities of dw.
ChiPair chi(const CptParams& params);

// Psi = (-1)^i (alpha chi+ H^{alpha-1} - epsilon beta chi- H^{beta-1}),
// i = 1 pursuer, i = 2 evader. Requires H >= 1e-8 (H^{alpha-1} diverges
// at 0 for fractional exponents).
double psi(const CptParams& params, double h);
double psi(const CptParams& params, double h, const ChiPair& chi_pair);

// Prospect value of J ~ N(j_mean, sigma^2) with reference point j_mean,
// evaluated by direct numerical integration of the weighted survival
// probabilities over the outcome axis. Equals
// sigma^alpha chi+ - epsilon sigma^beta chi-.
double cpt_value_direct(double j_mean, double sigma, const CptParams& params);

// CPT-adjusted index: pursuer J1 = J_run - C, evader J2 = J_run + C, with C
// from the closed form above. sigma == 0 returns J_run.
double cpt_index(double j_run, double sigma, const CptParams& params);

}  // namespace peg
