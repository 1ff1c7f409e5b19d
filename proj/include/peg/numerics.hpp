// Scalar normal-distribution functions and small symmetric-matrix
// primitives (principal square roots, Loewner comparisons, Lyapunov
// solves). Everything here is a pure function of its arguments.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace peg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& what)
      : std::runtime_error(what) {}
};

struct NotHurwitz : std::runtime_error {
  explicit NotHurwitz(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : std::invalid_argument {
  explicit DimensionMismatch(const std::string& what)
      : std::invalid_argument(what) {}
};

// Standard normal CDF. Saturates at the representable bounds in the tails.
double norm_cdf(double z);

// Inverse of norm_cdf on (0, 1). Rational approximation polished by one
// Halley step, |Phi(q(p)) - p| stays below 1e-12 over the whole domain.
// Throws std::domain_error for p outside (0, 1).
double norm_quantile(double p);

// Positive-definiteness tolerance used everywhere: lambda_min must exceed
// 1e-12 * max(1, ||A||_2).
double pd_tolerance(const Matrix& a);

// 0.5 * (A + A^T).
Matrix symmetrize(const Matrix& a);

double min_eigenvalue(const Matrix& a);
double max_eigenvalue(const Matrix& a);

// Principal square root of a symmetric positive definite matrix.
// Throws NotPositiveDefinite when lambda_min <= pd_tolerance(a).
Matrix sym_sqrt(const Matrix& a);

// Square root of a symmetric positive *semi*definite matrix: eigenvalues in
// [-tol, 0] are clamped to zero, anything lower throws.
Matrix psd_sqrt(const Matrix& a);

// Solves X * delta * X = C for the unique symmetric PSD X, with C PSD and
// delta PD:  X = delta^{-1/2} (delta^{1/2} C delta^{1/2})^{1/2} delta^{-1/2}.
Matrix congruence_sqrt(const Matrix& c, const Matrix& delta);

// Solves A^T M + M A + Q = 0 for symmetric M (A Hurwitz, Q symmetric).
// Throws NotHurwitz when some eigenvalue of A has real part >= -tolerance.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

// True iff lambda_min(A - B) >= -slack.
bool loewner_geq(const Matrix& a, const Matrix& b, double slack = 0.0);

// True iff max Re(eig(A)) < -tolerance.
bool is_hurwitz(const Matrix& a, double tolerance = 1e-10);

// Largest real part over the spectrum of A (general square matrix).
double max_real_eigenvalue(const Matrix& a);

}  // namespace peg
