#include "peg/numerics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace peg {

double norm_cdf(double z) {
  // erfc-based form is accurate in both tails.
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

namespace {

// Acklam's rational approximation to the normal quantile (abs error ~1.15e-9
// before refinement).
double quantile_seed(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("norm_quantile: p must lie in (0, 1)");
  }
  double x = quantile_seed(p);
  // One Halley step against the erfc-based CDF.
  for (int i = 0; i < 2; ++i) {
    const double e = norm_cdf(x) - p;
    const double u =
        e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);  // e / phi(x)
    if (!std::isfinite(u)) break;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double pd_tolerance(const Matrix& a) {
  const double norm2 = a.size() == 0 ? 0.0 : a.operatorNorm();
  return 1e-12 * std::max(1.0, norm2);
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  return es.eigenvalues().maxCoeff();
}

Matrix sym_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  const double tol = pd_tolerance(a);
  if (es.eigenvalues().minCoeff() <= tol) {
    std::ostringstream msg;
    msg << "sym_sqrt: matrix not positive definite (lambda_min = "
        << es.eigenvalues().minCoeff() << ")";
    throw NotPositiveDefinite(msg.str());
  }
  return es.eigenvectors() *
         es.eigenvalues().array().sqrt().matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  const double tol = pd_tolerance(a);
  Vector lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] < -tol) {
      std::ostringstream msg;
      msg << "psd_sqrt: matrix not positive semidefinite (lambda_min = "
          << lam[i] << ")";
      throw NotPositiveDefinite(msg.str());
    }
    lam[i] = std::sqrt(std::max(lam[i], 0.0));
  }
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

Matrix congruence_sqrt(const Matrix& c, const Matrix& delta) {
  if (c.rows() != delta.rows() || c.cols() != delta.cols()) {
    throw DimensionMismatch("congruence_sqrt: shape mismatch");
  }
  const Matrix delta_half = sym_sqrt(delta);
  const Matrix delta_half_inv = delta_half.inverse();
  const Matrix inner = psd_sqrt(symmetrize(delta_half * c * delta_half));
  return symmetrize(delta_half_inv * inner * delta_half_inv);
}

double max_real_eigenvalue(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Matrix& a, double tolerance) {
  return max_real_eigenvalue(a) < -tolerance;
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
  if (a.rows() != a.cols() || q.rows() != q.cols() || a.rows() != q.rows()) {
    throw DimensionMismatch("solve_lyapunov: shape mismatch");
  }
  const double re_max = max_real_eigenvalue(a);
  if (re_max >= -1e-10) {
    std::ostringstream msg;
    msg << "solve_lyapunov: A not Hurwitz (max Re eig = " << re_max << ")";
    throw NotHurwitz(msg.str());
  }
  // Vectorized solve (I (x) A^T + A^T (x) I) vec(M) = -vec(Q); n <= 6 here.
  const Eigen::Index n = a.rows();
  Matrix k = Matrix::Zero(n * n, n * n);
  const Matrix at = a.transpose();
  const Matrix id = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index s = 0; s < n; ++s)
          k(i + n * j, r + n * s) = id(j, s) * at(i, r) + at(j, s) * id(i, r);
  Vector rhs(n * n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) rhs[i + n * j] = -q(i, j);
  const Vector m_vec = k.partialPivLu().solve(rhs);
  Matrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = m_vec[i + n * j];
  return symmetrize(m);
}

bool loewner_geq(const Matrix& a, const Matrix& b, double slack) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("loewner_geq: shape mismatch");
  }
  return min_eigenvalue(a - b) >= -slack;
}

}  // namespace peg
