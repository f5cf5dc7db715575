#pragma once

#include <Eigen/Dense>

namespace bcpanel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace matrix_kit {

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kEigenClamp = 1e-10;

/// Column-stacking vectorization.
Vector vec(const Matrix& m);

/// Inverse of vec for a rows x cols target.
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

Matrix kron(const Matrix& a, const Matrix& b);

/// Symmetric square root via eigendecomposition. Eigenvalues in
/// [-1e-10, 0) are clamped to zero; anything lower throws NotPSD.
Matrix sym_sqrt(const Matrix& m);

/// Inverse symmetric square root; requires a positive definite input.
Matrix sym_inv_sqrt(const Matrix& m);

/// Orthonormal basis of the orthogonal complement of sp(h). Each column's
/// first nonzero entry is positive.
Matrix orth_complement(const Matrix& h);

/// H = Hg (Hg^T Hg)^{-1/2}.
Matrix normalize_semiorthogonal(const Matrix& hg);

/// P_t = H H^T + t H_perp H_perp^T for semi-orthogonal H.
Matrix projector(const Matrix& h, double t);

/// T x T matrix with entries rho^{|i-j|}.
Matrix ar1_correlation(double rho, Eigen::Index t);

/// Closed-form inverse and log-determinant of the AR(1) correlation matrix.
/// The inverse is tridiagonal, so products cost O(T) per column.
class Ar1Precision {
 public:
  Ar1Precision(double rho, Eigen::Index t);

  double rho() const { return rho_; }
  Eigen::Index size() const { return t_; }
  double log_det_correlation() const { return log_det_; }

  /// F^{-1} m
  Matrix apply(const Matrix& m) const;
  Matrix dense() const;

 private:
  double rho_;
  Eigen::Index t_;
  double log_det_;
};

/// Lower Cholesky factor; throws NotPD when a pivot falls below `pivot_tol`.
Matrix cholesky_lower(const Matrix& m, double pivot_tol = 1e-12);

double max_abs(const Matrix& m);

}  // namespace matrix_kit
}  // namespace bcpanel
