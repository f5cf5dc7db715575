#include "bcpanel/matrix_kit.hpp"

#include <cmath>
#include <string>

#include "bcpanel/error.hpp"

namespace bcpanel::matrix_kit {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorKind::NonFinite, std::string(what) + " has non-finite entries");
}

void require_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "matrix must be square");
  if (max_abs(m - m.transpose()) > kSymmetryTol)
    throw Error(ErrorKind::NotSymmetric, "max |M - M^T| exceeds 1e-10");
}

Eigen::SelfAdjointEigenSolver<Matrix> checked_eigen(const Matrix& m) {
  require_finite(m, "sym_sqrt input");
  require_symmetric(m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NotPSD, "eigendecomposition failed");
  return es;
}

}  // namespace

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols)
    throw Error(ErrorKind::DimensionMismatch, "unvec: length " + std::to_string(v.size()) + " != " +
                                                  std::to_string(rows) + "x" + std::to_string(cols));
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix sym_sqrt(const Matrix& m) {
  auto es = checked_eigen(m);
  Vector lambda = es.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -kEigenClamp)
      throw Error(ErrorKind::NotPSD, "eigenvalue " + std::to_string(lambda(i)) + " below -1e-10");
    lambda(i) = lambda(i) < 0.0 ? 0.0 : std::sqrt(lambda(i));
  }
  const Matrix& q = es.eigenvectors();
  Matrix s = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

Matrix sym_inv_sqrt(const Matrix& m) {
  auto es = checked_eigen(m);
  Vector lambda = es.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) <= kEigenClamp)
      throw Error(ErrorKind::RankDeficient, "eigenvalue " + std::to_string(lambda(i)) + " too small to invert");
    lambda(i) = 1.0 / std::sqrt(lambda(i));
  }
  const Matrix& q = es.eigenvectors();
  Matrix s = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

Matrix orth_complement(const Matrix& h) {
  require_finite(h, "H");
  const Eigen::Index n = h.rows();
  const Eigen::Index m = h.cols();
  if (m >= n) throw Error(ErrorKind::DimensionMismatch, "orth_complement needs fewer columns than rows");
  Eigen::JacobiSVD<Matrix> svd(h, Eigen::ComputeFullU);
  const Vector& sv = svd.singularValues();
  const double scale = sv.size() > 0 ? sv(0) : 0.0;
  if (m > 0 && (scale == 0.0 || sv(m - 1) < 1e-10 * std::max(1.0, scale)))
    throw Error(ErrorKind::RankDeficient, "H is not of full column rank");
  Matrix perp = svd.matrixU().rightCols(n - m);
  for (Eigen::Index j = 0; j < perp.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(perp(i, j)) > 1e-12) {
        if (perp(i, j) < 0.0) perp.col(j) *= -1.0;
        break;
      }
    }
  }
  return perp;
}

Matrix normalize_semiorthogonal(const Matrix& hg) {
  require_finite(hg, "Hg");
  Matrix gram = hg.transpose() * hg;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (gram.size() == 0 || es.eigenvalues().minCoeff() <= 1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()))
    throw Error(ErrorKind::RankDeficient, "Hg is not of full column rank");
  return hg * sym_inv_sqrt(gram);
}

Matrix projector(const Matrix& h, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::OutOfRange, "projector weight must be >= 0");
  const Matrix perp = orth_complement(h);
  return h * h.transpose() + t * perp * perp.transpose();
}

Matrix ar1_correlation(double rho, Eigen::Index t) {
  if (!(std::abs(rho) <= 1.0)) throw Error(ErrorKind::OutOfRange, "|rho| must be <= 1, got " + std::to_string(rho));
  Matrix f(t, t);
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j < t; ++j) f(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  return f;
}

Ar1Precision::Ar1Precision(double rho, Eigen::Index t) : rho_(rho), t_(t) {
  if (!(std::abs(rho) <= 1.0)) throw Error(ErrorKind::OutOfRange, "|rho| must be <= 1, got " + std::to_string(rho));
  const double one_minus = 1.0 - rho * rho;
  if (t > 1 && one_minus < 1e-12)
    throw Error(ErrorKind::NotPD, "AR(1) correlation is singular at |rho| = 1");
  log_det_ = t > 1 ? static_cast<double>(t - 1) * std::log(one_minus) : 0.0;
}

Matrix Ar1Precision::apply(const Matrix& m) const {
  if (m.rows() != t_) throw Error(ErrorKind::DimensionMismatch, "Ar1Precision::apply row mismatch");
  if (rho_ == 0.0 || t_ == 1) return m;
  const double scale = 1.0 / (1.0 - rho_ * rho_);
  const double mid = 1.0 + rho_ * rho_;
  Matrix out(m.rows(), m.cols());
  const Eigen::Index last = t_ - 1;
  out.row(0) = m.row(0) - rho_ * m.row(1);
  for (Eigen::Index i = 1; i < last; ++i) out.row(i) = mid * m.row(i) - rho_ * (m.row(i - 1) + m.row(i + 1));
  out.row(last) = m.row(last) - rho_ * m.row(last - 1);
  return scale * out;
}

Matrix Ar1Precision::dense() const { return apply(Matrix::Identity(t_, t_)); }

Matrix cholesky_lower(const Matrix& m, double pivot_tol) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "cholesky needs a square matrix");
  if (!m.allFinite()) throw Error(ErrorKind::NonFinite, "cholesky input has non-finite entries");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPD, "Cholesky factorization failed");
  Matrix l = llt.matrixL();
  if (l.size() > 0 && l.diagonal().minCoeff() < pivot_tol)
    throw Error(ErrorKind::NotPD, "Cholesky pivot below tolerance");
  return l;
}

}  // namespace bcpanel::matrix_kit
