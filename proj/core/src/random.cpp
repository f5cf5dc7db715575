#include "bcpanel/random.hpp"

#include <cmath>

#include "bcpanel/error.hpp"

namespace bcpanel {

double RandomSource::gamma_shape_scale(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale)) {
    throw Error(ErrorKind::NonFinite, "gamma parameters must be positive and finite (shape=" +
                                          std::to_string(shape) + ", scale=" + std::to_string(scale) + ")");
  }
  std::gamma_distribution<double> dist(shape, scale);
  return dist(engine_);
}

Eigen::VectorXd RandomSource::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Eigen::MatrixXd RandomSource::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  // column-major fill keeps the draw order equal to vec order
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

Eigen::MatrixXd sample_inverse_wishart(const Eigen::MatrixXd& scale, double dof, RandomSource& rng) {
  const Eigen::Index p = scale.rows();
  if (scale.cols() != p) throw Error(ErrorKind::DimensionMismatch, "inverse-Wishart scale must be square");
  if (!(dof > static_cast<double>(p) - 1.0)) {
    throw Error(ErrorKind::DofTooSmall, "inverse-Wishart dof " + std::to_string(dof) + " must exceed p-1 = " +
                                            std::to_string(p - 1));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPD, "inverse-Wishart scale is not positive definite");
  const Eigen::MatrixXd scale_lower = llt.matrixL();

  // Bartlett factor of W ~ Wishart(I, dof)
  Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    bartlett(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  // Sigma = L (B B^T)^{-1} L^T = X X^T with X = L B^{-T}
  Eigen::MatrixXd x = bartlett.triangularView<Eigen::Lower>().transpose().solve<Eigen::OnTheRight>(scale_lower);
  Eigen::MatrixXd sigma = x * x.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

Eigen::VectorXd sample_from_precision_factor(const Eigen::MatrixXd& precision_lower, RandomSource& rng) {
  Eigen::VectorXd z = rng.normal_vector(precision_lower.rows());
  // Q = L L^T  =>  L^{-T} z ~ N(0, Q^{-1})
  return precision_lower.triangularView<Eigen::Lower>().transpose().solve(z);
}

}  // namespace bcpanel
