#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace bcpanel {

/// Seeded random source owned by a single chain. Not thread-safe; give each
/// worker its own instance.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  double normal() { return std_normal_(engine_); }
  double uniform() { return unif_(engine_); }

  /// Gamma with shape/scale parameterization.
  double gamma_shape_scale(double shape, double scale);

  /// Gamma in the mean / degrees-of-freedom convention: density proportional
  /// to x^(dof/2 - 1) exp(-dof x / (2 mean)).
  double gamma_mean_dof(double mean, double dof) { return gamma_shape_scale(0.5 * dof, 2.0 * mean / dof); }

  double chi_squared(double dof) { return gamma_shape_scale(0.5 * dof, 2.0); }

  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

  /// Derive an independent seed for a child stream (study workers, replicates).
  std::uint64_t split() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> std_normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

/// Draw from IW(scale, dof) with density proportional to
/// |X|^{-(dof+p+1)/2} exp(-tr(scale X^{-1})/2). Bartlett construction.
Eigen::MatrixXd sample_inverse_wishart(const Eigen::MatrixXd& scale, double dof, RandomSource& rng);

/// Zero-mean Gaussian draw given the precision's lower Cholesky factor.
Eigen::VectorXd sample_from_precision_factor(const Eigen::MatrixXd& precision_lower, RandomSource& rng);

}  // namespace bcpanel
