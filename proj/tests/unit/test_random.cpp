#include "doctest.h"

#include <algorithm>

#include <boost/math/distributions/inverse_gamma.hpp>

#include "bcpanel/error.hpp"
#include "bcpanel/random.hpp"
#include "oracles.hpp"

using namespace bcpanel;

namespace {

/// One-sample Kolmogorov-Smirnov statistic against a CDF.
template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace

TEST_CASE("gamma mean/dof convention") {
  RandomSource rng(21);
  const int draws = 100000;
  double sum = 0.0, sq = 0.0;
  for (int s = 0; s < draws; ++s) {
    const double x = rng.gamma_mean_dof(21.0, 42.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / draws;
  const double var = sq / draws - mean * mean;
  CHECK(std::abs(mean - 21.0) < 3.0 * std::sqrt(var / draws));
  CHECK(var == doctest::Approx(2.0 * 21.0 * 21.0 / 42.0).epsilon(0.05));
  CHECK_THROWS_AS(rng.gamma_shape_scale(-1.0, 1.0), Error);
}

TEST_CASE("inverse-Wishart mean") {
  RandomSource rng(22);
  Matrix scale(2, 2);
  scale << 2.0, 0.5, 0.5, 1.0;
  const double dof = 9.0;
  const int draws = 100000;
  Matrix sum = Matrix::Zero(2, 2), sq = Matrix::Zero(2, 2);
  for (int s = 0; s < draws; ++s) {
    const Matrix x = sample_inverse_wishart(scale, dof, rng);
    sum += x;
    sq += x.cwiseProduct(x);
  }
  const Matrix mean = sum / draws;
  const Matrix sd = (sq / draws - mean.cwiseProduct(mean)).cwiseSqrt();
  const Matrix expected = scale / (dof - 2.0 - 1.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(mean(i, j) - expected(i, j)) < 3.0 * sd(i, j) / std::sqrt(draws));
}

TEST_CASE("inverse-Wishart in one dimension is inverse-gamma") {
  RandomSource rng(23);
  const double s = 3.0, dof = 7.0;
  std::vector<double> x;
  for (int k = 0; k < 10000; ++k) x.push_back(sample_inverse_wishart(Matrix::Constant(1, 1, s), dof, rng)(0, 0));
  const boost::math::inverse_gamma_distribution<double> ig(dof / 2.0, s / 2.0);
  const double d = ks_statistic(x, [&](double v) { return boost::math::cdf(ig, v); });
  // p > 0.01 for n = 10^4 corresponds to D < 1.628 / sqrt(n)
  CHECK(d < 1.628 / std::sqrt(10000.0));
}

TEST_CASE("inverse-Wishart rejects small dof and non-PD scale") {
  RandomSource rng(24);
  CHECK_THROWS_WITH_AS(sample_inverse_wishart(Matrix::Identity(3, 3), 2.0, rng), doctest::Contains("DofTooSmall"),
                       Error);
  CHECK_THROWS_WITH_AS(sample_inverse_wishart(-Matrix::Identity(2, 2), 5.0, rng), doctest::Contains("NotPD"), Error);
}

TEST_CASE("precision-factor Gaussian draws have the inverse covariance") {
  RandomSource rng(25);
  const Matrix q = oracle::random_spd(3, rng);
  const Matrix l = q.llt().matrixL();
  const int draws = 100000;
  Matrix acc = Matrix::Zero(3, 3);
  for (int s = 0; s < draws; ++s) {
    const Vector z = sample_from_precision_factor(l, rng);
    acc += z * z.transpose();
  }
  CHECK(matrix_kit::max_abs(acc / draws - q.inverse()) < 0.01);
}

TEST_CASE("seeded streams are reproducible") {
  RandomSource a(99), b(99);
  for (int k = 0; k < 10; ++k) CHECK(a.normal() == b.normal());
  CHECK(a.split() == b.split());
}
