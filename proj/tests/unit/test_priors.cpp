#include "doctest.h"

#include <algorithm>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>

#include "bcpanel/error.hpp"
#include "bcpanel/priors.hpp"
#include "oracles.hpp"

using namespace bcpanel;
using matrix_kit::max_abs;

namespace {

PanelSpec tiny_spec() {
  PanelSpec s;
  s.individuals = 1;
  s.variables = 2;
  s.lags = 0;
  s.deterministic = 1;
  s.usable_length = 10;
  s.ranks = {1};
  return s;
}

Matrix three_var_hg() {
  Matrix hg(3, 2);
  hg << 1, 0, 0, 1, -1, -1;
  return hg;
}

}  // namespace

TEST_CASE("V~ alpha blocks without restriction") {
  PanelSpec s = tiny_spec();
  s.ranks = {1};
  PriorConfig cfg;
  cfg.longrun_scale = 1.0;
  RandomSource rng(51);
  const Matrix beta = oracle::random_semiorthogonal(2, 1, rng);
  const Matrix v = vtilde_block(s, cfg, beta, 1.0);
  // I_n (x) blockdiag(1, v_diffuse)
  Matrix expected = Matrix::Zero(4, 4);
  expected.diagonal() << 1.0, 1000.0, 1.0, 1000.0;
  CHECK(max_abs(v - expected) < 1e-12);
  CHECK(max_abs(v * vtilde_precision_block(s, cfg, beta, 1.0) - Matrix::Identity(4, 4)) < 1e-12);
}

TEST_CASE("V~ alpha block follows the projection geometry") {
  PanelSpec s;
  s.individuals = 1;
  s.variables = 3;
  s.lags = 0;
  s.deterministic = 0;
  s.usable_length = 10;
  s.ranks = {1};
  PriorConfig cfg;
  cfg.hg = three_var_hg();
  cfg.longrun_scale = 1.0;
  const double tau = 0.2;
  const Matrix h = cfg.h();
  const Matrix perp = matrix_kit::orth_complement(h);
  // beta^T P_tau^{-1} beta is 1 inside sp(H) and 1/tau along H_perp
  CHECK(vtilde_precision_block(s, cfg, h.col(0), tau)(0, 0) == doctest::Approx(1.0));
  CHECK(vtilde_precision_block(s, cfg, perp, tau)(0, 0) == doctest::Approx(1.0 / tau));
  const Matrix pinv = projection_inverse(cfg, 3, tau);
  Eigen::SelfAdjointEigenSolver<Matrix> es(pinv);
  CHECK(es.eigenvalues()(0) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(2) == doctest::Approx(1.0 / tau));
}

TEST_CASE("all-diffuse V~") {
  PanelSpec s = tiny_spec();
  s.ranks = {0};
  PriorConfig cfg;
  const Matrix v = build_vtilde(s, cfg, {Matrix(2, 0)}, 1.0);
  CHECK(max_abs(v - 1000.0 * Matrix::Identity(2, 2)) < 1e-12);
}

TEST_CASE("V~_beta*") {
  PanelSpec s;
  s.individuals = 2;
  s.variables = 3;
  s.lags = 0;
  s.deterministic = 0;
  s.usable_length = 10;
  s.ranks = {2, 1};
  PriorConfig cfg;
  CHECK(max_abs(build_vtilde_beta(s, cfg, 1.0) - Matrix::Identity(9, 9)) < 1e-14);
  cfg.hg = three_var_hg();
  CHECK(max_abs(build_vtilde_beta(s, cfg, 1.0) - Matrix::Identity(9, 9)) < 1e-12);
  const Matrix p0 = build_vtilde_beta(s, cfg, 0.0);
  CHECK(max_abs(p0 * p0 - p0) < 1e-12);
  const Matrix h = cfg.h();
  const Matrix perp = matrix_kit::orth_complement(h);
  const Matrix expected = matrix_kit::kron(Matrix::Identity(2, 2), h * h.transpose() + 0.25 * perp * perp.transpose());
  CHECK(max_abs(build_vtilde_beta(s, cfg, 0.25).topLeftCorner(6, 6) - expected) < 1e-12);
  CHECK(max_abs(build_vtilde_beta(s, cfg, 0.25) * build_vtilde_beta_precision(s, cfg, 0.25) -
                Matrix::Identity(9, 9)) < 1e-12);
}

TEST_CASE("prior draws of nu and tau") {
  PanelSpec s = tiny_spec();
  PriorConfig cfg;
  cfg.hg = Matrix(2, 1);
  (*cfg.hg) << 1, -1;
  cfg.sigma.improper = false;
  cfg.sigma.scale = Matrix::Identity(2, 2);
  cfg.sigma.dof = 4.0;
  RandomSource rng(52);
  const int draws = 100000;
  std::vector<double> nus;
  int below = 0;
  for (int d = 0; d < draws; ++d) {
    const VecmParams p = sample_prior(s, cfg, rng);
    nus.push_back(p.nu);
    below += p.tau < 1.0;
  }
  double mean = 0.0, sq = 0.0;
  for (double v : nus) {
    mean += v;
    sq += v * v;
  }
  mean /= draws;
  const double se = std::sqrt((sq / draws - mean * mean) / draws);
  CHECK(std::abs(mean - cfg.mu_nu) < 3.0 * se);
  CHECK(static_cast<double>(below) / draws >= 0.95);
}

TEST_CASE("beta* draws collapse onto sp(H) as tau goes to zero") {
  PanelSpec s;
  s.individuals = 1;
  s.variables = 3;
  s.lags = 0;
  s.deterministic = 0;
  s.usable_length = 10;
  s.ranks = {1};
  PriorConfig cfg;
  cfg.hg = three_var_hg();
  const Matrix root = matrix_kit::sym_sqrt(build_vtilde_beta(s, cfg, 1e-6));
  const Matrix perp = matrix_kit::orth_complement(cfg.h());
  RandomSource rng(53);
  std::vector<double> norms;
  for (int d = 0; d < 1001; ++d) norms.push_back((perp.transpose() * root * rng.normal_vector(3)).norm());
  std::nth_element(norms.begin(), norms.begin() + 500, norms.end());
  CHECK(norms[500] < 1e-2);
}

TEST_CASE("sample_prior needs a proper Sigma prior") {
  PriorConfig cfg;
  RandomSource rng(54);
  CHECK_THROWS_WITH_AS(sample_prior(tiny_spec(), cfg, rng), doctest::Contains("ImproperPrior"), Error);
}

TEST_CASE("log prior Sigma term under the non-informative prior") {
  const PanelSpec s = tiny_spec();
  PriorConfig cfg;
  VecmParams p;
  p.b = Vector::Constant(s.shortrun_total(), 0.1);
  p.b_beta_star = Vector::Constant(s.longrun_total(), 0.5);
  p.sigma = Matrix::Identity(2, 2);
  p.nu = 3.0;
  VecmParams q = p;
  const double d = 6.0;
  q.sigma(0, 0) = d;
  CHECK(log_prior(q, s, cfg) - log_prior(p, s, cfg) == doctest::Approx(-0.5 * (s.nn() + 1) * std::log(d)));
}

TEST_CASE("log prior matches a product of scalar densities") {
  const PanelSpec s = tiny_spec();
  PriorConfig cfg;
  cfg.hg = Matrix(2, 1);
  (*cfg.hg) << 1, -1;
  VecmParams p;
  p.b = Vector(4);
  p.b << 0.3, -0.2, -0.4, 0.7;  // alpha_1, phi_1, alpha_2, phi_2
  p.b_beta_star = Vector(2);
  p.b_beta_star << 0.8, -0.5;
  p.sigma = Matrix::Identity(2, 2);
  p.sigma(0, 1) = p.sigma(1, 0) = 0.2;
  p.nu = 4.0;
  p.tau = 0.3;

  const Matrix h = cfg.h();
  const Matrix perp = matrix_kit::orth_complement(h);
  const Vector bs = p.b_beta_star;
  const Vector beta = bs / bs.norm();
  const double g = (beta.transpose() * projection_inverse(cfg, 2, p.tau) * beta)(0, 0);
  const double c = cfg.longrun_scale;
  const double v = cfg.v_diffuse;
  using boost::math::normal_distribution;
  auto lnorm = [](double x, double var) { return std::log(boost::math::pdf(normal_distribution<double>(0.0, std::sqrt(var)), x)); };
  double expected = 0.0;
  expected += lnorm(p.b(0), c / (p.nu * g)) + lnorm(p.b(2), c / (p.nu * g));
  expected += lnorm(p.b(1), v / p.nu) + lnorm(p.b(3), v / p.nu);
  expected += lnorm((h.transpose() * bs)(0), c / p.nu) + lnorm((perp.transpose() * bs)(0), c * p.tau / p.nu);
  const double nu_dof = cfg.nu_nu - 2.0;
  const boost::math::gamma_distribution<double> nu_prior(nu_dof / 2.0, 2.0 * cfg.mu_nu / nu_dof);
  expected += std::log(boost::math::pdf(nu_prior, p.nu));
  const boost::math::gamma_distribution<double> tau_inv(cfg.nu_tau / 2.0, 2.0 * cfg.mu_tau / cfg.nu_tau);
  expected += std::log(boost::math::pdf(tau_inv, 1.0 / p.tau)) - 2.0 * std::log(p.tau);
  expected += -1.5 * std::log(p.sigma.determinant());
  CHECK(std::abs(log_prior(p, s, cfg) - expected) < 1e-10);

  VecmParams shrunk = p;
  shrunk.b_beta_star *= 0.1;
  CHECK(log_prior_terms(shrunk, s, cfg).beta_star > log_prior_terms(p, s, cfg).beta_star);
}

TEST_CASE("prior validation names the key") {
  PanelSpec s;
  s.individuals = 3;
  s.variables = 4;
  s.lags = 1;
  s.deterministic = 1;
  s.usable_length = 100;
  s.ranks = {3, 3, 3};
  PriorConfig cfg;
  CHECK(cfg.nu_prior_dof(s) == doctest::Approx(42.0 - 36.0));
  cfg.nu_nu = 36.0;
  CHECK_THROWS_WITH_AS(cfg.validate(s), doctest::Contains("prior.nu_nu"), Error);
  cfg.nu_nu = 42.0;
  cfg.mu_tau = -1.0;
  CHECK_THROWS_WITH_AS(cfg.validate(s), doctest::Contains("prior.mu_tau"), Error);
  cfg.mu_tau = 5.0;
  cfg.hg = Matrix::Ones(3, 1);
  CHECK_THROWS_WITH_AS(cfg.validate(s), doctest::Contains("prior.hg"), Error);
}

TEST_CASE("gamma conventions") {
  PriorConfig md;
  PriorConfig sr;
  sr.gamma_convention = GammaConvention::ShapeRate;
  const boost::math::gamma_distribution<double> a(21.0, 2.0 * 5.0 / 42.0);
  CHECK(log_gamma_density(md, 1.7, 5.0, 42.0) == doctest::Approx(std::log(boost::math::pdf(a, 1.7))));
  const boost::math::gamma_distribution<double> b(3.0, 1.0 / 2.0);
  CHECK(log_gamma_density(sr, 1.7, 3.0, 2.0) == doctest::Approx(std::log(boost::math::pdf(b, 1.7))));
}
