#include "doctest.h"

#include "bcpanel/analytics.hpp"
#include "bcpanel/error.hpp"
#include "bcpanel/simulator.hpp"
#include "oracles.hpp"

using namespace bcpanel;
using matrix_kit::max_abs;

namespace {

PanelSpec var_spec(int n, int lags, int rank) {
  PanelSpec s;
  s.individuals = 1;
  s.variables = n;
  s.lags = lags;
  s.deterministic = 0;
  s.usable_length = 50;
  s.ranks = {rank};
  return s;
}

/// Single-individual state with Pi = alpha beta^T.
VecmParams vecm_state(const PanelSpec& s, const Matrix& alpha, const Matrix& beta, const std::vector<Matrix>& gammas,
                      const Matrix& sigma) {
  VecmParams p;
  p.sigma = sigma;
  p.b = Vector::Zero(s.shortrun_total());
  p.b_beta_star = Vector::Zero(s.longrun_total());
  Matrix block = Matrix::Zero(s.k() + s.ranks[0], s.variables);
  if (s.ranks[0] > 0) {
    block.topRows(s.ranks[0]) = alpha.transpose();
    set_beta_star(p.b_beta_star, s, 0, beta);
  }
  for (int h = 0; h < s.lags; ++h) block.middleRows(s.ranks[0] + h * s.variables, s.variables) = gammas[h].transpose();
  set_shortrun_block(p.b, s, 0, block);
  return p;
}

}  // namespace

TEST_CASE("VECM to VAR conversion") {
  const Matrix i2 = Matrix::Identity(2, 2);
  auto a = vecm_to_var(Matrix::Zero(2, 2), {});
  REQUIRE(a.size() == 1);
  CHECK(max_abs(a[0] - i2) == 0.0);
  a = vecm_to_var(-i2, {Matrix::Zero(2, 2)});
  CHECK(max_abs(a[0]) == 0.0);
  CHECK(max_abs(a[1]) == 0.0);
}

TEST_CASE("VECM and recovered VAR generate the same path") {
  RandomSource rng(91);
  const Matrix pi = 0.2 * rng.normal_matrix(3, 3);
  const Matrix g1 = 0.2 * rng.normal_matrix(3, 3);
  const auto a = vecm_to_var(pi, {g1});
  const Matrix eps = rng.normal_matrix(40, 3);
  Matrix y1 = Matrix::Zero(42, 3), y2 = Matrix::Zero(42, 3);
  y1.row(1) = y2.row(1) = rng.normal_vector(3).transpose();
  for (int t = 2; t < 42; ++t) {
    const Vector dy = pi * y1.row(t - 1).transpose() + g1 * (y1.row(t - 1) - y1.row(t - 2)).transpose() +
                      eps.row(t - 2).transpose();
    y1.row(t) = y1.row(t - 1) + dy.transpose();
    y2.row(t) = (a[0] * y2.row(t - 1).transpose() + a[1] * y2.row(t - 2).transpose() + eps.row(t - 2).transpose())
                    .transpose();
  }
  CHECK(max_abs(y1 - y2) < 1e-10);
}

TEST_CASE("companion matrix and spectral radius") {
  Matrix a1(2, 2), a2(2, 2);
  a1 << 0.5, 0.1, 0.0, 0.3;
  a2 << 0.1, 0.0, 0.0, 0.1;
  const Matrix c = companion_matrix({a1, a2});
  CHECK(c.rows() == 4);
  CHECK(max_abs(c.block(2, 0, 2, 2) - Matrix::Identity(2, 2)) == 0.0);
  CHECK(spectral_radius(c) < 1.0);
  CHECK(spectral_radius(companion_matrix({Matrix::Identity(2, 2)})) == doctest::Approx(1.0));
}

TEST_CASE("IRF impact and unit-root persistence") {
  const PanelSpec s = var_spec(2, 1, 0);
  Matrix sigma(2, 2);
  sigma << 1.0, 0.4, 0.4, 2.0;
  const VecmParams p = vecm_state(s, Matrix(2, 0), Matrix(2, 0), {Matrix::Zero(2, 2)}, sigma);
  const auto theta = irf(p, s, 6);
  const Matrix chol = sigma.llt().matrixL();
  CHECK(max_abs(theta[0][0] - chol) < 1e-14);
  for (int h = 1; h <= 6; ++h) CHECK(max_abs(theta[0][h] - chol) < 1e-14);
}

TEST_CASE("FEVD with diagonal Sigma and no dynamics is the identity") {
  const PanelSpec s = var_spec(3, 1, 0);
  Matrix sigma = Matrix::Zero(3, 3);
  sigma.diagonal() << 1.0, 2.0, 0.5;
  const VecmParams p = vecm_state(s, Matrix(3, 0), Matrix(3, 0), {Matrix::Zero(3, 3)}, sigma);
  const auto f = fevd(p, s, 16);
  REQUIRE(f.shares[0].size() == 16);
  for (const auto& m : f.shares[0]) CHECK(max_abs(m - Matrix::Identity(3, 3)) < 1e-14);
}

TEST_CASE("FEVD matches a hand recursion for a one-lag VAR") {
  const PanelSpec s = var_spec(2, 0, 1);
  Vector alpha(2), beta(2);
  alpha << -0.4, 0.2;
  beta << 0.6, 0.8;
  Matrix sigma(2, 2);
  sigma << 1.0, 0.3, 0.3, 0.5;
  const VecmParams p = vecm_state(s, alpha, beta, {}, sigma);
  const auto derived = derive(p, s);
  REQUIRE(max_abs(derived[0].pi - alpha * beta.transpose()) < 1e-12);

  const Matrix a = Matrix::Identity(2, 2) + alpha * beta.transpose();
  const Matrix pchol = sigma.llt().matrixL();
  const Matrix t0 = pchol, t1 = a * pchol, t2 = a * a * pchol;
  const std::vector<Matrix> cum{t0.cwiseAbs2(), t0.cwiseAbs2() + t1.cwiseAbs2(),
                                t0.cwiseAbs2() + t1.cwiseAbs2() + t2.cwiseAbs2()};
  const auto f = fevd(p, s, 3);
  const auto theta = irf(p, s, 2);
  for (int h = 0; h < 3; ++h) {
    Matrix expected = cum[h];
    for (int j = 0; j < 2; ++j) expected.row(j) /= cum[h].row(j).sum();
    CHECK(max_abs(f.shares[0][h] - expected) < 1e-12);
    CHECK(max_abs(theta[0][h] - std::vector<Matrix>{t0, t1, t2}[h]) < 1e-12);
  }
}

TEST_CASE("FEVD rows sum to one on random states") {
  RandomSource rng(92);
  const PanelSpec s = fixture_spec(100);
  VecmParams p = fixture_truth();
  for (int rep = 0; rep < 3; ++rep) {
    p.sigma = oracle::random_spd(12, rng);
    const auto f = fevd(p, s, 16);
    for (const auto& ind : f.shares)
      for (const auto& m : ind) {
        CHECK(max_abs(m.rowwise().sum() - Vector::Ones(4)) < 1e-8);
        CHECK(m.minCoeff() >= 0.0);
      }
  }
}

TEST_CASE("quantiles and moments") {
  CHECK(quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({5}, 0.975) == 5.0);
  CHECK(mean_of({1, 2, 3}) == doctest::Approx(2.0));
  CHECK(sd_of({1, 2, 3}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(quantile({}, 0.5), Error);
  CHECK_THROWS_AS(quantile({1.0}, 1.5), Error);
}

TEST_CASE("effective sample size") {
  RandomSource rng(93);
  std::vector<double> iid(10000);
  for (auto& x : iid) x = rng.normal();
  const double ess = effective_sample_size(iid);
  CHECK(ess >= 8000.0);
  CHECK(ess <= 10000.0);

  std::vector<double> ar(100000);
  double prev = 0.0;
  for (auto& x : ar) {
    prev = 0.5 * prev + std::sqrt(0.75) * rng.normal();
    x = prev;
  }
  const double ratio = effective_sample_size(ar) / static_cast<double>(ar.size());
  CHECK(ratio == doctest::Approx(1.0 / 3.0).epsilon(0.2));
  CHECK(monte_carlo_se(ar) == doctest::Approx(sd_of(ar) / std::sqrt(effective_sample_size(ar))));
  CHECK(effective_sample_size(std::vector<double>(50, 1.0)) >= 1.0);
}

TEST_CASE("information criteria on degenerate and real chains") {
  const Scenario sc = make_scenario("moderate", 4);
  RandomSource rng(sc.seed);
  const PanelData data = simulate_panel(sc, rng);
  const PanelSpec spec = PanelSpec::from_data(data, 1, sc.spec.ranks);
  const PanelArrays arrays = prepare_arrays(data, spec);

  ChainStore one;
  VecmParams truth = sc.truth;
  one.draws.push_back(truth);
  one.loglik.push_back(log_likelihood(arrays, spec, truth));
  const auto ic1 = information_criteria(one, arrays, spec);
  CHECK(ic1.p_d == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(ic1.dic == doctest::Approx(-2.0 * one.loglik[0]));
  CHECK(ic1.p_waic == 0.0);

  ChainConfig cc;
  cc.warmup = 200;
  cc.iterations = 400;
  const ChainStore chain = run_chain(arrays, spec, PriorConfig{}, cc);
  const auto ic = information_criteria(chain, arrays, spec);
  CHECK(ic.p_waic >= 0.0);
  CHECK(ic.p_d > 0.0);
  CHECK(ic.parameter_count == spec.reported_parameter_count());
  CHECK(ic.bic == doctest::Approx(-2.0 * ic.loglik_at_mean + ic.parameter_count * std::log(100.0 * 12.0)));
  CHECK(ic.aic == doctest::Approx(-2.0 * ic.loglik_at_mean + 2.0 * ic.parameter_count));

  const auto summary = summarize_chain(chain, spec);
  CHECK(summary.front().name == "Sigma[1,1]");
  for (const auto& row : summary) {
    CHECK(row.q025 <= row.mean + 1e-12);
    CHECK(row.mean <= row.q975 + 1e-12);
    CHECK(row.ess >= 1.0);
  }
  const auto pm = posterior_mean_state(chain, spec);
  CHECK(pm.pis.size() == 3);
}

TEST_CASE("rank profile includes the difference VAR at r = 0") {
  const Scenario sc = make_scenario("moderate", 6);
  RandomSource rng(sc.seed);
  const PanelData data = simulate_panel(sc, rng);
  ChainConfig cc;
  cc.warmup = 100;
  cc.iterations = 200;
  const auto rows = rank_profile(data, 1, PriorConfig{}, cc, {2, 0, 1, 2});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].rank == 0);
  CHECK(rows[2].rank == 2);
  for (const auto& r : rows) CHECK(r.error.empty());

  const PanelSpec s0 = PanelSpec::from_data(data, 1, {0, 0, 0});
  const ChainStore c0 = run_chain(data, s0, PriorConfig{}, cc);
  const auto pm = posterior_mean_state(c0, s0);
  for (const auto& pi : pm.pis) CHECK(max_abs(pi) == 0.0);
}

TEST_CASE("empty chains are rejected") {
  const PanelSpec s = fixture_spec(100);
  CHECK_THROWS_WITH_AS(posterior_mean_state(ChainStore{}, s), doctest::Contains("EmptyChain"), Error);
}
