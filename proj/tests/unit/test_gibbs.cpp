#include "doctest.h"

#include <algorithm>

#include "bcpanel/error.hpp"
#include "bcpanel/gibbs.hpp"
#include "bcpanel/simulator.hpp"
#include "oracles.hpp"

using namespace bcpanel;
using matrix_kit::kron;
using matrix_kit::max_abs;
using matrix_kit::vec;

namespace {

struct Tiny {
  PanelData data;
  PanelSpec spec;
  PanelArrays arrays;
};

Tiny tiny_instance(std::uint64_t seed) {
  RandomSource rng(seed);
  Tiny t;
  t.data = oracle::random_walk_panel(1, 2, 13, DeterministicTerms::Constant, rng);
  t.spec = PanelSpec::from_data(t.data, 0, {1});
  t.arrays = prepare_arrays(t.data, t.spec);
  return t;
}

double median(std::vector<double> x) {
  std::nth_element(x.begin(), x.begin() + static_cast<long>(x.size() / 2), x.end());
  return x[x.size() / 2];
}

}  // namespace

TEST_CASE("short-run conditional matches the dense GLS oracle") {
  const Tiny t = tiny_instance(61);
  REQUIRE(t.spec.usable_length == 12);
  RandomSource rng(62);
  const Matrix beta = oracle::random_semiorthogonal(2, 1, rng);
  const Matrix sigma = oracle::random_spd(2, rng);
  const double rho = 0.35, nu = 2.5;
  PriorConfig cfg;
  const Matrix prior_prec = build_vtilde_precision(t.spec, cfg, {beta}, 1.0);

  Matrix u(12, 2);
  u.col(0) = t.arrays.ylag[0] * beta;
  u.col(1) = t.arrays.w[0];
  const Matrix x = kron(Matrix::Identity(2, 2), u);
  const Vector y = vec(t.arrays.dy_all);
  const auto dense = oracle::dense_gls(x, y, oracle::dense_error_cov(sigma, rho, 12), nu * prior_prec);

  const auto sys = build_shortrun_system(t.arrays, t.spec, {beta});
  const auto post = gls_conditional(sys, sigma, rho, nu, prior_prec);
  CHECK(max_abs(post.mean - dense.mean) < 1e-8);
  CHECK(max_abs(post.precision.inverse() - dense.cov) < 1e-8);
}

TEST_CASE("long-run conditional matches the dense GLS oracle") {
  const Tiny t = tiny_instance(63);
  RandomSource rng(64);
  const Matrix a = oracle::random_semiorthogonal(2, 1, rng);
  const Matrix c = rng.normal_matrix(1, 2);
  const Matrix sigma = oracle::random_spd(2, rng);
  const double rho = -0.2, nu = 1.7;
  PriorConfig cfg;
  cfg.hg = Matrix(2, 1);
  (*cfg.hg) << 1, -1;
  const Matrix prior_prec = longrun_prior_precision(t.spec, cfg, 0.4);

  const Matrix x = kron(a, t.arrays.ylag[0]);
  const Vector y = vec(t.arrays.dy[0] - t.arrays.w[0] * c);
  const auto dense = oracle::dense_gls(x, y, oracle::dense_error_cov(sigma, rho, 12), nu * prior_prec);
  const auto sys = build_longrun_system(t.arrays, t.spec, {a}, {c});
  const auto post = gls_conditional(sys, sigma, rho, nu, prior_prec);
  CHECK(max_abs(post.mean - dense.mean) < 1e-8);
  CHECK(max_abs(post.precision.inverse() - dense.cov) < 1e-8);
}

TEST_CASE("conditional limits") {
  const Tiny t = tiny_instance(65);
  RandomSource rng(66);
  const Matrix beta = oracle::random_semiorthogonal(2, 1, rng);
  const auto sys = build_shortrun_system(t.arrays, t.spec, {beta});
  PriorConfig cfg;
  const Matrix prior_prec = build_vtilde_precision(t.spec, cfg, {beta}, 1.0);

  SUBCASE("OLS when the prior vanishes") {
    const auto post = gls_conditional(sys, Matrix::Identity(2, 2), 0.0, 0.0, prior_prec);
    const Matrix x = sys.dense_design();
    const Vector ols = x.colPivHouseholderQr().solve(vec(sys.response));
    CHECK(max_abs(post.mean - ols) < 1e-8);
  }
  SUBCASE("infinite shrinkage") {
    std::vector<double> norms;
    for (int d = 0; d < 201; ++d)
      norms.push_back(sample_b(sys, Matrix::Identity(2, 2), 0.0, 1e9, Matrix::Identity(4, 4), rng).norm());
    CHECK(median(norms) < 1e-3);
  }
  SUBCASE("no data information with A = 0") {
    const auto lr = build_longrun_system(t.arrays, t.spec, {Matrix::Zero(2, 1)}, {Matrix::Zero(1, 2)});
    const Matrix lp = longrun_prior_precision(t.spec, cfg, 1.0);
    const auto post = gls_conditional(lr, Matrix::Identity(2, 2), 0.0, 3.0, lp);
    CHECK(max_abs(post.mean) < 1e-14);
    CHECK(max_abs(post.precision - 3.0 * lp) < 1e-12);
  }
  SUBCASE("precision is linear in nu") {
    const Matrix sigma = oracle::random_spd(2, rng);
    const auto p1 = gls_conditional(sys, sigma, 0.1, 1.0, prior_prec);
    const auto p2 = gls_conditional(sys, sigma, 0.1, 2.0, prior_prec);
    CHECK(max_abs(p2.precision - p1.precision - prior_prec) < 1e-9);
  }
}

TEST_CASE("Sigma conditional") {
  RandomSource rng(67);
  const Matrix eps = rng.normal_matrix(30, 2);
  const SigmaPrior improper;
  const int draws = 100000;
  Matrix sum = Matrix::Zero(2, 2), sq = Matrix::Zero(2, 2);
  for (int d = 0; d < draws; ++d) {
    const Matrix s = sample_sigma(eps, 0.0, improper, rng);
    sum += s;
    sq += s.cwiseProduct(s);
  }
  const Matrix mean = sum / draws;
  const Matrix sd = (sq / draws - mean.cwiseProduct(mean)).cwiseSqrt();
  const Matrix expected = eps.transpose() * eps / (30.0 - 2.0 - 1.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(mean(i, j) - expected(i, j)) < 3.0 * sd(i, j) / std::sqrt(draws));

  RandomSource a(68), b(68);
  std::vector<double> base, scaled;
  for (int d = 0; d < 10000; ++d) {
    base.push_back(sample_sigma(eps, 30, a)(0, 0));
    scaled.push_back(sample_sigma(3.0 * eps, 30, b)(0, 0));
  }
  std::sort(base.begin(), base.end());
  std::sort(scaled.begin(), scaled.end());
  for (std::size_t q : {1000u, 5000u, 9000u}) CHECK(scaled[q] == doctest::Approx(9.0 * base[q]).epsilon(1e-10));

  CHECK_THROWS_WITH_AS(sample_sigma(rng.normal_matrix(3, 3), 0.0, improper, rng), doctest::Contains("DofTooSmall"),
                       Error);
}

TEST_CASE("nu conditional") {
  PanelSpec s;
  s.individuals = 1;
  s.variables = 2;
  s.lags = 0;
  s.deterministic = 1;
  s.usable_length = 12;
  s.ranks = {1};
  PriorConfig cfg;
  const Matrix vp = Matrix::Identity(4, 4);
  const auto [mean0, dof0] = nu_conditional(Vector::Zero(4), vp, s, cfg);
  CHECK(dof0 == doctest::Approx(40.0 + 4.0));
  CHECK(mean0 == doctest::Approx(dof0 * cfg.mu_nu / 40.0));

  Vector b(4);
  b << 0.5, -1.0, 0.2, 0.3;
  const auto [mean_b, dof_b] = nu_conditional(b, vp, s, cfg);
  RandomSource rng(69);
  const int draws = 100000;
  double sum = 0.0, sq = 0.0;
  for (int d = 0; d < draws; ++d) {
    const double x = sample_nu(b, vp, s, cfg, rng);
    sum += x;
    sq += x * x;
  }
  const double m = sum / draws;
  CHECK(std::abs(m - mean_b) < 3.0 * std::sqrt((sq / draws - m * m) / draws));
  CHECK(dof_b == doctest::Approx(44.0));

  std::vector<double> small, large;
  for (int d = 0; d < 10000; ++d) {
    small.push_back(sample_nu(b, vp, s, cfg, rng));
    large.push_back(sample_nu(10.0 * b, vp, s, cfg, rng));
  }
  CHECK(median(large) < median(small));
}

TEST_CASE("tau conditional") {
  PriorConfig cfg;
  cfg.hg = Matrix(3, 2);
  (*cfg.hg) << 1, 0, 0, 1, -1, -1;
  PanelSpec s;
  s.individuals = 1;
  s.variables = 3;
  s.lags = 0;
  s.deterministic = 0;
  s.usable_length = 20;
  s.ranks = {1};
  const Matrix h = cfg.h();
  const Matrix perp = matrix_kit::orth_complement(h);

  const Matrix inside = 2.0 * h.col(0) - h.col(1);
  CHECK(perp_trace({inside}, cfg) < 1e-24);
  const auto [m_in, d_in] = tau_inverse_conditional({inside}, 3.0, s, cfg);
  CHECK(m_in == doctest::Approx(d_in * cfg.mu_tau / cfg.nu_tau));

  const Matrix along = 1.7 * perp;
  CHECK(perp_trace({along}, cfg) == doctest::Approx(1.7 * 1.7));

  PanelSpec big;
  big.individuals = 3;
  big.variables = 4;
  big.lags = 1;
  big.deterministic = 1;
  big.usable_length = 100;
  big.ranks = {3, 3, 3};
  PriorConfig three;
  three.hg = Matrix::Identity(4, 3);
  std::vector<Matrix> bs(3, Matrix::Zero(4, 3));
  CHECK(tau_inverse_conditional(bs, 1.0, big, three).second == doctest::Approx(three.nu_tau + 9.0));

  PriorConfig none;
  CHECK_THROWS_WITH_AS(tau_inverse_conditional({inside}, 1.0, s, none), doctest::Contains("NoRestriction"), Error);
}

TEST_CASE("rho Metropolis step") {
  const Tiny t = tiny_instance(70);
  PriorConfig cfg;
  VecmParams state = initial_state(t.arrays, t.spec, cfg);
  state.rho = 0.2;
  const double ll = log_likelihood(t.arrays, t.spec, state);
  RandomSource rng(71);
  for (int k = 0; k < 20; ++k) {
    const RhoStep st = mh_step_rho(state, t.arrays, t.spec, 0.0, ll, rng);
    CHECK(st.accepted);
    CHECK(st.rho == 0.2);
  }
  RandomSource r1(72), r2(72);
  const RhoStep st = mh_step_rho(state, t.arrays, t.spec, 0.3, ll, r1);
  double prop = 0.2 + 0.3 * r2.normal();
  while (prop > 1.0 || prop < -1.0) prop = prop > 1.0 ? 2.0 - prop : -2.0 - prop;
  VecmParams moved = state;
  moved.rho = prop;
  CHECK(st.log_ratio == doctest::Approx(log_likelihood(t.arrays, t.spec, moved) - ll));
  CHECK(st.accepted == (std::log(r2.uniform()) < std::min(0.0, st.log_ratio)));
}

TEST_CASE("chains are deterministic per seed") {
  const Scenario sc = make_scenario("moderate", 5);
  RandomSource rng(sc.seed);
  const PanelData data = simulate_panel(sc, rng);
  const PanelSpec spec = PanelSpec::from_data(data, 1, sc.spec.ranks);
  ChainConfig cc;
  cc.warmup = 20;
  cc.iterations = 30;
  cc.seed = 9;
  const ChainStore a = run_chain(data, spec, PriorConfig{}, cc);
  const ChainStore b = run_chain(data, spec, PriorConfig{}, cc);
  REQUIRE(a.size() == 30);
  for (std::size_t s = 0; s < a.size(); ++s) {
    CHECK(a.loglik[s] == b.loglik[s]);
    CHECK(max_abs(a.draws[s].b - b.draws[s].b) == 0.0);
    CHECK(max_abs(a.draws[s].sigma - b.draws[s].sigma) == 0.0);
  }
  cc.thin = 3;
  CHECK(run_chain(data, spec, PriorConfig{}, cc).size() == 10);
}

TEST_CASE("improper Sigma posterior is refused up front") {
  const Scenario sc = make_scenario("short", 1);
  RandomSource rng(sc.seed);
  const PanelData data = simulate_panel(sc, rng);
  const PanelSpec spec = PanelSpec::from_data(data, 1, sc.spec.ranks);
  ChainConfig cc;
  cc.warmup = 1;
  cc.iterations = 1;
  CHECK_THROWS_WITH_AS(run_chain(data, spec, PriorConfig{}, cc), doctest::Contains("InsufficientData"), Error);
  PriorConfig proper;
  proper.sigma.improper = false;
  proper.sigma.scale = 0.01 * Matrix::Identity(12, 12);
  proper.sigma.dof = 14.0;
  CHECK(run_chain(data, spec, proper, cc).size() == 1);
}

TEST_CASE("chain configuration validation") {
  ChainConfig cc;
  cc.iterations = 0;
  CHECK_THROWS_WITH_AS(cc.validate(), doctest::Contains("chain.iterations"), Error);
  cc = ChainConfig{};
  cc.thin = 0;
  CHECK_THROWS_WITH_AS(cc.validate(), doctest::Contains("chain.thin"), Error);
}
