#include "bcpanel/simulator.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "bcpanel/analytics.hpp"
#include "bcpanel/error.hpp"

namespace bcpanel {

namespace {

constexpr int kN = 3;
constexpr int kVars = 4;
constexpr int kLags = 1;

Matrix normalized_columns(std::initializer_list<std::initializer_list<double>> cols) {
  Matrix m(kVars, static_cast<Eigen::Index>(cols.size()));
  Eigen::Index c = 0;
  for (const auto& col : cols) {
    Eigen::Index r = 0;
    for (double v : col) m(r++, c) = v;
    m.col(c).normalize();
    ++c;
  }
  return m;
}

std::string iso_date(int offset) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{year{2000} / January / 1} + days{offset}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace

PanelSpec fixture_spec(int usable_length) {
  PanelSpec spec;
  spec.individuals = kN;
  spec.variables = kVars;
  spec.lags = kLags;
  spec.deterministic = 1;
  spec.usable_length = usable_length;
  spec.ranks = {1, 2, 2};
  return spec;
}

VecmParams fixture_truth() {
  const PanelSpec spec = fixture_spec(100);
  std::vector<Matrix> betas = {
      normalized_columns({{1.0, -1.0, 0.5, 0.0}}),
      normalized_columns({{1.0, 0.0, -1.0, 0.0}, {0.0, 1.0, 0.0, -1.0}}),
      normalized_columns({{1.0, 0.5, 0.0, -1.0}, {0.0, 1.0, -1.0, 0.5}}),
  };
  betas[2] = matrix_kit::normalize_semiorthogonal(betas[2]);
  const std::vector<double> speeds = {0.40, 0.35, 0.45};
  std::vector<Matrix> tilt(kN);
  tilt[0] = (Matrix(kVars, 1) << 0.05, 0.10, -0.05, 0.15).finished();
  tilt[1] = (Matrix(kVars, 2) << 0.05, 0.00, -0.05, 0.10, 0.10, 0.05, 0.00, -0.10).finished();
  tilt[2] = (Matrix(kVars, 2) << 0.00, 0.10, 0.10, -0.05, -0.05, 0.00, 0.10, 0.05).finished();

  std::vector<Matrix> gammas(kN);
  gammas[0] = (Matrix(kVars, kVars) << 0.20, 0.05, 0.00, -0.05,  //
               0.00, 0.15, 0.05, 0.00,                             //
               -0.05, 0.00, 0.10, 0.05,                            //
               0.05, -0.05, 0.00, 0.20)
                  .finished();
  gammas[1] = (Matrix(kVars, kVars) << 0.10, 0.00, 0.05, 0.00,  //
               0.05, 0.20, 0.00, -0.05,                          //
               0.00, 0.05, 0.15, 0.00,                           //
               -0.05, 0.00, 0.05, 0.10)
                  .finished();
  gammas[2] = (Matrix(kVars, kVars) << 0.15, -0.05, 0.00, 0.05,  //
               0.00, 0.10, 0.05, 0.00,                            //
               0.05, 0.00, 0.20, -0.05,                           //
               0.00, 0.05, 0.00, 0.15)
                  .finished();
  const Matrix phi = (Matrix(kVars, 1) << 0.05, -0.05, 0.02, 0.0).finished();

  VecmParams p;
  p.b = Vector::Zero(spec.shortrun_total());
  p.b_beta_star = Vector::Zero(spec.longrun_total());
  for (int i = 0; i < kN; ++i) {
    DerivedParams d;
    d.beta = betas[i];
    d.alpha = -speeds[i] * betas[i] + tilt[i];
    d.a = normalize_alpha(d.alpha);
    d.kappa = matrix_kit::sym_sqrt(d.alpha.transpose() * d.alpha);
    canonicalize_signs(d);
    Matrix block(spec.k() + spec.ranks[i], kVars);
    block << d.alpha.transpose(), gammas[i].transpose(), phi.transpose();
    set_shortrun_block(p.b, spec, i, block);
    set_beta_star(p.b_beta_star, spec, i, d.beta * d.kappa);
  }
  Matrix corr(spec.nn(), spec.nn());
  for (int a = 0; a < spec.nn(); ++a)
    for (int b = 0; b < spec.nn(); ++b)
      corr(a, b) = a == b ? 1.0 : (a / kVars == b / kVars ? 0.3 : 0.15);
  p.sigma = corr;
  p.nu = 21.0;
  p.tau = 1.0;
  p.rho = 0.0;
  return p;
}

Scenario make_scenario(const std::string& name, std::uint64_t seed) {
  Scenario s;
  int t = 0;
  if (name == "short") {
    t = 30;
  } else if (name == "moderate") {
    t = 100;
  } else if (name == "large" || name == "extreme") {
    t = 300;
  } else {
    throw Error(ErrorKind::ConfigError, "scenario: unknown name '" + name + "' (short|moderate|large)");
  }
  s.name = name == "extreme" ? "large" : name;
  s.spec = fixture_spec(t);
  s.truth = fixture_truth();
  s.seed = seed;
  return s;
}

Matrix sample_ar1_errors(const Matrix& sigma, double rho, Eigen::Index t, RandomSource& rng) {
  if (!(std::abs(rho) < 1.0)) throw Error(ErrorKind::OutOfRange, "simulation needs |rho| < 1");
  const Matrix lower = matrix_kit::cholesky_lower(sigma);
  const Eigen::Index p = sigma.rows();
  const double innov = std::sqrt(1.0 - rho * rho);
  Matrix eps(t, p);
  for (Eigen::Index s = 0; s < t; ++s) {
    const Vector u = lower * rng.normal_vector(p);
    if (s == 0) {
      eps.row(s) = u.transpose();
    } else {
      eps.row(s) = rho * eps.row(s - 1) + innov * u.transpose();
    }
  }
  return eps;
}

void check_stability(const VecmParams& params, const PanelSpec& spec) {
  for (int i = 0; i < spec.individuals; ++i) {
    const double radius = spectral_radius(companion_matrix(vecm_to_var(params, spec, i)));
    if (radius > 1.0 + 1e-8)
      throw Error(ErrorKind::Unstable, "individual " + std::to_string(i) + " companion spectral radius " +
                                           std::to_string(radius));
  }
}

void propagate(PanelData& panel, const PanelSpec& spec, const VecmParams& params, const Matrix& eps) {
  const Eigen::Index t0 = panel.raw_length();
  const int lags = spec.lags;
  const int n = spec.variables;
  if (eps.rows() != t0 - lags - 1 || eps.cols() != spec.nn())
    throw Error(ErrorKind::DimensionMismatch, "error matrix must be (T0 - L - 1) x Nn");
  const auto derived = derive(params, spec);
  Vector w(spec.k());
  for (int i = 0; i < spec.individuals; ++i) {
    Matrix& y = panel.levels[i];
    const Matrix& pi = derived[i].pi;
    const Matrix c = c_of(params.b, spec, i);
    for (Eigen::Index t = lags + 1; t < t0; ++t) {
      for (int h = 1; h <= lags; ++h) w.segment(n * (h - 1), n) = (y.row(t - h) - y.row(t - h - 1)).transpose();
      if (spec.deterministic > 0) w.tail(spec.deterministic) = panel.deterministic.row(t).transpose();
      const Vector dy = pi * y.row(t - 1).transpose() + c.transpose() * w +
                        eps.block(t - lags - 1, i * n, 1, n).transpose();
      y.row(t) = y.row(t - 1) + dy.transpose();
    }
  }
}

PanelData simulate_panel(const Scenario& scenario, RandomSource& rng) {
  const PanelSpec& spec = scenario.spec;
  check_stability(scenario.truth, spec);
  if (deterministic_count(scenario.terms) != spec.deterministic)
    throw Error(ErrorKind::DimensionMismatch, "scenario deterministic terms do not match spec");
  const Eigen::Index t0 = spec.usable_length + spec.lags + 1;
  const Eigen::Index total = t0 + scenario.burn_in;
  PanelData full;
  full.deterministic = make_deterministic(total, scenario.terms);
  full.levels.assign(spec.individuals, Matrix::Zero(total, spec.variables));
  propagate(full, spec, scenario.truth,
            sample_ar1_errors(scenario.truth.sigma, scenario.truth.rho, total - spec.lags - 1, rng));

  PanelData out;
  out.deterministic = full.deterministic.bottomRows(t0);
  for (auto& lv : full.levels) out.levels.push_back(lv.bottomRows(t0));
  for (int i = 0; i < spec.individuals; ++i) out.individual_names.push_back("ind" + std::to_string(i + 1));
  for (int j = 0; j < spec.variables; ++j) out.variable_names.push_back("y" + std::to_string(j + 1));
  for (Eigen::Index t = 0; t < t0; ++t) out.dates.push_back(iso_date(static_cast<int>(t)));
  return out;
}

PanelData simulate_conditional(const PanelData& panel, const PanelSpec& spec, const VecmParams& params,
                               RandomSource& rng) {
  PanelData out = panel;
  propagate(out, spec, params, sample_ar1_errors(params.sigma, params.rho, spec.usable_length, rng));
  return out;
}

GroupAccuracy group_accuracy(const std::vector<double>& truth, const std::vector<std::vector<double>>& draws) {
  if (truth.size() != draws.size()) throw Error(ErrorKind::DimensionMismatch, "truth vs draw entries");
  GroupAccuracy g;
  g.entries = truth.size();
  if (truth.empty()) return g;
  double covered = 0.0, sq = 0.0, abs_err = 0.0, len = 0.0, bias = 0.0;
  for (std::size_t e = 0; e < truth.size(); ++e) {
    if (draws[e].empty()) throw Error(ErrorKind::EmptyChain, "no draws for entry " + std::to_string(e));
    const double lo = quantile(draws[e], 0.025);
    const double hi = quantile(draws[e], 0.975);
    const double err = truth[e] - mean_of(draws[e]);
    if (truth[e] >= lo && truth[e] <= hi) covered += 1.0;
    sq += err * err;
    abs_err += std::abs(err);
    bias += err;
    len += hi - lo;
  }
  const double m = static_cast<double>(truth.size());
  g.coverage = covered / m;
  g.rmse = std::sqrt(sq / m);
  g.mae = abs_err / m;
  g.avg_ci_length = len / m;
  g.bias = bias / m;
  return g;
}

GroupAccuracy pool_accuracy(const std::vector<GroupAccuracy>& parts) {
  GroupAccuracy g;
  double sq = 0.0;
  for (const auto& p : parts) {
    const double m = static_cast<double>(p.entries);
    g.entries += p.entries;
    g.coverage += m * p.coverage;
    sq += m * p.rmse * p.rmse;
    g.mae += m * p.mae;
    g.avg_ci_length += m * p.avg_ci_length;
    g.bias += m * p.bias;
  }
  if (g.entries == 0) return g;
  const double m = static_cast<double>(g.entries);
  g.coverage /= m;
  g.rmse = std::sqrt(sq / m);
  g.mae /= m;
  g.avg_ci_length /= m;
  g.bias /= m;
  return g;
}

AccuracyReport accuracy_report(const VecmParams& truth, const PanelSpec& spec, const ChainStore& chain) {
  if (chain.empty()) throw Error(ErrorKind::EmptyChain, "accuracy report needs draws");
  auto gamma_entries = [&](const VecmParams& p, std::vector<double>& out) {
    for (int i = 0; i < spec.individuals; ++i)
      for (int h = 1; h <= spec.lags; ++h) {
        const Matrix g = gamma_of(p.b, spec, i, h);
        for (Eigen::Index e = 0; e < g.size(); ++e) out.push_back(g.data()[e]);
      }
  };
  auto pi_entries = [&](const VecmParams& p, std::vector<double>& out) {
    for (const auto& d : derive(p, spec))
      for (Eigen::Index e = 0; e < d.pi.size(); ++e) out.push_back(d.pi.data()[e]);
  };
  std::vector<double> g_truth, p_truth;
  gamma_entries(truth, g_truth);
  pi_entries(truth, p_truth);
  std::vector<std::vector<double>> g_draws(g_truth.size()), p_draws(p_truth.size());
  std::vector<double> buf;
  for (const auto& d : chain.draws) {
    buf.clear();
    gamma_entries(d, buf);
    for (std::size_t e = 0; e < buf.size(); ++e) g_draws[e].push_back(buf[e]);
    buf.clear();
    pi_entries(d, buf);
    for (std::size_t e = 0; e < buf.size(); ++e) p_draws[e].push_back(buf[e]);
  }
  return {group_accuracy(g_truth, g_draws), group_accuracy(p_truth, p_draws)};
}

std::vector<StudyRow> run_study(const std::vector<Scenario>& scenarios, const PriorConfig& prior,
                                const ChainConfig& cc, int threads) {
  std::vector<StudyRow> rows(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < scenarios.size(); k = next++) {
      const Scenario& sc = scenarios[k];
      StudyRow& row = rows[k];
      row.scenario = sc.name;
      const auto start = std::chrono::steady_clock::now();
      try {
        RandomSource rng(sc.seed);
        const PanelData data = simulate_panel(sc, rng);
        const PanelSpec spec = PanelSpec::from_data(data, sc.spec.lags, sc.spec.ranks);
        ChainConfig local = cc;
        local.seed = rng.split();
        const ChainStore chain = run_chain(data, spec, prior, local);
        row.report = accuracy_report(sc.truth, spec, chain);
        row.summary = summarize_chain(chain, spec);
        for (const auto& ev : chain.events)
          if (ev.rfind("jitter", 0) == 0) ++row.jitter_events;
      } catch (const Error& e) {
        row.error = e.what();
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const int pool = std::max(1, std::min<int>(threads, static_cast<int>(scenarios.size())));
  std::vector<std::thread> workers;
  for (int w = 1; w < pool; ++w) workers.emplace_back(worker);
  worker();
  for (auto& th : workers) th.join();
  return rows;
}

}  // namespace bcpanel
