#include "bcpanel/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bcpanel/error.hpp"
#include "bcpanel/simulator.hpp"

namespace bcpanel {

namespace {

void require_draws(const ChainStore& chain) {
  if (chain.empty()) throw Error(ErrorKind::EmptyChain, "chain has no stored draws");
}

std::string idx(int a) { return std::to_string(a + 1); }

}  // namespace

// --- VAR recovery, IRF, FEVD -------------------------------------------------

std::vector<Matrix> vecm_to_var(const Matrix& pi, const std::vector<Matrix>& gammas) {
  const Eigen::Index n = pi.rows();
  if (pi.cols() != n) throw Error(ErrorKind::DimensionMismatch, "Pi must be square");
  for (const auto& g : gammas)
    if (g.rows() != n || g.cols() != n) throw Error(ErrorKind::DimensionMismatch, "Gamma must be n x n");
  const std::size_t lags = gammas.size();
  std::vector<Matrix> a(lags + 1);
  a[0] = Matrix::Identity(n, n) + pi + (lags > 0 ? gammas[0] : Matrix::Zero(n, n));
  for (std::size_t h = 1; h < lags; ++h) a[h] = gammas[h] - gammas[h - 1];
  if (lags > 0) a[lags] = -gammas[lags - 1];
  return a;
}

std::vector<Matrix> vecm_to_var(const VecmParams& params, const PanelSpec& spec, int individual) {
  Matrix pi = Matrix::Zero(spec.variables, spec.variables);
  if (spec.ranks.at(individual) > 0) pi = derive(params, spec).at(individual).pi;
  std::vector<Matrix> gammas;
  for (int h = 1; h <= spec.lags; ++h) gammas.push_back(gamma_of(params.b, spec, individual, h));
  return vecm_to_var(pi, gammas);
}

Matrix companion_matrix(const std::vector<Matrix>& a) {
  if (a.empty()) throw Error(ErrorKind::DimensionMismatch, "no VAR coefficients");
  const Eigen::Index n = a.front().rows();
  const Eigen::Index p = static_cast<Eigen::Index>(a.size());
  Matrix c = Matrix::Zero(n * p, n * p);
  for (Eigen::Index j = 0; j < p; ++j) c.block(0, j * n, n, n) = a[j];
  if (p > 1) c.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
  return c;
}

double spectral_radius(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<Matrix> ma_coefficients(const std::vector<Matrix>& a, int horizon) {
  if (a.empty()) throw Error(ErrorKind::DimensionMismatch, "no VAR coefficients");
  const Eigen::Index n = a.front().rows();
  std::vector<Matrix> psi(horizon + 1);
  psi[0] = Matrix::Identity(n, n);
  for (int h = 1; h <= horizon; ++h) {
    psi[h] = Matrix::Zero(n, n);
    for (int j = 1; j <= std::min<int>(h, static_cast<int>(a.size())); ++j) psi[h] += a[j - 1] * psi[h - j];
  }
  return psi;
}

std::vector<std::vector<Matrix>> irf(const VecmParams& params, const PanelSpec& spec, int horizon) {
  if (horizon < 0) throw Error(ErrorKind::OutOfRange, "horizon must be >= 0");
  const int n = spec.variables;
  std::vector<std::vector<Matrix>> out(spec.individuals);
  for (int i = 0; i < spec.individuals; ++i) {
    const Matrix p = matrix_kit::cholesky_lower(params.sigma.block(i * n, i * n, n, n));
    const auto psi = ma_coefficients(vecm_to_var(params, spec, i), horizon);
    out[i].reserve(psi.size());
    for (const auto& m : psi) out[i].push_back(m * p);
  }
  return out;
}

FevdResult fevd(const VecmParams& params, const PanelSpec& spec, int horizon) {
  if (horizon < 1) throw Error(ErrorKind::OutOfRange, "FEVD horizon must be >= 1");
  const auto theta = irf(params, spec, horizon - 1);
  const int n = spec.variables;
  FevdResult res;
  res.horizon = horizon;
  res.shares.resize(spec.individuals);
  for (int i = 0; i < spec.individuals; ++i) {
    Matrix cum = Matrix::Zero(n, n);
    for (int h = 0; h < horizon; ++h) {
      cum += theta[i][h].cwiseAbs2();
      Matrix share = cum;
      for (int j = 0; j < n; ++j) {
        const double total = cum.row(j).sum();
        share.row(j) = total > 0.0 ? Matrix(cum.row(j) / total) : Matrix(Matrix::Zero(1, n));
      }
      res.shares[i].push_back(std::move(share));
    }
  }
  return res;
}

namespace {

Bands bands_from(const std::vector<std::vector<std::vector<Matrix>>>& per_draw, double mass) {
  const std::size_t s = per_draw.size();
  const std::size_t ni = per_draw.front().size();
  Bands b;
  b.lower.resize(ni);
  b.mean.resize(ni);
  b.upper.resize(ni);
  const double lo = 0.5 * (1.0 - mass);
  std::vector<double> buf(s);
  for (std::size_t i = 0; i < ni; ++i) {
    const std::size_t nh = per_draw.front()[i].size();
    for (std::size_t h = 0; h < nh; ++h) {
      const Matrix& ref = per_draw.front()[i][h];
      Matrix l(ref.rows(), ref.cols()), m(ref.rows(), ref.cols()), u(ref.rows(), ref.cols());
      for (Eigen::Index r = 0; r < ref.rows(); ++r) {
        for (Eigen::Index c = 0; c < ref.cols(); ++c) {
          for (std::size_t d = 0; d < s; ++d) buf[d] = per_draw[d][i][h](r, c);
          m(r, c) = mean_of(buf);
          l(r, c) = quantile(buf, lo);
          u(r, c) = quantile(buf, 1.0 - lo);
        }
      }
      b.lower[i].push_back(std::move(l));
      b.mean[i].push_back(std::move(m));
      b.upper[i].push_back(std::move(u));
    }
  }
  return b;
}

}  // namespace

Bands irf_bands(const ChainStore& chain, const PanelSpec& spec, int horizon, double mass) {
  require_draws(chain);
  std::vector<std::vector<std::vector<Matrix>>> per_draw;
  per_draw.reserve(chain.size());
  for (const auto& d : chain.draws) per_draw.push_back(irf(d, spec, horizon));
  return bands_from(per_draw, mass);
}

Bands fevd_bands(const ChainStore& chain, const PanelSpec& spec, int horizon, double mass) {
  require_draws(chain);
  std::vector<std::vector<std::vector<Matrix>>> per_draw;
  per_draw.reserve(chain.size());
  for (const auto& d : chain.draws) per_draw.push_back(fevd(d, spec, horizon).shares);
  return bands_from(per_draw, mass);
}

// --- information criteria -------------------------------------------------------

PosteriorMeanState posterior_mean_state(const ChainStore& chain, const PanelSpec& spec) {
  require_draws(chain);
  PosteriorMeanState s;
  const int n = spec.variables;
  s.pis.assign(spec.individuals, Matrix::Zero(n, n));
  s.c_blocks.assign(spec.individuals, Matrix::Zero(spec.k(), n));
  s.sigma = Matrix::Zero(spec.nn(), spec.nn());
  const double w = 1.0 / static_cast<double>(chain.size());
  for (const auto& d : chain.draws) {
    const auto derived = derive(d, spec);
    for (int i = 0; i < spec.individuals; ++i) {
      s.pis[i] += w * derived[i].pi;
      s.c_blocks[i] += w * c_of(d.b, spec, i);
    }
    s.sigma += w * d.sigma;
    s.rho += w * d.rho;
  }
  return s;
}

double loglik_at(const PosteriorMeanState& s, const PanelArrays& arrays, const PanelSpec& spec) {
  return gaussian_kron_loglik(residuals_from_coefficients(arrays, spec, s.pis, s.c_blocks), s.sigma, s.rho);
}

InformationCriteria information_criteria(const ChainStore& chain, const PanelArrays& arrays, const PanelSpec& spec) {
  require_draws(chain);
  InformationCriteria ic;
  ic.loglik_at_mean = loglik_at(posterior_mean_state(chain, spec), arrays, spec);
  ic.mean_loglik = mean_of(chain.loglik);
  ic.p_d = 2.0 * (ic.loglik_at_mean - ic.mean_loglik);
  ic.dic = -2.0 * ic.loglik_at_mean + 2.0 * ic.p_d;

  const Eigen::Index t = spec.usable_length;
  const std::size_t s = chain.size();
  Matrix pointwise(static_cast<Eigen::Index>(s), t);
  for (std::size_t d = 0; d < s; ++d) {
    const auto& draw = chain.draws[d];
    pointwise.row(static_cast<Eigen::Index>(d)) =
        pointwise_loglik(residuals(arrays, spec, draw), draw.sigma, draw.rho).transpose();
  }
  for (Eigen::Index j = 0; j < t; ++j) {
    const Vector col = pointwise.col(j);
    const double mx = col.maxCoeff();
    ic.lppd += mx + std::log((col.array() - mx).exp().mean());
    if (s > 1) {
      const double mu = col.mean();
      ic.p_waic += (col.array() - mu).square().sum() / static_cast<double>(s - 1);
    }
  }
  ic.waic = -2.0 * (ic.lppd - ic.p_waic);
  ic.parameter_count = spec.reported_parameter_count();
  const double nobs = static_cast<double>(t) * spec.nn();
  ic.bic = -2.0 * ic.loglik_at_mean + static_cast<double>(ic.parameter_count) * std::log(nobs);
  ic.aic = -2.0 * ic.loglik_at_mean + 2.0 * static_cast<double>(ic.parameter_count);
  return ic;
}

InformationCriteria information_criteria(const ChainStore& chain, const PanelData& data, const PanelSpec& spec) {
  return information_criteria(chain, prepare_arrays(data, spec), spec);
}

std::vector<RankProfileRow> rank_profile(const PanelData& data, int lags, const PriorConfig& prior,
                                         const ChainConfig& cc, std::vector<int> ranks) {
  std::sort(ranks.begin(), ranks.end());
  ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
  std::vector<RankProfileRow> rows;
  for (int r : ranks) {
    RankProfileRow row;
    row.rank = r;
    try {
      const PanelSpec spec = PanelSpec::from_data(data, lags, std::vector<int>(data.individuals(), r));
      const PanelArrays arrays = prepare_arrays(data, spec);
      const ChainStore chain = run_chain(arrays, spec, prior, cc);
      row.draws = chain.size();
      row.mean_loglik = mean_of(chain.loglik);
      row.loglik_at_mean = loglik_at(posterior_mean_state(chain, spec), arrays, spec);
      row.summary = summarize_chain(chain, spec);
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- summaries and diagnostics ------------------------------------------------------

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::EmptyChain, "quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::OutOfRange, "quantile probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double mean_of(const std::vector<double>& x) {
  if (x.empty()) throw Error(ErrorKind::EmptyChain, "mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sd_of(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double effective_sample_size(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n == 0) throw Error(ErrorKind::EmptyChain, "ESS of an empty sample");
  if (n < 4) return static_cast<double>(n);
  const double m = mean_of(x);
  std::vector<double> c(x.size());
  for (std::size_t i = 0; i < n; ++i) c[i] = x[i] - m;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0)) return static_cast<double>(n);
  double tau = -1.0;
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    const double pair = (autocov(lag) + autocov(lag + 1)) / g0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  const double ess = static_cast<double>(n) / std::max(tau, 1e-12);
  return std::clamp(ess, 1.0, static_cast<double>(n));
}

double monte_carlo_se(const std::vector<double>& x) { return sd_of(x) / std::sqrt(effective_sample_size(x)); }

ParameterSummary summarize(const std::string& name, const std::vector<double>& x) {
  ParameterSummary s;
  s.name = name;
  s.mean = mean_of(x);
  s.sd = sd_of(x);
  s.q025 = quantile(x, 0.025);
  s.q975 = quantile(x, 0.975);
  s.ess = effective_sample_size(x);
  s.mcse = s.sd / std::sqrt(s.ess);
  return s;
}

std::vector<std::pair<std::string, std::vector<double>>> chain_traces(const ChainStore& chain,
                                                                      const PanelSpec& spec) {
  require_draws(chain);
  const int n = spec.variables;
  const int p = spec.nn();
  std::vector<std::pair<std::string, std::vector<double>>> tr;
  for (int a = 0; a < p; ++a)
    for (int b = a; b < p; ++b) tr.push_back({"Sigma[" + idx(a) + "," + idx(b) + "]", {}});
  for (int i = 0; i < spec.individuals; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) tr.push_back({"Pi[" + idx(i) + "][" + idx(a) + "," + idx(b) + "]", {}});
  for (int i = 0; i < spec.individuals; ++i)
    for (int h = 0; h < spec.lags; ++h)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          tr.push_back({"Gamma[" + idx(i) + "," + idx(h) + "][" + idx(a) + "," + idx(b) + "]", {}});
  for (int i = 0; i < spec.individuals; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < spec.deterministic; ++b)
        tr.push_back({"Phi[" + idx(i) + "][" + idx(a) + "," + idx(b) + "]", {}});
  tr.push_back({"nu", {}});
  tr.push_back({"tau", {}});
  tr.push_back({"rho", {}});
  for (auto& t : tr) t.second.reserve(chain.size());

  for (const auto& d : chain.draws) {
    std::size_t k = 0;
    for (int a = 0; a < p; ++a)
      for (int b = a; b < p; ++b) tr[k++].second.push_back(d.sigma(a, b));
    const auto derived = derive(d, spec);
    for (int i = 0; i < spec.individuals; ++i)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) tr[k++].second.push_back(derived[i].pi(a, b));
    for (int i = 0; i < spec.individuals; ++i)
      for (int h = 1; h <= spec.lags; ++h) {
        const Matrix g = gamma_of(d.b, spec, i, h);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) tr[k++].second.push_back(g(a, b));
      }
    for (int i = 0; i < spec.individuals; ++i) {
      const Matrix phi = phi_of(d.b, spec, i);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < spec.deterministic; ++b) tr[k++].second.push_back(phi(a, b));
    }
    tr[k++].second.push_back(d.nu);
    tr[k++].second.push_back(d.tau);
    tr[k++].second.push_back(d.rho);
  }
  return tr;
}

std::vector<ParameterSummary> summarize_chain(const ChainStore& chain, const PanelSpec& spec) {
  std::vector<ParameterSummary> out;
  for (const auto& [name, values] : chain_traces(chain, spec)) out.push_back(summarize(name, values));
  return out;
}

double r_squared(const Matrix& dy_all, const Matrix& eps) {
  const double sse = eps.squaredNorm();
  const Eigen::RowVectorXd means = dy_all.colwise().mean();
  const double sst = (dy_all.rowwise() - means).squaredNorm();
  if (!(sst > 0.0)) throw Error(ErrorKind::InsufficientData, "differenced data have zero variance");
  return 1.0 - sse / sst;
}

namespace {

double chi_square_discrepancy(const Matrix& eps, const Matrix& sigma_lower, const matrix_kit::Ar1Precision& f) {
  const Matrix s = eps.transpose() * f.apply(eps);
  const Matrix half = sigma_lower.triangularView<Eigen::Lower>().solve(s);
  return sigma_lower.triangularView<Eigen::Lower>().solve(half.transpose()).trace();
}

}  // namespace

double posterior_predictive_p(const ChainStore& chain, const PanelArrays& arrays, const PanelSpec& spec,
                              RandomSource& rng) {
  require_draws(chain);
  std::size_t exceed = 0;
  for (const auto& d : chain.draws) {
    const Matrix lower = matrix_kit::cholesky_lower(d.sigma);
    const matrix_kit::Ar1Precision f(d.rho, spec.usable_length);
    const double observed = chi_square_discrepancy(residuals(arrays, spec, d), lower, f);
    const Matrix replicated = sample_ar1_errors(d.sigma, d.rho, spec.usable_length, rng);
    if (chi_square_discrepancy(replicated, lower, f) >= observed) ++exceed;
  }
  return static_cast<double>(exceed) / static_cast<double>(chain.size());
}

DiagnosticsReport diagnostics(const ChainStore& chain, const PanelArrays& arrays, const PanelSpec& spec,
                              RandomSource& rng) {
  require_draws(chain);
  DiagnosticsReport rep;
  rep.parameters = summarize_chain(chain, spec);
  rep.loglik_draws = chain.loglik;
  rep.r2_draws.reserve(chain.size());
  for (const auto& d : chain.draws) rep.r2_draws.push_back(r_squared(arrays.dy_all, residuals(arrays, spec, d)));
  rep.ppp = posterior_predictive_p(chain, arrays, spec, rng);
  return rep;
}

DiagnosticsReport diagnostics(const ChainStore& chain, const PanelData& data, const PanelSpec& spec,
                              RandomSource& rng) {
  return diagnostics(chain, prepare_arrays(data, spec), spec, rng);
}

}  // namespace bcpanel
