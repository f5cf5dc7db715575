#include "bcpanel/gibbs.hpp"

#include <cmath>
#include <string>

#include "bcpanel/error.hpp"

namespace bcpanel {

using matrix_kit::vec;

void ChainConfig::validate() const {
  if (warmup < 0) throw Error(ErrorKind::ConfigError, "chain.warmup must be >= 0");
  if (iterations < 1) throw Error(ErrorKind::ConfigError, "chain.iterations must be >= 1");
  if (thin < 1) throw Error(ErrorKind::ConfigError, "chain.thin must be >= 1");
  if (!(rho_proposal_sd >= 0.0)) throw Error(ErrorKind::ConfigError, "chain.rho_proposal_sd must be >= 0");
  if (!(std::abs(initial_rho) < 1.0)) throw Error(ErrorKind::ConfigError, "chain.initial_rho must lie in (-1, 1)");
}

Vector GaussianConditional::draw(RandomSource& rng) const {
  return mean + sample_from_precision_factor(precision_lower, rng);
}

namespace {

Matrix cholesky_with_jitter(const Matrix& m, std::vector<std::string>* events, const char* what) {
  try {
    return matrix_kit::cholesky_lower(m);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotPD) throw;
    if (events) events->push_back(std::string("jitter 1e-10 added to ") + what);
    return matrix_kit::cholesky_lower(m + 1e-10 * Matrix::Identity(m.rows(), m.cols()));
  }
}

Matrix spd_inverse(const Matrix& m, std::vector<std::string>* events = nullptr, const char* what = "matrix") {
  const Matrix l = cholesky_with_jitter(m, events, what);
  Matrix inv = l.transpose().triangularView<Eigen::Upper>().solve(
      l.triangularView<Eigen::Lower>().solve(Matrix::Identity(m.rows(), m.cols())));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

GaussianConditional gls_conditional(const KronBlockSystem& sys, const Matrix& sigma, double rho, double nu,
                                    const Matrix& prior_precision, std::vector<std::string>* events) {
  const Eigen::Index dim = sys.coef_size();
  if (prior_precision.rows() != dim || prior_precision.cols() != dim)
    throw Error(ErrorKind::DimensionMismatch, "prior precision must be " + std::to_string(dim) + " square");
  if (sigma.rows() != sys.response.cols()) throw Error(ErrorKind::DimensionMismatch, "Sigma vs response width");
  const Matrix s = spd_inverse(sigma, events, "Sigma");
  const matrix_kit::Ar1Precision f(rho, sys.response.rows());
  const Matrix z = f.apply(sys.response) * s;

  const std::size_t nb = sys.blocks.size();
  std::vector<Matrix> fu(nb);
  std::vector<Eigen::Index> col(nb), off(nb);
  Eigen::Index c = 0;
  for (std::size_t i = 0; i < nb; ++i) {
    fu[i] = f.apply(sys.blocks[i].regressors);
    col[i] = c;
    off[i] = sys.coef_offset(i);
    c += sys.blocks[i].loading.rows();
  }

  GaussianConditional g;
  g.precision = nu * prior_precision;
  Vector rhs = Vector::Zero(dim);
  for (std::size_t i = 0; i < nb; ++i) {
    const auto& bi = sys.blocks[i];
    const Eigen::Index ni = bi.loading.rows();
    const Eigen::Index size_i = bi.loading.cols() * bi.regressors.cols();
    if (size_i == 0) continue;
    rhs.segment(off[i], size_i) = vec(bi.regressors.transpose() * z.middleCols(col[i], ni) * bi.loading);
    for (std::size_t j = 0; j < nb; ++j) {
      const auto& bj = sys.blocks[j];
      const Eigen::Index size_j = bj.loading.cols() * bj.regressors.cols();
      if (size_j == 0) continue;
      const Matrix left = bi.loading.transpose() * s.block(col[i], col[j], ni, bj.loading.rows()) * bj.loading;
      const Matrix right = bi.regressors.transpose() * fu[j];
      g.precision.block(off[i], off[j], size_i, size_j) += matrix_kit::kron(left, right);
    }
  }
  g.precision = 0.5 * (g.precision + g.precision.transpose());
  g.precision_lower = cholesky_with_jitter(g.precision, events, "posterior precision");
  g.mean = g.precision_lower.transpose().triangularView<Eigen::Upper>().solve(
      g.precision_lower.triangularView<Eigen::Lower>().solve(rhs));
  return g;
}

Matrix sample_sigma(const Matrix& eps, double rho, const SigmaPrior& prior, RandomSource& rng,
                    std::vector<std::string>* events) {
  const Eigen::Index t = eps.rows();
  const Eigen::Index p = eps.cols();
  const matrix_kit::Ar1Precision f(rho, t);
  Matrix scale = eps.transpose() * f.apply(eps);
  scale = 0.5 * (scale + scale.transpose());
  double dof = static_cast<double>(t);
  if (prior.improper) {
    if (t <= p + 1)
      throw Error(ErrorKind::DofTooSmall, "T = " + std::to_string(t) + " must exceed Nn + 1 = " +
                                              std::to_string(p + 1));
  } else {
    scale += prior.scale;
    dof += prior.dof;
  }
  try {
    (void)matrix_kit::cholesky_lower(scale);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotPD) throw;
    if (events) events->push_back("jitter 1e-10 added to Sigma scale");
    scale += 1e-10 * Matrix::Identity(p, p);
  }
  return sample_inverse_wishart(scale, dof, rng);
}

Matrix sample_sigma(const Matrix& eps, int t, RandomSource& rng) {
  if (eps.rows() != t) throw Error(ErrorKind::DimensionMismatch, "eps rows != T");
  return sample_sigma(eps, 0.0, SigmaPrior{}, rng);
}

Vector sample_b(const KronBlockSystem& sys, const Matrix& sigma, double rho, double nu, const Matrix& vtilde_precision,
                RandomSource& rng) {
  return gls_conditional(sys, sigma, rho, nu, vtilde_precision).draw(rng);
}

Vector sample_b_beta(const KronBlockSystem& sys, const Matrix& sigma, double rho, double nu,
                     const Matrix& vtilde_beta_precision, RandomSource& rng) {
  return gls_conditional(sys, sigma, rho, nu, vtilde_beta_precision).draw(rng);
}

std::pair<double, double> nu_conditional(const Vector& b, const Matrix& vtilde_precision, const PanelSpec& spec,
                                         const PriorConfig& cfg) {
  const double quad = b.dot(vtilde_precision * b);
  if (!std::isfinite(quad)) throw Error(ErrorKind::NonFinite, "b^T V~^{-1} b is not finite");
  const double dim = static_cast<double>(b.size());
  if (cfg.gamma_convention == GammaConvention::MeanDof) {
    const double prior_dof = cfg.nu_prior_dof(spec);
    const double dof = prior_dof + dim;
    return {dof / (prior_dof / cfg.mu_nu + quad), dof};
  }
  return {cfg.mu_nu + 0.5 * dim, cfg.nu_nu + 0.5 * quad};
}

double sample_nu(const Vector& b, const Matrix& vtilde_precision, const PanelSpec& spec, const PriorConfig& cfg,
                 RandomSource& rng) {
  const auto [first, second] = nu_conditional(b, vtilde_precision, spec, cfg);
  return draw_gamma(cfg, first, second, rng);
}

double perp_trace(const std::vector<Matrix>& beta_stars, const PriorConfig& cfg) {
  const Matrix h = cfg.h();
  const Matrix perp = matrix_kit::orth_complement(h);
  double total = 0.0;
  for (const auto& bs : beta_stars) total += (perp.transpose() * bs).squaredNorm();
  return total;
}

std::pair<double, double> tau_inverse_conditional(const std::vector<Matrix>& beta_stars, double nu,
                                                  const PanelSpec& spec, const PriorConfig& cfg) {
  if (!cfg.has_restriction()) throw Error(ErrorKind::NoRestriction, "tau is fixed at 1 without Hg");
  const double trace = perp_trace(beta_stars, cfg);
  const double extra = static_cast<double>(spec.total_rank()) * (spec.variables - cfg.restriction_columns());
  if (cfg.gamma_convention == GammaConvention::MeanDof) {
    const double dof = cfg.nu_tau + extra;
    return {dof / (cfg.nu_tau / cfg.mu_tau + nu * trace / cfg.longrun_scale), dof};
  }
  return {cfg.mu_tau + 0.5 * extra, cfg.nu_tau + 0.5 * nu * trace / cfg.longrun_scale};
}

double sample_tau(const std::vector<Matrix>& beta_stars, double nu, const PanelSpec& spec, const PriorConfig& cfg,
                  RandomSource& rng) {
  const auto [first, second] = tau_inverse_conditional(beta_stars, nu, spec, cfg);
  return 1.0 / draw_gamma(cfg, first, second, rng);
}

RhoStep mh_step_rho(const VecmParams& state, const PanelArrays& arrays, const PanelSpec& spec, double proposal_sd,
                    double current_loglik, RandomSource& rng) {
  RhoStep out;
  out.rho = state.rho;
  out.loglik = current_loglik;
  double prop = state.rho + proposal_sd * rng.normal();
  while (prop > 1.0 || prop < -1.0) prop = prop > 1.0 ? 2.0 - prop : -2.0 - prop;
  const double u = rng.uniform();
  double ll = 0.0;
  try {
    const Matrix eps = residuals(arrays, spec, state);
    ll = gaussian_kron_loglik(eps, state.sigma, prop);
  } catch (const Error&) {
    return out;
  }
  if (!std::isfinite(ll)) return out;
  out.log_ratio = ll - current_loglik;
  if (std::log(u) < out.log_ratio) {
    out.rho = prop;
    out.loglik = ll;
    out.accepted = true;
  }
  return out;
}

VecmParams initial_state(const PanelArrays& arrays, const PanelSpec& spec, const PriorConfig& prior,
                         double initial_rho) {
  const int n = spec.variables;
  const int k = spec.k();
  const int t = spec.usable_length;
  VecmParams p;
  p.b = Vector::Zero(spec.shortrun_total());
  p.b_beta_star = Vector::Zero(spec.longrun_total());
  p.rho = initial_rho;
  p.nu = prior.mu_nu;
  p.tau = prior.has_restriction() ? 1.0 / prior.mu_tau : 1.0;
  Matrix eps(t, spec.nn());
  for (int i = 0; i < spec.individuals; ++i) {
    const int r = spec.ranks[i];
    Matrix x(t, n + k);
    x << arrays.ylag[i], arrays.w[i];
    const Matrix coef = x.completeOrthogonalDecomposition().solve(arrays.dy[i]);
    Matrix beta(n, r);
    if (r > 0) {
      if (prior.has_restriction() && prior.restriction_columns() == r) {
        beta = prior.h();
      } else {
        const Matrix pi_hat = coef.topRows(n).transpose();
        Eigen::JacobiSVD<Matrix> svd(pi_hat, Eigen::ComputeFullV);
        beta = svd.matrixV().leftCols(r);
      }
    }
    Matrix xr(t, r + k);
    xr << arrays.ylag[i] * beta, arrays.w[i];
    const Matrix block = xr.completeOrthogonalDecomposition().solve(arrays.dy[i]);
    eps.middleCols(i * n, n) = arrays.dy[i] - xr * block;
    set_shortrun_block(p.b, spec, i, block);
    if (r > 0) {
      DerivedParams d;
      d.beta = beta;
      d.alpha = block.topRows(r).transpose();
      d.kappa = matrix_kit::sym_sqrt(d.alpha.transpose() * d.alpha);
      d.a = Matrix::Zero(n, r);
      canonicalize_signs(d);
      set_alpha(p.b, spec, i, d.alpha);
      Matrix kappa = d.kappa;
      if (Eigen::SelfAdjointEigenSolver<Matrix>(kappa).eigenvalues().minCoeff() < 1e-8)
        kappa += 1e-6 * Matrix::Identity(r, r);
      set_beta_star(p.b_beta_star, spec, i, d.beta * kappa);
    }
  }
  p.sigma = eps.transpose() * eps / static_cast<double>(t);
  const double ridge = 1e-8 * std::max(1.0, p.sigma.trace() / static_cast<double>(spec.nn()));
  try {
    (void)matrix_kit::cholesky_lower(p.sigma);
  } catch (const Error&) {
    p.sigma += ridge * Matrix::Identity(spec.nn(), spec.nn());
  }
  return p;
}

GibbsSampler::GibbsSampler(PanelArrays arrays, PanelSpec spec, PriorConfig prior, ChainConfig cc)
    : arrays_(std::move(arrays)), spec_(std::move(spec)), prior_(std::move(prior)), cc_(cc), rng_(cc.seed) {
  spec_.validate();
  prior_.validate(spec_);
  cc_.validate();
  if (prior_.sigma.improper && spec_.usable_length <= spec_.nn() + 1)
    throw Error(ErrorKind::DofTooSmall, "T = " + std::to_string(spec_.usable_length) + " must exceed Nn + 1 = " +
                                            std::to_string(spec_.nn() + 1));
  if (prior_.sigma.improper && !spec_.pooled_rank_sufficient())
    throw Error(ErrorKind::InsufficientData,
                "T minus the pooled regressor count is " +
                    std::to_string(spec_.usable_length - spec_.pooled_regressor_count()) + " < Nn = " +
                    std::to_string(spec_.nn()) +
                    "; the Sigma posterior is improper under the non-informative prior (configure a proper sigma prior)");
  state_ = initial_state(arrays_, spec_, prior_, cc_.initial_rho);
  if (prior_.vtilde_mode == VtildeMode::InverseWishart) {
    const int dim = spec_.shortrun_total();
    if (spec_.usable_length + 1 <= dim - 1)
      throw Error(ErrorKind::DofTooSmall, "inverse-Wishart V~ needs T + 1 > dim(b) - 1 = " + std::to_string(dim - 1));
    vtilde_ = build_vtilde(spec_, prior_, current_betas(), state_.tau);
  }
}

GibbsSampler::GibbsSampler(const PanelData& data, const PanelSpec& spec, const PriorConfig& prior,
                           const ChainConfig& cc)
    : GibbsSampler(prepare_arrays(data, spec), spec, prior, cc) {}

void GibbsSampler::set_state(const VecmParams& state) {
  if (state.b.size() != spec_.shortrun_total() || state.b_beta_star.size() != spec_.longrun_total() ||
      state.sigma.rows() != spec_.nn())
    throw Error(ErrorKind::DimensionMismatch, "state does not match spec");
  state_ = state;
}

double GibbsSampler::acceptance_rate() const {
  return rho_proposals_ > 0 ? static_cast<double>(rho_accepts_) / rho_proposals_ : 0.0;
}

std::vector<Matrix> GibbsSampler::current_betas() const {
  std::vector<Matrix> betas;
  betas.reserve(spec_.individuals);
  for (int i = 0; i < spec_.individuals; ++i) {
    if (spec_.ranks[i] == 0) {
      betas.emplace_back(spec_.variables, 0);
      continue;
    }
    betas.push_back(decompose_beta_star(beta_star_of(state_.b_beta_star, spec_, i)).beta);
  }
  return betas;
}

Matrix GibbsSampler::current_vtilde_precision(const std::vector<Matrix>& betas) const {
  if (prior_.vtilde_mode == VtildeMode::InverseWishart) return spd_inverse(vtilde_);
  return build_vtilde_precision(spec_, prior_, betas, state_.tau);
}

double GibbsSampler::step() {
  ++iteration_;
  const char* stage = "Sigma";
  try {
    Matrix eps = residuals(arrays_, spec_, state_);
    state_.sigma = sample_sigma(eps, state_.rho, prior_.sigma, rng_, &events_);

    stage = "b";
    std::vector<Matrix> betas = current_betas();
    const auto shortrun = build_shortrun_system(arrays_, spec_, betas);
    state_.b = gls_conditional(shortrun, state_.sigma, state_.rho, state_.nu, current_vtilde_precision(betas),
                               &events_)
                   .draw(rng_);
    if (prior_.vtilde_mode == VtildeMode::InverseWishart) {
      Matrix scale = build_vv(spec_, prior_, betas, state_.tau) + state_.nu * state_.b * state_.b.transpose();
      vtilde_ = sample_inverse_wishart(0.5 * (scale + scale.transpose()), spec_.usable_length + 1.0, rng_);
    }

    stage = "A and C";
    std::vector<Matrix> a_factors(spec_.individuals), c_blocks(spec_.individuals);
    for (int i = 0; i < spec_.individuals; ++i) {
      a_factors[i] = normalize_alpha(alpha_of(state_.b, spec_, i));
      c_blocks[i] = c_of(state_.b, spec_, i);
    }

    stage = "beta*";
    if (spec_.total_rank() > 0) {
      const auto longrun = build_longrun_system(arrays_, spec_, a_factors, c_blocks);
      state_.b_beta_star =
          gls_conditional(longrun, state_.sigma, state_.rho, state_.nu,
                          longrun_prior_precision(spec_, prior_, state_.tau), &events_)
              .draw(rng_);
    }

    stage = "decompose beta*";
    for (int i = 0; i < spec_.individuals; ++i) {
      if (spec_.ranks[i] == 0) continue;
      auto dec = decompose_beta_star(beta_star_of(state_.b_beta_star, spec_, i));
      DerivedParams d;
      d.beta = std::move(dec.beta);
      d.kappa = std::move(dec.kappa);
      d.a = a_factors[i];
      d.alpha = d.a * d.kappa;
      canonicalize_signs(d);
      set_alpha(state_.b, spec_, i, d.alpha);
      set_beta_star(state_.b_beta_star, spec_, i, d.beta * d.kappa);
      betas[i] = d.beta;
    }

    stage = "nu";
    state_.nu = sample_nu(state_.b, current_vtilde_precision(betas), spec_, prior_, rng_);

    if (prior_.has_restriction()) {
      stage = "tau";
      std::vector<Matrix> beta_stars;
      for (int i = 0; i < spec_.individuals; ++i) beta_stars.push_back(beta_star_of(state_.b_beta_star, spec_, i));
      state_.tau = sample_tau(beta_stars, state_.nu, spec_, prior_, rng_);
    }

    stage = "log-likelihood";
    double ll = log_likelihood(arrays_, spec_, state_);
    if (cc_.rho_sampling) {
      stage = "rho";
      const RhoStep rs = mh_step_rho(state_, arrays_, spec_, cc_.rho_proposal_sd, ll, rng_);
      ++rho_proposals_;
      if (rs.accepted) {
        ++rho_accepts_;
        state_.rho = rs.rho;
        ll = rs.loglik;
      }
    }
    if (!std::isfinite(ll)) throw Error(ErrorKind::NonFinite, "log-likelihood is not finite");
    return ll;
  } catch (const Error& e) {
    std::string msg = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    throw Error(e.kind(), "iteration " + std::to_string(iteration_) + ", step " + stage + ": " + msg);
  }
}

ChainStore GibbsSampler::run(const ProgressCallback& progress) {
  ChainStore store;
  store.warmup_boundary = cc_.warmup;
  const int total = cc_.warmup + cc_.iterations;
  store.draws.reserve(static_cast<std::size_t>(cc_.iterations / cc_.thin));
  for (int it = 0; it < total; ++it) {
    const double ll = step();
    const bool warm = it < cc_.warmup;
    if (!warm && (it - cc_.warmup + 1) % cc_.thin == 0) {
      store.draws.push_back(state_);
      store.loglik.push_back(ll);
    }
    if (progress) progress({it + 1, total, warm, ll, acceptance_rate()});
  }
  store.rho_acceptance_rate = acceptance_rate();
  store.events = events_;
  return store;
}

ChainStore run_chain(const PanelArrays& arrays, const PanelSpec& spec, const PriorConfig& prior,
                     const ChainConfig& cc, const ProgressCallback& progress) {
  GibbsSampler sampler(arrays, spec, prior, cc);
  return sampler.run(progress);
}

ChainStore run_chain(const PanelData& data, const PanelSpec& spec, const PriorConfig& prior, const ChainConfig& cc,
                     const ProgressCallback& progress) {
  return run_chain(prepare_arrays(data, spec), spec, prior, cc, progress);
}

}  // namespace bcpanel
