#include "bcpanel/priors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bcpanel/error.hpp"

namespace bcpanel {

using matrix_kit::vec;

Matrix PriorConfig::h() const {
  if (!hg) throw Error(ErrorKind::NoRestriction, "no Hg configured");
  return matrix_kit::normalize_semiorthogonal(*hg);
}

double PriorConfig::nu_prior_dof(const PanelSpec& spec) const {
  return nu_nu - static_cast<double>(spec.variables) * spec.total_rank();
}

void PriorConfig::validate(const PanelSpec& spec) const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::ConfigError, std::string("prior.") + key + " must be a positive finite number");
  };
  positive(mu_nu, "mu_nu");
  positive(nu_nu, "nu_nu");
  positive(mu_tau, "mu_tau");
  positive(nu_tau, "nu_tau");
  positive(v_diffuse, "v_diffuse");
  positive(longrun_scale, "longrun_scale");
  if (gamma_convention == GammaConvention::MeanDof && !(nu_prior_dof(spec) > 0.0))
    throw Error(ErrorKind::ConfigError, "prior.nu_nu: nu_nu - n*N*rbar = " + std::to_string(nu_prior_dof(spec)) +
                                            " must be positive");
  if (hg) {
    if (hg->rows() != spec.variables)
      throw Error(ErrorKind::ConfigError, "prior.hg: expected " + std::to_string(spec.variables) + " rows");
    if (hg->cols() < 1 || hg->cols() >= spec.variables)
      throw Error(ErrorKind::ConfigError, "prior.hg: column count must lie in [1, n-1]");
    try {
      (void)h();
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, std::string("prior.hg: ") + e.what());
    }
  }
  if (!sigma.improper) {
    const int p = spec.nn();
    if (sigma.scale.rows() != p || sigma.scale.cols() != p)
      throw Error(ErrorKind::ConfigError, "prior.sigma.scale must be " + std::to_string(p) + "x" + std::to_string(p));
    if (!(sigma.dof > p - 1))
      throw Error(ErrorKind::ConfigError, "prior.sigma.dof must exceed Nn - 1");
    try {
      (void)matrix_kit::cholesky_lower(sigma.scale);
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, std::string("prior.sigma.scale: ") + e.what());
    }
  }
}

Matrix projection(const PriorConfig& cfg, int n, double tau) {
  if (!cfg.has_restriction()) return Matrix::Identity(n, n);
  return matrix_kit::projector(cfg.h(), tau);
}

Matrix projection_inverse(const PriorConfig& cfg, int n, double tau) {
  if (!cfg.has_restriction()) return Matrix::Identity(n, n);
  if (!(tau > 0.0)) throw Error(ErrorKind::NotPD, "P_tau is singular at tau = " + std::to_string(tau));
  return matrix_kit::projector(cfg.h(), 1.0 / tau);
}

namespace {

Matrix block_per_equation(const Matrix& alpha_block, int k, double diffuse, int n) {
  const int r = static_cast<int>(alpha_block.rows());
  Matrix eq = Matrix::Zero(r + k, r + k);
  eq.topLeftCorner(r, r) = alpha_block;
  eq.bottomRightCorner(k, k) = diffuse * Matrix::Identity(k, k);
  return matrix_kit::kron(Matrix::Identity(n, n), eq);
}

Matrix alpha_precision(const PriorConfig& cfg, const Matrix& beta, double tau) {
  const Matrix pinv = projection_inverse(cfg, static_cast<int>(beta.rows()), tau);
  Matrix g = beta.transpose() * pinv * beta;
  return 0.5 * (g + g.transpose());
}

double log_det_pd(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return 2.0 * matrix_kit::cholesky_lower(m).diagonal().array().log().sum();
}

}  // namespace

Matrix vtilde_precision_block(const PanelSpec& spec, const PriorConfig& cfg, const Matrix& beta, double tau) {
  return block_per_equation(alpha_precision(cfg, beta, tau) / cfg.longrun_scale, spec.k(), 1.0 / cfg.v_diffuse,
                            spec.variables);
}

Matrix vtilde_block(const PanelSpec& spec, const PriorConfig& cfg, const Matrix& beta, double tau) {
  const Matrix g = alpha_precision(cfg, beta, tau);
  Matrix k_mat = g;
  if (g.size() > 0) {
    const Matrix l = matrix_kit::cholesky_lower(g);
    k_mat = l.transpose().triangularView<Eigen::Upper>().solve(
        l.triangularView<Eigen::Lower>().solve(Matrix::Identity(g.rows(), g.cols())));
  }
  return block_per_equation(cfg.longrun_scale * k_mat, spec.k(), cfg.v_diffuse, spec.variables);
}

namespace {

template <typename BlockFn>
Matrix assemble(const PanelSpec& spec, BlockFn fn) {
  Matrix out = Matrix::Zero(spec.shortrun_total(), spec.shortrun_total());
  for (int i = 0; i < spec.individuals; ++i) {
    const int off = spec.shortrun_offset(i);
    const int sz = spec.shortrun_size(i);
    out.block(off, off, sz, sz) = fn(i);
  }
  return out;
}

void check_betas(const PanelSpec& spec, const std::vector<Matrix>& betas) {
  if (static_cast<int>(betas.size()) != spec.individuals)
    throw Error(ErrorKind::DimensionMismatch, "one beta per individual required");
  for (int i = 0; i < spec.individuals; ++i)
    if (betas[i].rows() != spec.variables || betas[i].cols() != spec.ranks[i])
      throw Error(ErrorKind::DimensionMismatch, "beta_" + std::to_string(i) + " has wrong shape");
}

}  // namespace

Matrix build_vtilde(const PanelSpec& spec, const PriorConfig& cfg, const std::vector<Matrix>& betas, double tau) {
  check_betas(spec, betas);
  return assemble(spec, [&](int i) { return vtilde_block(spec, cfg, betas[i], tau); });
}

Matrix build_vtilde_precision(const PanelSpec& spec, const PriorConfig& cfg, const std::vector<Matrix>& betas,
                              double tau) {
  check_betas(spec, betas);
  return assemble(spec, [&](int i) { return vtilde_precision_block(spec, cfg, betas[i], tau); });
}

Matrix build_vtilde_beta(const PanelSpec& spec, const PriorConfig& cfg, double tau) {
  const Matrix p = projection(cfg, spec.variables, tau);
  Matrix out = Matrix::Zero(spec.longrun_total(), spec.longrun_total());
  for (int i = 0; i < spec.individuals; ++i) {
    const int r = spec.ranks[i];
    out.block(spec.longrun_offset(i), spec.longrun_offset(i), spec.longrun_size(i), spec.longrun_size(i)) =
        matrix_kit::kron(Matrix::Identity(r, r), p);
  }
  return out;
}

Matrix build_vtilde_beta_precision(const PanelSpec& spec, const PriorConfig& cfg, double tau) {
  const Matrix pinv = projection_inverse(cfg, spec.variables, tau);
  Matrix out = Matrix::Zero(spec.longrun_total(), spec.longrun_total());
  for (int i = 0; i < spec.individuals; ++i) {
    const int r = spec.ranks[i];
    out.block(spec.longrun_offset(i), spec.longrun_offset(i), spec.longrun_size(i), spec.longrun_size(i)) =
        matrix_kit::kron(Matrix::Identity(r, r), pinv);
  }
  return out;
}

Matrix longrun_prior_precision(const PanelSpec& spec, const PriorConfig& cfg, double tau) {
  return build_vtilde_beta_precision(spec, cfg, tau) / cfg.longrun_scale;
}

Matrix build_vv(const PanelSpec& spec, const PriorConfig& cfg, const std::vector<Matrix>& betas, double tau) {
  check_betas(spec, betas);
  PriorConfig unit = cfg;
  unit.v_diffuse = 1.0;
  unit.longrun_scale = 1.0;
  return assemble(spec, [&](int i) { return vtilde_block(spec, unit, betas[i], tau); });
}

double draw_gamma(const PriorConfig& cfg, double first, double second, RandomSource& rng) {
  if (cfg.gamma_convention == GammaConvention::MeanDof) return rng.gamma_mean_dof(first, second);
  return rng.gamma_shape_scale(first, 1.0 / second);
}

double log_gamma_density(const PriorConfig& cfg, double x, double first, double second) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  double shape = 0.0;
  double rate = 0.0;
  if (cfg.gamma_convention == GammaConvention::MeanDof) {
    shape = 0.5 * second;
    rate = second / (2.0 * first);
  } else {
    shape = first;
    rate = second;
  }
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

namespace {

std::pair<double, double> nu_prior_pair(const PanelSpec& spec, const PriorConfig& cfg) {
  if (cfg.gamma_convention == GammaConvention::MeanDof) return {cfg.mu_nu, cfg.nu_prior_dof(spec)};
  return {cfg.mu_nu, cfg.nu_nu};
}

}  // namespace

VecmParams sample_prior(const PanelSpec& spec, const PriorConfig& cfg, RandomSource& rng) {
  if (cfg.sigma.improper)
    throw Error(ErrorKind::ImproperPrior, "prior sampling needs a proper inverse-Wishart prior on Sigma");
  cfg.validate(spec);
  VecmParams p;
  const auto [nu_first, nu_second] = nu_prior_pair(spec, cfg);
  p.nu = draw_gamma(cfg, nu_first, nu_second, rng);
  p.tau = cfg.has_restriction() ? 1.0 / draw_gamma(cfg, cfg.mu_tau, cfg.nu_tau, rng) : 1.0;
  p.rho = 0.0;
  p.sigma = sample_inverse_wishart(cfg.sigma.scale, cfg.sigma.dof, rng);

  const Matrix p_sqrt = projection(cfg, spec.variables, std::sqrt(p.tau));
  p.b = Vector::Zero(spec.shortrun_total());
  p.b_beta_star = Vector::Zero(spec.longrun_total());
  for (int i = 0; i < spec.individuals; ++i) {
    const int r = spec.ranks[i];
    Matrix beta(spec.variables, r);
    if (r > 0) {
      const Matrix z = rng.normal_matrix(spec.variables, r) / std::sqrt(p.nu);
      beta = decompose_beta_star(p_sqrt * z).beta;
    }
    const Matrix prec = p.nu * vtilde_precision_block(spec, cfg, beta, p.tau);
    const Matrix chol = matrix_kit::cholesky_lower(prec);
    const Vector block = sample_from_precision_factor(chol, rng);
    p.b.segment(spec.shortrun_offset(i), spec.shortrun_size(i)) = block;
    if (r > 0) {
      const Matrix alpha = alpha_of(p.b, spec, i);
      const Matrix kappa = matrix_kit::sym_sqrt(alpha.transpose() * alpha);
      set_beta_star(p.b_beta_star, spec, i, beta * kappa);
    }
  }
  return p;
}

double log_normal_precision(const Vector& x, const Matrix& precision) {
  if (x.size() == 0) return 0.0;
  const double quad = x.dot(precision * x);
  return -0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + 0.5 * log_det_pd(precision) -
         0.5 * quad;
}

double log_inverse_wishart(const Matrix& x, const Matrix& scale, double dof) {
  const double p = static_cast<double>(x.rows());
  const Matrix lx = matrix_kit::cholesky_lower(x);
  const double log_det_x = 2.0 * lx.diagonal().array().log().sum();
  const Matrix x_inv_scale = lx.transpose().triangularView<Eigen::Upper>().solve(
      lx.triangularView<Eigen::Lower>().solve(scale));
  double log_multi_gamma = 0.25 * p * (p - 1.0) * std::log(std::numbers::pi);
  for (int j = 0; j < static_cast<int>(p); ++j) log_multi_gamma += std::lgamma(0.5 * (dof - j));
  return 0.5 * dof * log_det_pd(scale) - 0.5 * dof * p * std::log(2.0) - log_multi_gamma -
         0.5 * (dof + p + 1.0) * log_det_x - 0.5 * x_inv_scale.trace();
}

LogPriorTerms log_prior_terms(const VecmParams& params, const PanelSpec& spec, const PriorConfig& cfg) {
  if (!(params.tau > 0.0)) throw Error(ErrorKind::NotPD, "tau must be positive");
  if (!(params.nu > 0.0)) throw Error(ErrorKind::NotPD, "nu must be positive");
  LogPriorTerms t;
  const auto derived = derive(params, spec);
  for (int i = 0; i < spec.individuals; ++i) {
    const Vector bi = params.b.segment(spec.shortrun_offset(i), spec.shortrun_size(i));
    t.b += log_normal_precision(bi, params.nu * vtilde_precision_block(spec, cfg, derived[i].beta, params.tau));
  }
  t.beta_star =
      log_normal_precision(params.b_beta_star, params.nu * longrun_prior_precision(spec, cfg, params.tau));
  const auto [nu_first, nu_second] = nu_prior_pair(spec, cfg);
  t.nu = log_gamma_density(cfg, params.nu, nu_first, nu_second);
  if (cfg.has_restriction())
    t.tau = log_gamma_density(cfg, 1.0 / params.tau, cfg.mu_tau, cfg.nu_tau) - 2.0 * std::log(params.tau);
  if (cfg.sigma.improper) {
    const Matrix l = matrix_kit::cholesky_lower(params.sigma);
    t.sigma = -0.5 * (spec.nn() + 1.0) * 2.0 * l.diagonal().array().log().sum();
  } else {
    t.sigma = log_inverse_wishart(params.sigma, cfg.sigma.scale, cfg.sigma.dof);
  }
  return t;
}

double log_prior(const VecmParams& params, const PanelSpec& spec, const PriorConfig& cfg) {
  return log_prior_terms(params, spec, cfg).total();
}

}  // namespace bcpanel
