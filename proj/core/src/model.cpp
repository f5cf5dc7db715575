#include "bcpanel/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "bcpanel/error.hpp"

namespace bcpanel {

using matrix_kit::unvec;
using matrix_kit::vec;

namespace {

std::string dims(Eigen::Index r, Eigen::Index c) { return std::to_string(r) + "x" + std::to_string(c); }

void check_individual(const PanelSpec& spec, int i) {
  if (i < 0 || i >= spec.individuals)
    throw Error(ErrorKind::DimensionMismatch, "individual index " + std::to_string(i) + " out of range");
}

}  // namespace

DeterministicTerms parse_deterministic(const std::string& name) {
  if (name == "none") return DeterministicTerms::None;
  if (name == "constant") return DeterministicTerms::Constant;
  if (name == "constant+trend" || name == "trend") return DeterministicTerms::ConstantTrend;
  throw Error(ErrorKind::ConfigError, "deterministic: unknown value '" + name + "' (none|constant|constant+trend)");
}

std::string to_string(DeterministicTerms terms) {
  switch (terms) {
    case DeterministicTerms::None: return "none";
    case DeterministicTerms::Constant: return "constant";
    case DeterministicTerms::ConstantTrend: return "constant+trend";
  }
  return "constant";
}

int deterministic_count(DeterministicTerms terms) {
  switch (terms) {
    case DeterministicTerms::None: return 0;
    case DeterministicTerms::Constant: return 1;
    case DeterministicTerms::ConstantTrend: return 2;
  }
  return 1;
}

Matrix make_deterministic(Eigen::Index raw_length, DeterministicTerms terms) {
  Matrix d(raw_length, deterministic_count(terms));
  if (terms == DeterministicTerms::None) return d;
  d.col(0).setOnes();
  if (terms == DeterministicTerms::ConstantTrend)
    for (Eigen::Index t = 0; t < raw_length; ++t) d(t, 1) = static_cast<double>(t + 1);
  return d;
}

// --- PanelSpec ----------------------------------------------------------------

int PanelSpec::total_rank() const { return std::accumulate(ranks.begin(), ranks.end(), 0); }

double PanelSpec::mean_rank() const {
  return individuals > 0 ? static_cast<double>(total_rank()) / individuals : 0.0;
}

int PanelSpec::max_rank() const { return ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end()); }

int PanelSpec::shortrun_offset(int i) const {
  int off = 0;
  for (int j = 0; j < i; ++j) off += shortrun_size(j);
  return off;
}

int PanelSpec::shortrun_total() const { return shortrun_offset(individuals); }

int PanelSpec::longrun_offset(int i) const {
  int off = 0;
  for (int j = 0; j < i; ++j) off += longrun_size(j);
  return off;
}

int PanelSpec::pooled_regressor_count() const {
  int levels = 0;
  for (int r : ranks) levels += r > 0 ? variables : 0;
  return levels + nn() * lags + deterministic;
}

long PanelSpec::reported_parameter_count() const {
  // Nn(k + 2 rbar + 1) + 2 with N * rbar = sum r_i
  return static_cast<long>(nn()) * k() + 2L * variables * total_rank() + nn() + 2;
}

long PanelSpec::free_parameter_count() const {
  const long nn_l = nn();
  return shortrun_total() + longrun_total() + nn_l * (nn_l + 1) / 2 + 2;
}

void PanelSpec::validate() const {
  if (individuals < 1) throw Error(ErrorKind::ConfigError, "N must be >= 1");
  if (variables < 1) throw Error(ErrorKind::ConfigError, "n must be >= 1");
  if (lags < 0) throw Error(ErrorKind::ConfigError, "lags must be >= 0");
  if (deterministic < 0) throw Error(ErrorKind::ConfigError, "deterministic term count must be >= 0");
  if (static_cast<int>(ranks.size()) != individuals)
    throw Error(ErrorKind::ConfigError, "ranks: expected " + std::to_string(individuals) + " entries, got " +
                                            std::to_string(ranks.size()));
  for (int i = 0; i < individuals; ++i) {
    if (ranks[i] < 0 || ranks[i] > variables - 1)
      throw Error(ErrorKind::ConfigError, "ranks[" + std::to_string(i) + "] = " + std::to_string(ranks[i]) +
                                              " outside [0, n-1]");
  }
  if (usable_length <= k() + max_rank())
    throw Error(ErrorKind::InsufficientData, "usable length T = " + std::to_string(usable_length) +
                                                 " must exceed k + max r = " + std::to_string(k() + max_rank()));
}

PanelSpec PanelSpec::from_data(const PanelData& data, int lags, std::vector<int> ranks) {
  if (data.levels.empty()) throw Error(ErrorKind::InsufficientData, "panel has no individuals");
  const Eigen::Index t0 = data.raw_length();
  for (const auto& lv : data.levels) {
    if (lv.rows() != t0 || lv.cols() != data.variables())
      throw Error(ErrorKind::RaggedPanel, "individuals do not share T0 and n");
  }
  if (data.deterministic.rows() != t0)
    throw Error(ErrorKind::DimensionMismatch, "deterministic rows " + std::to_string(data.deterministic.rows()) +
                                                  " != T0 " + std::to_string(t0));
  if (t0 < lags + 2) throw Error(ErrorKind::InsufficientData, "T0 must be at least L + 2");
  PanelSpec spec;
  spec.individuals = data.individuals();
  spec.variables = data.variables();
  spec.lags = lags;
  spec.deterministic = static_cast<int>(data.deterministic.cols());
  spec.usable_length = static_cast<int>(t0) - lags - 1;
  spec.ranks = std::move(ranks);
  spec.validate();
  return spec;
}

// --- parameter views ----------------------------------------------------------

Matrix shortrun_block(const Vector& b, const PanelSpec& spec, int i) {
  check_individual(spec, i);
  if (b.size() != spec.shortrun_total())
    throw Error(ErrorKind::DimensionMismatch, "b has length " + std::to_string(b.size()) + ", expected " +
                                                  std::to_string(spec.shortrun_total()));
  const int rows = spec.k() + spec.ranks[i];
  return unvec(b.segment(spec.shortrun_offset(i), spec.shortrun_size(i)), rows, spec.variables);
}

void set_shortrun_block(Vector& b, const PanelSpec& spec, int i, const Matrix& block) {
  check_individual(spec, i);
  const int rows = spec.k() + spec.ranks[i];
  if (block.rows() != rows || block.cols() != spec.variables)
    throw Error(ErrorKind::DimensionMismatch, "B_i must be " + dims(rows, spec.variables));
  b.segment(spec.shortrun_offset(i), spec.shortrun_size(i)) = vec(block);
}

Matrix alpha_of(const Vector& b, const PanelSpec& spec, int i) {
  return shortrun_block(b, spec, i).topRows(spec.ranks[i]).transpose();
}

void set_alpha(Vector& b, const PanelSpec& spec, int i, const Matrix& alpha) {
  Matrix block = shortrun_block(b, spec, i);
  if (alpha.rows() != spec.variables || alpha.cols() != spec.ranks[i])
    throw Error(ErrorKind::DimensionMismatch, "alpha_i must be " + dims(spec.variables, spec.ranks[i]));
  block.topRows(spec.ranks[i]) = alpha.transpose();
  set_shortrun_block(b, spec, i, block);
}

Matrix gamma_of(const Vector& b, const PanelSpec& spec, int i, int h) {
  if (h < 1 || h > spec.lags) throw Error(ErrorKind::DimensionMismatch, "lag index " + std::to_string(h));
  return shortrun_block(b, spec, i).middleRows(spec.ranks[i] + spec.variables * (h - 1), spec.variables).transpose();
}

Matrix phi_of(const Vector& b, const PanelSpec& spec, int i) {
  return shortrun_block(b, spec, i).bottomRows(spec.deterministic).transpose();
}

Matrix c_of(const Vector& b, const PanelSpec& spec, int i) {
  return shortrun_block(b, spec, i).bottomRows(spec.k());
}

Matrix beta_star_of(const Vector& b_beta_star, const PanelSpec& spec, int i) {
  check_individual(spec, i);
  if (b_beta_star.size() != spec.longrun_total())
    throw Error(ErrorKind::DimensionMismatch, "b_beta* has length " + std::to_string(b_beta_star.size()) +
                                                  ", expected " + std::to_string(spec.longrun_total()));
  return unvec(b_beta_star.segment(spec.longrun_offset(i), spec.longrun_size(i)), spec.variables, spec.ranks[i]);
}

void set_beta_star(Vector& b_beta_star, const PanelSpec& spec, int i, const Matrix& beta_star) {
  check_individual(spec, i);
  if (beta_star.rows() != spec.variables || beta_star.cols() != spec.ranks[i])
    throw Error(ErrorKind::DimensionMismatch, "beta*_i must be " + dims(spec.variables, spec.ranks[i]));
  b_beta_star.segment(spec.longrun_offset(i), spec.longrun_size(i)) = vec(beta_star);
}

// --- reparameterization ---------------------------------------------------------

Matrix compose_pi(const Matrix& alpha, const Matrix& beta) {
  if (alpha.rows() != beta.rows() || alpha.cols() != beta.cols())
    throw Error(ErrorKind::DimensionMismatch, "alpha " + dims(alpha.rows(), alpha.cols()) + " vs beta " +
                                                  dims(beta.rows(), beta.cols()));
  return alpha * beta.transpose();
}

BetaDecomposition decompose_beta_star(const Matrix& beta_star) {
  if (beta_star.cols() == 0) return {Matrix(beta_star.rows(), 0), Matrix(0, 0)};
  Eigen::JacobiSVD<Matrix> svd(beta_star);
  if (svd.singularValues().minCoeff() < 1e-10)
    throw Error(ErrorKind::RankDeficient, "beta* smallest singular value below 1e-10");
  const Matrix gram = beta_star.transpose() * beta_star;
  Matrix kappa = matrix_kit::sym_sqrt(gram);
  Matrix beta = beta_star * matrix_kit::sym_inv_sqrt(gram);
  return {std::move(beta), std::move(kappa)};
}

Matrix normalize_alpha(const Matrix& alpha) {
  if (alpha.cols() == 0) return alpha;
  Eigen::JacobiSVD<Matrix> svd(alpha);
  if (svd.singularValues().minCoeff() < 1e-10)
    throw Error(ErrorKind::RankDeficient, "alpha smallest singular value below 1e-10");
  return alpha * matrix_kit::sym_inv_sqrt(alpha.transpose() * alpha);
}

void canonicalize_signs(DerivedParams& d) {
  for (Eigen::Index c = 0; c < d.beta.cols(); ++c) {
    double lead = 0.0;
    for (Eigen::Index r = 0; r < d.beta.rows(); ++r) {
      if (std::abs(d.beta(r, c)) > 1e-12) {
        lead = d.beta(r, c);
        break;
      }
    }
    if (lead >= 0.0) continue;
    d.beta.col(c) *= -1.0;
    d.alpha.col(c) *= -1.0;
    d.a.col(c) *= -1.0;
    d.kappa.row(c) *= -1.0;
    d.kappa.col(c) *= -1.0;
  }
}

std::vector<DerivedParams> derive(const VecmParams& params, const PanelSpec& spec) {
  std::vector<DerivedParams> out(spec.individuals);
  for (int i = 0; i < spec.individuals; ++i) {
    auto& d = out[i];
    d.alpha = alpha_of(params.b, spec, i);
    const Matrix beta_star = beta_star_of(params.b_beta_star, spec, i);
    auto dec = decompose_beta_star(beta_star);
    d.beta = std::move(dec.beta);
    d.kappa = std::move(dec.kappa);
    d.a = normalize_alpha(d.alpha);
    d.pi = d.alpha.cols() > 0 ? compose_pi(d.alpha, d.beta) : Matrix::Zero(spec.variables, spec.variables);
  }
  return out;
}

std::vector<Matrix> pi_matrices(const VecmParams& params, const PanelSpec& spec) {
  std::vector<Matrix> pis;
  pis.reserve(spec.individuals);
  for (const auto& d : derive(params, spec)) pis.push_back(d.pi);
  return pis;
}

// --- arrays and systems -------------------------------------------------------------

PanelArrays prepare_arrays(const PanelData& data, const PanelSpec& spec) {
  if (data.individuals() != spec.individuals || data.variables() != spec.variables)
    throw Error(ErrorKind::DimensionMismatch, "data shape does not match spec");
  const Eigen::Index t0 = data.raw_length();
  const int lags = spec.lags;
  const Eigen::Index t = t0 - lags - 1;
  if (t != spec.usable_length)
    throw Error(ErrorKind::DimensionMismatch, "usable length " + std::to_string(t) + " != spec T " +
                                                  std::to_string(spec.usable_length));
  if (data.deterministic.cols() != spec.deterministic || data.deterministic.rows() != t0)
    throw Error(ErrorKind::DimensionMismatch, "deterministic regressors do not match spec");
  const int n = spec.variables;
  PanelArrays arr;
  arr.dy_all.resize(t, spec.nn());
  for (int i = 0; i < spec.individuals; ++i) {
    const Matrix& y = data.levels[i];
    if (!y.allFinite()) throw Error(ErrorKind::NonFinite, "levels of individual " + std::to_string(i));
    Matrix diff = y.bottomRows(t0 - 1) - y.topRows(t0 - 1);  // row s = dy at raw time s+1
    Matrix dy(t, n), ylag(t, n), w(t, spec.k());
    for (Eigen::Index s = 0; s < t; ++s) {
      const Eigen::Index raw = lags + 1 + s;
      dy.row(s) = diff.row(raw - 1);
      ylag.row(s) = y.row(raw - 1);
      for (int h = 1; h <= lags; ++h) w.block(s, n * (h - 1), 1, n) = diff.row(raw - 1 - h);
      if (spec.deterministic > 0) w.block(s, n * lags, 1, spec.deterministic) = data.deterministic.row(raw);
    }
    arr.dy_all.middleCols(i * n, n) = dy;
    arr.dy.push_back(std::move(dy));
    arr.ylag.push_back(std::move(ylag));
    arr.w.push_back(std::move(w));
  }
  return arr;
}

Eigen::Index KronBlockSystem::coef_size() const { return coef_offset(blocks.size()); }

Eigen::Index KronBlockSystem::coef_offset(std::size_t i) const {
  Eigen::Index off = 0;
  for (std::size_t j = 0; j < i; ++j) off += blocks[j].loading.cols() * blocks[j].regressors.cols();
  return off;
}

Matrix KronBlockSystem::dense_design() const {
  const Eigen::Index t = response.rows();
  Matrix x = Matrix::Zero(response.size(), coef_size());
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& blk = blocks[i];
    const Eigen::Index n = blk.loading.rows();
    x.block(row, coef_offset(i), n * t, blk.loading.cols() * blk.regressors.cols()) =
        matrix_kit::kron(blk.loading, blk.regressors);
    row += n * t;
  }
  return x;
}

Matrix KronBlockSystem::fitted(const Vector& coef) const {
  if (coef.size() != coef_size()) throw Error(ErrorKind::DimensionMismatch, "coefficient length mismatch");
  Matrix out(response.rows(), response.cols());
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& blk = blocks[i];
    const Eigen::Index q = blk.regressors.cols();
    const Eigen::Index p = blk.loading.cols();
    const Eigen::Index n = blk.loading.rows();
    if (p == 0 || q == 0) {
      out.middleCols(col, n).setZero();
    } else {
      const Matrix coef_mat = unvec(coef.segment(coef_offset(i), p * q), q, p);
      out.middleCols(col, n) = blk.regressors * coef_mat * blk.loading.transpose();
    }
    col += n;
  }
  return out;
}

KronBlockSystem build_shortrun_system(const PanelArrays& arrays, const PanelSpec& spec,
                                      const std::vector<Matrix>& betas) {
  if (static_cast<int>(betas.size()) != spec.individuals)
    throw Error(ErrorKind::DimensionMismatch, "one beta per individual required");
  KronBlockSystem sys;
  sys.response = arrays.dy_all;
  const int t = spec.usable_length;
  for (int i = 0; i < spec.individuals; ++i) {
    const int r = spec.ranks[i];
    if (betas[i].rows() != spec.variables || betas[i].cols() != r)
      throw Error(ErrorKind::DimensionMismatch, "beta_" + std::to_string(i) + " must be " + dims(spec.variables, r));
    if (t <= spec.k() + r)
      throw Error(ErrorKind::InsufficientData, "T = " + std::to_string(t) + " <= k + r_i for individual " +
                                                   std::to_string(i));
    Matrix x(t, r + spec.k());
    x.leftCols(r) = arrays.ylag[i] * betas[i];
    x.rightCols(spec.k()) = arrays.w[i];
    sys.blocks.push_back({Matrix::Identity(spec.variables, spec.variables), std::move(x)});
  }
  return sys;
}

KronBlockSystem build_longrun_system(const PanelArrays& arrays, const PanelSpec& spec,
                                     const std::vector<Matrix>& a_factors, const std::vector<Matrix>& c_blocks) {
  if (static_cast<int>(a_factors.size()) != spec.individuals || static_cast<int>(c_blocks.size()) != spec.individuals)
    throw Error(ErrorKind::DimensionMismatch, "one A_i and C_i per individual required");
  KronBlockSystem sys;
  sys.response.resize(spec.usable_length, spec.nn());
  const int n = spec.variables;
  for (int i = 0; i < spec.individuals; ++i) {
    if (a_factors[i].rows() != n || a_factors[i].cols() != spec.ranks[i])
      throw Error(ErrorKind::DimensionMismatch, "A_" + std::to_string(i) + " must be " + dims(n, spec.ranks[i]));
    if (c_blocks[i].rows() != spec.k() || c_blocks[i].cols() != n)
      throw Error(ErrorKind::DimensionMismatch, "C_" + std::to_string(i) + " must be " + dims(spec.k(), n));
    sys.response.middleCols(i * n, n) = arrays.dy[i] - arrays.w[i] * c_blocks[i];
    sys.blocks.push_back({a_factors[i], arrays.ylag[i]});
  }
  return sys;
}

KronBlockSystem build_shortrun_system(const PanelData& data, const PanelSpec& spec, const std::vector<Matrix>& betas) {
  return build_shortrun_system(prepare_arrays(data, spec), spec, betas);
}

KronBlockSystem build_longrun_system(const PanelData& data, const PanelSpec& spec,
                                     const std::vector<Matrix>& a_factors, const std::vector<Matrix>& c_blocks) {
  return build_longrun_system(prepare_arrays(data, spec), spec, a_factors, c_blocks);
}

// --- residuals and likelihood ------------------------------------------------------------

Matrix residuals(const PanelArrays& arrays, const PanelSpec& spec, const VecmParams& params) {
  std::vector<Matrix> betas;
  betas.reserve(spec.individuals);
  for (int i = 0; i < spec.individuals; ++i)
    betas.push_back(decompose_beta_star(beta_star_of(params.b_beta_star, spec, i)).beta);
  const auto sys = build_shortrun_system(arrays, spec, betas);
  return sys.response - sys.fitted(params.b);
}

Matrix residuals(const PanelData& data, const PanelSpec& spec, const VecmParams& params) {
  return residuals(prepare_arrays(data, spec), spec, params);
}

Matrix residuals_from_coefficients(const PanelArrays& arrays, const PanelSpec& spec, const std::vector<Matrix>& pis,
                                   const std::vector<Matrix>& c_blocks) {
  const int n = spec.variables;
  Matrix eps(spec.usable_length, spec.nn());
  for (int i = 0; i < spec.individuals; ++i)
    eps.middleCols(i * n, n) = arrays.dy[i] - arrays.ylag[i] * pis[i].transpose() - arrays.w[i] * c_blocks[i];
  return eps;
}

double gaussian_kron_loglik(const Matrix& eps, const Matrix& sigma, double rho) {
  const Eigen::Index t = eps.rows();
  const Eigen::Index p = eps.cols();
  if (sigma.rows() != p || sigma.cols() != p) throw Error(ErrorKind::DimensionMismatch, "Sigma vs residual width");
  const Matrix chol = matrix_kit::cholesky_lower(sigma);
  const double log_det_sigma = 2.0 * chol.diagonal().array().log().sum();
  const matrix_kit::Ar1Precision f_inv(rho, t);
  // tr(Sigma^{-1} eps^T F^{-1} eps)
  const Matrix s = eps.transpose() * f_inv.apply(eps);
  const Matrix half = chol.triangularView<Eigen::Lower>().solve(s);
  const Matrix full = chol.triangularView<Eigen::Lower>().solve(half.transpose());
  const double quad = full.trace();
  const double dim = static_cast<double>(t * p);
  return -0.5 * dim * std::log(2.0 * std::numbers::pi) - 0.5 * static_cast<double>(t) * log_det_sigma -
         0.5 * static_cast<double>(p) * f_inv.log_det_correlation() - 0.5 * quad;
}

Vector pointwise_loglik(const Matrix& eps, const Matrix& sigma, double rho) {
  const Eigen::Index t = eps.rows();
  const Eigen::Index p = eps.cols();
  if (!(std::abs(rho) < 1.0)) throw Error(ErrorKind::NotPD, "pointwise likelihood needs |rho| < 1");
  const Matrix chol = matrix_kit::cholesky_lower(sigma);
  const double log_det_sigma = 2.0 * chol.diagonal().array().log().sum();
  const double c = -0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi);
  const double innov_var = 1.0 - rho * rho;
  Vector out(t);
  for (Eigen::Index s = 0; s < t; ++s) {
    Vector u = eps.row(s).transpose();
    double scale = 1.0;
    if (s > 0 && rho != 0.0) {
      u -= rho * eps.row(s - 1).transpose();
      scale = innov_var;
    }
    const Vector z = chol.triangularView<Eigen::Lower>().solve(u);
    out(s) = c - 0.5 * (log_det_sigma + static_cast<double>(p) * std::log(scale)) - 0.5 * z.squaredNorm() / scale;
  }
  return out;
}

double log_likelihood(const PanelArrays& arrays, const PanelSpec& spec, const VecmParams& params) {
  return gaussian_kron_loglik(residuals(arrays, spec, params), params.sigma, params.rho);
}

double log_likelihood(const PanelData& data, const PanelSpec& spec, const VecmParams& params) {
  return log_likelihood(prepare_arrays(data, spec), spec, params);
}

}  // namespace bcpanel
