#pragma once

#include <optional>

#include "bcpanel/model.hpp"
#include "bcpanel/random.hpp"

namespace bcpanel {

/// How the (mean, dof) hyperparameter pairs for nu and tau^{-1} are read.
/// MeanDof: density proportional to x^{dof/2-1} exp(-dof x / (2 mean)).
/// ShapeRate: the pair is (shape, rate).
enum class GammaConvention { MeanDof, ShapeRate };

/// Deterministic: V~ rebuilt from (beta, tau) every iteration.
/// InverseWishart: V~ ~ IW(V_V, T), V_V being identity with the alpha blocks
/// taken from the deterministic construction.
enum class VtildeMode { Deterministic, InverseWishart };

struct SigmaPrior {
  bool improper = true;
  Matrix scale;  // Nn x Nn when proper
  double dof = 0.0;
};

struct PriorConfig {
  double mu_nu = 21.0;
  double nu_nu = 42.0;
  double mu_tau = 5.0;
  double nu_tau = 15.0;
  std::optional<Matrix> hg;  // n x m restriction, nullopt for "none"
  double v_diffuse = 1000.0;
  /// Common variance scale c of the long-run block: alpha | beta has prior
  /// covariance c nu^{-1} (beta^T P^{-1} beta)^{-1} and b_beta* has c nu^{-1} V~_beta*.
  double longrun_scale = 1000.0;
  SigmaPrior sigma;
  GammaConvention gamma_convention = GammaConvention::MeanDof;
  VtildeMode vtilde_mode = VtildeMode::Deterministic;

  bool has_restriction() const { return hg.has_value(); }
  /// Semi-orthogonal H = Hg (Hg^T Hg)^{-1/2}.
  Matrix h() const;
  int restriction_columns() const { return hg ? static_cast<int>(hg->cols()) : 0; }

  /// nu_nu - n N rbar, the prior degrees of freedom of nu.
  double nu_prior_dof(const PanelSpec& spec) const;

  void validate(const PanelSpec& spec) const;
};

/// P_tau, or I_n when no restriction is configured.
Matrix projection(const PriorConfig& cfg, int n, double tau);
/// P_tau^{-1} = H H^T + tau^{-1} H_perp H_perp^T.
Matrix projection_inverse(const PriorConfig& cfg, int n, double tau);

/// Prior precision of vec(B_i): I_n (x) blockdiag(beta^T P_tau^{-1} beta / c, I_k / v).
Matrix vtilde_precision_block(const PanelSpec& spec, const PriorConfig& cfg, const Matrix& beta, double tau);
/// Its inverse, I_n (x) blockdiag(c (beta^T P_tau^{-1} beta)^{-1}, v I_k).
Matrix vtilde_block(const PanelSpec& spec, const PriorConfig& cfg, const Matrix& beta, double tau);

Matrix build_vtilde(const PanelSpec& spec, const PriorConfig& cfg, const std::vector<Matrix>& betas, double tau);
Matrix build_vtilde_precision(const PanelSpec& spec, const PriorConfig& cfg, const std::vector<Matrix>& betas,
                              double tau);

/// blockdiag(I_{r_i} (x) P_tau).
Matrix build_vtilde_beta(const PanelSpec& spec, const PriorConfig& cfg, double tau);
Matrix build_vtilde_beta_precision(const PanelSpec& spec, const PriorConfig& cfg, double tau);
/// Prior precision of b_beta* per unit nu: V~_beta*^{-1} / c.
Matrix longrun_prior_precision(const PanelSpec& spec, const PriorConfig& cfg, double tau);

/// Scale matrix V_V for the inverse-Wishart alternative.
Matrix build_vv(const PanelSpec& spec, const PriorConfig& cfg, const std::vector<Matrix>& betas, double tau);

/// Draw from the gamma family in the configured convention.
double draw_gamma(const PriorConfig& cfg, double first, double second, RandomSource& rng);
double log_gamma_density(const PriorConfig& cfg, double x, double first, double second);

VecmParams sample_prior(const PanelSpec& spec, const PriorConfig& cfg, RandomSource& rng);

struct LogPriorTerms {
  double b = 0.0;
  double beta_star = 0.0;
  double nu = 0.0;
  double tau = 0.0;
  double sigma = 0.0;
  double total() const { return b + beta_star + nu + tau + sigma; }
};

LogPriorTerms log_prior_terms(const VecmParams& params, const PanelSpec& spec, const PriorConfig& cfg);
double log_prior(const VecmParams& params, const PanelSpec& spec, const PriorConfig& cfg);

/// log N(x; 0, precision^{-1}) from the precision matrix.
double log_normal_precision(const Vector& x, const Matrix& precision);
/// Inverse-Wishart log density with the same convention as sample_inverse_wishart.
double log_inverse_wishart(const Matrix& x, const Matrix& scale, double dof);

}  // namespace bcpanel
