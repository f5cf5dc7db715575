#pragma once

#include <string>
#include <vector>

#include "bcpanel/gibbs.hpp"
#include "bcpanel/model.hpp"
#include "bcpanel/random.hpp"

namespace bcpanel {

/// Level-VAR coefficients A_1..A_{L+1} of a VECM with long-run matrix `pi`
/// and short-run matrices `gammas` (Gamma_1..Gamma_L).
std::vector<Matrix> vecm_to_var(const Matrix& pi, const std::vector<Matrix>& gammas);
std::vector<Matrix> vecm_to_var(const VecmParams& params, const PanelSpec& spec, int individual);

Matrix companion_matrix(const std::vector<Matrix>& var_coefficients);
double spectral_radius(const Matrix& m);

/// Psi_0 .. Psi_horizon of the MA representation.
std::vector<Matrix> ma_coefficients(const std::vector<Matrix>& var_coefficients, int horizon);

/// Orthogonalized responses Theta_0..Theta_horizon for each individual;
/// entry (j, s) is the response of variable j to shock s.
std::vector<std::vector<Matrix>> irf(const VecmParams& params, const PanelSpec& spec, int horizon);

struct FevdResult {
  int horizon = 0;
  /// shares[i][h-1](j, s): share of the h-step forecast-error variance of
  /// variable j of individual i due to shock s.
  std::vector<std::vector<Matrix>> shares;
};

FevdResult fevd(const VecmParams& params, const PanelSpec& spec, int horizon);

struct Bands {
  std::vector<std::vector<Matrix>> lower, mean, upper;
};

/// Pointwise posterior bands of the IRF (h = 0..horizon) over chain draws.
Bands irf_bands(const ChainStore& chain, const PanelSpec& spec, int horizon, double mass = 0.95);
/// Pointwise posterior bands of the FEVD shares (h = 1..horizon).
Bands fevd_bands(const ChainStore& chain, const PanelSpec& spec, int horizon, double mass = 0.95);

/// Posterior mean of Pi_i, C_i, Sigma and rho, evaluated as one state.
struct PosteriorMeanState {
  std::vector<Matrix> pis;
  std::vector<Matrix> c_blocks;
  Matrix sigma;
  double rho = 0.0;
};
PosteriorMeanState posterior_mean_state(const ChainStore& chain, const PanelSpec& spec);
double loglik_at(const PosteriorMeanState& s, const PanelArrays& arrays, const PanelSpec& spec);

struct InformationCriteria {
  double loglik_at_mean = 0.0;
  double mean_loglik = 0.0;
  double p_d = 0.0;
  double dic = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
  double waic = 0.0;
  long parameter_count = 0;
  double bic = 0.0;
  double aic = 0.0;
};

InformationCriteria information_criteria(const ChainStore& chain, const PanelArrays& arrays, const PanelSpec& spec);
InformationCriteria information_criteria(const ChainStore& chain, const PanelData& data, const PanelSpec& spec);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double ess = 0.0;
  double mcse = 0.0;
};

struct RankProfileRow {
  int rank = 0;
  double mean_loglik = 0.0;
  double loglik_at_mean = 0.0;
  std::size_t draws = 0;
  std::string error;
  std::vector<ParameterSummary> summary;
};

/// One short chain per rank, the same rank for every individual. Rows sorted by rank.
std::vector<RankProfileRow> rank_profile(const PanelData& data, int lags, const PriorConfig& prior,
                                         const ChainConfig& cc, std::vector<int> ranks);

/// Type-7 sample quantile.
double quantile(std::vector<double> values, double p);
double mean_of(const std::vector<double>& x);
double sd_of(const std::vector<double>& x);

/// Effective sample size by Geyer's initial positive sequence, clamped to [1, n].
double effective_sample_size(const std::vector<double>& x);
double monte_carlo_se(const std::vector<double>& x);

/// Sigma (upper triangle), Pi, Gamma, Phi, nu, tau and rho.
std::vector<std::pair<std::string, std::vector<double>>> chain_traces(const ChainStore& chain, const PanelSpec& spec);
ParameterSummary summarize(const std::string& name, const std::vector<double>& x);
std::vector<ParameterSummary> summarize_chain(const ChainStore& chain, const PanelSpec& spec);

struct DiagnosticsReport {
  std::vector<ParameterSummary> parameters;
  std::vector<double> r2_draws;
  std::vector<double> loglik_draws;
  double ppp = 0.0;
};

/// Overall R^2 = 1 - SSE/SST on the differenced data, pooled over equations.
double r_squared(const Matrix& dy_all, const Matrix& eps);
/// Share of draws whose replicated chi-square discrepancy exceeds the observed one.
double posterior_predictive_p(const ChainStore& chain, const PanelArrays& arrays, const PanelSpec& spec,
                              RandomSource& rng);

DiagnosticsReport diagnostics(const ChainStore& chain, const PanelArrays& arrays, const PanelSpec& spec,
                              RandomSource& rng);
DiagnosticsReport diagnostics(const ChainStore& chain, const PanelData& data, const PanelSpec& spec,
                              RandomSource& rng);

}  // namespace bcpanel
