#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bcpanel/model.hpp"
#include "bcpanel/priors.hpp"
#include "bcpanel/random.hpp"

namespace bcpanel {

struct ChainConfig {
  int warmup = 1000;
  int iterations = 10000;
  std::uint64_t seed = 1;
  int thin = 1;
  bool rho_sampling = false;
  double rho_proposal_sd = 0.05;
  double initial_rho = 0.0;

  void validate() const;
};

/// Post-warm-up draws only; `warmup_boundary` counts the discarded iterations.
struct ChainStore {
  std::vector<VecmParams> draws;
  std::vector<double> loglik;
  int warmup_boundary = 0;
  double rho_acceptance_rate = 0.0;
  std::vector<std::string> events;

  std::size_t size() const { return draws.size(); }
  bool empty() const { return draws.empty(); }
};

struct ChainProgress {
  int iteration = 0;
  int total = 0;
  bool warmup = false;
  double loglik = 0.0;
  double acceptance_rate = 0.0;
};
using ProgressCallback = std::function<void(const ChainProgress&)>;

/// N(mean, precision^{-1}) with the precision's lower Cholesky factor.
struct GaussianConditional {
  Vector mean;
  Matrix precision;
  Matrix precision_lower;

  Vector draw(RandomSource& rng) const;
};

/// Posterior of the coefficients of `sys` under errors N(0, Sigma (x) F_rho)
/// and prior N(0, (nu * prior_precision)^{-1}). Works block-by-block on the
/// Kronecker structure.
GaussianConditional gls_conditional(const KronBlockSystem& sys, const Matrix& sigma, double rho, double nu,
                                    const Matrix& prior_precision, std::vector<std::string>* events = nullptr);

/// Sigma | eps ~ IW(eps^T F^{-1} eps, T) under the improper prior, or
/// IW(S0 + eps^T F^{-1} eps, d0 + T) under a proper one.
Matrix sample_sigma(const Matrix& eps, double rho, const SigmaPrior& prior, RandomSource& rng,
                    std::vector<std::string>* events = nullptr);
Matrix sample_sigma(const Matrix& eps, int t, RandomSource& rng);

Vector sample_b(const KronBlockSystem& sys, const Matrix& sigma, double rho, double nu, const Matrix& vtilde_precision,
                RandomSource& rng);
Vector sample_b_beta(const KronBlockSystem& sys, const Matrix& sigma, double rho, double nu,
                     const Matrix& vtilde_beta_precision, RandomSource& rng);

/// (first, second) of the nu full conditional in the configured gamma convention.
std::pair<double, double> nu_conditional(const Vector& b, const Matrix& vtilde_precision, const PanelSpec& spec,
                                         const PriorConfig& cfg);
double sample_nu(const Vector& b, const Matrix& vtilde_precision, const PanelSpec& spec, const PriorConfig& cfg,
                 RandomSource& rng);

/// sum_i tr(beta*_i^T H_perp H_perp^T beta*_i)
double perp_trace(const std::vector<Matrix>& beta_stars, const PriorConfig& cfg);
/// (first, second) of the tau^{-1} full conditional.
std::pair<double, double> tau_inverse_conditional(const std::vector<Matrix>& beta_stars, double nu,
                                                  const PanelSpec& spec, const PriorConfig& cfg);
double sample_tau(const std::vector<Matrix>& beta_stars, double nu, const PanelSpec& spec, const PriorConfig& cfg,
                  RandomSource& rng);

struct RhoStep {
  double rho = 0.0;
  bool accepted = false;
  double loglik = 0.0;
  double log_ratio = 0.0;
};

/// Random-walk Metropolis step with reflection at +-1 and a flat prior.
RhoStep mh_step_rho(const VecmParams& state, const PanelArrays& arrays, const PanelSpec& spec, double proposal_sd,
                    double current_loglik, RandomSource& rng);

/// OLS starting point.
VecmParams initial_state(const PanelArrays& arrays, const PanelSpec& spec, const PriorConfig& prior,
                         double initial_rho = 0.0);

class GibbsSampler {
 public:
  GibbsSampler(PanelArrays arrays, PanelSpec spec, PriorConfig prior, ChainConfig cc);
  GibbsSampler(const PanelData& data, const PanelSpec& spec, const PriorConfig& prior, const ChainConfig& cc);

  /// One full cycle; returns the log-likelihood at the new state.
  double step();
  ChainStore run(const ProgressCallback& progress = {});

  const VecmParams& state() const { return state_; }
  void set_state(const VecmParams& state);
  void set_arrays(PanelArrays arrays) { arrays_ = std::move(arrays); }
  const PanelArrays& arrays() const { return arrays_; }
  const PanelSpec& spec() const { return spec_; }
  RandomSource& rng() { return rng_; }
  const std::vector<std::string>& events() const { return events_; }
  int iteration() const { return iteration_; }
  double acceptance_rate() const;

 private:
  std::vector<Matrix> current_betas() const;
  Matrix current_vtilde_precision(const std::vector<Matrix>& betas) const;

  PanelArrays arrays_;
  PanelSpec spec_;
  PriorConfig prior_;
  ChainConfig cc_;
  RandomSource rng_;
  VecmParams state_;
  Matrix vtilde_;  // inverse-Wishart mode only
  int iteration_ = 0;
  int rho_proposals_ = 0;
  int rho_accepts_ = 0;
  std::vector<std::string> events_;
};

ChainStore run_chain(const PanelData& data, const PanelSpec& spec, const PriorConfig& prior, const ChainConfig& cc,
                     const ProgressCallback& progress = {});
ChainStore run_chain(const PanelArrays& arrays, const PanelSpec& spec, const PriorConfig& prior,
                     const ChainConfig& cc, const ProgressCallback& progress = {});

}  // namespace bcpanel
