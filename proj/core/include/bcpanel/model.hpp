#pragma once

#include <string>
#include <vector>

#include "bcpanel/matrix_kit.hpp"

namespace bcpanel {

enum class DeterministicTerms { None, Constant, ConstantTrend };

DeterministicTerms parse_deterministic(const std::string& name);
std::string to_string(DeterministicTerms terms);
int deterministic_count(DeterministicTerms terms);

/// Observed panel in levels. All individuals share the time axis and the
/// deterministic regressors d_t.
struct PanelData {
  std::vector<Matrix> levels;  // one T0 x n matrix per individual
  Matrix deterministic;        // T0 x k_d
  std::vector<std::string> individual_names;
  std::vector<std::string> variable_names;
  std::vector<std::string> dates;

  Eigen::Index raw_length() const { return levels.empty() ? 0 : levels.front().rows(); }
  int individuals() const { return static_cast<int>(levels.size()); }
  int variables() const { return levels.empty() ? 0 : static_cast<int>(levels.front().cols()); }
};

Matrix make_deterministic(Eigen::Index raw_length, DeterministicTerms terms);

/// Model dimensions. `usable_length` is the number of rows left after the
/// first L+1 observations are spent on differencing and lagging.
struct PanelSpec {
  int individuals = 0;   // N
  int variables = 0;     // n
  int lags = 0;          // L
  int deterministic = 0; // k_d
  int usable_length = 0; // T
  std::vector<int> ranks;

  int k() const { return variables * lags + deterministic; }
  int total_rank() const;
  double mean_rank() const;
  int max_rank() const;
  int nn() const { return individuals * variables; }

  int shortrun_size(int i) const { return variables * (k() + ranks[i]); }
  int shortrun_offset(int i) const;
  int shortrun_total() const;
  int longrun_size(int i) const { return variables * ranks[i]; }
  int longrun_offset(int i) const;
  int longrun_total() const { return variables * total_rank(); }

  /// Regressor columns a cross-individual combination of equations can use:
  /// lagged levels of individuals with r_i > 0, all lagged differences, and the shared d_t.
  int pooled_regressor_count() const;
  /// Under the improper Sigma prior the posterior needs T - pooled_regressor_count() >= Nn.
  bool pooled_rank_sufficient() const { return usable_length - pooled_regressor_count() >= nn(); }

  /// Nn(k + 2 rbar + 1) + 2, the count reported for the model.
  long reported_parameter_count() const;
  /// Free entries actually carried: b, b_beta*, the Nn(Nn+1)/2 unique entries of Sigma, nu and tau.
  long free_parameter_count() const;

  void validate() const;

  static PanelSpec from_data(const PanelData& data, int lags, std::vector<int> ranks);
};

/// One full parameter state of the sampler.
struct VecmParams {
  Matrix sigma;          // Nn x Nn
  Vector b;              // stacked vec(B_i), B_i = (alpha_i, Gamma_i1..Gamma_iL, Phi_i)^T
  Vector b_beta_star;    // stacked vec(beta*_i)
  double nu = 1.0;
  double tau = 1.0;
  double rho = 0.0;
};

/// Per-individual quantities implied by a consistent parameter state.
struct DerivedParams {
  Matrix beta;   // n x r, semi-orthogonal
  Matrix kappa;  // r x r, symmetric PD
  Matrix a;      // n x r, semi-orthogonal (A_i)
  Matrix alpha;  // n x r
  Matrix pi;     // n x n, alpha beta^T
};

// --- parameter views ----------------------------------------------------

Matrix shortrun_block(const Vector& b, const PanelSpec& spec, int i);
void set_shortrun_block(Vector& b, const PanelSpec& spec, int i, const Matrix& block);
Matrix alpha_of(const Vector& b, const PanelSpec& spec, int i);
void set_alpha(Vector& b, const PanelSpec& spec, int i, const Matrix& alpha);
/// Gamma_{i,h} for h in 1..L.
Matrix gamma_of(const Vector& b, const PanelSpec& spec, int i, int h);
Matrix phi_of(const Vector& b, const PanelSpec& spec, int i);
/// C_i = (Gamma_i1, ..., Gamma_iL, Phi_i)^T, k x n.
Matrix c_of(const Vector& b, const PanelSpec& spec, int i);
Matrix beta_star_of(const Vector& b_beta_star, const PanelSpec& spec, int i);
void set_beta_star(Vector& b_beta_star, const PanelSpec& spec, int i, const Matrix& beta_star);

// --- reparameterization ---------------------------------------------------

Matrix compose_pi(const Matrix& alpha, const Matrix& beta);

struct BetaDecomposition {
  Matrix beta;
  Matrix kappa;
};
/// beta* = beta kappa with kappa = (beta*^T beta*)^{1/2}.
BetaDecomposition decompose_beta_star(const Matrix& beta_star);

/// A = alpha (alpha^T alpha)^{-1/2}.
Matrix normalize_alpha(const Matrix& alpha);

/// Flip column signs so the first nonzero row of beta is non-negative; the
/// same flips are applied to the companion factors so Pi is unchanged.
void canonicalize_signs(DerivedParams& d);

std::vector<DerivedParams> derive(const VecmParams& params, const PanelSpec& spec);
std::vector<Matrix> pi_matrices(const VecmParams& params, const PanelSpec& spec);

// --- data arrays and the two linear systems --------------------------------

/// Differenced, lagged and deterministic arrays for the usable sample.
struct PanelArrays {
  std::vector<Matrix> dy;    // T x n
  std::vector<Matrix> ylag;  // T x n, y_{t-1}
  std::vector<Matrix> w;     // T x k, (dy_{t-1}, ..., dy_{t-L}, d_t)
  Matrix dy_all;             // T x Nn, individuals' columns concatenated
};

PanelArrays prepare_arrays(const PanelData& data, const PanelSpec& spec);

/// One individual's design block: fitted values are U Q M^T for the
/// coefficient matrix Q (q x p), i.e. the block equals M (x) U acting on vec(Q).
struct KronBlock {
  Matrix loading;     // M, n x p
  Matrix regressors;  // U, T x q
};

/// Block-diagonal regression y = x c + e with x = diag(M_i (x) U_i) and
/// e ~ N(0, Sigma (x) F_rho).
struct KronBlockSystem {
  Matrix response;  // T x Nn
  std::vector<KronBlock> blocks;

  Eigen::Index coef_size() const;
  Eigen::Index coef_offset(std::size_t i) const;
  Vector response_vector() const { return matrix_kit::vec(response); }
  Matrix dense_design() const;
  /// T x Nn fitted values for stacked coefficients.
  Matrix fitted(const Vector& coef) const;
};

/// Short-run system: U_i = (y_{-1} beta_i, w_i), M_i = I_n, coefficients b.
KronBlockSystem build_shortrun_system(const PanelArrays& arrays, const PanelSpec& spec,
                                      const std::vector<Matrix>& betas);
/// Long-run system: response dy_i - w_i C_i, U_i = y_{-1}, M_i = A_i, coefficients b_beta*.
KronBlockSystem build_longrun_system(const PanelArrays& arrays, const PanelSpec& spec,
                                     const std::vector<Matrix>& a_factors, const std::vector<Matrix>& c_blocks);

KronBlockSystem build_shortrun_system(const PanelData& data, const PanelSpec& spec, const std::vector<Matrix>& betas);
KronBlockSystem build_longrun_system(const PanelData& data, const PanelSpec& spec,
                                     const std::vector<Matrix>& a_factors, const std::vector<Matrix>& c_blocks);

// --- residuals and likelihood ----------------------------------------------

/// T x Nn residual matrix.
Matrix residuals(const PanelArrays& arrays, const PanelSpec& spec, const VecmParams& params);
Matrix residuals(const PanelData& data, const PanelSpec& spec, const VecmParams& params);

/// Residuals from explicit long-run matrices and short-run blocks.
Matrix residuals_from_coefficients(const PanelArrays& arrays, const PanelSpec& spec, const std::vector<Matrix>& pis,
                                   const std::vector<Matrix>& c_blocks);

/// log N(vec(eps); 0, Sigma (x) F_rho) without forming the TNn x TNn covariance.
double gaussian_kron_loglik(const Matrix& eps, const Matrix& sigma, double rho);

/// Per-time-point log densities (conditional on the previous residual when
/// rho != 0); they sum to gaussian_kron_loglik.
Vector pointwise_loglik(const Matrix& eps, const Matrix& sigma, double rho);

double log_likelihood(const PanelArrays& arrays, const PanelSpec& spec, const VecmParams& params);
double log_likelihood(const PanelData& data, const PanelSpec& spec, const VecmParams& params);

}  // namespace bcpanel
