#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcpanel/analytics.hpp"
#include "bcpanel/gibbs.hpp"
#include "bcpanel/model.hpp"
#include "bcpanel/priors.hpp"
#include "bcpanel/random.hpp"

namespace bcpanel {

/// Version tag of the shipped truth fixtures.
inline constexpr int kFixtureVersion = 1;

struct Scenario {
  std::string name;  // short | moderate | large
  PanelSpec spec;    // usable_length is the scenario T
  DeterministicTerms terms = DeterministicTerms::Constant;
  VecmParams truth;
  std::uint64_t seed = 0;
  int burn_in = 200;
};

/// n = 4, N = 3, L = 1, constant term, ranks {1, 2, 2}.
PanelSpec fixture_spec(int usable_length);
VecmParams fixture_truth();
/// T = 30 | 100 | 300 for short | moderate | large ("extreme" is accepted as large).
Scenario make_scenario(const std::string& name, std::uint64_t seed);

/// T x (Nn) errors with rows N(0, Sigma) and AR(1) dependence rho across rows.
Matrix sample_ar1_errors(const Matrix& sigma, double rho, Eigen::Index t, RandomSource& rng);

/// Throws Unstable when any individual's companion matrix has an eigenvalue
/// of modulus above 1 + 1e-8.
void check_stability(const VecmParams& params, const PanelSpec& spec);

/// Forward recursion of the VECM. `levels` must hold the first L+1 rows of
/// every individual; rows L+1.. are overwritten using `eps` (T x Nn).
void propagate(PanelData& panel, const PanelSpec& spec, const VecmParams& params, const Matrix& eps);

/// Simulate from zero initial conditions, discard `burn_in` steps, and return
/// T + L + 1 raw observations.
PanelData simulate_panel(const Scenario& scenario, RandomSource& rng);

/// Redraw the usable sample given the first L+1 rows of `panel`.
PanelData simulate_conditional(const PanelData& panel, const PanelSpec& spec, const VecmParams& params,
                               RandomSource& rng);

struct GroupAccuracy {
  double coverage = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double avg_ci_length = 0.0;
  double bias = 0.0;
  std::size_t entries = 0;
};

struct AccuracyReport {
  GroupAccuracy gamma;
  GroupAccuracy pi;
};

/// Metrics over entries with truth-minus-estimate sign convention.
GroupAccuracy group_accuracy(const std::vector<double>& truth, const std::vector<std::vector<double>>& draws);
/// Entry-weighted combination of reports computed on independent replicate datasets.
GroupAccuracy pool_accuracy(const std::vector<GroupAccuracy>& parts);

AccuracyReport accuracy_report(const VecmParams& truth, const PanelSpec& spec, const ChainStore& chain);

struct StudyRow {
  std::string scenario;
  AccuracyReport report;
  std::string error;
  std::size_t jitter_events = 0;
  double seconds = 0.0;
  std::vector<ParameterSummary> summary;
};

std::vector<StudyRow> run_study(const std::vector<Scenario>& scenarios, const PriorConfig& prior,
                                const ChainConfig& cc, int threads = 1);

}  // namespace bcpanel
