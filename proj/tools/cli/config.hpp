#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bcpanel/gibbs.hpp"
#include "bcpanel/model.hpp"
#include "bcpanel/priors.hpp"

namespace bcpanel::cli {

using nlohmann::json;

/// Defaults for every recognised key. Unknown keys are rejected on merge.
json default_config();

/// Deep-merge `overlay` into `base`. Every key must exist in `base` and
/// scalar types must agree, except where the default is null.
void merge_config(json& base, const json& overlay, const std::string& prefix = "");

/// Apply one `dotted.key=value` override. The value is parsed as JSON and
/// falls back to a plain string.
void apply_override(json& cfg, const std::string& assignment);

/// 64-bit FNV-1a of the canonical dump.
std::uint64_t config_hash(const json& cfg);
std::string hex64(std::uint64_t v);

struct RunConfig {
  std::string command;
  json tree;

  std::optional<std::string> input;
  std::string output;
  bool scale = false;

  int lags = 1;
  std::vector<int> ranks;
  DeterministicTerms terms = DeterministicTerms::Constant;

  PriorConfig prior;
  ChainConfig chain;

  int horizon = 16;
  std::vector<int> rank_list;
  std::vector<int> lag_list;
  std::uint64_t analytics_seed = 7;

  std::vector<std::string> scenarios;
  int replicates = 1;
  std::uint64_t study_seed = 2024;
  int threads = 1;

  std::string sim_scenario;
  std::uint64_t sim_seed = 1;
};

/// Typed view of a merged tree. Throws ConfigError naming the key.
RunConfig resolve(const std::string& command, const json& tree);

/// Checks that need the data dimensions (ranks, Hg rows, nu prior dof).
void validate_against(const RunConfig& rc, const PanelSpec& spec);

/// Attach the sigma prior once Nn is known.
PriorConfig prior_for(const RunConfig& rc, const PanelSpec& spec);

}  // namespace bcpanel::cli
