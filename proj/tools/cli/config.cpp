#include "config.hpp"

#include <cstdio>

#include "bcpanel/error.hpp"

namespace bcpanel::cli {

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& msg) {
  throw Error(ErrorKind::ConfigError, key + ": " + msg);
}

const json& at(const json& tree, const std::string& dotted) {
  const json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) config_error(dotted, "missing");
    node = &(*node)[part];
    if (dot == std::string::npos) return *node;
    start = dot + 1;
  }
}

double get_number(const json& tree, const std::string& key) {
  const json& v = at(tree, key);
  if (!v.is_number()) config_error(key, "expected a number");
  return v.get<double>();
}

int get_int(const json& tree, const std::string& key) {
  const json& v = at(tree, key);
  if (!v.is_number_integer()) config_error(key, "expected an integer");
  return v.get<int>();
}

std::uint64_t get_seed(const json& tree, const std::string& key) {
  const json& v = at(tree, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    config_error(key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const json& tree, const std::string& key) {
  const json& v = at(tree, key);
  if (!v.is_boolean()) config_error(key, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& tree, const std::string& key) {
  const json& v = at(tree, key);
  if (!v.is_string()) config_error(key, "expected a string");
  return v.get<std::string>();
}

std::vector<int> get_int_list(const json& tree, const std::string& key) {
  const json& v = at(tree, key);
  if (!v.is_array()) config_error(key, "expected an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) config_error(key, "expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

Matrix get_matrix(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) config_error(key, "expected a non-empty array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  if (cols == 0) config_error(key, "rows must be non-empty arrays");
  Matrix m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != cols) config_error(key, "rows must all have " + std::to_string(cols) + " entries");
    for (std::size_t j = 0; j < cols; ++j) {
      if (!v[i][j].is_number()) config_error(key, "entries must be numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
    }
  }
  return m;
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return !(a.is_number_integer() && b.is_number_float());
  return a.type() == b.type();
}

}  // namespace

json default_config() {
  return json{
      {"input", nullptr},
      {"output", "bcpanel-out"},
      {"model", {{"lags", 1}, {"ranks", nullptr}, {"deterministic", "constant"}, {"scale", false}}},
      {"prior",
       {{"mu_nu", 21.0},
        {"nu_nu", 42.0},
        {"mu_tau", 5.0},
        {"nu_tau", 15.0},
        {"hg", nullptr},
        {"v_diffuse", 1000.0},
        {"longrun_scale", 1000.0},
        {"sigma", {{"type", "improper"}, {"scale", 0.01}, {"dof", nullptr}}},
        {"gamma_convention", "mean_dof"},
        {"vtilde_mode", "deterministic"}}},
      {"chain",
       {{"warmup", 1000},
        {"iterations", 10000},
        {"seed", 1},
        {"thin", 1},
        {"rho_sampling", false},
        {"rho_proposal_sd", 0.05},
        {"initial_rho", 0.0}}},
      {"analytics", {{"horizon", 16}, {"ranks", json::array({0, 1, 2})}, {"lags", json::array({1, 2, 3, 4})}, {"seed", 7}}},
      {"study",
       {{"scenarios", json::array({"short", "moderate", "large"})}, {"replicates", 1}, {"seed", 2024}, {"threads", 1}}},
      {"simulate", {{"scenario", "moderate"}, {"seed", 1}}},
  };
}

void merge_config(json& base, const json& overlay, const std::string& prefix) {
  if (!overlay.is_object()) config_error(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) config_error(key, "unknown key");
    json& target = base[it.key()];
    if (target.is_object()) {
      merge_config(target, it.value(), key);
    } else if (target.is_null() || it.value().is_null() || same_kind(target, it.value())) {
      target = it.value();
    } else if (target.is_number_float() && it.value().is_number()) {
      target = it.value().get<double>();
    } else {
      config_error(key, std::string("expected ") + target.type_name() + ", got " + it.value().type_name());
    }
  }
}

void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) config_error(assignment, "override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json overlay = value;
  std::size_t end = key.size();
  while (true) {
    const auto dot = key.rfind('.', end - 1);
    const std::string part = key.substr(dot == std::string::npos ? 0 : dot + 1,
                                        end - (dot == std::string::npos ? 0 : dot + 1));
    overlay = json{{part, overlay}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  merge_config(cfg, overlay);
}

std::uint64_t config_hash(const json& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : cfg.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

RunConfig resolve(const std::string& command, const json& tree) {
  RunConfig rc;
  rc.command = command;
  rc.tree = tree;
  if (!tree.at("input").is_null()) rc.input = get_string(tree, "input");
  rc.output = get_string(tree, "output");
  if (rc.output.empty()) config_error("output", "must not be empty");
  rc.scale = get_bool(tree, "model.scale");

  rc.lags = get_int(tree, "model.lags");
  if (rc.lags < 0) config_error("model.lags", "must be >= 0");
  const json& ranks = at(tree, "model.ranks");
  if (ranks.is_number_integer()) {
    rc.ranks = {ranks.get<int>()};
  } else if (!ranks.is_null()) {
    rc.ranks = get_int_list(tree, "model.ranks");
  }
  for (int r : rc.ranks)
    if (r < 0) config_error("model.ranks", "ranks must be >= 0");
  try {
    rc.terms = parse_deterministic(get_string(tree, "model.deterministic"));
  } catch (const Error&) {
    config_error("model.deterministic", "expected none, constant or constant+trend");
  }

  PriorConfig& p = rc.prior;
  p.mu_nu = get_number(tree, "prior.mu_nu");
  p.nu_nu = get_number(tree, "prior.nu_nu");
  p.mu_tau = get_number(tree, "prior.mu_tau");
  p.nu_tau = get_number(tree, "prior.nu_tau");
  p.v_diffuse = get_number(tree, "prior.v_diffuse");
  p.longrun_scale = get_number(tree, "prior.longrun_scale");
  if (!at(tree, "prior.hg").is_null()) p.hg = get_matrix(at(tree, "prior.hg"), "prior.hg");
  const std::string conv = get_string(tree, "prior.gamma_convention");
  if (conv == "mean_dof") {
    p.gamma_convention = GammaConvention::MeanDof;
  } else if (conv == "shape_rate") {
    p.gamma_convention = GammaConvention::ShapeRate;
  } else {
    config_error("prior.gamma_convention", "expected mean_dof or shape_rate");
  }
  const std::string mode = get_string(tree, "prior.vtilde_mode");
  if (mode == "deterministic") {
    p.vtilde_mode = VtildeMode::Deterministic;
  } else if (mode == "inverse_wishart") {
    p.vtilde_mode = VtildeMode::InverseWishart;
  } else {
    config_error("prior.vtilde_mode", "expected deterministic or inverse_wishart");
  }
  const std::string sigma_type = get_string(tree, "prior.sigma.type");
  if (sigma_type != "improper" && sigma_type != "inverse_wishart")
    config_error("prior.sigma.type", "expected improper or inverse_wishart");
  p.sigma.improper = sigma_type == "improper";
  if (!p.sigma.improper) {
    const json& sc = at(tree, "prior.sigma.scale");
    if (sc.is_number()) {
      if (!(sc.get<double>() > 0.0)) config_error("prior.sigma.scale", "must be positive");
    } else {
      p.sigma.scale = get_matrix(sc, "prior.sigma.scale");
    }
    if (!at(tree, "prior.sigma.dof").is_null()) p.sigma.dof = get_number(tree, "prior.sigma.dof");
  }

  ChainConfig& c = rc.chain;
  c.warmup = get_int(tree, "chain.warmup");
  c.iterations = get_int(tree, "chain.iterations");
  c.seed = get_seed(tree, "chain.seed");
  c.thin = get_int(tree, "chain.thin");
  c.rho_sampling = get_bool(tree, "chain.rho_sampling");
  c.rho_proposal_sd = get_number(tree, "chain.rho_proposal_sd");
  c.initial_rho = get_number(tree, "chain.initial_rho");
  c.validate();

  rc.horizon = get_int(tree, "analytics.horizon");
  if (rc.horizon < 1) config_error("analytics.horizon", "must be >= 1");
  rc.rank_list = get_int_list(tree, "analytics.ranks");
  rc.lag_list = get_int_list(tree, "analytics.lags");
  if (rc.rank_list.empty()) config_error("analytics.ranks", "must not be empty");
  if (rc.lag_list.empty()) config_error("analytics.lags", "must not be empty");
  for (int l : rc.lag_list)
    if (l < 0) config_error("analytics.lags", "lags must be >= 0");
  rc.analytics_seed = get_seed(tree, "analytics.seed");

  const json& sc = at(tree, "study.scenarios");
  if (!sc.is_array() || sc.empty()) config_error("study.scenarios", "expected a non-empty array");
  for (const auto& s : sc) {
    if (!s.is_string()) config_error("study.scenarios", "entries must be strings");
    const std::string name = s.get<std::string>();
    if (name != "short" && name != "moderate" && name != "large" && name != "extreme")
      config_error("study.scenarios", "unknown scenario '" + name + "'");
    rc.scenarios.push_back(name);
  }
  rc.replicates = get_int(tree, "study.replicates");
  if (rc.replicates < 1) config_error("study.replicates", "must be >= 1");
  rc.study_seed = get_seed(tree, "study.seed");
  rc.threads = get_int(tree, "study.threads");
  if (rc.threads < 1) config_error("study.threads", "must be >= 1");

  rc.sim_scenario = get_string(tree, "simulate.scenario");
  if (rc.sim_scenario != "short" && rc.sim_scenario != "moderate" && rc.sim_scenario != "large" &&
      rc.sim_scenario != "extreme")
    config_error("simulate.scenario", "unknown scenario '" + rc.sim_scenario + "'");
  rc.sim_seed = get_seed(tree, "simulate.seed");

  const bool needs_input = command != "simulate" && command != "study";
  if (needs_input && !rc.input) config_error("input", "required for " + command);
  const bool needs_ranks = command == "fit" || command == "fevd" || command == "diagnose" || command == "criteria";
  if (needs_ranks && rc.ranks.empty()) config_error("model.ranks", "required for " + command);
  return rc;
}

PriorConfig prior_for(const RunConfig& rc, const PanelSpec& spec) {
  PriorConfig p = rc.prior;
  if (!p.sigma.improper) {
    const int nn = spec.nn();
    const json& sc = at(rc.tree, "prior.sigma.scale");
    if (sc.is_number()) p.sigma.scale = sc.get<double>() * Matrix::Identity(nn, nn);
    if (at(rc.tree, "prior.sigma.dof").is_null()) p.sigma.dof = nn + 2.0;
  }
  return p;
}

void validate_against(const RunConfig& rc, const PanelSpec& spec) {
  try {
    spec.validate();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ConfigError) throw;
    std::string msg = e.what();
    const std::string prefix = "ConfigError: ";
    if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
    throw Error(ErrorKind::ConfigError, "model." + msg);
  }
  prior_for(rc, spec).validate(spec);
}

}  // namespace bcpanel::cli
