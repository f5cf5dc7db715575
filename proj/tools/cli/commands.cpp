#include "commands.hpp"

#include <ostream>

#include "bcpanel/analytics.hpp"
#include "bcpanel/error.hpp"
#include "bcpanel/gibbs.hpp"
#include "bcpanel/simulator.hpp"
#include "output.hpp"
#include "panel_csv.hpp"

namespace bcpanel::cli {

using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError: return kConfig;
    case ErrorKind::IoError: return kIo;
    case ErrorKind::ParseError:
    case ErrorKind::MissingCell:
    case ErrorKind::RaggedPanel:
    case ErrorKind::DuplicateKey:
    case ErrorKind::InsufficientData: return kData;
    default: return kNumerical;
  }
}

namespace {

struct Loaded {
  PanelData data;
  PanelSpec spec;
  PriorConfig prior;
  json scaling;
};

std::vector<int> broadcast_ranks(const std::vector<int>& ranks, int individuals) {
  if (ranks.size() == 1) return std::vector<int>(individuals, ranks.front());
  return ranks;
}

PanelData load_data(const RunConfig& rc, json& scaling) {
  PanelData data = ingest_csv(*rc.input, rc.terms);
  scaling = nullptr;
  if (rc.scale) {
    const ScalingRecord rec = min_max_scale(data);
    scaling = json{{"min", rec.min}, {"max", rec.max}};
  }
  return data;
}

Loaded load(const RunConfig& rc, int lags) {
  Loaded l;
  l.data = load_data(rc, l.scaling);
  std::vector<int> ranks = broadcast_ranks(rc.ranks, l.data.individuals());
  if (static_cast<int>(ranks.size()) != l.data.individuals())
    throw Error(ErrorKind::ConfigError, "model.ranks: expected " + std::to_string(l.data.individuals()) +
                                            " entries (one per individual), got " + std::to_string(ranks.size()));
  l.spec = PanelSpec::from_data(l.data, lags, ranks);
  validate_against(rc, l.spec);
  l.prior = prior_for(rc, l.spec);
  return l;
}

json data_json(const PanelData& data, const json& scaling) {
  return json{{"individuals", data.individual_names},
              {"variables", data.variable_names},
              {"first_date", data.dates.empty() ? "" : data.dates.front()},
              {"last_date", data.dates.empty() ? "" : data.dates.back()},
              {"raw_length", data.raw_length()},
              {"scaling", scaling}};
}

json manifest(const RunConfig& rc) {
  return json{{"tool", "bcpanel"},
              {"version", kVersion},
              {"command", rc.command},
              {"seed", rc.chain.seed},
              {"config_hash", hex64(config_hash(rc.tree))},
              {"scaled", rc.scale},
              {"config", rc.tree},
              {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)}};
}

ProgressCallback progress_for(const CommandContext& ctx, const std::string& label) {
  if (!ctx.verbose || !ctx.log) return {};
  std::ostream* log = ctx.log;
  return [log, label](const ChainProgress& p) {
    if (p.iteration % 1000 == 0 || p.iteration == p.total)
      *log << label << " iteration " << p.iteration << "/" << p.total << (p.warmup ? " (warm-up)" : "")
           << " loglik " << format_number(p.loglik) << "\n";
  };
}

void warn(const CommandContext& ctx, const std::string& msg) {
  if (ctx.log) *ctx.log << "warning: " << msg << "\n";
}

json events_json(const ChainStore& chain, const CommandContext& ctx) {
  json ev = json::array();
  for (const auto& e : chain.events) {
    ev.push_back(e);
    warn(ctx, e);
  }
  return ev;
}

json posterior_mean_json(const ChainStore& chain, const PanelSpec& spec, const PanelData& data) {
  const PosteriorMeanState pm = posterior_mean_state(chain, spec);
  json inds = json::array();
  for (int i = 0; i < spec.individuals; ++i) {
    json gammas = json::array();
    for (int h = 0; h < spec.lags; ++h)
      gammas.push_back(matrix_json(pm.c_blocks[i].middleRows(h * spec.variables, spec.variables).transpose()));
    inds.push_back(json{{"name", data.individual_names[i]},
                        {"rank", spec.ranks[i]},
                        {"Pi", matrix_json(pm.pis[i])},
                        {"Gamma", gammas},
                        {"Phi", matrix_json(pm.c_blocks[i].bottomRows(spec.deterministic).transpose())}});
  }
  double nu = 0.0, tau = 0.0;
  for (const auto& d : chain.draws) {
    nu += d.nu;
    tau += d.tau;
  }
  const double m = static_cast<double>(chain.size());
  return json{{"individuals", inds}, {"Sigma", matrix_json(pm.sigma)}, {"nu", nu / m}, {"tau", tau / m}, {"rho", pm.rho}};
}

std::string loglik_csv(const ChainStore& chain) {
  std::string out = "draw,loglik\n";
  for (std::size_t s = 0; s < chain.loglik.size(); ++s) out += std::to_string(s + 1) + "," + format_number(chain.loglik[s]) + "\n";
  return out;
}

struct Fitted {
  Loaded in;
  ChainStore chain;
};

Fitted fit_once(const RunConfig& rc, const CommandContext& ctx) {
  Fitted f{load(rc, rc.lags), {}};
  f.chain = run_chain(f.in.data, f.in.spec, f.in.prior, rc.chain, progress_for(ctx, "chain"));
  return f;
}

void write_fit_common(OutputDir& out, const RunConfig& rc, const Fitted& f, const CommandContext& ctx, json extra) {
  json m = manifest(rc);
  m["data"] = data_json(f.in.data, f.in.scaling);
  m["draws"] = f.chain.size();
  m["warmup"] = f.chain.warmup_boundary;
  m["rho_acceptance_rate"] = f.chain.rho_acceptance_rate;
  m["events"] = events_json(f.chain, ctx);
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  out.write_json("manifest.json", m);
  out.write("summary.csv", summary_csv_header() + summary_csv(summarize_chain(f.chain, f.in.spec)));
}

}  // namespace

int cmd_fit(const RunConfig& rc, const CommandContext& ctx) {
  const Fitted f = fit_once(rc, ctx);
  OutputDir out(rc.output);
  write_fit_common(out, rc, f, ctx, json::object());
  out.write_json("posterior_mean.json", posterior_mean_json(f.chain, f.in.spec, f.in.data));
  out.write("loglik.csv", loglik_csv(f.chain));
  out.commit();
  return kOk;
}

int cmd_fevd(const RunConfig& rc, const CommandContext& ctx) {
  const Fitted f = fit_once(rc, ctx);
  const PanelSpec& spec = f.in.spec;
  const PanelData& data = f.in.data;
  const Bands bands = fevd_bands(f.chain, spec, rc.horizon);
  OutputDir out(rc.output);
  write_fit_common(out, rc, f, ctx, json{{"horizon", rc.horizon}});
  std::string all = "individual,variable,shock,horizon,lower,mean,upper\n";
  json j = json::array();
  for (int i = 0; i < spec.individuals; ++i) {
    std::string one = "variable,shock,horizon,lower,mean,upper\n";
    json shares = json::array();
    for (int h = 1; h <= rc.horizon; ++h) {
      const Matrix& lo = bands.lower[i][h - 1];
      const Matrix& me = bands.mean[i][h - 1];
      const Matrix& hi = bands.upper[i][h - 1];
      for (int v = 0; v < spec.variables; ++v)
        for (int s = 0; s < spec.variables; ++s) {
          const std::string row = data.variable_names[v] + "," + data.variable_names[s] + "," + std::to_string(h) +
                                  "," + format_number(lo(v, s)) + "," + format_number(me(v, s)) + "," +
                                  format_number(hi(v, s)) + "\n";
          one += row;
          all += data.individual_names[i] + "," + row;
        }
      shares.push_back(json{{"horizon", h}, {"lower", matrix_json(lo)}, {"mean", matrix_json(me)}, {"upper", matrix_json(hi)}});
    }
    out.write("fevd_" + data.individual_names[i] + ".csv", one);
    j.push_back(json{{"individual", data.individual_names[i]}, {"variables", data.variable_names}, {"shares", shares}});
  }
  out.write("fevd.csv", all);
  out.write_json("fevd.json", json{{"horizon", rc.horizon}, {"mass", 0.95}, {"individuals", j}});
  out.commit();
  return kOk;
}

int cmd_diagnose(const RunConfig& rc, const CommandContext& ctx) {
  const Fitted f = fit_once(rc, ctx);
  RandomSource rng(rc.analytics_seed);
  const DiagnosticsReport rep = diagnostics(f.chain, f.in.data, f.in.spec, rng);
  double min_ess = 0.0, max_mcse = 0.0;
  std::string worst;
  for (std::size_t k = 0; k < rep.parameters.size(); ++k) {
    const auto& p = rep.parameters[k];
    if (k == 0 || p.ess < min_ess) {
      min_ess = p.ess;
      worst = p.name;
    }
    max_mcse = std::max(max_mcse, p.mcse);
  }
  const InformationCriteria ic = information_criteria(f.chain, f.in.data, f.in.spec);
  OutputDir out(rc.output);
  write_fit_common(out, rc, f, ctx, json::object());
  out.write_json("diagnostics.json",
                 json{{"ppp", rep.ppp},
                      {"r_squared", {{"mean", mean_of(rep.r2_draws)},
                                     {"q2.5", quantile(rep.r2_draws, 0.025)},
                                     {"q97.5", quantile(rep.r2_draws, 0.975)}}},
                      {"loglik", {{"mean", mean_of(rep.loglik_draws)}, {"at_posterior_mean", ic.loglik_at_mean}}},
                      {"min_ess", min_ess},
                      {"min_ess_parameter", worst},
                      {"max_mcse", max_mcse},
                      {"draws", f.chain.size()}});
  out.write("loglik.csv", loglik_csv(f.chain));
  out.commit();
  return kOk;
}

int cmd_criteria(const RunConfig& rc, const CommandContext& ctx) {
  json scaling;
  const PanelData data = load_data(rc, scaling);
  std::string table = "lags,loglik_at_mean,mean_loglik,p_d,dic,lppd,p_waic,waic,parameters,bic,aic,error\n";
  std::string summary = summary_csv_header();
  json rows = json::array();
  json events = json::array();
  for (int lags : rc.lag_list) {
    json row{{"lags", lags}};
    try {
      const PanelSpec spec = PanelSpec::from_data(data, lags, broadcast_ranks(rc.ranks, data.individuals()));
      validate_against(rc, spec);
      const PanelArrays arrays = prepare_arrays(data, spec);
      const ChainStore chain =
          run_chain(arrays, spec, prior_for(rc, spec), rc.chain, progress_for(ctx, "L=" + std::to_string(lags)));
      for (const auto& e : chain.events) events.push_back("L=" + std::to_string(lags) + ": " + e);
      const InformationCriteria ic = information_criteria(chain, arrays, spec);
      row.update(json{{"loglik_at_mean", ic.loglik_at_mean}, {"mean_loglik", ic.mean_loglik}, {"p_d", ic.p_d},
                      {"dic", ic.dic}, {"lppd", ic.lppd}, {"p_waic", ic.p_waic}, {"waic", ic.waic},
                      {"parameters", ic.parameter_count}, {"bic", ic.bic}, {"aic", ic.aic}});
      table += std::to_string(lags);
      for (double v : {ic.loglik_at_mean, ic.mean_loglik, ic.p_d, ic.dic, ic.lppd, ic.p_waic, ic.waic})
        table += "," + format_number(v);
      table += "," + std::to_string(ic.parameter_count) + "," + format_number(ic.bic) + "," + format_number(ic.aic) + ",\n";
      summary += summary_csv(summarize_chain(chain, spec), "L=" + std::to_string(lags) + "/");
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ConfigError) throw;
      row["error"] = e.what();
      table += std::to_string(lags) + ",,,,,,,,,,,\"" + std::string(e.what()) + "\"\n";
      warn(ctx, "L=" + std::to_string(lags) + ": " + e.what());
    }
    rows.push_back(row);
  }
  OutputDir out(rc.output);
  json m = manifest(rc);
  m["data"] = data_json(data, scaling);
  m["events"] = events;
  out.write_json("manifest.json", m);
  out.write("summary.csv", summary);
  out.write("criteria.csv", table);
  out.write_json("criteria.json", rows);
  out.commit();
  return kOk;
}

int cmd_rank(const RunConfig& rc, const CommandContext& ctx) {
  json scaling;
  const PanelData data = load_data(rc, scaling);
  for (int r : rc.rank_list) {
    PanelSpec probe = PanelSpec::from_data(data, rc.lags, std::vector<int>(data.individuals(), r));
    validate_against(rc, probe);
  }
  const PanelSpec base = PanelSpec::from_data(data, rc.lags, std::vector<int>(data.individuals(), 0));
  const std::vector<RankProfileRow> rows = rank_profile(data, rc.lags, prior_for(rc, base), rc.chain, rc.rank_list);
  std::string table = "rank,mean_loglik,loglik_at_mean,draws,error\n";
  std::string summary = summary_csv_header();
  json j = json::array();
  for (const auto& r : rows) {
    if (!r.error.empty()) warn(ctx, "rank " + std::to_string(r.rank) + ": " + r.error);
    table += std::to_string(r.rank) + "," + (r.error.empty() ? format_number(r.mean_loglik) : "") + "," +
             (r.error.empty() ? format_number(r.loglik_at_mean) : "") + "," + std::to_string(r.draws) + "," +
             (r.error.empty() ? "" : "\"" + r.error + "\"") + "\n";
    summary += summary_csv(r.summary, "r=" + std::to_string(r.rank) + "/");
    j.push_back(json{{"rank", r.rank}, {"mean_loglik", r.mean_loglik}, {"loglik_at_mean", r.loglik_at_mean},
                     {"draws", r.draws}, {"error", r.error}});
  }
  OutputDir out(rc.output);
  json m = manifest(rc);
  m["data"] = data_json(data, scaling);
  out.write_json("manifest.json", m);
  out.write("summary.csv", summary);
  out.write("rank_profile.csv", table);
  out.write_json("rank_profile.json", j);
  out.commit();
  return kOk;
}

namespace {

json truth_json(const VecmParams& truth, const PanelSpec& spec) {
  json inds = json::array();
  const auto derived = derive(truth, spec);
  for (int i = 0; i < spec.individuals; ++i) {
    json gammas = json::array();
    for (int h = 1; h <= spec.lags; ++h) gammas.push_back(matrix_json(gamma_of(truth.b, spec, i, h)));
    inds.push_back(json{{"rank", spec.ranks[i]},
                        {"alpha", matrix_json(derived[i].alpha)},
                        {"beta", matrix_json(derived[i].beta)},
                        {"Pi", matrix_json(derived[i].pi)},
                        {"Gamma", gammas},
                        {"Phi", matrix_json(phi_of(truth.b, spec, i))}});
  }
  return json{{"individuals", inds}, {"Sigma", matrix_json(truth.sigma)}, {"rho", truth.rho}};
}

json accuracy_json(const GroupAccuracy& g) {
  return json{{"coverage", g.coverage}, {"rmse", g.rmse},   {"mae", g.mae},
              {"avg_ci_length", g.avg_ci_length}, {"bias", g.bias}, {"entries", g.entries}};
}

void accuracy_rows(std::string& csv, const std::string& scenario, const std::string& replicate,
                   const AccuracyReport& rep) {
  for (const auto& [group, g] : {std::pair<const char*, const GroupAccuracy&>{"Gamma", rep.gamma},
                                 std::pair<const char*, const GroupAccuracy&>{"Pi", rep.pi}}) {
    for (const auto& [metric, value] : {std::pair<const char*, double>{"coverage", g.coverage},
                                        {"rmse", g.rmse},
                                        {"mae", g.mae},
                                        {"avg_ci_length", g.avg_ci_length},
                                        {"bias", g.bias}})
      csv += scenario + "," + replicate + "," + group + "," + metric + "," + format_number(value) + "\n";
  }
}

}  // namespace

int cmd_simulate(const RunConfig& rc, const CommandContext&) {
  const Scenario sc = make_scenario(rc.sim_scenario, rc.sim_seed);
  RandomSource rng(sc.seed);
  const PanelData data = simulate_panel(sc, rng);
  OutputDir out(rc.output);
  json m = manifest(rc);
  m["seed"] = rc.sim_seed;
  m["fixture_version"] = kFixtureVersion;
  m["scenario"] = sc.name;
  m["data"] = data_json(data, nullptr);
  out.write_json("manifest.json", m);
  write_panel_csv(out.file("panel.csv").string(), data);
  out.write_json("truth.json", truth_json(sc.truth, sc.spec));
  out.commit();
  return kOk;
}

int cmd_study(const RunConfig& rc, const CommandContext& ctx) {
  std::vector<Scenario> scenarios;
  RandomSource seeds(rc.study_seed);
  for (const auto& name : rc.scenarios)
    for (int r = 0; r < rc.replicates; ++r) scenarios.push_back(make_scenario(name, seeds.split()));
  {
    const PanelSpec probe = fixture_spec(100);
    validate_against(rc, probe);
  }
  if (ctx.log && ctx.verbose)
    *ctx.log << "study: " << scenarios.size() << " chains on " << rc.threads << " thread(s)\n";
  const std::vector<StudyRow> rows = run_study(scenarios, prior_for(rc, fixture_spec(100)), rc.chain, rc.threads);

  std::string csv = "scenario,replicate,group,metric,value\n";
  std::string summary = summary_csv_header();
  json per = json::array();
  json warnings = json::array();
  json pooled = json::object();
  for (std::size_t si = 0; si < rc.scenarios.size(); ++si) {
    const std::string& name = rc.scenarios[si];
    std::vector<GroupAccuracy> g, p;
    int failed = 0;
    for (int rep = 1; rep <= rc.replicates; ++rep) {
      const std::size_t k = si * static_cast<std::size_t>(rc.replicates) + static_cast<std::size_t>(rep - 1);
      json entry{{"scenario", name}, {"replicate", rep}, {"seed", scenarios[k].seed}, {"jitter_events", rows[k].jitter_events}};
      if (!rows[k].error.empty()) {
        ++failed;
        entry["error"] = rows[k].error;
        const std::string msg = name + " replicate " + std::to_string(rep) + ": " + rows[k].error;
        warnings.push_back(msg);
        warn(ctx, msg);
      } else {
        accuracy_rows(csv, name, std::to_string(rep), rows[k].report);
        summary += summary_csv(rows[k].summary, name + "/" + std::to_string(rep) + "/");
        g.push_back(rows[k].report.gamma);
        p.push_back(rows[k].report.pi);
        entry["Gamma"] = accuracy_json(rows[k].report.gamma);
        entry["Pi"] = accuracy_json(rows[k].report.pi);
      }
      if (rows[k].jitter_events > 0)
        warnings.push_back(name + " replicate " + std::to_string(rep) + ": " + std::to_string(rows[k].jitter_events) +
                           " jitter event(s)");
      per.push_back(entry);
    }
    if (!g.empty()) {
      const AccuracyReport pooled_rep{pool_accuracy(g), pool_accuracy(p)};
      if (rc.replicates > 1) accuracy_rows(csv, name, "pooled", pooled_rep);
      pooled[name] = json{{"Gamma", accuracy_json(pooled_rep.gamma)}, {"Pi", accuracy_json(pooled_rep.pi)},
                          {"replicates", g.size()}, {"failed", failed}};
    } else {
      pooled[name] = json{{"replicates", 0}, {"failed", failed}};
    }
  }
  OutputDir out(rc.output);
  json m = manifest(rc);
  m["seed"] = rc.study_seed;
  m["fixture_version"] = kFixtureVersion;
  m["warnings"] = warnings;
  out.write_json("manifest.json", m);
  out.write("summary.csv", summary);
  out.write("study.csv", csv);
  out.write_json("study.json", json{{"runs", per}, {"pooled", pooled}});
  out.commit();
  return kOk;
}

int run_command(const RunConfig& rc, const CommandContext& ctx) {
  if (rc.command == "fit") return cmd_fit(rc, ctx);
  if (rc.command == "simulate") return cmd_simulate(rc, ctx);
  if (rc.command == "study") return cmd_study(rc, ctx);
  if (rc.command == "fevd") return cmd_fevd(rc, ctx);
  if (rc.command == "diagnose") return cmd_diagnose(rc, ctx);
  if (rc.command == "rank-profile") return cmd_rank(rc, ctx);
  if (rc.command == "criteria") return cmd_criteria(rc, ctx);
  throw Error(ErrorKind::ConfigError, "command: unknown '" + rc.command + "'");
}

}  // namespace bcpanel::cli
