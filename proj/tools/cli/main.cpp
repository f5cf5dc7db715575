#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "bcpanel/error.hpp"
#include "commands.hpp"
#include "config.hpp"

using bcpanel::Error;
using bcpanel::ErrorKind;
using namespace bcpanel::cli;

namespace {

void fail(const std::string& kind, std::string msg, int code) {
  if (msg.rfind(kind + ": ", 0) == 0) msg = msg.substr(kind.size() + 2);
  nlohmann::json err{{"error", {{"kind", kind}, {"message", msg}, {"exit_code", code}}}};
  std::cerr << err.dump() << "\n";
}

json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false, true);
  if (j.is_discarded()) throw Error(ErrorKind::ConfigError, "config: '" + path + "' is not valid JSON");
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian cointegrated panel VECM estimation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path, input, output, ranks;
  std::vector<std::string> overrides;
  int lags = -1, warmup = -1, iterations = -1, threads = -1, horizon = -1;
  long long seed = -1;
  bool scale = false, verbose = false;

  const char* commands[][2] = {
      {"fit", "Run the Gibbs sampler and summarize the posterior"},
      {"simulate", "Simulate a panel from a fixture scenario"},
      {"study", "Repeat the simulation-accuracy study"},
      {"fevd", "Posterior forecast error variance decomposition"},
      {"diagnose", "Convergence and fit diagnostics"},
      {"rank-profile", "Log-likelihood profile over cointegration ranks"},
      {"criteria", "DIC, WAIC, BIC and AIC over lag orders"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c[0], c[1]);
    sub->add_option("-c,--config", config_path, "JSON configuration file");
    sub->add_option("-i,--input", input, "Long-format panel CSV");
    sub->add_option("-o,--output", output, "Output directory");
    sub->add_option("--lags", lags, "Lag order L");
    sub->add_option("--ranks", ranks, "Cointegration ranks, comma separated or one value for all");
    sub->add_option("--seed", seed, "Chain seed (simulation/study seed for those commands)");
    sub->add_option("--warmup", warmup, "Warm-up iterations");
    sub->add_option("--iterations", iterations, "Retained iterations");
    sub->add_option("--threads", threads, "Worker threads for study");
    sub->add_option("--horizon", horizon, "FEVD horizon");
    sub->add_flag("--scale", scale, "Min-max scale each series to [1, 100]");
    sub->add_option("--set", overrides, "Override any key, e.g. --set prior.mu_nu=10");
    sub->add_flag("-v,--verbose", verbose, "Report chain progress on stderr");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    fail("ConfigError", e.what(), kConfig);
    return kConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    json tree = default_config();
    if (!config_path.empty()) merge_config(tree, read_config_file(config_path));
    if (const char* env = std::getenv("BCPANEL_OUTPUT_DIR"); env && *env) tree["output"] = env;
    if (const char* env = std::getenv("BCPANEL_THREADS"); env && *env) {
      try {
        tree["study"]["threads"] = std::stoi(env);
      } catch (const std::exception&) {
        throw Error(ErrorKind::ConfigError, "BCPANEL_THREADS: expected an integer");
      }
    }
    if (!input.empty()) tree["input"] = input;
    if (!output.empty()) tree["output"] = output;
    if (lags >= 0) tree["model"]["lags"] = lags;
    if (!ranks.empty()) apply_override(tree, "model.ranks=[" + ranks + "]");
    if (seed >= 0) {
      if (command == "simulate") {
        tree["simulate"]["seed"] = seed;
      } else if (command == "study") {
        tree["study"]["seed"] = seed;
      } else {
        tree["chain"]["seed"] = seed;
      }
    }
    if (warmup >= 0) tree["chain"]["warmup"] = warmup;
    if (iterations >= 0) tree["chain"]["iterations"] = iterations;
    if (threads >= 0) tree["study"]["threads"] = threads;
    if (horizon >= 0) tree["analytics"]["horizon"] = horizon;
    if (scale) tree["model"]["scale"] = true;
    for (const auto& o : overrides) apply_override(tree, o);

    const RunConfig rc = resolve(command, tree);
    CommandContext ctx{&std::cerr, verbose};
    const int code = run_command(rc, ctx);
    if (code == kOk) std::cout << rc.output << "\n";
    return code;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    fail(std::string(bcpanel::to_string(e.kind())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    fail("IoError", e.what(), kIo);
    return kIo;
  }
}
