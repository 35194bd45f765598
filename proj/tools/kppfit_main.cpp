// kppfit: simulate mixture-of-regressions data, run penalized KPP/EM fits,
// compare the exact and approximate pi updates, and emit diagnostics.

#include "kpp/data.hpp"
#include "kpp/diagnostics.hpp"
#include "kpp/io.hpp"
#include "kpp/solver.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace kpp;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::string data_path;
  long seed = -1;  // -1 means "no override"
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
  auto* c = cmd->add_option("--config", opts.config_path, "key=value configuration file");
  if (config_required) c->required();
  cmd->add_option("--out", opts.out_dir, "output directory (created if missing)");
  cmd->add_option("--data", opts.data_path, "input CSV path (overrides data.path)");
  cmd->add_option("--seed", opts.seed, "seed override for sim/init/solver sections");
}

KeyValueConfig load_config(const CommonOpts& opts) {
  KeyValueConfig cfg = opts.config_path.empty() ? KeyValueConfig()
                                                : KeyValueConfig::parse_file(opts.config_path);
  if (!opts.data_path.empty()) cfg.set("data.path", opts.data_path);
  if (opts.seed >= 0) {
    const std::string s = std::to_string(opts.seed);
    cfg.set("sim.seed", s);
    cfg.set("init.seed", s);
    cfg.set("solver.seed", s);
  }
  return cfg;
}

LoadedData load_data(const KeyValueConfig& cfg) {
  const std::string path = cfg.get_string("data.path");
  const std::string response = cfg.get_string("data.response", "y");
  const bool standardize = cfg.get_bool("data.standardize", true);
  LoadedData loaded = load_csv(path, response, standardize);
  if (loaded.transform.applied) {
    std::cout << "standardized covariates:";
    for (std::size_t j = 0; j < loaded.covariate_names.size(); ++j)
      std::cout << ' ' << loaded.covariate_names[j] << "(mean="
                << loaded.transform.mean(static_cast<Eigen::Index>(j))
                << ",sd=" << loaded.transform.scale(static_cast<Eigen::Index>(j)) << ')';
    std::cout << '\n';
  }
  return loaded;
}

fs::path prepare_out_dir(const CommonOpts& opts) {
  fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const Json& j) {
  write_text_file(path.string(), j.dump(2) + "\n");
}

int cmd_simulate(const CommonOpts& opts) {
  const KeyValueConfig cfg = load_config(opts);
  const SimSpec spec = sim_spec_from_config(cfg);  // validates before any output
  const Simulation sim = simulate(spec);

  std::vector<std::string> names;
  for (int j = 0; j < spec.P; ++j) names.push_back("x" + std::to_string(j + 1));
  const fs::path dir = prepare_out_dir(opts);
  write_text_file((dir / "data.csv").string(), dataset_to_csv(sim.data, "y", names));
  write_text_file((dir / "labels.csv").string(), labels_to_csv(sim.labels));
  write_json(dir / "truth.json", params_to_json(spec.true_params));
  std::cout << "wrote " << (dir / "data.csv").string() << " (" << spec.n << " rows)\n";
  return 0;
}

struct PreparedFit {
  LoadedData loaded;
  int K = 0;
  PenaltySpec penalty;
  InitStrategy init;
};

PreparedFit prepare_fit(const KeyValueConfig& cfg) {
  PreparedFit p;
  p.loaded = load_data(cfg);
  p.K = static_cast<int>(cfg.get_long("fit.k"));
  if (p.K < 1) throw ConfigError("fit.k must be >= 1");
  p.penalty = penalty_from_config(cfg, p.K, static_cast<int>(p.loaded.data.n()));
  p.init = init_from_config(cfg);
  return p;
}

void write_fit_outputs(const fs::path& dir, const std::string& tag, const FitResult& result,
                       const PreparedFit& p) {
  const std::string suffix = tag.empty() ? "" : "_" + tag;
  write_json(dir / ("params" + suffix + ".json"), params_to_json(result.params));
  write_text_file((dir / ("trace" + suffix + ".csv")).string(),
                  trace_to_csv(result.trace, result.params));
  write_json(dir / ("kkt" + suffix + ".json"),
             kkt_to_json(kkt_residual(result.params, p.penalty, p.loaded.data)));
  write_json(dir / ("ledger" + suffix + ".json"),
             ledger_to_json(audit_trace(result.trace, 1e-6)));
}

int cmd_fit(const CommonOpts& opts) {
  const KeyValueConfig cfg = load_config(opts);
  const PreparedFit p = prepare_fit(cfg);
  const SolverConfig solver = solver_from_config(cfg, "solver.");

  const FitResult result = fit(p.loaded.data, p.K, p.init, p.penalty, solver);
  const fs::path dir = prepare_out_dir(opts);
  write_fit_outputs(dir, "", result, p);
  std::cout << (result.converged ? "converged" : "max sweeps reached") << " after "
            << result.sweeps << " sweeps, objective "
            << penalized_loglik(result.params, p.penalty, p.loaded.data) << '\n';
  return 0;
}

int cmd_compare(const CommonOpts& opts) {
  const KeyValueConfig cfg = load_config(opts);
  const PreparedFit p = prepare_fit(cfg);
  if (!cfg.has_section("plain.") || !cfg.has_section("approx."))
    throw ConfigError("compare needs both a plain. and an approx. solver section");
  const SolverConfig plain_cfg = solver_from_config(cfg, "plain.");
  const SolverConfig approx_cfg = solver_from_config(cfg, "approx.");

  const FitResult plain = fit(p.loaded.data, p.K, p.init, p.penalty, plain_cfg);
  const FitResult approx = fit(p.loaded.data, p.K, p.init, p.penalty, approx_cfg);

  const fs::path dir = prepare_out_dir(opts);
  write_fit_outputs(dir, "plain", plain, p);
  write_fit_outputs(dir, "approx", approx, p);
  write_json(dir / "compare.json",
             comparison_to_json(compare_runs(plain, approx, p.penalty, p.loaded.data)));
  std::cout << "plain min_pi " << plain.params.pi.minCoeff() << ", approx min_pi "
            << approx.params.pi.minCoeff() << '\n';
  return 0;
}

int cmd_diagnose(const CommonOpts& opts, const std::string& params_path) {
  const KeyValueConfig cfg = load_config(opts);
  const LoadedData loaded = load_data(cfg);
  const MixtureParams params = load_params_json(params_path);
  const PenaltySpec penalty =
      penalty_from_config(cfg, params.k(), static_cast<int>(loaded.data.n()));
  const KktReport report = kkt_residual(params, penalty, loaded.data);
  const fs::path dir = prepare_out_dir(opts);
  write_json(dir / "kkt.json", kkt_to_json(report));
  std::cout << "max_residual " << report.max_residual << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"penalized mixture-of-regressions solver"};
  app.require_subcommand(1);

  CommonOpts sim_opts, fit_opts, cmp_opts, diag_opts;
  std::string params_path;

  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(sim_cmd, sim_opts, true);
  auto* fit_cmd = app.add_subcommand("fit", "run one penalized fit");
  add_common(fit_cmd, fit_opts, true);
  auto* cmp_cmd = app.add_subcommand("compare", "run plain vs approximate pi updates");
  add_common(cmp_cmd, cmp_opts, true);
  auto* diag_cmd = app.add_subcommand("diagnose", "stationarity residuals at a point");
  add_common(diag_cmd, diag_opts, false);
  diag_cmd->add_option("--params", params_path, "params.json to diagnose")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) return cmd_simulate(sim_opts);
    if (fit_cmd->parsed()) return cmd_fit(fit_opts);
    if (cmp_cmd->parsed()) return cmd_compare(cmp_opts);
    if (diag_cmd->parsed()) return cmd_diagnose(diag_opts, params_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
