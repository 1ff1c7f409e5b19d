// Command-line front end: solve / check / simulate / sweep / chi.
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "peg/runner.hpp"

namespace {

struct SinkPair {
  std::unique_ptr<std::ofstream> file;
  std::ostream* stream = nullptr;
};

SinkPair open_sink(const std::string& path) {
  SinkPair sink;
  if (path.empty() || path == "-") {
    sink.stream = &std::cout;
    return sink;
  }
  sink.file = std::make_unique<std::ofstream>(path);
  if (!*sink.file) {
    throw std::runtime_error("cannot open output file: " + path);
  }
  sink.stream = sink.file.get();
  return sink;
}

struct CommonArgs {
  std::string config;
  std::string mode;
  std::string out;
  long long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("-c,--config", args->config, "experiment config file");
  cmd->add_option("--mode", args->mode, "square-root branch")
      ->check(CLI::IsMember({"corrected", "strict"}));
  cmd->add_option("-o,--out", args->out, "output file ('-' = stdout)");
  cmd->add_option("--seed", args->seed, "RNG seed override");
}

peg::ExperimentConfig load(const CommonArgs& args) {
  peg::ExperimentConfig cfg;
  if (!args.config.empty()) cfg = peg::parse_config(args.config);
  if (args.mode == "corrected") {
    cfg.solver.coupled.mode = peg::SqrtMode::corrected;
  } else if (args.mode == "strict") {
    cfg.solver.coupled.mode = peg::SqrtMode::strict;
  }
  if (args.seed >= 0) cfg.solver.seed = static_cast<std::uint64_t>(args.seed);
  return cfg;
}

std::vector<double> parse_value_list(const std::string& text) {
  std::string cleaned = text;
  for (char& c : cleaned) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream in(cleaned);
  std::vector<double> out;
  double x;
  while (in >> x) out.push_back(x);
  if (!in.eof()) {
    throw std::runtime_error("could not parse value list '" + text + "'");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Pursuit-evasion game solver with prospect-theoretic index "
      "uncertainty"};
  app.require_subcommand(1);

  CommonArgs solve_args, check_args, sim_args, sweep_args;

  CLI::App* solve = app.add_subcommand("solve", "full solve report");
  add_common(solve, &solve_args);

  CLI::App* check = app.add_subcommand("check", "capture-condition report");
  add_common(check, &check_args);

  CLI::App* sim = app.add_subcommand("simulate", "trajectory CSV");
  add_common(sim, &sim_args);
  double sim_dt = -1.0, sim_horizon = -1.0;
  std::string sim_dynamics, sim_traj;
  sim->add_option("--dt", sim_dt, "integration step");
  sim->add_option("--horizon", sim_horizon, "simulation horizon");
  sim->add_option("--dynamics", sim_dynamics, "closed-loop form")
      ->check(CLI::IsMember({"controller", "appendix-d"}));
  sim->add_option("--traj", sim_traj, "trajectory CSV file ('-' = stdout)");

  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep CSV");
  add_common(sweep, &sweep_args);
  std::string sweep_preset_id, sweep_param, sweep_values;
  sweep->add_option("--preset", sweep_preset_id,
                    "built-in experiment (fig4 .. fig15)");
  sweep->add_option("--param", sweep_param,
                    "swept parameter (alpha1, beta1, ..., epsilon2)");
  sweep->add_option("--values", sweep_values, "comma-separated value list");

  CLI::App* chi_cmd = app.add_subcommand("chi", "quadrature constants");
  double chi_alpha = 1.0, chi_beta = 1.0, chi_gamma = 1.0, chi_epsilon = 1.0;
  chi_cmd->add_option("--alpha", chi_alpha, "gain exponent");
  chi_cmd->add_option("--beta", chi_beta, "loss exponent");
  chi_cmd->add_option("--gamma", chi_gamma, "distortion exponent");
  chi_cmd->add_option("--epsilon", chi_epsilon, "loss multiplier");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      peg::ExperimentConfig cfg = load(solve_args);
      const std::string target =
          solve_args.out.empty() ? cfg.output.report : solve_args.out;
      SinkPair sink = open_sink(target);
      return peg::run_solve(cfg, *sink.stream);
    }
    if (check->parsed()) {
      peg::ExperimentConfig cfg = load(check_args);
      const std::string target =
          check_args.out.empty() ? cfg.output.report : check_args.out;
      SinkPair sink = open_sink(target);
      return peg::run_check(cfg, *sink.stream);
    }
    if (sim->parsed()) {
      peg::ExperimentConfig cfg = load(sim_args);
      if (sim_dt > 0.0) cfg.solver.dt = sim_dt;
      if (sim_horizon > 0.0) cfg.solver.horizon = sim_horizon;
      if (sim_dynamics == "controller") {
        cfg.solver.dynamics = peg::ClosedLoopForm::controller;
      } else if (sim_dynamics == "appendix-d") {
        cfg.solver.dynamics = peg::ClosedLoopForm::appendix_d;
      }
      const std::string target = !sim_traj.empty()   ? sim_traj
                                 : !sim_args.out.empty() ? sim_args.out
                                                         : cfg.output.traj;
      SinkPair sink = open_sink(target);
      return peg::run_simulate(cfg, *sink.stream, std::cout);
    }
    if (sweep->parsed()) {
      peg::ExperimentConfig cfg = load(sweep_args);
      peg::SweepSpec spec;
      if (!sweep_preset_id.empty()) {
        spec = peg::sweep_preset(sweep_preset_id, &cfg);
        if (!sweep_param.empty()) spec.parameter = sweep_param;
        if (!sweep_values.empty()) spec.values = parse_value_list(sweep_values);
      } else {
        if (sweep_param.empty() || sweep_values.empty()) {
          std::cerr << "sweep needs --preset or both --param and --values\n";
          return 1;
        }
        spec.parameter = sweep_param;
        spec.values = parse_value_list(sweep_values);
      }
      const std::string target =
          sweep_args.out.empty() ? cfg.output.csv : sweep_args.out;
      SinkPair sink = open_sink(target);
      return peg::run_sweep(cfg, spec, *sink.stream);
    }
    if (chi_cmd->parsed()) {
      peg::CptParams params;
      params.alpha = chi_alpha;
      params.beta = chi_beta;
      params.gamma = chi_gamma;
      params.epsilon = chi_epsilon;
      params.role = peg::Role::pursuer;
      params.validate();
      return peg::run_chi(params, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
