// Serialization layer behind the CLI: solve reports, sweep CSVs (including
// the built-in experiment presets), trajectory CSVs, and the quadrature
// printer. Everything here writes deterministic text for a given config
// and seed.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "peg/config.hpp"

namespace peg {

struct SweepSpec {
  std::string parameter;  // alpha1|beta1|gamma1|epsilon1|alpha2|...
  std::vector<double> values;
  std::string preset;  // fig4 .. fig15, or empty for a manual sweep

  void validate() const;  // throws std::domain_error listing violations
};

// Loads a built-in preset: overwrites the game matrices and initial state
// and returns the swept parameter with its value list. Throws
// std::domain_error for an unknown id.
SweepSpec sweep_preset(const std::string& id, ExperimentConfig* cfg);

struct SweepRow {
  std::string param;
  double value = 0.0;
  Scenario scenario = Scenario::Unclassified;
  double psi1 = 0.0;
  double psi2 = 0.0;
  bool cond_ok = false;
  bool captured = false;  // cond_ok and the simulated loop reached capture
  double final_dist = 0.0;
  double y_star = 0.0;
  std::string status;  // "ok" or the per-row failure reason
};

std::vector<SweepRow> sweep_rows(const ExperimentConfig& cfg,
                                 const SweepSpec& sweep);

// Exit codes: 0 for any completed run (capture and no-capture verdicts
// alike), 1 when a module error made the pipeline unusable; the report
// always carries a diagnostic section in that case.
int run_solve(const ExperimentConfig& cfg, std::ostream& report);

// Capturability subset of run_solve: equilibrium, condition table, verdict.
int run_check(const ExperimentConfig& cfg, std::ostream& report);

int run_sweep(const ExperimentConfig& cfg, const SweepSpec& sweep,
              std::ostream& csv);

// CSV `t,x1,x2,x3,dist,y` plus a one-line summary on `summary`.
int run_simulate(const ExperimentConfig& cfg, std::ostream& csv,
                 std::ostream& summary);

int run_chi(const CptParams& params, std::ostream& out);

// Reads back a `t,x1,x2,x3,dist,y` CSV produced by run_simulate; the
// written fields round-trip exactly (the loop matrix is not stored and is
// left empty). Throws std::runtime_error on malformed input.
Trajectory read_trajectory_csv(std::istream& in);

}  // namespace peg
