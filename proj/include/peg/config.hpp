// Sectioned key-value experiment configuration: [game], [pursuer],
// [evader], [solver], [output]. Weight matrices accept either a single
// scalar s (meaning s*I) or nine row-major entries; x0 can be given
// directly or as the difference of z10 and z20.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "peg/capturability.hpp"
#include "peg/cpt.hpp"
#include "peg/equilibrium.hpp"
#include "peg/game_engine.hpp"

namespace peg {

struct SolverConfig {
  CoupledOptions coupled;  // damping, max_iter, tol, mode, newton_fallback
  ClosedLoopForm dynamics = ClosedLoopForm::controller;
  double y_tol = 1e-6;
  double y_cap_scale = 1e6;
  double dt = 1e-3;
  double horizon = 20.0;
  double capture_radius = 1e-3;
  std::optional<BoundPair> bounds;  // fixed (d, D); searched when unset
  std::uint64_t seed = 1;
};

struct OutputConfig {
  std::string report;  // run_solve target ("" = stdout)
  std::string csv;     // run_sweep target
  std::string traj;    // run_simulate target
};

struct ExperimentConfig {
  GameConfig game;
  CptParams pursuer = CptParams::rational(Role::pursuer);
  CptParams evader = CptParams::rational(Role::evader);
  SolverConfig solver;
  OutputConfig output;

  EngineOptions engine_options() const;
};

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
};

// Carries every violation found, one per line of what().
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what)
      : std::runtime_error(what) {}
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

}  // namespace peg
