#include "peg/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

namespace peg {

EngineOptions ExperimentConfig::engine_options() const {
  EngineOptions opt;
  opt.coupled = solver.coupled;
  opt.bounds = solver.bounds;
  opt.y_tol = solver.y_tol;
  opt.y_cap_scale = solver.y_cap_scale;
  opt.dt = solver.dt;
  opt.horizon = solver.horizon;
  opt.capture_radius = solver.capture_radius;
  return opt;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<double> parse_numbers(const std::string& value, int line_no) {
  std::string cleaned;
  for (char c : value) {
    cleaned += (c == ',' || c == '(' || c == ')' || c == '[' || c == ']' ||
                c == ';')
                   ? ' '
                   : c;
  }
  std::istringstream in(cleaned);
  std::vector<double> out;
  double x;
  while (in >> x) out.push_back(x);
  std::string rest;
  if (!(in >> rest) && in.eof() && !out.empty()) return out;
  throw ParseError(line_no, "expected a numeric value, got '" + value + "'");
}

double parse_scalar(const std::string& value, int line_no) {
  const auto nums = parse_numbers(value, line_no);
  if (nums.size() != 1) {
    throw ParseError(line_no, "expected a single number, got '" + value + "'");
  }
  return nums[0];
}

Matrix parse_weight(const std::string& value, int line_no) {
  const auto nums = parse_numbers(value, line_no);
  if (nums.size() == 1) return nums[0] * Matrix::Identity(3, 3);
  if (nums.size() == 9) {
    Matrix m(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m(i, j) = nums[3 * i + j];
    }
    return m;
  }
  throw ParseError(line_no,
                   "weight matrices take 1 (scalar * I) or 9 entries");
}

Vector parse_vec3(const std::string& value, int line_no) {
  const auto nums = parse_numbers(value, line_no);
  if (nums.size() != 3) throw ParseError(line_no, "expected 3 components");
  Vector v(3);
  v << nums[0], nums[1], nums[2];
  return v;
}

void apply_cpt_key(CptParams* p, const std::string& key,
                   const std::string& value, int line_no) {
  if (key == "alpha") {
    p->alpha = parse_scalar(value, line_no);
  } else if (key == "beta") {
    p->beta = parse_scalar(value, line_no);
  } else if (key == "gamma") {
    p->gamma = parse_scalar(value, line_no);
  } else if (key == "epsilon") {
    p->epsilon = parse_scalar(value, line_no);
  } else {
    throw ParseError(line_no, "unknown CPT key '" + key + "'");
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::optional<Vector> z10, z20, x0;
  std::optional<double> bound_d, bound_big_d;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (section != "game" && section != "pursuer" && section != "evader" &&
          section != "solver" && section != "output") {
        throw ParseError(line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(line_no, "expected 'key = value'");
    }
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError(line_no, "empty key or value");
    }
    if (section.empty()) {
      throw ParseError(line_no, "key '" + key + "' outside any section");
    }

    if (section == "game") {
      if (key == "q") {
        cfg.game.q = parse_scalar(value, line_no);
      } else if (key == "q_r" || key == "qr") {
        cfg.game.q_r = parse_weight(value, line_no);
      } else if (key == "r") {
        cfg.game.r = parse_weight(value, line_no);
      } else if (key == "pi") {
        cfg.game.pi = parse_weight(value, line_no);
      } else if (key == "x0") {
        x0 = parse_vec3(value, line_no);
      } else if (key == "z10") {
        z10 = parse_vec3(value, line_no);
      } else if (key == "z20") {
        z20 = parse_vec3(value, line_no);
      } else {
        throw ParseError(line_no, "unknown [game] key '" + key + "'");
      }
    } else if (section == "pursuer") {
      apply_cpt_key(&cfg.pursuer, key, value, line_no);
    } else if (section == "evader") {
      apply_cpt_key(&cfg.evader, key, value, line_no);
    } else if (section == "solver") {
      if (key == "tol") {
        cfg.solver.coupled.tol = parse_scalar(value, line_no);
      } else if (key == "damping") {
        cfg.solver.coupled.damping = parse_scalar(value, line_no);
      } else if (key == "max_iter") {
        cfg.solver.coupled.max_iter =
            static_cast<int>(parse_scalar(value, line_no));
      } else if (key == "mode") {
        const std::string m = lower(value);
        if (m == "corrected") {
          cfg.solver.coupled.mode = SqrtMode::corrected;
        } else if (m == "strict") {
          cfg.solver.coupled.mode = SqrtMode::strict;
        } else {
          throw ParseError(line_no, "mode must be corrected or strict");
        }
      } else if (key == "dynamics") {
        const std::string m = lower(value);
        if (m == "controller") {
          cfg.solver.dynamics = ClosedLoopForm::controller;
        } else if (m == "appendix-d" || m == "appendix_d") {
          cfg.solver.dynamics = ClosedLoopForm::appendix_d;
        } else {
          throw ParseError(line_no, "dynamics must be controller or appendix-d");
        }
      } else if (key == "y_tol") {
        cfg.solver.y_tol = parse_scalar(value, line_no);
      } else if (key == "y_cap_scale") {
        cfg.solver.y_cap_scale = parse_scalar(value, line_no);
      } else if (key == "dt") {
        cfg.solver.dt = parse_scalar(value, line_no);
      } else if (key == "horizon") {
        cfg.solver.horizon = parse_scalar(value, line_no);
      } else if (key == "capture_radius") {
        cfg.solver.capture_radius = parse_scalar(value, line_no);
      } else if (key == "d") {
        bound_d = parse_scalar(value, line_no);
      } else if (key == "big_d" || key == "d_upper") {
        bound_big_d = parse_scalar(value, line_no);
      } else if (key == "seed") {
        cfg.solver.seed =
            static_cast<std::uint64_t>(parse_scalar(value, line_no));
      } else {
        throw ParseError(line_no, "unknown [solver] key '" + key + "'");
      }
    } else if (section == "output") {
      if (key == "report") {
        cfg.output.report = value;
      } else if (key == "csv") {
        cfg.output.csv = value;
      } else if (key == "traj") {
        cfg.output.traj = value;
      } else {
        throw ParseError(line_no, "unknown [output] key '" + key + "'");
      }
    }
  }

  std::ostringstream bad;
  if (x0) {
    cfg.game.x0 = *x0;
    if (z10 || z20) {
      bad << "x0 conflicts with z10/z20: give one or the other\n";
    }
  } else if (z10 && z20) {
    cfg.game.x0 = *z10 - *z20;
  } else if (z10 || z20) {
    bad << "z10 and z20 must be given together\n";
  }
  if (bound_d || bound_big_d) {
    if (!(bound_d && bound_big_d)) {
      bad << "bounds d and big_d must be given together\n";
    } else if (*bound_d < 0.0 || *bound_big_d < *bound_d) {
      bad << "bounds require 0 <= d <= big_d\n";
    } else {
      cfg.solver.bounds = BoundPair{*bound_d, *bound_big_d};
    }
  }

  try {
    cfg.game.validate();
  } catch (const std::domain_error& e) {
    bad << e.what() << "\n";
  }
  try {
    cfg.pursuer.validate();
  } catch (const std::domain_error& e) {
    bad << "pursuer: " << e.what() << "\n";
  }
  try {
    cfg.evader.validate();
  } catch (const std::domain_error& e) {
    bad << "evader: " << e.what() << "\n";
  }
  if (!(cfg.solver.coupled.damping > 0.0 && cfg.solver.coupled.damping <= 1.0)) {
    bad << "solver damping must lie in (0, 1]\n";
  }
  if (cfg.solver.coupled.max_iter < 1) bad << "solver max_iter must be >= 1\n";
  if (!(cfg.solver.coupled.tol > 0.0)) bad << "solver tol must be > 0\n";
  if (!(cfg.solver.dt > 0.0)) bad << "solver dt must be > 0\n";
  if (!(cfg.solver.horizon >= cfg.solver.dt)) {
    bad << "solver horizon must be >= dt\n";
  }
  if (!(cfg.solver.capture_radius > 0.0)) {
    bad << "solver capture_radius must be > 0\n";
  }
  if (!bad.str().empty()) throw ValidationError(bad.str());
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace peg
