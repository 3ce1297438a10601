#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "crunch/evolve.hpp"

// Run configuration: a small TOML subset (sections, scalar keys, flat numeric
// arrays, # comments) with a versioned schema key, parsed into one flat
// struct.  Unknown keys produce warnings so configs written against newer
// schemas still load; malformed syntax, type mismatches and failed
// cross-field checks are hard errors.

namespace crunch {

// One finding from schema or cross-field checking.  Errors block a run,
// warnings do not.
struct ConfigIssue {
  bool error = false;
  std::string message;
};

struct RunConfig {
  // [run]
  int schema = 1;
  std::uint64_t seed = 0;

  // [background]
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
  double a_min = 1e-6;

  // [geometry]
  int n_eta = 16, n_xi1 = 16, n_xi2 = 16;
  int fd_order = 2;

  // [evolution]
  std::string mode = "homogeneous";  // "homogeneous" or "grid"
  double dt_scale = 1e-3;
  double cfl = 0.4;
  double a_stop = 1e-3;
  double lapse_tol = 1e-10;
  int lapse_max_iter = 5000;

  // [data]
  double kappa = 0.0;
  double kappa_cross = 0.0;
  std::array<double, 3> g_log_diag{0.0, 0.0, 0.0};
  double spatial_amplitude = 0.0;
  bool momentum_phi = false;

  // [diagnostics]
  double lambda_star = 0.1;
  double blowup_window = 5e-2;  // scale-factor window for the blowup fit
  double growth_coeff = 0.0;    // affine-bound growth coefficient

  // [output]
  std::string out_dir = "out";
  int store_every = 0;  // full-state cadence in steps (0 = final state only)
};

// Parses config text, appending findings to `issues` when given.  Throws
// ConfigError carrying the first error if any check fails.
RunConfig parse_run_config(const std::string& text,
                           std::vector<ConfigIssue>* issues = nullptr);

// File variant; throws ConfigError when the file cannot be read.
RunConfig load_run_config(const std::string& path,
                          std::vector<ConfigIssue>* issues = nullptr);

// Collects every finding without throwing (the `validate` subcommand).
std::vector<ConfigIssue> validate_run_config(const std::string& text);

// Mappings into the module-level option structs.
EvolveConfig to_evolve_config(const RunConfig& rc);
PerturbationSpec to_perturbation_spec(const RunConfig& rc);

}  // namespace crunch
