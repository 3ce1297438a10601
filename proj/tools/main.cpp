#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crunch/config.hpp"
#include "crunch/diag.hpp"
#include "crunch/error.hpp"
#include "crunch/evolve.hpp"
#include "crunch/flrw.hpp"
#include "crunch/frame.hpp"
#include "crunch/hopf.hpp"
#include "crunch/io.hpp"
#include "crunch/state.hpp"

// Command-line front end.  Subcommands: flrw, geometry-verify, evolve,
// diagnose, validate, run.  All artifacts land in one output directory
// (--out beats the S3CRUNCH_OUT environment variable beats output.dir from
// the config) and are listed in manifest.json with sizes and checksums.
// Exit codes: 0 ok, 1 runtime invariant violation, 2 configuration error,
// 3 numerical non-convergence.

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace crunch;

namespace {

struct CliArgs {
  std::string config_path;
  std::string out_dir;
  std::string mode;
  long long seed = -1;
  bool quiet = false;
};

struct Session {
  RunConfig rc;
  std::string out_dir;
  std::uint64_t config_hash = 0;
  bool quiet = false;

  void info(const std::string& line) const {
    if (!quiet) std::cout << line << "\n";
  }
};

Session make_session(const CliArgs& args) {
  Session s;
  std::string text;
  if (!args.config_path.empty()) text = read_text_file(args.config_path);
  std::vector<ConfigIssue> issues;
  s.rc = parse_run_config(text, &issues);
  for (const ConfigIssue& i : issues)
    std::cerr << (i.error ? "error: " : "warning: ") << i.message << "\n";
  s.config_hash = fnv1a(text);
  s.quiet = args.quiet;

  if (args.seed >= 0) s.rc.seed = static_cast<std::uint64_t>(args.seed);
  if (!args.mode.empty()) s.rc.mode = args.mode;

  s.out_dir = s.rc.out_dir;
  if (const char* env = std::getenv("S3CRUNCH_OUT"))
    if (*env) s.out_dir = env;
  if (!args.out_dir.empty()) s.out_dir = args.out_dir;
  return s;
}

FlrwBackground background_of(const RunConfig& rc) {
  return solve_scale_factor(rc.rel_tol, rc.abs_tol, rc.a_min);
}

// Lists every artifact under dir (sorted relative paths, manifest excluded).
void write_dir_manifest(const Session& s, const std::string& dir) {
  std::vector<std::string> names;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    names.push_back(rel);
  }
  std::sort(names.begin(), names.end());
  std::vector<ManifestEntry> entries;
  entries.reserve(names.size());
  for (const std::string& n : names) entries.push_back(manifest_entry(dir, n));
  write_manifest(dir, s.config_hash, entries);
}

void write_json(const std::string& path, const ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------- flrw ----

void cmd_flrw(const Session& s) {
  fs::create_directories(s.out_dir);
  const FlrwBackground bg = background_of(s.rc);
  const double tq = crunch_time_quadrature(s.rc.rel_tol);

  write_text_file((fs::path(s.out_dir) / "background.csv").string(),
                  background_csv(bg));
  ordered_json j;
  j["t_crunch"] = bg.t_crunch;
  j["t_crunch_quadrature"] = tq;
  j["difference"] = std::abs(bg.t_crunch - tq);
  j["max_first_integral_drift"] = bg.max_first_integral_drift;
  j["monotonicity_window"] = bg.monotonicity_window;
  j["nodes"] = bg.t_grid.size();
  write_json((fs::path(s.out_dir) / "flrw.json").string(), j);

  s.info("t_crunch = " + format_double(bg.t_crunch) + " (quadrature " +
         format_double(tq) + ", difference " +
         format_double(std::abs(bg.t_crunch - tq)) + ")");
}

// ----------------------------------------------------- geometry-verify ----

// Ambient linear map of one frame field (columns = images of the basis).
std::array<std::array<double, 4>, 4> frame_map(int a) {
  std::array<std::array<double, 4>, 4> m{};
  for (int i = 0; i < 4; ++i) {
    std::array<double, 4> e{};
    e[i] = 1.0;
    const std::array<double, 4> col = frame_vector(a, e);
    for (int r = 0; r < 4; ++r) m[r][i] = col[r];
  }
  return m;
}

double dot4(const std::array<double, 4>& u, const std::array<double, 4>& v) {
  return u[0] * v[0] + u[1] * v[1] + u[2] * v[2] + u[3] * v[3];
}

// Max FD commutator error of [Z_a, Z_b] f - (2/3) eps_abc Z_c f for the low
// harmonic f = (y0 y2 + y1 y3)/9, measured over a fixed interior window in
// eta.  Rows next to the chart axes see the 1/sin(eta), 1/cos(eta) factors
// of the frame's chart coefficients and converge one order lower; the
// interior window compares the same continuum region at every resolution.
double bracket_fd_error(const HopfGrid& g) {
  const std::size_t n = g.size();
  ScalarField f(n);
  std::array<ScalarField, 3> zf_exact;
  zf_exact.fill(ScalarField(n));
  for (int i = 0; i < g.n_eta; ++i)
    for (int j = 0; j < g.n_xi1; ++j)
      for (int k = 0; k < g.n_xi2; ++k) {
        const std::size_t id = g.idx(i, j, k);
        const auto y = embed(g.eta(i), g.xi1(j), g.xi2(k));
        f[id] = (y[0] * y[2] + y[1] * y[3]) / 9.0;
        for (int a = 0; a < 3; ++a) {
          const auto v = frame_vector(a, y);
          zf_exact[a][id] =
              (y[2] * v[0] + y[3] * v[1] + y[0] * v[2] + y[1] * v[3]) / 9.0;
        }
      }
  double err = 0.0;
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;  // eps_abc = +1
    const ScalarField za = apply_Z(g, a, f), zb = apply_Z(g, b, f);
    const ScalarField zab = apply_Z(g, a, zb), zba = apply_Z(g, b, za);
    for (int i = 0; i < g.n_eta; ++i) {
      if (g.eta(i) < 0.3 || g.eta(i) > std::numbers::pi / 2 - 0.3) continue;
      for (int j = 0; j < g.n_xi1; ++j)
        for (int k = 0; k < g.n_xi2; ++k) {
          const std::size_t id = g.idx(i, j, k);
          err = std::max(err, std::abs(zab[id] - zba[id] -
                                       (2.0 / 3.0) * zf_exact[c][id]));
        }
    }
  }
  return err;
}

void cmd_geometry_verify(const Session& s) {
  fs::create_directories(s.out_dir);
  const RunConfig& rc = s.rc;

  // orthonormality and bracket relations at random points, algebraically
  std::mt19937_64 rng(rc.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n_points = 20;
  double ortho_dev = 0.0, bracket_dev = 0.0;
  const auto maps = std::array{frame_map(0), frame_map(1), frame_map(2)};
  for (int p = 0; p < n_points; ++p) {
    const double eta = 0.05 + (std::numbers::pi / 2 - 0.1) * u01(rng);
    const double xi1 = 2.0 * std::numbers::pi * u01(rng);
    const double xi2 = 2.0 * std::numbers::pi * u01(rng);
    const auto y = embed(eta, xi1, xi2);
    std::array<std::array<double, 4>, 3> z;
    for (int a = 0; a < 3; ++a) z[a] = frame_vector(a, y);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        ortho_dev = std::max(
            std::abs(dot4(z[a], z[b]) - (a == b ? 1.0 : 0.0)), ortho_dev);
    // bracket of the linear fields: [Z_a, Z_b] y = (A_b A_a - A_a A_b) y
    for (int a = 0; a < 3; ++a) {
      const int b = (a + 1) % 3, c = (a + 2) % 3;
      for (int r = 0; r < 4; ++r) {
        double lhs = 0.0;
        for (int m = 0; m < 4; ++m)
          for (int q = 0; q < 4; ++q)
            lhs += (maps[b][r][m] * maps[a][m][q] -
                    maps[a][r][m] * maps[b][m][q]) *
                   y[q];
        bracket_dev =
            std::max(bracket_dev, std::abs(lhs - (2.0 / 3.0) * z[c][r]));
      }
    }
  }

  // discrete frame derivatives converge at the stencil order
  const HopfGrid coarse =
      make_hopf_grid(rc.n_eta, rc.n_xi1, rc.n_xi2, rc.fd_order);
  const HopfGrid fine =
      make_hopf_grid(2 * rc.n_eta, 2 * rc.n_xi1, 2 * rc.n_xi2, rc.fd_order);
  const double e_coarse = bracket_fd_error(coarse);
  const double e_fine = bracket_fd_error(fine);
  const double fd_order_fit = std::log2(e_coarse / e_fine);

  // curvature of the round metric, algebraic path
  const Curvature cur =
      curvature_frame(identity3(), identity3(), Ten3{}, Ten4{});
  const double scalar_dev = std::abs(cur.scalar - 2.0 / 3.0);
  Mat3 ric_ref = mzero3();
  for (int i = 0; i < 3; ++i) ric_ref[i][i] = 2.0 / 9.0;
  const double ric_dev = max_abs(cur.ric_sharp - ric_ref);

  const bool pass = ortho_dev <= 1e-12 && bracket_dev <= 1e-12 &&
                    scalar_dev <= 1e-12 && ric_dev <= 1e-12 &&
                    std::abs(fd_order_fit - rc.fd_order) <= 0.5;

  ordered_json j;
  j["points"] = n_points;
  j["orthonormality_dev"] = ortho_dev;
  j["bracket_dev"] = bracket_dev;
  j["fd_commutator_error_coarse"] = e_coarse;
  j["fd_commutator_error_fine"] = e_fine;
  j["fd_order_configured"] = rc.fd_order;
  j["fd_order_fitted"] = fd_order_fit;
  j["scalar_curvature_dev"] = scalar_dev;
  j["ricci_dev"] = ric_dev;
  j["pass"] = pass;
  write_json((fs::path(s.out_dir) / "geometry.json").string(), j);

  s.info("geometry: orthonormality " + format_double(ortho_dev) +
         ", brackets " + format_double(bracket_dev) + ", FD order " +
         format_double(fd_order_fit) + ", R dev " +
         format_double(scalar_dev));
  if (!pass)
    throw Error(ErrKind::InvariantViolation,
                "frame geometry verification failed; see geometry.json");
}

// -------------------------------------------------------------- evolve ----

Trajectory run_evolution(const Session& s, const FlrwBackground& bg) {
  const RunConfig& rc = s.rc;
  RescaledState initial =
      rc.mode == "grid"
          ? make_initial_data(
                to_perturbation_spec(rc), bg, 0.0,
                make_hopf_grid(rc.n_eta, rc.n_xi1, rc.n_xi2, rc.fd_order))
          : make_initial_data(to_perturbation_spec(rc), bg, 0.0);
  EvolveConfig ec = to_evolve_config(rc);
  const double lam = rc.lambda_star;
  ec.observer = [&bg, lam](const RescaledState& st, StepRow& row) {
    const EnergyReport er = energies(st, bg, 1, lam);
    row.aux1 = er.total;
    row.aux2 = er.metric;
    row.aux3 = er.scalar;
  };
  return evolve(ec, bg, initial);
}

void cmd_evolve(const Session& s) {
  fs::create_directories(fs::path(s.out_dir) / "states");
  const FlrwBackground bg = background_of(s.rc);
  const Trajectory traj = run_evolution(s, bg);

  write_text_file((fs::path(s.out_dir) / "rows.csv").string(),
                  trajectory_csv(traj));
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "state_%06zu.json", i);
    save_state(traj.states[i],
               (fs::path(s.out_dir) / "states" / name).string());
  }
  ordered_json j;
  j["stop_reason"] = traj.stop_reason;
  j["reached_a_stop"] = traj.reached_a_stop;
  j["steps"] = traj.rows.empty() ? 0 : traj.rows.size() - 1;
  j["stored_states"] = traj.states.size();
  j["t_final"] = traj.states.back().t;
  j["a_final"] = flrw_eval(bg, traj.states.back().t).a;
  write_json((fs::path(s.out_dir) / "run.json").string(), j);

  s.info("evolved " + std::to_string(traj.rows.size() - 1) + " steps to t = " +
         format_double(traj.states.back().t) + " (" + traj.stop_reason +
         "), stored " + std::to_string(traj.states.size()) + " states");
}

// ------------------------------------------------------------ diagnose ----

void cmd_diagnose(const Session& s, const std::string& dir_arg) {
  const std::string dir = dir_arg.empty() ? s.out_dir : dir_arg;
  const fs::path states_dir = fs::path(dir) / "states";
  if (!fs::is_directory(states_dir))
    throw Error(ErrKind::ConfigError,
                "no stored states under " + dir +
                    " (expected a states/ directory from `evolve`)");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(states_dir))
    if (entry.is_regular_file()) names.push_back(entry.path().string());
  std::sort(names.begin(), names.end());
  if (names.empty())
    throw Error(ErrKind::ConfigError, "no stored states under " + dir);

  Trajectory traj;
  for (const std::string& n : names) traj.states.push_back(load_state(n));

  const FlrwBackground bg = background_of(s.rc);
  std::vector<std::string> notes;

  ordered_json j;
  j["t_crunch"] = bg.t_crunch;

  try {
    j["blowup_exponent"] = blowup_exponent(traj, bg, s.rc.blowup_window);
  } catch (const Error& e) {
    j["blowup_exponent"] = nullptr;
    notes.push_back(std::string("blowup_exponent: ") + e.what());
  }

  bool have_limits = false;
  CrunchLimits lim;
  try {
    lim = crunch_limits(traj, bg);
    have_limits = true;
    j["psi_crunch"] = lim.psi_limit;
    ordered_json k = ordered_json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) k.push_back(lim.k_limit[r][c]);
    j["k_crunch_components"] = k;
  } catch (const Error& e) {
    j["psi_crunch"] = nullptr;
    j["k_crunch_components"] = nullptr;
    notes.push_back(std::string("crunch limits: ") + e.what());
  }

  j["limiting_constraint_residual"] =
      constraint_residuals(traj.states.back(), bg).ham_sup;

  const AffineBound ab = geodesic_affine_bound(bg, s.rc.growth_coeff);
  j["affine_bound"] = {{"growth_coeff", s.rc.growth_coeff},
                       {"value", ab.marginal ? ordered_json(nullptr)
                                             : ordered_json(ab.value)},
                       {"tail_exponent", ab.tail_exponent},
                       {"marginal", ab.marginal}};

  try {
    const MonotonicityReport mono =
        energy_monotonicity_monitor(traj, bg, s.rc.lambda_star);
    if (mono.defined) {
      j["monotonicity_exponent"] = mono.exponent;
      j["monotonicity_sup_sqrt_energy"] = mono.sup_sqrt;
    } else {
      j["monotonicity_exponent"] = nullptr;
      notes.push_back("monotonicity: zeroth energy vanishes (background run)");
    }
  } catch (const Error& e) {
    j["monotonicity_exponent"] = nullptr;
    notes.push_back(std::string("monotonicity: ") + e.what());
  }

  if (have_limits) {
    j["limits_detail"] = {{"k_trace", lim.k_trace},
                          {"closure_residual", lim.closure_residual},
                          {"extrapolation_error", lim.extrapolation_error},
                          {"rate_k", lim.rate_k},
                          {"rate_psi", lim.rate_psi}};
  }
  j["notes"] = notes;
  write_json((fs::path(dir) / "summary.json").string(), j);

  // per-state tail columns for plotting
  std::string csv = "t,a,ham_sup,invariant_sup,sqrt_energy,k_dev,psi_dev\n";
  for (const RescaledState& st : traj.states) {
    const FlrwSample bgs = flrw_eval(bg, st.t);
    const auto inv = curvature_invariant(st, bg);
    const double inv_sup = *std::max_element(inv.begin(), inv.end());
    const EnergyReport er = energies(st, bg, 1, s.rc.lambda_star);
    double k_dev = std::numeric_limits<double>::quiet_NaN();
    double psi_dev = std::numeric_limits<double>::quiet_NaN();
    if (have_limits && st.homogeneous) {
      // a k - K_limit in rescaled variables: a k = Khat - (a'/3) Id
      k_dev = max_abs(st.Khat[0] + (-bgs.a_prime / 3.0) * identity3() -
                      lim.k_limit);
      psi_dev = std::abs((1.0 + std::pow(bgs.a, 4.0 / 3.0) * st.psi[0]) *
                             (kSqrt23 + st.Psi[0]) -
                         lim.psi_limit);
    }
    for (double v : {st.t, bgs.a, constraint_residuals(st, bg).ham_sup,
                     inv_sup, std::sqrt(std::max(0.0, er.total)), k_dev,
                     psi_dev}) {
      csv += format_double(v);
      csv += ',';
    }
    csv.back() = '\n';
  }
  write_text_file((fs::path(dir) / "tail.csv").string(), csv);

  s.info("diagnostics written to " +
         (fs::path(dir) / "summary.json").string());
}

// ------------------------------------------------------------ validate ----

int cmd_validate(const std::string& config_path) {
  if (config_path.empty())
    throw Error(ErrKind::ConfigError, "validate needs --config PATH");
  const std::vector<ConfigIssue> issues =
      validate_run_config(read_text_file(config_path));
  bool any_error = false;
  for (const ConfigIssue& i : issues) {
    std::cerr << (i.error ? "error: " : "warning: ") << i.message << "\n";
    any_error = any_error || i.error;
  }
  if (!any_error) std::cout << "config ok (" << issues.size()
                            << " warning(s))\n";
  return any_error ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Collapsing Einstein-scalar-field simulator on the round 3-sphere"};
  CliArgs args;
  app.add_option("--config", args.config_path, "run configuration file");
  app.add_option("--out", args.out_dir, "output directory override");
  app.add_option("--seed", args.seed, "seed override");
  app.add_option("--mode", args.mode, "evolution mode override")
      ->check(CLI::IsMember({"homogeneous", "grid"}));
  app.add_flag("--quiet", args.quiet, "suppress progress output");

  auto* c_flrw = app.add_subcommand(
      "flrw", "solve the background collapse and cross-check t_crunch");
  auto* c_geom = app.add_subcommand(
      "geometry-verify", "frame orthonormality, brackets and curvature");
  auto* c_evolve =
      app.add_subcommand("evolve", "run the configured evolution");
  std::string diag_dir;
  auto* c_diag = app.add_subcommand(
      "diagnose", "summarize a finished trajectory directory");
  c_diag->add_option("dir", diag_dir,
                     "trajectory directory (default: the output dir)");
  auto* c_validate =
      app.add_subcommand("validate", "check a config file without running");
  auto* c_run = app.add_subcommand(
      "run", "full pipeline: flrw, verification, evolve, diagnose");
  app.require_subcommand(1);
  // Accept the shared options on either side of the subcommand name.
  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_validate->parsed()) return cmd_validate(args.config_path);
    const Session s = make_session(args);
    if (c_flrw->parsed()) {
      cmd_flrw(s);
    } else if (c_geom->parsed()) {
      cmd_geometry_verify(s);
    } else if (c_evolve->parsed()) {
      cmd_evolve(s);
    } else if (c_diag->parsed()) {
      cmd_diagnose(s, diag_dir);
      write_dir_manifest(s);
      return 0;
    } else if (c_run->parsed()) {
      cmd_flrw(s);
      if (s.rc.mode == "grid") cmd_geometry_verify(s);
      cmd_evolve(s);
      cmd_diagnose(s, "");
    }
    write_dir_manifest(s);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error (" << err_name(e.kind) << "): " << e.what() << "\n";
    return exit_code(e.kind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
