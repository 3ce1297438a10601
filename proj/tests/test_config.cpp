#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "crunch/config.hpp"
#include "crunch/error.hpp"
#include "crunch/io.hpp"

using namespace crunch;

namespace {

bool has_error(const std::vector<ConfigIssue>& issues) {
  for (const auto& i : issues)
    if (i.error) return true;
  return false;
}

std::string messages(const std::vector<ConfigIssue>& issues) {
  std::string all;
  for (const auto& i : issues) all += i.message + "\n";
  return all;
}

}  // namespace

TEST_CASE("empty and minimal configs parse to the documented defaults") {
  std::vector<ConfigIssue> issues;
  const RunConfig d = parse_run_config("", &issues);
  CHECK(issues.empty());
  CHECK(d.schema == 1);
  CHECK(d.seed == 0);
  CHECK(d.rel_tol == 1e-12);
  CHECK(d.abs_tol == 1e-14);
  CHECK(d.a_min == 1e-6);
  CHECK(d.mode == "homogeneous");
  CHECK(d.dt_scale == 1e-3);
  CHECK(d.a_stop == 1e-3);
  CHECK(d.lambda_star == 0.1);
  CHECK(d.out_dir == "out");
  CHECK(d.store_every == 0);

  const RunConfig m = parse_run_config("[run]\nschema = 1\nseed = 7\n");
  CHECK(m.seed == 7);
}

TEST_CASE("full config round-trips every field") {
  const std::string text = R"(# full configuration
[run]
schema = 1
seed = 42

[background]
rel_tol = 1e-11
abs_tol = 1e-13
a_min = 1e-5

[geometry]
n_eta = 8
n_xi1 = 12
n_xi2 = 10
fd_order = 4

[evolution]
mode = "grid"
dt_scale = 5e-4
cfl = 0.25
a_stop = 0.5
lapse_tol = 1e-9
lapse_max_iter = 800

[data]
kappa = 0.01
kappa_cross = 0.005
g_log_diag = [0.01, -0.01, 0.005]
spatial_amplitude = 0.2
momentum_phi = true

[diagnostics]
lambda_star = 0.2
blowup_window = 0.02
growth_coeff = 0.3

[output]
dir = "runs/demo"
store_every = 25
)";
  std::vector<ConfigIssue> issues;
  const RunConfig c = parse_run_config(text, &issues);
  CHECK(issues.empty());
  CHECK(c.seed == 42);
  CHECK(c.rel_tol == 1e-11);
  CHECK(c.abs_tol == 1e-13);
  CHECK(c.a_min == 1e-5);
  CHECK(c.n_eta == 8);
  CHECK(c.n_xi1 == 12);
  CHECK(c.n_xi2 == 10);
  CHECK(c.fd_order == 4);
  CHECK(c.mode == "grid");
  CHECK(c.dt_scale == 5e-4);
  CHECK(c.cfl == 0.25);
  CHECK(c.a_stop == 0.5);
  CHECK(c.lapse_tol == 1e-9);
  CHECK(c.lapse_max_iter == 800);
  CHECK(c.kappa == 0.01);
  CHECK(c.kappa_cross == 0.005);
  CHECK(c.g_log_diag[0] == 0.01);
  CHECK(c.g_log_diag[1] == -0.01);
  CHECK(c.g_log_diag[2] == 0.005);
  CHECK(c.spatial_amplitude == 0.2);
  CHECK(c.momentum_phi);
  CHECK(c.lambda_star == 0.2);
  CHECK(c.blowup_window == 0.02);
  CHECK(c.growth_coeff == 0.3);
  CHECK(c.out_dir == "runs/demo");
  CHECK(c.store_every == 25);
}

TEST_CASE("unknown keys warn without failing, errors name their keys") {
  std::vector<ConfigIssue> issues;
  parse_run_config("[run]\nfuture_knob = 3\n[novel]\nx = 1\n", &issues);
  REQUIRE(issues.size() == 2);
  CHECK_FALSE(issues[0].error);
  CHECK(issues[0].message.find("run.future_knob") != std::string::npos);
  CHECK_FALSE(issues[1].error);
  CHECK(issues[1].message.find("novel.x") != std::string::npos);

  // stopping target below the background floor: one error naming both keys
  const std::string bad =
      "[evolution]\na_stop = 1e-8\n[background]\na_min = 1e-6\n";
  const auto found = validate_run_config(bad);
  REQUIRE(has_error(found));
  const std::string all = messages(found);
  CHECK(all.find("evolution.a_stop") != std::string::npos);
  CHECK(all.find("background.a_min") != std::string::npos);
  try {
    parse_run_config(bad);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.kind == ErrKind::ConfigError);
    CHECK(exit_code(e.kind) == 2);
  }
}

TEST_CASE("schema and value constraints are enforced") {
  CHECK_THROWS_AS(parse_run_config("[run]\nschema = 2\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[evolution]\ncfl = 0\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[evolution]\ndt_scale = -1e-3\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[background]\nrel_tol = 0\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[geometry]\nfd_order = 3\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[evolution]\nmode = \"static\"\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[diagnostics]\nlambda_star = 0\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[diagnostics]\ngrowth_coeff = -0.1\n"),
                  Error);

  // type and syntax violations
  CHECK_THROWS_AS(parse_run_config("[run]\nseed = \"abc\"\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[run]\nseed = 1.5\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[evolution]\nmode = 3\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[data]\ng_log_diag = [1, 2]\n"), Error);
  CHECK_THROWS_AS(parse_run_config("not a toml line\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[unterminated\nx = 1\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[run]\nseed = 1\nseed = 2\n"), Error);

  // validate_run_config reports instead of throwing
  CHECK(has_error(validate_run_config("[evolution]\ncfl = 0\n")));
  CHECK(has_error(validate_run_config("???")));
  CHECK_FALSE(has_error(validate_run_config("[run]\nseed = 3\n")));
}

TEST_CASE("comments, spacing and negative numbers parse") {
  const std::string text =
      "  [data]   # section\n"
      "kappa = -0.25   # trailing comment\n"
      "\n"
      "g_log_diag=[ 1e-2 ,2e-2,  -3e-2 ]\n";
  const RunConfig c = parse_run_config(text);
  CHECK(c.kappa == -0.25);
  CHECK(c.g_log_diag[2] == -3e-2);
}

TEST_CASE("module option mappings carry the configured values") {
  RunConfig rc;
  rc.mode = "grid";
  rc.dt_scale = 2e-3;
  rc.cfl = 0.3;
  rc.a_stop = 0.25;
  rc.store_every = 10;
  rc.lapse_tol = 1e-8;
  rc.lapse_max_iter = 123;
  const EvolveConfig ec = to_evolve_config(rc);
  CHECK(ec.mode == EvolveMode::Grid);
  CHECK(ec.dt_scale == 2e-3);
  CHECK(ec.cfl == 0.3);
  CHECK(ec.a_stop == 0.25);
  CHECK(ec.store_every == 10);
  CHECK(ec.lapse.tol == 1e-8);
  CHECK(ec.lapse.max_iter == 123);

  rc.mode = "homogeneous";
  CHECK(to_evolve_config(rc).mode == EvolveMode::Homogeneous);

  rc.kappa = 0.5;
  rc.kappa_cross = 0.25;
  rc.g_log_diag = {1.0, 2.0, 3.0};
  rc.spatial_amplitude = 0.125;
  rc.momentum_phi = true;
  const PerturbationSpec ps = to_perturbation_spec(rc);
  CHECK(ps.kappa == 0.5);
  CHECK(ps.kappa_cross == 0.25);
  CHECK(ps.g_log_diag[1] == 2.0);
  CHECK(ps.spatial_amplitude == 0.125);
  CHECK(ps.momentum_phi);
}

TEST_CASE("doubles print as shortest round-trip decimals") {
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.5e-3) == "-0.0025");
  CHECK(format_double(1e100) == "1e+100");
  // round-trip exactness on awkward values
  for (double v : {1.0 / 3.0, 6.198862886417172, 532.9586376588254, 1e-300}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("fnv1a matches the published test vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("csv and manifest writers are deterministic") {
  Trajectory traj;
  StepRow r1;
  r1.t = 0.0;
  r1.a = 1.0;
  r1.dt = 1e-3;
  r1.ham_sup = 1.25e-9;
  StepRow r2;
  r2.t = 1e-3;
  r2.a = 0.9999;
  r2.dt = 1e-3;
  r2.aux1 = 0.5;
  traj.rows = {r1, r2};

  const std::string csv = trajectory_csv(traj);
  CHECK(csv == trajectory_csv(traj));
  CHECK(csv.find("t,a,dt,ham_sup") == 0);
  CHECK(csv.find("1.25e-09\n") == std::string::npos);  // shortest form instead
  CHECK(csv.find("1.25e-09,") != std::string::npos);

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "crunch_io_test";
  fs::create_directories(dir);
  write_text_file((dir / "rows.csv").string(), csv);
  CHECK(read_text_file((dir / "rows.csv").string()) == csv);

  const ManifestEntry e = manifest_entry(dir.string(), "rows.csv");
  CHECK(e.name == "rows.csv");
  CHECK(e.bytes == csv.size());
  CHECK(e.checksum == fnv1a(csv));

  write_manifest(dir.string(), fnv1a("config"), {e});
  const std::string manifest = read_text_file((dir / "manifest.json").string());
  CHECK(manifest.find("rows.csv") != std::string::npos);
  CHECK(manifest.find("checksum") != std::string::npos);

  CHECK_THROWS_AS(read_text_file((dir / "absent.csv").string()), Error);
  fs::remove_all(dir);
}
