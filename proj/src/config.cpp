#include "crunch/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "crunch/error.hpp"
#include "crunch/io.hpp"

namespace crunch {

namespace {

// One parsed right-hand side; exactly one alternative is active.
struct TomlValue {
  enum class Kind { Integer, Float, Boolean, String, Array } kind;
  long long integer = 0;
  double number = 0.0;
  bool boolean = false;
  std::string text;
  std::vector<double> array;
  int line = 0;
};

void fail(int line, const std::string& what) {
  throw Error(ErrKind::ConfigError,
              "config line " + std::to_string(line) + ": " + what);
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Removes a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

bool valid_key(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

TomlValue parse_scalar(const std::string& tok, int line) {
  TomlValue v;
  v.line = line;
  if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"') {
    v.kind = TomlValue::Kind::String;
    v.text = tok.substr(1, tok.size() - 2);
    return v;
  }
  if (tok == "true" || tok == "false") {
    v.kind = TomlValue::Kind::Boolean;
    v.boolean = tok == "true";
    return v;
  }
  // integer if the whole token consumes as one, float otherwise
  {
    long long out = 0;
    auto [p, ec] =
        std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (ec == std::errc() && p == tok.data() + tok.size()) {
      v.kind = TomlValue::Kind::Integer;
      v.integer = out;
      v.number = static_cast<double>(out);
      return v;
    }
  }
  {
    double out = 0.0;
    auto [p, ec] =
        std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (ec == std::errc() && p == tok.data() + tok.size()) {
      v.kind = TomlValue::Kind::Float;
      v.number = out;
      return v;
    }
  }
  fail(line, "cannot parse value '" + tok + "'");
  return v;  // unreached
}

TomlValue parse_value(const std::string& tok, int line) {
  if (!tok.empty() && tok.front() == '[') {
    if (tok.back() != ']') fail(line, "unterminated array");
    TomlValue v;
    v.kind = TomlValue::Kind::Array;
    v.line = line;
    std::string inner = tok.substr(1, tok.size() - 2);
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const TomlValue e = parse_scalar(strip(item), line);
      if (e.kind != TomlValue::Kind::Integer &&
          e.kind != TomlValue::Kind::Float)
        fail(line, "arrays hold numbers only");
      v.array.push_back(e.number);
    }
    return v;
  }
  return parse_scalar(tok, line);
}

// text -> map of "section.key" -> value, in file order for the issue list
std::map<std::string, TomlValue> parse_toml(const std::string& text,
                                            std::vector<std::string>* order) {
  std::map<std::string, TomlValue> out;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = strip(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated section header");
      section = strip(s.substr(1, s.size() - 2));
      if (!valid_key(section)) fail(line, "invalid section name");
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = strip(s.substr(0, eq));
    if (!valid_key(key)) fail(line, "invalid key '" + key + "'");
    if (section.empty()) fail(line, "key outside any [section]");
    const std::string full = section + "." + key;
    if (out.count(full)) fail(line, "duplicate key " + full);
    out.emplace(full, parse_value(strip(s.substr(eq + 1)), line));
    if (order) order->push_back(full);
  }
  return out;
}

// Typed extraction helpers; each records consumption so leftovers become
// unknown-key warnings.
struct Extractor {
  const std::map<std::string, TomlValue>& kv;
  std::set<std::string> used;

  const TomlValue* find(const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    used.insert(key);
    return &it->second;
  }
  void get(const std::string& key, double& dst) {
    if (const TomlValue* v = find(key)) {
      if (v->kind != TomlValue::Kind::Integer &&
          v->kind != TomlValue::Kind::Float)
        fail(v->line, key + " must be a number");
      dst = v->number;
    }
  }
  void get(const std::string& key, int& dst) {
    if (const TomlValue* v = find(key)) {
      if (v->kind != TomlValue::Kind::Integer)
        fail(v->line, key + " must be an integer");
      dst = static_cast<int>(v->integer);
    }
  }
  void get(const std::string& key, std::uint64_t& dst) {
    if (const TomlValue* v = find(key)) {
      if (v->kind != TomlValue::Kind::Integer || v->integer < 0)
        fail(v->line, key + " must be a nonnegative integer");
      dst = static_cast<std::uint64_t>(v->integer);
    }
  }
  void get(const std::string& key, bool& dst) {
    if (const TomlValue* v = find(key)) {
      if (v->kind != TomlValue::Kind::Boolean)
        fail(v->line, key + " must be true or false");
      dst = v->boolean;
    }
  }
  void get(const std::string& key, std::string& dst) {
    if (const TomlValue* v = find(key)) {
      if (v->kind != TomlValue::Kind::String)
        fail(v->line, key + " must be a quoted string");
      dst = v->text;
    }
  }
  void get(const std::string& key, std::array<double, 3>& dst) {
    if (const TomlValue* v = find(key)) {
      if (v->kind != TomlValue::Kind::Array || v->array.size() != 3)
        fail(v->line, key + " must be an array of three numbers");
      std::copy(v->array.begin(), v->array.end(), dst.begin());
    }
  }
};

void require(bool ok, const std::string& message,
             std::vector<ConfigIssue>& issues) {
  if (!ok) issues.push_back({true, message});
}

RunConfig parse_impl(const std::string& text,
                     std::vector<ConfigIssue>& issues) {
  std::vector<std::string> order;
  const auto kv = parse_toml(text, &order);
  RunConfig rc;
  Extractor x{kv, {}};

  x.get("run.schema", rc.schema);
  x.get("run.seed", rc.seed);
  x.get("background.rel_tol", rc.rel_tol);
  x.get("background.abs_tol", rc.abs_tol);
  x.get("background.a_min", rc.a_min);
  x.get("geometry.n_eta", rc.n_eta);
  x.get("geometry.n_xi1", rc.n_xi1);
  x.get("geometry.n_xi2", rc.n_xi2);
  x.get("geometry.fd_order", rc.fd_order);
  x.get("evolution.mode", rc.mode);
  x.get("evolution.dt_scale", rc.dt_scale);
  x.get("evolution.cfl", rc.cfl);
  x.get("evolution.a_stop", rc.a_stop);
  x.get("evolution.lapse_tol", rc.lapse_tol);
  x.get("evolution.lapse_max_iter", rc.lapse_max_iter);
  x.get("data.kappa", rc.kappa);
  x.get("data.kappa_cross", rc.kappa_cross);
  x.get("data.g_log_diag", rc.g_log_diag);
  x.get("data.spatial_amplitude", rc.spatial_amplitude);
  x.get("data.momentum_phi", rc.momentum_phi);
  x.get("diagnostics.lambda_star", rc.lambda_star);
  x.get("diagnostics.blowup_window", rc.blowup_window);
  x.get("diagnostics.growth_coeff", rc.growth_coeff);
  x.get("output.dir", rc.out_dir);
  x.get("output.store_every", rc.store_every);

  for (const std::string& key : order)
    if (!x.used.count(key)) issues.push_back({false, "unknown key " + key});

  require(rc.schema == 1,
          "run.schema: unsupported version " + std::to_string(rc.schema),
          issues);
  require(rc.rel_tol > 0.0, "background.rel_tol must be positive", issues);
  require(rc.abs_tol > 0.0, "background.abs_tol must be positive", issues);
  require(rc.a_min > 0.0 && rc.a_min < 1.0,
          "background.a_min must lie in (0, 1)", issues);
  require(rc.fd_order == 2 || rc.fd_order == 4 || rc.fd_order == 6,
          "geometry.fd_order must be 2, 4 or 6", issues);
  require(rc.n_eta > 0 && rc.n_xi1 > 0 && rc.n_xi2 > 0,
          "geometry sizes must be positive", issues);
  require(rc.mode == "homogeneous" || rc.mode == "grid",
          "evolution.mode must be \"homogeneous\" or \"grid\"", issues);
  require(rc.dt_scale > 0.0, "evolution.dt_scale must be positive", issues);
  require(rc.cfl > 0.0, "evolution.cfl must be positive", issues);
  require(rc.a_stop > 0.0 && rc.a_stop < 1.0,
          "evolution.a_stop must lie in (0, 1)", issues);
  require(rc.a_stop >= rc.a_min,
          "evolution.a_stop lies below background.a_min: the background "
          "table would end before the run does",
          issues);
  require(rc.lapse_tol > 0.0, "evolution.lapse_tol must be positive", issues);
  require(rc.lapse_max_iter > 0, "evolution.lapse_max_iter must be positive",
          issues);
  require(rc.lambda_star > 0.0, "diagnostics.lambda_star must be positive",
          issues);
  require(rc.blowup_window > 0.0,
          "diagnostics.blowup_window must be positive", issues);
  require(rc.growth_coeff >= 0.0,
          "diagnostics.growth_coeff must be nonnegative", issues);
  require(rc.store_every >= 0, "output.store_every must be nonnegative",
          issues);
  return rc;
}

}  // namespace

RunConfig parse_run_config(const std::string& text,
                           std::vector<ConfigIssue>* issues) {
  std::vector<ConfigIssue> found;
  const RunConfig rc = parse_impl(text, found);
  if (issues)
    issues->insert(issues->end(), found.begin(), found.end());
  for (const ConfigIssue& i : found)
    if (i.error) throw Error(ErrKind::ConfigError, i.message);
  return rc;
}

RunConfig load_run_config(const std::string& path,
                          std::vector<ConfigIssue>* issues) {
  return parse_run_config(read_text_file(path), issues);
}

std::vector<ConfigIssue> validate_run_config(const std::string& text) {
  std::vector<ConfigIssue> found;
  try {
    parse_impl(text, found);
  } catch (const Error& e) {
    found.push_back({true, e.what()});
  }
  return found;
}

EvolveConfig to_evolve_config(const RunConfig& rc) {
  EvolveConfig ec;
  ec.mode = rc.mode == "grid" ? EvolveMode::Grid : EvolveMode::Homogeneous;
  ec.dt_scale = rc.dt_scale;
  ec.cfl = rc.cfl;
  ec.a_stop = rc.a_stop;
  ec.store_every = rc.store_every;
  ec.lapse.tol = rc.lapse_tol;
  ec.lapse.max_iter = rc.lapse_max_iter;
  return ec;
}

PerturbationSpec to_perturbation_spec(const RunConfig& rc) {
  PerturbationSpec ps;
  ps.kappa = rc.kappa;
  ps.kappa_cross = rc.kappa_cross;
  ps.g_log_diag = rc.g_log_diag;
  ps.spatial_amplitude = rc.spatial_amplitude;
  ps.momentum_phi = rc.momentum_phi;
  return ps;
}

}  // namespace crunch
