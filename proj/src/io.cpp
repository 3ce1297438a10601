#include "crunch/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "crunch/error.hpp"

namespace crunch {

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc())
    throw Error(ErrKind::ConfigError, "double formatting failed");
  return std::string(buf, p);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrKind::ConfigError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrKind::ConfigError, "cannot write " + path);
  out << content;
  if (!out)
    throw Error(ErrKind::ConfigError, "short write to " + path);
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out =
      "t,a,dt,ham_sup,ham_l2,mom_sup,mom_l2,psi_sup,khat_sup,Psi_sup,"
      "det_dev,ginv_drift,lapse_iterations,lapse_residual,f_min,"
      "aux1,aux2,aux3\n";
  for (const StepRow& r : traj.rows) {
    out += format_double(r.t);
    for (double v : {r.a, r.dt, r.ham_sup, r.ham_l2, r.mom_sup, r.mom_l2,
                     r.psi_sup, r.khat_sup, r.Psi_sup, r.det_dev,
                     r.ginv_drift}) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    out += std::to_string(r.lapse_iterations);
    for (double v : {r.lapse_residual, r.f_min, r.aux1, r.aux2, r.aux3}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string background_csv(const FlrwBackground& bg) {
  std::string out = "t,a,a_prime\n";
  for (std::size_t i = 0; i < bg.t_grid.size(); ++i) {
    out += format_double(bg.t_grid[i]);
    out += ',';
    out += format_double(bg.a[i]);
    out += ',';
    out += format_double(bg.a_prime[i]);
    out += '\n';
  }
  return out;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[v & 0xf];
    v >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

}  // namespace

ManifestEntry manifest_entry(const std::string& dir, const std::string& name) {
  const std::string content =
      read_text_file((std::filesystem::path(dir) / name).string());
  return {name, content.size(), fnv1a(content)};
}

void write_manifest(const std::string& dir, std::uint64_t config_hash,
                    const std::vector<ManifestEntry>& entries) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["config_hash"] = hex64(config_hash);
  j["files"] = nlohmann::ordered_json::array();
  for (const ManifestEntry& e : entries) {
    j["files"].push_back({{"name", e.name},
                          {"bytes", e.bytes},
                          {"checksum", hex64(e.checksum)}});
  }
  write_text_file((std::filesystem::path(dir) / "manifest.json").string(),
                  j.dump(2) + "\n");
}

}  // namespace crunch
