#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crunch/evolve.hpp"

// Bit-stable output formats.  Numbers are printed as the shortest decimal
// that round-trips the exact double, rows follow storage order, and nothing
// time- or environment-dependent is ever written, so rerunning a seeded
// configuration reproduces every artifact byte for byte.

namespace crunch {

// Shortest round-trip decimal representation of v.
std::string format_double(double v);

// FNV-1a 64-bit hash; used for config hashes and manifest checksums.
std::uint64_t fnv1a(const std::string& bytes);

// Whole-file text IO; both throw ConfigError on filesystem failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Per-step rows as CSV with a fixed column set (the StepRow fields in
// declaration order).
std::string trajectory_csv(const Trajectory& traj);

// Background table as CSV (t, a, a_prime).
std::string background_csv(const FlrwBackground& bg);

struct ManifestEntry {
  std::string name;
  std::uint64_t bytes = 0;
  std::uint64_t checksum = 0;
};

// Size and checksum of dir/name as a manifest row.
ManifestEntry manifest_entry(const std::string& dir, const std::string& name);

// Writes dir/manifest.json: schema tag, config hash, and one entry per
// artifact with size and checksum.
void write_manifest(const std::string& dir, std::uint64_t config_hash,
                    const std::vector<ManifestEntry>& entries);

}  // namespace crunch
