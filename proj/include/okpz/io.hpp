#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "okpz/domain.hpp"

namespace okpz {

/// Experiment configuration shared by all subcommands.
struct RunConfig {
  BoundaryParams params;
  int m = 64;
  double dt = 1e-4;
  double t_horizon = 1.0;
  std::uint64_t seed = 1;
  std::optional<MollifierSpec> mollifier;
  bool noise_off = false;

  GridSpec grid() const { return GridSpec(m, dt, t_horizon, params); }
  NoisePlan plan() const { return {seed, mollifier, noise_off}; }
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

RunConfig load_config(const std::string& path);

void write_field_csv(const std::string& path, const SpatialField& field);
std::vector<double> read_field_values(const std::string& path);
SpatialField read_field(const std::string& path, const GridSpec& grid);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

/// Writes <output>.manifest.json next to the output file.
void write_manifest(const std::string& output, const nlohmann::json& config,
                    std::uint64_t seed, double wall_seconds);

/// Recomputes the digests a manifest lists and compares them.
bool verify_manifest(const std::string& manifest_path);

std::string git_describe();

}  // namespace okpz
