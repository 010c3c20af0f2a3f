#include "okpz/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#ifndef OKPZ_GIT_DESCRIBE
#define OKPZ_GIT_DESCRIBE "unknown"
#endif

namespace okpz {

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j{{"a", params.a},   {"b", params.b},     {"m", m},
                   {"dt", dt},        {"t_horizon", t_horizon}, {"seed", seed},
                   {"noise", noise_off ? "off" : "white"}};
  if (mollifier) {
    j["mollifier"] = {
        {"kind", mollifier->kind == MollifierKind::fejer ? "fejer" : "gaussian-periodic"},
        {"bandwidth", mollifier->bandwidth}};
  }
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.params.a = j.value("a", c.params.a);
    c.params.b = j.value("b", c.params.b);
    c.m = j.value("m", c.m);
    c.dt = j.value("dt", c.dt);
    c.t_horizon = j.value("t_horizon", c.t_horizon);
    c.seed = j.value("seed", c.seed);
    if (j.contains("noise")) {
      const auto mode = j.at("noise").get<std::string>();
      if (mode != "off" && mode != "white") throw Error("noise must be \"white\" or \"off\"");
      c.noise_off = mode == "off";
    }
    if (j.contains("mollifier") && !j.at("mollifier").is_null()) {
      const auto& mj = j.at("mollifier");
      MollifierSpec spec;
      const auto kind = mj.at("kind").get<std::string>();
      if (kind == "fejer") {
        spec.kind = MollifierKind::fejer;
      } else if (kind == "gaussian-periodic" || kind == "gaussian_periodic") {
        spec.kind = MollifierKind::gaussian_periodic;
      } else {
        throw Error("unknown mollifier kind '" + kind + "'");
      }
      spec.bandwidth = mj.at("bandwidth").get<double>();
      spec.validate();
      c.mollifier = spec;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad config: ") + e.what());
  }
  c.params.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("config " + path + " is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

void write_field_csv(const std::string& path, const SpatialField& field) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "x,value\n" << std::setprecision(17);
  for (std::size_t j = 0; j < field.size(); ++j) out << field.grid().x(j) << ',' << field[j] << '\n';
}

std::vector<double> read_field_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open field file " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("x,value", 0) != 0) throw Error("field file must start with header x,value");
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("malformed field row: " + line);
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  return values;
}

SpatialField read_field(const std::string& path, const GridSpec& grid) {
  return SpatialField(grid, read_field_values(path));
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 init failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

std::string git_describe() { return OKPZ_GIT_DESCRIBE; }

void write_manifest(const std::string& output, const nlohmann::json& config,
                    std::uint64_t seed, double wall_seconds) {
  nlohmann::json m{{"config", config},
                   {"git_describe", git_describe()},
                   {"seed", seed},
                   {"wall_seconds", wall_seconds},
                   {"outputs",
                    {{{"path", std::filesystem::path(output).filename().string()},
                      {"sha256", sha256_file(output)}}}}};
  std::ofstream out(output + ".manifest.json");
  if (!out) throw Error("cannot write manifest for " + output);
  out << m.dump(2) << '\n';
}

bool verify_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open manifest " + manifest_path);
  nlohmann::json m;
  in >> m;
  const auto dir = std::filesystem::path(manifest_path).parent_path();
  for (const auto& entry : m.at("outputs")) {
    const auto path = (dir / entry.at("path").get<std::string>()).string();
    if (sha256_file(path) != entry.at("sha256").get<std::string>()) return false;
  }
  return true;
}

}  // namespace okpz
