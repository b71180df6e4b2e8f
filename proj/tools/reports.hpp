#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace gibbskit::reports {

/// 17 significant digits; "nan", "inf" and "-inf" for non-finite values.
std::string format_number(double x);

/// CSV for a {"columns", "rows", "comment"?} plot object. null cells become
/// empty fields; the comment goes on a trailing "# " line.
std::string csv_text(const nlohmann::json& plot);

/// Write to a temporary file in the same directory, then rename over `path`.
void atomic_write(const std::string& path, const std::string& content);

std::string sha256_hex(const std::string& bytes);

/// The bytes the config digest is computed from: compact JSON with sorted keys.
std::string canonical_config(const nlohmann::json& config);

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::string config_digest;
  std::string version;
  double wall_time_ms = 0.0;
  nlohmann::json host;
  std::vector<std::string> outputs;
  int exit_code = 0;

  nlohmann::json to_json() const;
};

nlohmann::json host_summary();

}  // namespace gibbskit::reports
