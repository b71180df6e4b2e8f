#include "reports.hpp"

#include <sys/utsname.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <openssl/evp.h>

namespace gibbskit::reports {

using nlohmann::json;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_number()) return format_number(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::string csv_text(const json& plot) {
  if (!plot.is_object() || !plot.contains("columns")) throw std::invalid_argument("plot data has no columns");
  std::string out;
  const auto& cols = plot["columns"];
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i].get<std::string>();
  }
  out += '\n';
  if (plot.contains("rows"))
    for (const auto& row : plot["rows"]) {
      if (row.size() != cols.size()) throw std::invalid_argument("plot row width differs from the header");
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += cell(row[i]);
      }
      out += '\n';
    }
  if (plot.contains("comment")) out += "# " + plot["comment"].get<std::string>() + '\n';
  return out;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename into " + path + ": " + ec.message());
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

// nlohmann::json objects keep their keys sorted, so dump() is canonical.
std::string canonical_config(const json& config) { return config.dump(); }

json RunManifest::to_json() const {
  return {{"command", command},         {"config", config},           {"config_digest", config_digest},
          {"version", version},         {"wall_time_ms", wall_time_ms}, {"host", host},
          {"outputs", outputs},         {"exit_code", exit_code}};
}

json host_summary() {
  json h;
  utsname u{};
  if (::uname(&u) == 0) {
    h["system"] = u.sysname;
    h["release"] = u.release;
    h["machine"] = u.machine;
    h["node"] = u.nodename;
  }
  h["hardware_threads"] = std::thread::hardware_concurrency();
  return h;
}

}  // namespace gibbskit::reports
