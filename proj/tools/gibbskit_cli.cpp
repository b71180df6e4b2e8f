// gibbskit command-line front end. Every number comes from the C API; this
// file only parses flags, assembles params and writes files.
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "gibbskit/gibbskit.h"
#include "reports.hpp"

namespace gibbskit {
void ensure_blas_kernel(char** argv);
}

using nlohmann::json;
namespace rp = gibbskit::reports;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFailed = 2;

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CliError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw CliError(what + " is not valid JSON: " + e.what());
  }
}

enum class Kind { Text, Value, List };

// A flag that lands in params[key].
struct Mapped {
  std::string flag, key;
  Kind kind;
  std::string help;
  std::string value;
};

json convert(const Mapped& m) {
  switch (m.kind) {
    case Kind::Text:
      return m.value;
    case Kind::Value:
      try {
        return json::parse(m.value);
      } catch (const json::exception&) {
        return m.value;
      }
    case Kind::List: {
      const std::string text = (!m.value.empty() && m.value.front() == '[') ? m.value : "[" + m.value + "]";
      return parse_json(text, "flag " + m.flag);
    }
  }
  return nullptr;
}

struct Common {
  std::string config, model_text, params_file, out = "result.json", csv;
  std::vector<std::string> sets;
  std::vector<Mapped> mapped;
};

void add_common(CLI::App* sub, Common& c, bool needs_model) {
  if (needs_model) {
    sub->add_option("--config", c.config, "model JSON, or {\"model\": {...}, \"params\": {...}}");
    sub->add_option("--model", c.model_text, "inline model JSON (overrides --config)");
  }
  sub->add_option("--params", c.params_file, "params JSON file");
  sub->add_option("--set", c.sets, "extra param as key=value (value parsed as JSON when possible)");
  sub->add_option("--out", c.out, "result path, '-' for stdout")->capture_default_str();
  sub->add_option("--csv", c.csv, "plot data CSV path");
}

void add_mapped(CLI::App* sub, Common& c, std::vector<Mapped> flags) {
  c.mapped = std::move(flags);
  for (auto& m : c.mapped) sub->add_option(m.flag, m.value, m.help);
}

struct Resolved {
  json model;
  json params = json::object();
};

Resolved resolve(const Common& c, const std::optional<long long>& seed) {
  Resolved r;
  if (!c.config.empty()) {
    json cfg = parse_json(read_file(c.config), c.config);
    if (cfg.is_object() && cfg.contains("model") && cfg["model"].is_object()) {
      r.model = cfg["model"];
      if (cfg.contains("params")) r.params = cfg["params"];
    } else {
      r.model = cfg;
    }
  }
  if (!c.model_text.empty()) r.model = parse_json(c.model_text, "--model");
  if (!c.params_file.empty()) r.params.update(parse_json(read_file(c.params_file), c.params_file));
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw CliError("--set expects key=value, got '" + s + "'");
    Mapped m{"--set", s.substr(0, eq), Kind::Value, "", s.substr(eq + 1)};
    r.params[m.key] = convert(m);
  }
  for (const auto& m : c.mapped)
    if (!m.value.empty()) r.params[m.key] = convert(m);
  if (!r.model.is_null()) {
    if (!r.model.is_object()) throw CliError("model must be a JSON object");
    const bool random = r.model.value("model", "") == "random_chain";
    if (seed && random) r.model["seed"] = *seed;
    if (random && !r.model.contains("seed")) throw CliError("random models need --seed (or a 'seed' key)");
  }
  return r;
}

std::string over_cap_hint(const std::string& message) {
  if (message.find("dense cap") == std::string::npos)
    return "hint: lower beta or loosen --epsilon so that a smaller series order suffices";
  return "hint: lower N so that d^N stays within the dense cap (" + std::to_string(gk_dense_cap()) +
         "), or raise it with --dense-cap / GIBBSKIT_DENSE_CAP";
}

// Runs one operation through the C API; throws CliError on failure.
json run_operation(const json& model, const std::string& op, const json& params) {
  gk_model* m = nullptr;
  gk_status st = gk_model_create(model.dump().c_str(), &m);
  if (st != GK_OK) throw CliError(std::string(gk_status_name(st)) + ": " + gk_last_error());
  char* out = nullptr;
  st = gk_run(m, op.c_str(), params.dump().c_str(), &out);
  gk_model_free(m);
  if (st != GK_OK) {
    std::string msg = std::string(gk_status_name(st)) + ": " + gk_last_error();
    if (st == GK_OVER_CAP) msg += "\n" + over_cap_hint(msg);
    throw CliError(msg);
  }
  json result = json::parse(out);
  gk_string_free(out);
  return result;
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

std::string manifest_path(const std::string& out) { return out == "-" ? "" : out + ".manifest.json"; }

void write_manifest(const std::string& path, rp::RunManifest m) {
  if (path.empty()) return;
  rp::atomic_write(path, m.to_json().dump(2) + "\n");
}

int run_single(const std::string& sub, const std::string& op, const Common& c, const std::optional<long long>& seed,
               const std::string& cmd) {
  const auto t0 = std::chrono::steady_clock::now();
  const Resolved r = resolve(c, seed);
  if (r.model.is_null()) throw CliError("no model given: use --config or --model");
  json params = r.params;
  if (op == "stats" && !params.contains("family")) {
    json fam = r.model;
    fam.erase("N");
    params["family"] = fam;
  }

  rp::RunManifest man;
  man.command = cmd;
  man.config = {{"subcommand", sub}, {"model", r.model}, {"params", params}};
  man.config_digest = rp::sha256_hex(rp::canonical_config(man.config));
  man.version = gk_version();
  man.host = rp::host_summary();
  const std::string mpath = manifest_path(c.out);

  json result;
  try {
    result = run_operation(r.model, op, params);
  } catch (...) {
    man.exit_code = kExitError;
    man.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(mpath, man);
    throw;
  }
  const bool failed = result.contains("all_pass") && result["all_pass"].is_boolean() && !result["all_pass"].get<bool>();

  const json doc{{"subcommand", sub},
                 {"config_digest", man.config_digest},
                 {"manifest", mpath.empty() ? json(nullptr) : json(std::filesystem::path(mpath).filename().string())},
                 {"result", result}};
  if (c.out == "-") {
    std::cout << doc.dump(2) << "\n";
  } else {
    rp::atomic_write(c.out, doc.dump(2) + "\n");
    man.outputs.push_back(c.out);
  }
  if (!c.csv.empty()) {
    if (!result.contains("plot")) throw CliError("this result carries no plot data for --csv");
    rp::atomic_write(c.csv, rp::csv_text(result["plot"]));
    man.outputs.push_back(c.csv);
  }
  man.exit_code = failed ? kExitFailed : kExitOk;
  man.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(mpath, man);
  if (c.out != "-") {
    const json& ap = result.contains("all_pass") ? result["all_pass"] : json(nullptr);
    std::cout << sub << ": all_pass=" << ap.dump() << " -> " << c.out << "\n";
  }
  return man.exit_code;
}

struct BatteryEntry {
  std::string name, operation;
  json model, params;
  std::string status = "ERROR";
  json result;
  std::string error;
};

int run_battery(const std::string& manifest_file, int jobs, const std::string& out,
                const std::optional<long long>& seed, const std::string& cmd) {
  const auto t0 = std::chrono::steady_clock::now();
  const json spec = parse_json(read_file(manifest_file), manifest_file);
  if (!spec.contains("checks") || !spec["checks"].is_array()) throw CliError("battery manifest needs a 'checks' array");
  std::vector<BatteryEntry> entries;
  for (std::size_t i = 0; i < spec["checks"].size(); ++i) {
    const json& e = spec["checks"][i];
    const std::string where = "checks[" + std::to_string(i) + "]";
    if (!e.contains("model") || !e["model"].is_object()) throw CliError(where + ".model must be an object");
    BatteryEntry b;
    b.name = e.value("name", where);
    b.operation = e.value("operation", "checks");
    b.model = e["model"];
    b.params = e.value("params", json::object());
    const bool random = b.model.value("model", "") == "random_chain";
    if (seed && random) b.model["seed"] = *seed;
    if (random && !b.model.contains("seed"))
      throw CliError(where + ": random models need --seed");
    entries.push_back(std::move(b));
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      auto& b = entries[i];
      try {
        b.result = run_operation(b.model, b.operation, b.params);
        const json& ap = b.result.contains("all_pass") ? b.result["all_pass"] : json(nullptr);
        b.status = ap.is_boolean() ? (ap.get<bool>() ? "PASS" : "FAIL") : "n/a";
      } catch (const std::exception& e) {
        b.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < std::max(1, jobs); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  bool any_error = false, any_fail = false;
  json rows = json::array();
  std::size_t width = 4;
  for (const auto& b : entries) width = std::max(width, b.name.size());
  for (const auto& b : entries) {
    any_error = any_error || b.status == "ERROR";
    any_fail = any_fail || b.status == "FAIL";
    json row{{"name", b.name}, {"operation", b.operation}, {"status", b.status}};
    if (b.status == "ERROR") row["error"] = b.error;
    else row["result"] = b.result;
    rows.push_back(row);
    std::cout << b.name << std::string(width + 2 - b.name.size(), ' ') << b.status;
    if (!b.error.empty()) std::cout << "  " << b.error;
    std::cout << "\n";
  }
  const int code = any_error ? kExitError : (any_fail ? kExitFailed : kExitOk);

  rp::RunManifest man;
  man.command = cmd;
  man.config = {{"subcommand", "battery"}, {"manifest", spec}};
  if (seed) man.config["seed"] = *seed;
  man.config_digest = rp::sha256_hex(rp::canonical_config(man.config));
  man.version = gk_version();
  man.host = rp::host_summary();
  man.host["jobs"] = jobs;
  const std::string mpath = manifest_path(out);
  const json doc{{"subcommand", "battery"},
                 {"config_digest", man.config_digest},
                 {"manifest", mpath.empty() ? json(nullptr) : json(std::filesystem::path(mpath).filename().string())},
                 {"entries", rows},
                 {"all_pass", !any_error && !any_fail}};
  if (out == "-") {
    std::cout << doc.dump(2) << "\n";
  } else {
    rp::atomic_write(out, doc.dump(2) + "\n");
    man.outputs.push_back(out);
  }
  man.exit_code = code;
  man.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(mpath, man);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  gibbskit::ensure_blas_kernel(argv);
  CLI::App app{"gibbskit: partition functions and thermal structure of local lattice Hamiltonians"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gk_version());
  std::optional<long long> seed;
  std::uint64_t cap = 0;
  app.add_option("--seed", seed, "seed for random models (required when a random model has none)");
  app.add_option("--dense-cap", cap, "largest dense dimension (default 2^14 or GIBBSKIT_DENSE_CAP)");

  struct Sub {
    std::string name, op, help;
    std::vector<Mapped> flags;
  };
  const Mapped beta{"--beta", "beta", Kind::Value, "inverse temperature", ""};
  const Mapped substeps{"--substeps", "substeps", Kind::Value, "QBP midpoint substeps", ""};
  const Mapped tol{"--tolerance", "tolerance", Kind::Value, "QBP Richardson tolerance", ""};
  const Mapped op{"--operator", "operator", Kind::Value, "term index or JSON term {support, pauli, coefficient}", ""};
  std::vector<Sub> subs{
      {"model", "summary", "describe a model", {}},
      {"exact", "exact", "exact Gibbs quantities", {beta, {"--regions", "regions", Kind::Value, "JSON list of regions", ""}}},
      {"logz",
       "logz",
       "log Z by exact, cluster or oned",
       {beta,
        {"--method", "method", Kind::Text, "exact | cluster | oned", ""},
        {"--epsilon", "epsilon", Kind::Value, "target error", ""},
        {"--order", "order", Kind::Value, "fixed series order (cluster)", ""},
        {"--l-star", "l_star", Kind::Value, "window radius (oned)", ""},
        {"--sweep", "sweep", Kind::List, "l* values to sweep (oned)", ""},
        substeps,
        tol}},
      {"locality",
       "locality",
       "transfer operators, commutator towers, Lieb-Robinson",
       {beta,
        op,
        {"--kind", "kind", Kind::Text, "transfer | tower | lieb_robinson", ""},
        {"--flavor", "flavor", Kind::Text, "restricted | localized", ""},
        {"--radii", "radii", Kind::List, "radii to sweep", ""},
        {"--M", "M", Kind::Value, "tower order", ""}}},
      {"qbp",
       "qbp",
       "quantum belief propagation operator",
       {beta, op, {"--radius", "radius", Kind::Value, "-1 for exact", ""}, {"--radii", "radii", Kind::List, "radii to sweep", ""}, substeps, tol}},
      {"stats",
       "stats",
       "concentration, Berry-Esseen, ensemble equivalence",
       {beta,
        {"--kind", "kind", Kind::Text, "concentration | berry_esseen | ensemble | berry_esseen_sweep", ""},
        {"--pauli", "pauli", Kind::Text, "single-site Pauli of the magnetization", ""},
        {"--Delta", "Delta", Kind::Value, "microcanonical window width", ""},
        {"--sizes", "sizes", Kind::List, "system sizes for sweeps", ""},
        {"--m-max", "m_max", Kind::Value, "largest even moment", ""}}},
      {"checks",
       "checks",
       "structural certificates",
       {beta,
        {"--check", "check", Kind::Text,
         "area_law | correlation_length | cmi_decay | local_indistinguishability | mean_force | effective_partition | commuting", ""},
        {"--A", "A", Kind::List, "region A", ""},
        {"--B", "B", Kind::List, "region B", ""},
        {"--C", "C", Kind::List, "region C", ""},
        {"--S", "S", Kind::List, "system region S", ""},
        {"--a", "a", Kind::Value, "size of A for chain sweeps", ""},
        {"--b-sizes", "b_sizes", Kind::List, "sizes of B for chain sweeps", ""},
        {"--l-list", "l_list", Kind::List, "radii", ""},
        {"--distances", "distances", Kind::List, "correlator distances", ""},
        {"--origin", "origin", Kind::Value, "first site of the correlator pairs", ""},
        {"--pauli", "pauli", Kind::Text, "single-site Pauli for correlators", ""},
        substeps,
        tol}},
  };

  std::vector<Common> commons(subs.size());
  std::vector<CLI::App*> apps;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    CLI::App* s = app.add_subcommand(subs[i].name, subs[i].help);
    add_common(s, commons[i], true);
    add_mapped(s, commons[i], subs[i].flags);
    apps.push_back(s);
  }
  std::string battery_manifest, battery_out = "battery.json";
  int jobs = 1;
  CLI::App* battery = app.add_subcommand("battery", "run a manifest of checks and print a pass/fail table");
  battery->add_option("--manifest", battery_manifest, "battery manifest JSON")->required();
  battery->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  battery->add_option("--out", battery_out, "aggregated result path")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }
  if (cap > 0) gk_set_dense_cap(cap);
  const std::string cmd = command_line(argc, argv);

  try {
    if (battery->parsed()) return run_battery(battery_manifest, jobs, battery_out, seed, cmd);
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (apps[i]->parsed()) return run_single(subs[i].name, subs[i].op, commons[i], seed, cmd);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
