#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "reports.hpp"

using nlohmann::json;
namespace rp = gibbskit::reports;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch() {
  const fs::path d = fs::temp_directory_path() / ("gibbskit_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

int cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = "cd '" + dir.string() + "' && '" GIBBSKIT_CLI_PATH "' " + args + " > cli.log 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(rp::format_number(0.1) == "0.10000000000000001");
  CHECK(rp::format_number(1.0) == "1");
  CHECK(rp::format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(rp::format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  const double x = 2.0 / 3.0;
  CHECK(std::stod(rp::format_number(x)) == x);
}

TEST_CASE("CSV emission") {
  const json p{{"columns", {"B_size", "cmi", "bound"}}, {"rows", {{1, 0.5, nullptr}, {2, 0.25, 1e-300}}}};
  CHECK(rp::csv_text(p) == "B_size,cmi,bound\n1,0.5,\n2,0.25,1e-300\n");
  const json c{{"columns", {"distance", "correlator"}}, {"rows", json::array()}, {"comment", "xi = 1.8"}};
  CHECK(rp::csv_text(c) == "distance,correlator\n# xi = 1.8\n");
  const json empty{{"columns", {"x", "y"}}, {"rows", json::array()}};
  CHECK(rp::csv_text(empty) == "x,y\n");
  const json ragged{{"columns", {"x", "y"}}, {"rows", {{1}}}};
  CHECK_THROWS(rp::csv_text(ragged));
}

TEST_CASE("digests") {
  CHECK(rp::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(rp::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const json a = json::parse(R"({"b": 1, "a": {"y": 2, "x": [1, 2]}})");
  const json b = json::parse(R"({"a": {"x": [1, 2], "y": 2}, "b": 1})");
  CHECK(rp::sha256_hex(rp::canonical_config(a)) == rp::sha256_hex(rp::canonical_config(b)));
}

TEST_CASE("atomic writes") {
  const fs::path d = scratch();
  const fs::path f = d / "out.json";
  rp::atomic_write(f.string(), "first");
  rp::atomic_write(f.string(), "second");
  CHECK(slurp(f) == "second");
  int files = 0;
  for (const auto& e : fs::directory_iterator(d)) files += e.path().filename().string().rfind("out.json", 0) == 0;
  CHECK(files == 1);
  CHECK_THROWS(rp::atomic_write((d / "missing" / "x.json").string(), "x"));
  fs::remove_all(d);
}

TEST_CASE("command-line runs") {
  const fs::path d = scratch();
  {
    std::ofstream(d / "tfim.json") << R"({"model": "tfim_chain", "N": 6})";
  }
  CHECK(cli("exact --config tfim.json --beta 1.0", d) == 0);
  const json r = json::parse(slurp(d / "result.json"));
  const json man = json::parse(slurp(d / "result.json.manifest.json"));
  CHECK(r["manifest"] == "result.json.manifest.json");
  CHECK(man["config_digest"] == r["config_digest"]);
  CHECK(rp::sha256_hex(rp::canonical_config(man["config"])) == man["config_digest"]);
  CHECK(man["exit_code"] == 0);

  // identical configs give identical data files
  const std::string first = slurp(d / "result.json");
  CHECK(cli("exact --config tfim.json --beta 1.0", d) == 0);
  CHECK(slurp(d / "result.json") == first);

  CHECK(cli("checks --config tfim.json --check cmi_decay --a 1 --b-sizes 1,2,3 --beta 0.5 --csv cmi.csv --out cmi.json", d) == 0);
  CHECK(slurp(d / "cmi.csv").rfind("B_size,cmi\n", 0) == 0);

  CHECK(cli("exact --config tfim.json", d) == 1);
  CHECK(slurp(d / "cli.log").find("'beta'") != std::string::npos);
  CHECK(cli("exact --model '{\"model\": \"tfim_chain\", \"N\": 20}' --beta 1", d) == 1);
  CHECK(slurp(d / "cli.log").find("dense cap") != std::string::npos);
  CHECK(cli("exact --model '{\"model\": \"random_chain\", \"N\": 4}' --beta 1", d) == 1);
  CHECK(cli("--seed 3 exact --model '{\"model\": \"random_chain\", \"N\": 4}' --beta 1 --out rnd.json", d) == 0);

  {
    std::ofstream(d / "battery.json") << R"({"checks": [
      {"name": "area", "model": {"model": "tfim_chain", "N": 6}, "params": {"check": "area_law", "A": [0, 1, 2], "beta": 1}},
      {"name": "trend", "operation": "stats", "model": {"model": "classical_ising", "N": 6, "h": 0.5},
       "params": {"kind": "ensemble", "beta": 0.3, "sizes": [6, 8], "family": {"model": "classical_ising", "h": 0.5}}}]})";
  }
  const int code = cli("battery --manifest battery.json", d);
  const json bat = json::parse(slurp(d / "battery.json"));
  CHECK(bat["entries"][0]["status"] == "PASS");
  const bool trend_ok = bat["entries"][1]["status"] == "PASS";
  CHECK(code == (trend_ok ? 0 : 2));
  fs::remove_all(d);
}
