#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using semicl::cli_main;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("semicl_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Copy of a shipped scenario with one line replaced.
fs::path edited_scenario(const std::string& name, const std::string& key, const std::string& line, const fs::path& dir) {
  std::istringstream in(slurp(support::scenario(name)));
  std::ofstream out(dir / name);
  std::string l;
  while (std::getline(in, l)) out << (l.rfind(key + " ", 0) == 0 ? line : l) << "\n";
  return dir / name;
}

}  // namespace

TEST_CASE("missing scenario file exits 2 and names the path") {
  const Run r = run({"-s", "/nonexistent/none.scn", "bands"});
  CHECK(r.code == 2);
  CHECK(r.err.find("/nonexistent/none.scn") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({"-s", support::scenario("gap_1d.scn")}).code == 2);
  CHECK(run({"-s", support::scenario("gap_1d.scn"), "--bogus", "bands"}).code == 2);
  CHECK(run({"bands"}).code == 2);
  CHECK(run({"-s", support::scenario("gap_1d.scn"), "-j", "0", "bands"}).code == 2);
  CHECK(run({"-s", support::scenario("free_1d.scn"), "egorov", "--order", "3"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("bands writes the zone-edge gap of the weak cosine potential") {
  const fs::path dir = scratch("bands");
  const Run r = run({"-s", support::scenario("gap_1d.scn"), "-o", dir.string(), "bands"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("gap 1-2") != std::string::npos);
  std::istringstream csv(slurp(dir / "bands.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("s,k1,E1,E2", 0) == 0);
  double gap = std::numeric_limits<double>::infinity();
  while (std::getline(csv, line)) {
    std::vector<double> v;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
    gap = std::min(gap, v[3] - v[2]);
  }
  CHECK(std::abs(gap - 0.1) <= 0.05 * 0.1);
}

TEST_CASE("hofstadter writes Chern numbers that sum to zero") {
  const fs::path dir = scratch("hof");
  const Run r = run({"-s", support::scenario("hofstadter.scn"), "-o", dir.string(), "hofstadter"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "hofstadter.json"));
  REQUIRE(j["bands"].size() == 3);
  CHECK(j["bands"][0]["chern"] == 1);
  CHECK(j["bands"][1]["chern"] == -2);
  CHECK(j["bands"][2]["chern"] == 1);
  CHECK(j["chern_sum"] == 0);
}

TEST_CASE("closed gap exits 3") {
  const fs::path dir = scratch("gap");
  std::ofstream(dir / "empty.scn") << "dim 2\nbasis 1 0\nbasis 0 1\nbands_out 4\ngeometry_grid 8 8\n";
  const Run r = run({"-s", (dir / "empty.scn").string(), "-o", dir.string(), "geometry"});
  CHECK(r.code == 3);
  CHECK(r.err.find("gap closure") != std::string::npos);
}

TEST_CASE("convergence without evolution is inconclusive and exits 4") {
  const fs::path dir = scratch("inconclusive");
  const fs::path sc = edited_scenario("free_1d.scn", "t_final", "t_final 0", dir);
  const Run r = run({"-s", sc.string(), "-o", dir.string(), "converge"});
  CHECK(r.code == 4);
  const auto j = nlohmann::json::parse(slurp(dir / "converge.json"));
  CHECK(j["inconclusive"] == true);
}

TEST_CASE("outputs are deterministic") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const fs::path& d : {a, b}) {
    REQUIRE(run({"-s", support::scenario("free_1d.scn"), "-o", d.string(), "egorov", "--epsilon", "0.125"}).code == 0);
    REQUIRE(run({"-s", support::scenario("gap_1d.scn"), "-o", d.string(), "bands"}).code == 0);
  }
  CHECK(slurp(a / "egorov.json") == slurp(b / "egorov.json"));
  CHECK(slurp(a / "bands.csv") == slurp(b / "bands.csv"));
  CHECK(!slurp(a / "egorov.json").empty());
}

TEST_CASE("gauge check with a seed reports a vanishing curvature change") {
  const fs::path dir = scratch("gauge");
  const fs::path sc = edited_scenario("broken_2d.scn", "geometry_grid", "geometry_grid 8 8", dir);
  const Run r = run({"-s", sc.string(), "-o", dir.string(), "--seed", "7", "geometry", "--gauge-check"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "chern.json"));
  CHECK(j["gauge_check"]["max_curvature_change"].get<double>() < 1e-10);
  CHECK(j["chern"]["value"] == 0);
}
