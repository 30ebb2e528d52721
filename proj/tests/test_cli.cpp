#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string err;
};

CliResult run(const std::string& args, const std::string& dir) {
  const std::string errfile = dir + "/stderr.txt";
  const std::string cmd =
      std::string(DYNHAZ_CLI_PATH) + " " + args + " >/dev/null 2>" + errfile;
  const int rc = std::system(cmd.c_str());
  CliResult res;
  res.code = WEXITSTATUS(rc);
  std::ifstream in(errfile);
  std::ostringstream ss;
  ss << in.rdbuf();
  res.err = ss.str();
  return res;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string make_workdir() {
  const fs::path dir = fs::temp_directory_path() / "dynhaz_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream csv(dir / "d3.csv");
  csv << "time,status\n1,1\n2,1\n3,1\n";
  return dir.string();
}

}  // namespace

TEST_CASE("estimate on the three-point file reproduces the hand value") {
  const auto dir = make_workdir();
  const auto res = run("estimate --input " + dir + "/d3.csv --family constant "
                       "--kernel uniform --bandwidth fixed:2 --grid 2 "
                       "--min-events 1 --output " + dir + "/curve", dir);
  REQUIRE(res.code == 0);
  const auto csv = slurp(dir + "/curve.csv");
  CHECK(csv.find("s,alpha_hat,h_used,se,band_lo,band_hi,theta_1,flag") !=
        std::string::npos);
  CHECK(csv.find("0.666666666667") != std::string::npos);
  CHECK(csv.find("# dynhaz") != std::string::npos);  // provenance header
  const auto prov = nlohmann::json::parse(slurp(dir + "/curve.json"));
  CHECK(prov.at("tool") == "dynhaz");
  CHECK(prov.at("config").at("family") == "constant");
}

TEST_CASE("validation lists every violation and exits 2") {
  const auto dir = make_workdir();
  const auto res = run("estimate --input " + dir + "/d3.csv --family nope "
                       "--bandwidth fixed:-1 --level 0.2 --output " + dir + "/x", dir);
  CHECK(res.code == 2);
  const auto err = nlohmann::json::parse(res.err);
  REQUIRE(err.contains("violations"));
  const auto& v = err.at("violations");
  bool family = false, bandwidth = false, level = false;
  for (const auto& item : v) {
    const std::string s = item.get<std::string>();
    family = family || s.find("unknown family") != std::string::npos;
    bandwidth = bandwidth || s.find("bandwidth") != std::string::npos;
    level = level || s.find("level must be 0.10 or 0.05") != std::string::npos;
  }
  CHECK(family);
  CHECK(bandwidth);
  CHECK(level);
}

TEST_CASE("complete valid config produces no violations") {
  const auto dir = make_workdir();
  const auto res = run("estimate --input " + dir + "/d3.csv --family constant "
                       "--kernel uniform --bandwidth fixed:2 --grid 2 "
                       "--min-events 1 --output " + dir + "/ok", dir);
  CHECK(res.code == 0);
  CHECK(res.err.empty());
}

TEST_CASE("config file values are overridden by flags") {
  const auto dir = make_workdir();
  {
    std::ofstream cfg(dir + "/cfg.json");
    cfg << R"({"family":"gompertz","kernel":"uniform","bandwidth":"fixed:2",
               "grid":"2","min-events":1})";
  }
  // family comes from the file, kernel overridden on the command line
  const auto res = run("estimate --input " + dir + "/d3.csv --config " + dir +
                       "/cfg.json --family constant --output " + dir + "/c", dir);
  REQUIRE(res.code == 0);
  const auto prov = nlohmann::json::parse(slurp(dir + "/c.json"));
  CHECK(prov.at("config").at("family") == "constant");   // flag wins
  CHECK(prov.at("config").at("bandwidth") == "fixed:2"); // file value used
}

TEST_CASE("inputs are never mutated") {
  const auto dir = make_workdir();
  const auto before = slurp(dir + "/d3.csv");
  run("estimate --input " + dir + "/d3.csv --family constant --kernel uniform "
      "--bandwidth fixed:2 --grid 2 --min-events 1 --output " + dir + "/m", dir);
  CHECK(slurp(dir + "/d3.csv") == before);
}

TEST_CASE("nelson-aalen estimator emits its own columns") {
  const auto dir = make_workdir();
  const auto res = run("estimate --input " + dir + "/d3.csv --estimator nelson-aalen "
                       "--kernel uniform --bandwidth fixed:2 --grid 2 --output " +
                       dir + "/na", dir);
  REQUIRE(res.code == 0);
  const auto csv = slurp(dir + "/na.csv");
  CHECK(csv.find("s,alpha_tilde,h") != std::string::npos);
  CHECK(csv.find("0.75") != std::string::npos);  // hand value at s=2, h=2
}

TEST_CASE("runtime failures exit 1 with a machine-readable record") {
  const auto dir = make_workdir();
  const auto res = run("estimate --input " + dir + "/nonexistent.csv "
                       "--family constant --output " + dir + "/x", dir);
  CHECK(res.code == 1);
  const auto err = nlohmann::json::parse(res.err);
  CHECK(err.contains("error"));
}

TEST_CASE("a polynomial kernel spec is accepted") {
  const auto dir = make_workdir();
  // epanechnikov written out as coefficients
  const auto res = run("estimate --input " + dir + "/d3.csv --family constant "
                       "--kernel poly:1.5,0,-6 --bandwidth fixed:2 --grid 2 "
                       "--min-events 1 --output " + dir + "/pk", dir);
  REQUIRE(res.code == 0);
  const auto named = run("estimate --input " + dir + "/d3.csv --family constant "
                         "--kernel epanechnikov --bandwidth fixed:2 --grid 2 "
                         "--min-events 1 --output " + dir + "/nk", dir);
  REQUIRE(named.code == 0);
  // identical estimates, kernels differ only in name
  auto strip_comments = [](std::string text) {
    std::string out;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line))
      if (!line.empty() && line[0] != '#') out += line + "\n";
    return out;
  };
  CHECK(strip_comments(slurp(dir + "/pk.csv")) ==
        strip_comments(slurp(dir + "/nk.csv")));
}

TEST_CASE("gof-scan emits the scan schema") {
  const auto dir = make_workdir();
  const std::string law =
      R"('{"truth":{"name":"constant","params":[1.0]},"horizon":3.0}')";
  const auto res = run("gof-scan --law " + law + " --n 600 --seed 2 "
                       "--family constant --kind ks --grid 1.5 --output " +
                       dir + "/scan", dir);
  REQUIRE(res.code == 0);
  const auto csv = slurp(dir + "/scan.csv");
  CHECK(csv.find("s,h_hat,statistic_at_stop,kind,level,sentinel_flag") !=
        std::string::npos);
}
