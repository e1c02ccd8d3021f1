// End-to-end checks of the command-line front end: spec handling, exit codes,
// determinism of outputs, and the JSON code-file path of klcheck.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const std::string kCli = QSENSOR_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

struct TempDir {
  std::string path;
  explicit TempDir(const std::string& name) : path("/tmp/qsensor_cli_test_" + name) {
    std::system(("rm -rf " + path + " && mkdir -p " + path).c_str());
  }
};

}  // namespace

TEST_CASE("print-defaults succeeds for every subcommand") {
  for (const char* cmd :
       {"trajectory", "master", "analytic", "fig2", "klcheck", "table1", "sensitivity"}) {
    CHECK(run(std::string(cmd) + " --print-defaults") == 0);
  }
}

TEST_CASE("malformed or unknown-key specs exit 1 with no partial outputs") {
  TempDir dir("bad");
  write_file(dir.path + "/bad.toml", "definitely_not_a_key = 1\n");
  CHECK(run("trajectory --spec " + dir.path + "/bad.toml --out " + dir.path + "/out") == 1);
  CHECK(run("master --spec /does/not/exist.toml --out " + dir.path + "/out") == 1);
  std::ifstream check(dir.path + "/out/trajectory.csv");
  CHECK_FALSE(check.good());
}

TEST_CASE("same spec and seed give byte-identical outputs") {
  TempDir dir("determinism");
  write_file(dir.path + "/t.toml",
             "[run]\nduration = 5.0\nn_traj = 200\nseed = 7\nrecord_step = 0.5\n"
             "[noise]\nalpha = 0.1\n[output]\ncsv = \"t.csv\"\n");
  REQUIRE(run("trajectory --spec " + dir.path + "/t.toml --out " + dir.path + "/a") == 0);
  REQUIRE(run("trajectory --spec " + dir.path + "/t.toml --out " + dir.path + "/b") == 0);
  CHECK(slurp(dir.path + "/a/t.csv") == slurp(dir.path + "/b/t.csv"));

  // a different seed changes the bytes
  REQUIRE(run("trajectory --spec " + dir.path + "/t.toml --seed 8 --out " + dir.path + "/c") ==
          0);
  CHECK(slurp(dir.path + "/a/t.csv") != slurp(dir.path + "/c/t.csv"));
}

TEST_CASE("fig2 emits the three-curve table at caption parameters") {
  TempDir dir("fig2");
  REQUIRE(run("fig2 --out " + dir.path) == 0);
  const std::string csv = slurp(dir.path + "/fig2.csv");
  CHECK(csv.find("t,p_exact,p_order2,p_order3") != std::string::npos);
  CHECK(csv.find("delay.tau = 0.2") != std::string::npos);
  CHECK(csv.find("delay.g = 0.2") != std::string::npos);
}

TEST_CASE("klcheck reads a JSON code file") {
  TempDir dir("klجson");
  // the {|up 0>, |down 1>} counterexample: diagonal condition fails
  write_file(dir.path + "/code.json",
             R"({"states": [[[1,0],[0,0],[0,0],[0,0]], [[0,0],[0,0],[0,0],[1,0]]],)"
             R"( "errors": {"b": 0.0}})");
  write_file(dir.path + "/spec.toml",
             "[input]\nfile = \"" + dir.path + "/code.json\"\n[output]\njson = \"r.json\"\n");
  REQUIRE(run("klcheck --spec " + dir.path + "/spec.toml --out " + dir.path) == 0);
  const std::string report = slurp(dir.path + "/r.json");
  CHECK(report.find("\"diagonal_ok\": false") != std::string::npos);
}

TEST_CASE("master subcommand rejects an unstable dt with exit 1") {
  TempDir dir("unstable");
  write_file(dir.path + "/m.toml", "[run]\ndt = 0.5\nduration = 2.0\n");
  CHECK(run("master --spec " + dir.path + "/m.toml --out " + dir.path) == 1);
}
