#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "kramers/io/trace_file.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the command-line tool with stderr discarded.
Run cli(const std::string& args) {
  const std::string cmd = std::string("'") + KRAMERS_CLI_PATH + "' " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("kramers-cli-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("convert prints the converted value") {
  const Run r = cli("convert 1530.74 nm THz");
  CHECK(r.code == 0);
  CHECK(r.out == "195.85\n");
  CHECK(cli("convert 9.7 GHz T --g 6.828").out == "0.1015\n");
  CHECK(cli("--format json convert 2.57 mT MHz --g 6.828").out.find("\"unit\":\"MHz\"") != std::string::npos);
  CHECK(cli("convert 1 parsec THz").code == 1);
}

TEST_CASE("usage errors exit with 64") {
  CHECK(cli("teleport").code == 64);
  CHECK(cli("convert 1 nm THz --bogus").code == 64);
  CHECK(cli("fit").code == 64);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("fit recovers the generator T2 from a noiseless trace") {
  const auto dir = scratch_dir("fit");
  {
    std::ofstream f(dir / "trace.csv");
    f << "tau_ns,echo_amplitude\n";
    for (int i = 0; i < 40; ++i) {
      const double tau = 20.0 + 40.0 * i;
      f << tau << ',' << kramers::io::format_number(0.8 * std::exp(-2 * tau / 720.0)) << "\n";
    }
  }
  const Run r = cli("fit exp_decay '" + (dir / "trace.csv").string() + "'");
  CHECK(r.code == 0);
  const auto pos = r.out.find("\nT2,");
  REQUIRE(pos != std::string::npos);
  const double t2 = std::stod(r.out.substr(pos + 4));
  CHECK(t2 == doctest::Approx(720e-9).epsilon(1e-8));
  const Run bad = cli("fit voigt '" + (dir / "trace.csv").string() + "'");
  CHECK(bad.code == 1);
}

TEST_CASE("models lists the registry") {
  const Run r = cli("models");
  CHECK(r.code == 0);
  CHECK(r.out.find("exp_decay_beat:") != std::string::npos);
  CHECK(r.out.find("eq4_t1:") != std::string::npos);
}

TEST_CASE("simulate writes a parseable trace") {
  const Run r = cli("--seed 3 simulate echo --noise 0.01");
  CHECK(r.code == 0);
  const auto t = kramers::io::parse_trace(r.out, kramers::io::TraceKind::Decay);
  CHECK(t.rows() > 10);
  CHECK(cli("--seed 3 simulate echo --noise 0.01").out == r.out);
  CHECK(cli("--seed 4 simulate echo --noise 0.01").out != r.out);
}

TEST_CASE("reproduce is byte-identical for a fixed timestamp") {
  const auto dir = scratch_dir("reproduce");
  const std::string stamp = "--timestamp 2020-01-01T00:00:00Z";
  const Run a = cli("--out '" + (dir / "a").string() + "' reproduce levels-illustrative " + stamp);
  const Run b = cli("--out '" + (dir / "b").string() + "' reproduce levels-illustrative " + stamp);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  const std::string ra = slurp(dir / "a" / "levels-illustrative" / "report.json");
  CHECK_FALSE(ra.empty());
  CHECK(ra == slurp(dir / "b" / "levels-illustrative" / "report.json"));
  CHECK(cli("reproduce no-such-scenario").code == 1);
}
