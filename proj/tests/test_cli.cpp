#include <doctest.h>
#include <sys/wait.h>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "svreg/autoparam.hpp"
#include "svreg/metrics.hpp"
#include "svreg/volume_io.hpp"

using namespace svreg;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "svreg_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs the CLI with stdout discarded and stderr captured to err.txt.
int run(const std::string& args) {
  const std::string cmd = std::string(SVREG_CLI_PATH) + " " + args + " > /dev/null 2> " +
                          (workdir() / "err.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string last_error() { return slurp(workdir() / "err.txt"); }

std::map<std::string, std::string> read_table(const fs::path& p, char sep) {
  std::map<std::string, std::string> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    const auto at = line.find(sep);
    if (at == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    out[trim(line.substr(0, at))] = trim(line.substr(at + 1));
  }
  return out;
}

double summary_value(const fs::path& dir, const std::string& key, const char* file = "summary.tsv") {
  return std::stod(read_table(dir / file, '\t').at(key));
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Shared 32^3 synthetic pair.
const fs::path& syn_dir() {
  static const fs::path dir = [] {
    auto d = workdir() / "syn";
    REQUIRE(run("synth --dims 32 --K 4 --amplitude 0.3 --seed 3 --out " + q(d)) == 0);
    return d;
  }();
  return dir;
}

std::string pair_flags() {
  return "--template " + q(syn_dir() / "m0.vol") + " --reference " + q(syn_dir() / "m1.vol") +
         " --interp linear --nt 4 --quiet";
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  CHECK(run("") == 2);
  CHECK(run("register --no-such-flag") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("register --template " + q(workdir() / "missing.vol") + " --reference " +
            q(workdir() / "missing.vol") + " --betav 1") == 2);
  CHECK(last_error().find("cannot open") != std::string::npos);
  CHECK(run("register " + pair_flags()) == 2);
  CHECK(last_error().find("--betav") != std::string::npos);
  CHECK(run("synth --dims 31 --out " + q(workdir() / "bad")) == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("synth is deterministic and integer labelled") {
  auto again = workdir() / "syn_again";
  REQUIRE(run("synth --dims 32 --K 4 --amplitude 0.3 --seed 3 --out " + q(again)) == 0);
  for (const char* f : {"m0.raw", "m1.raw", "labels0.raw", "labels1.raw", "velocity.raw", "manifest.txt"}) {
    CHECK_MESSAGE(slurp(syn_dir() / f) == slurp(again / f), f);
  }
  auto l0 = read_labels(syn_dir() / "labels0.vol");
  auto l1 = read_labels(syn_dir() / "labels1.vol");
  for (auto id : l1.distinct()) CHECK((id >= 0 && id <= 10));
  CHECK(dice_averages(l0, l1).average < 1);
}

TEST_CASE("register identical volumes takes no steps") {
  auto out = workdir() / "identity";
  REQUIRE(run("register --template " + q(syn_dir() / "m0.vol") + " --reference " + q(syn_dir() / "m0.vol") +
              " --betav 1e-2 --quiet --out " + q(out)) == 0);
  CHECK(summary_value(out, "gn_iterations") == 0);
  CHECK(summary_value(out, "relative_residual") == 0);
}

TEST_CASE("register, transport and metrics agree") {
  auto reg = workdir() / "reg";
  REQUIRE(run("register " + pair_flags() + " --betav 1e-2 --out " + q(reg)) == 0);
  for (const char* f : {"velocity.vol", "deformed.vol", "residual.vol", "jacobian.vol", "params.txt",
                        "diagnostics.tsv", "summary.tsv"}) {
    CHECK_MESSAGE(fs::exists(reg / f), f);
  }
  const double r = summary_value(reg, "relative_residual");
  CHECK(r < 1);

  auto tr = workdir() / "transport";
  REQUIRE(run("transport --velocity " + q(reg / "velocity.vol") + " --template " + q(syn_dir() / "m0.vol") +
              " --nt 4 --interp linear --quiet --out " + q(tr)) == 0);
  auto met = workdir() / "metrics";
  REQUIRE(run("metrics --template " + q(syn_dir() / "m0.vol") + " --reference " + q(syn_dir() / "m1.vol") +
              " --deformed " + q(tr / "deformed.vol") + " --quiet --out " + q(met)) == 0);
  CHECK(summary_value(met, "relative_residual", "metrics.tsv") == doctest::Approx(r).epsilon(1e-6));

  auto jac = read_scalar(reg / "jacobian.vol");
  CHECK(min_value(jac) == doctest::Approx(summary_value(reg, "j_min")).epsilon(1e-6));

  auto diag = slurp(reg / "diagnostics.tsv");
  CHECK(diag.find("iteration\tobjective\trelative_gradient\tpcg_iterations\tstep_length\tcfl") !=
        std::string::npos);
}

TEST_CASE("reproducible mode is bit-identical") {
  auto a = workdir() / "repro_a", b = workdir() / "repro_b";
  const std::string flags = "register " + pair_flags() + " --betav 1e-2 --betaw 1e-5 --reproducible --out ";
  REQUIRE(run(flags + q(a)) == 0);
  REQUIRE(run(flags + q(b)) == 0);
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    if (name == "params.txt") continue;  // records the output-independent inputs only
    CHECK_MESSAGE(slurp(entry.path()) == slurp(b / name), name.string());
  }
  CHECK(slurp(a / "params.txt") == slurp(b / "params.txt"));
}

TEST_CASE("search on identical images returns the floors") {
  auto out = workdir() / "search_same";
  REQUIRE(run("search --template " + q(syn_dir() / "m0.vol") + " --reference " + q(syn_dir() / "m0.vol") +
              " --nt 4 --interp linear --quiet --out " + q(out)) == 0);
  auto params = read_table(out / "params.txt", '=');
  CHECK(std::stod(params.at("betav")) == doctest::Approx(1e-5));
  CHECK(std::stod(params.at("betaw")) == doctest::Approx(1e-7));
}

TEST_CASE("an unreachable Jacobian bound is reported") {
  auto out = workdir() / "search_tight";
  const int rc = run("search " + pair_flags() + " --jbound 0.99 --betav-max 1e-3 --out " + q(out));
  CHECK(rc == 1);
  CHECK(last_error().find("cannot satisfy Jacobian bound") != std::string::npos);
}

TEST_CASE("search then continuation from its parameter file") {
  auto s = workdir() / "search";
  REQUIRE(run("search " + pair_flags() + " --jbound 0.25 --betav-min 1e-3 --out " + q(s)) == 0);
  const double bv = summary_value(s, "beta_v_star"), bw = summary_value(s, "beta_w_star");
  CHECK(bv >= 1e-3);
  auto params = read_table(s / "params.txt", '=');
  CHECK(std::stod(params.at("betav")) == doctest::Approx(bv));

  auto c = workdir() / "continue";
  REQUIRE(run("continue --plan " + q(s / "params.txt") + " --quiet --out " + q(c)) == 0);
  const auto bv_rungs = beta_v_ladder(bv).size();
  const auto bw_rungs = beta_w_ladder(bw, 1e-5).size();
  CHECK(summary_value(c, "solves") == double(bv_rungs + bw_rungs));
  CHECK(summary_value(c, "total_gn_iterations") < summary_value(s, "total_gn_iterations"));
  CHECK(summary_value(c, "j_min") >= 0.25 * 0.9);
}

TEST_CASE("plan entries yield to explicit flags") {
  auto plan = workdir() / "plan.txt";
  {
    std::ofstream p(plan);
    p << "# fixed weights\nbetav = 1\nnt = 4\ninterp = linear\n";
  }
  auto out = workdir() / "plan_override";
  REQUIRE(run("register --plan " + q(plan) + " --template " + q(syn_dir() / "m0.vol") + " --reference " +
              q(syn_dir() / "m1.vol") + " --betav 0.5 --quiet --out " + q(out)) == 0);
  auto params = read_table(out / "params.txt", '=');
  CHECK(std::stod(params.at("betav")) == doctest::Approx(0.5));
  CHECK(params.at("nt") == "4");
  {
    std::ofstream p(workdir() / "broken_plan.txt");
    p << "betav 1\n";
  }
  CHECK(run("register --plan " + q(workdir() / "broken_plan.txt")) == 2);
}

TEST_CASE("transport modes") {
  Grid g({32, 32, 32});
  write_vector(workdir() / "zero.vol", VectorField(g), ScalarType::f64);
  auto out = workdir() / "transport_zero";
  REQUIRE(run("transport --velocity " + q(workdir() / "zero.vol") + " --template " + q(syn_dir() / "m0.vol") +
              " --quiet --out " + q(out)) == 0);
  auto m0 = read_scalar(syn_dir() / "m0.vol");
  CHECK(max_abs(read_scalar(out / "deformed.vol") - m0) == 0);

  auto lab = workdir() / "transport_labels";
  REQUIRE(run("transport --labels --velocity " + q(syn_dir() / "velocity.vol") + " --template " +
              q(syn_dir() / "labels0.vol") + " --quiet --out " + q(lab)) == 0);
  auto raw = read_scalar(lab / "deformed_labels.vol");
  bool integral = true;
  for (std::size_t i = 0; i < raw.size(); ++i) integral &= raw[i] == std::round(raw[i]);
  CHECK(integral);
}

TEST_CASE("metrics on label maps") {
  auto out = workdir() / "dice_same";
  REQUIRE(run("metrics --template-labels " + q(syn_dir() / "labels0.vol") + " --reference-labels " +
              q(syn_dir() / "labels0.vol") + " --quiet --out " + q(out)) == 0);
  CHECK(summary_value(out, "D_a", "metrics.tsv") == 1);
  CHECK(summary_value(out, "D_ivw", "metrics.tsv") == 1);

  auto all = workdir() / "dice_all";
  REQUIRE(run("metrics --template-labels " + q(syn_dir() / "labels0.vol") + " --reference-labels " +
              q(syn_dir() / "labels1.vol") + " --quiet --out " + q(all)) == 0);
  auto l0 = read_labels(syn_dir() / "labels0.vol"), l1 = read_labels(syn_dir() / "labels1.vol");
  auto rep = dice_averages(l0, l1);
  CHECK(summary_value(all, "D_a", "metrics.tsv") == doctest::Approx(rep.average).epsilon(1e-8));
  std::ifstream dice(all / "dice.tsv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(dice, line)) rows += std::isdigit(static_cast<unsigned char>(line[0])) != 0;
  CHECK(rows == present_labels(l0, l1).size());

  auto some = workdir() / "dice_some";
  REQUIRE(run("metrics --template-labels " + q(syn_dir() / "labels0.vol") + " --reference-labels " +
              q(syn_dir() / "labels1.vol") + " --label-ids 1,2 --quiet --out " + q(some)) == 0);
  CHECK(summary_value(some, "D_a", "metrics.tsv") ==
        doctest::Approx(dice_averages(l0, l1, {1, 2}).average).epsilon(1e-8));
  CHECK(run("metrics --quiet --out " + q(some)) == 2);
}

TEST_CASE("experiment with a single level") {
  auto out = workdir() / "experiment";
  REQUIRE(run("experiment " + pair_flags() + " --template-labels " + q(syn_dir() / "labels0.vol") +
              " --reference-labels " + q(syn_dir() / "labels1.vol") +
              " --ladder 1 --betav 1e-2 --betaw 0 --out " + q(out)) == 0);
  std::ifstream in(out / "trend.tsv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);  // header, pre, factor 1
  CHECK(run("experiment " + pair_flags() + " --template-labels " + q(syn_dir() / "labels0.vol") +
            " --reference-labels " + q(syn_dir() / "labels1.vol") + " --ladder 1,3 --betav 1e-2 --out " +
            q(workdir() / "experiment_bad")) == 2);
}
