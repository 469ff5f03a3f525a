#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "svreg/autoparam.hpp"
#include "svreg/gauss_newton.hpp"

using namespace svreg;

namespace {

RegistrationConfig solver_config(double beta_v, int n_t = 4) {
  RegistrationConfig cfg;
  cfg.beta_v = real(beta_v);
  cfg.n_t = n_t;
  cfg.interp = InterpOrder::linear;
  return cfg;
}

// Blob and the same blob displaced by `shift` voxels along x1.
struct Pair {
  ScalarField m0, m1;
};
Pair shifted_blobs(int n, int shift, double width = 0.8) {
  Grid g({n, n, n});
  const double h = kTwoPi / n;
  return {test::blob(g, {kPi, kPi, kPi}, width), test::blob(g, {kPi + shift * h, kPi, kPi}, width)};
}

bool objective_monotone(const SolverDiagnostics& d) {
  for (std::size_t k = 1; k < d.iterations.size(); ++k) {
    if (d.iterations[k].objective > d.iterations[k - 1].objective) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("Gauss-Newton on identical images stops immediately") {
  Grid g({16, 16, 16});
  auto m = test::smooth_scalar(g, 1);
  auto res = gauss_newton_register(m, m, solver_config(1e-2));
  CHECK(res.diagnostics.gn_iterations == 0);
  CHECK(res.diagnostics.converged);
  CHECK(max_abs(res.velocity) == 0);
  CHECK(res.diagnostics.relative_residual == 0);
  CHECK(res.diagnostics.j_min == 1);
  CHECK(res.diagnostics.j_max == 1);
}

TEST_CASE("translation toy") {
  auto [m0, m1] = shifted_blobs(32, 4);
  auto cfg = solver_config(1e-2, 4);
  cfg.interp = InterpOrder::cubic;
  cfg.max_gn_iters = 20;
  auto res = gauss_newton_register(m0, m1, cfg);
  const auto& d = res.diagnostics;
  MESSAGE("translation toy: r = " << d.relative_residual << " after " << d.gn_iterations << " GN iterations");
  CHECK(d.relative_residual < 0.1);
  CHECK(d.gn_iterations <= 20);
  CHECK(objective_monotone(d));
  CHECK(d.iterations.front().relative_gradient == doctest::Approx(1));
  CHECK(d.relative_residual == doctest::Approx(relative_residual(m0, m1, res.deformed)));
  CHECK(d.j_min > 0);
}

TEST_CASE("warm start") {
  auto [m0, m1] = shifted_blobs(16, 2);
  auto cfg = solver_config(1e-1);
  auto cold = gauss_newton_register(m0, m1, cfg);
  REQUIRE(cold.diagnostics.converged);
  SUBCASE("takes at least one step") {
    auto warm = gauss_newton_register(m0, m1, cfg, &cold.velocity);
    CHECK(warm.diagnostics.gn_iterations >= 1);
    CHECK(warm.diagnostics.iterations.back().objective <= cold.diagnostics.iterations.back().objective * (1 + 1e-12));
  }
  SUBCASE("from a lower beta_v continues downwards") {
    auto lower = solver_config(1e-2);
    auto warm = gauss_newton_register(m0, m1, lower, &cold.velocity);
    CHECK(warm.diagnostics.relative_residual < cold.diagnostics.relative_residual);
  }
}

TEST_CASE("iteration cap is honoured") {
  auto [m0, m1] = shifted_blobs(16, 3);
  auto cfg = solver_config(1e-3);
  cfg.max_gn_iters = 2;
  cfg.gtol = 1e-12;
  auto res = gauss_newton_register(m0, m1, cfg);
  CHECK(res.diagnostics.gn_iterations <= 2);
  CHECK_FALSE(res.diagnostics.converged);
}

TEST_CASE("Jacobian bound predicate") {
  Grid g({8, 8, 8});
  CHECK(in_bounds(ScalarField(g, 1), 0.25));
  ScalarField j(g, 1);
  j[0] = real(0.2);
  CHECK_FALSE(in_bounds(j, 0.25));
  CHECK(in_bounds(0.119, 1.74, 0.1));
  CHECK_FALSE(in_bounds(0.5, 4.5, 0.25));
  CHECK(in_bounds(0.25, 4.0, 0.25));
}

TEST_CASE("search on identical images returns the floors") {
  Grid g({16, 16, 16});
  auto m = test::smooth_scalar(g, 2);
  SearchConfig search;
  auto res = search_parameters(m, m, solver_config(1), search);
  CHECK(res.beta_v_star == doctest::Approx(search.beta_v_min));
  CHECK(res.beta_w_star == doctest::Approx(search.beta_w_min));
  for (const auto& t : res.trials) CHECK(t.accepted);
  // Decades 1 .. 1e-5 for beta_v, then 1e-6 and 1e-7 for beta_w.
  CHECK(res.trials.size() == 8u);
}

TEST_CASE("beta_v bisection against an exhaustive sweep") {
  auto [m0, m1] = shifted_blobs(16, 3, 0.6);
  auto cfg = solver_config(1);
  SearchConfig search;
  search.j_bound = 0.5;
  search.beta_v_min = 1e-5;

  // Cold solves over the decade grid; validity must flip exactly once.
  std::vector<bool> valid;
  for (int k = 0; k <= 5; ++k) {
    auto c = cfg;
    c.beta_v = real(std::pow(10.0, -k));
    c.beta_w = real(search.beta_w_max);
    auto r = gauss_newton_register(m0, m1, c);
    valid.push_back(in_bounds(r.diagnostics.j_min, r.diagnostics.j_max, search.j_bound));
  }
  const int first_invalid = static_cast<int>(std::find(valid.begin(), valid.end(), false) - valid.begin());
  REQUIRE(first_invalid > 0);
  REQUIRE(first_invalid < 6);
  for (int k = first_invalid; k <= 5; ++k) REQUIRE_FALSE(valid[k]);
  const double lo = std::pow(10.0, -first_invalid), hi = 10 * lo;

  std::vector<TrialRecord> trials;
  auto found = search_beta_v(m0, m1, cfg, search, &trials);
  MESSAGE("sweep bracket [" << lo << ", " << hi << "], bisection beta_v* = " << found.beta_v_star);
  CHECK(found.beta_v_star >= lo);
  CHECK(found.beta_v_star <= hi);
  CHECK(in_bounds(found.solution.diagnostics.j_min, found.solution.diagnostics.j_max, search.j_bound));

  // The closest rejected trial sits within the 10% termination bracket.
  double nearest_invalid = 0;
  for (const auto& t : trials)
    if (!t.accepted) nearest_invalid = std::max(nearest_invalid, t.beta_v);
  REQUIRE(nearest_invalid > 0);
  CHECK((found.beta_v_star - nearest_invalid) / found.beta_v_star < search.binary_search_rel_tol);
  int bisections = 0;
  for (const auto& t : trials) bisections += t.stage == "beta_v-bisect";
  CHECK(bisections >= 1);
}

TEST_CASE("search fails when the largest beta_v already breaches the bound") {
  auto [m0, m1] = shifted_blobs(16, 3, 0.6);
  SearchConfig search;
  search.j_bound = 0.99;
  search.beta_v_max = 1e-3;
  CHECK_THROWS_WITH_AS(search_parameters(m0, m1, solver_config(1), search),
                       doctest::Contains("cannot satisfy Jacobian bound"), SearchError);
}

TEST_CASE("search settings are validated") {
  SearchConfig s;
  s.j_bound = 1.5;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = SearchConfig{};
  s.beta_v_min = 2;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = SearchConfig{};
  s.binary_search_rel_tol = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("continuation ladders") {
  auto near = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(a[i] - b[i]) > 1e-12 * b[i]) return false;
    return true;
  };
  CHECK(near(beta_v_ladder(1), {1}));
  CHECK(near(beta_v_ladder(1e-2), {1, 1e-1, 1e-2}));
  CHECK(near(beta_v_ladder(2.83e-5), {1, 1e-1, 1e-2, 1e-3, 1e-4, 2.83e-5}));
  CHECK(near(beta_w_ladder(1e-7, 1e-5), {1e-6, 1e-7}));
  CHECK(near(beta_w_ladder(1e-5, 1e-5), {}));
  CHECK(near(beta_w_ladder(3e-6, 1e-5), {3e-6}));
  CHECK_THROWS_AS(beta_v_ladder(2), ValidationError);
  CHECK_THROWS_AS(beta_w_ladder(0, 1e-5), ValidationError);
}

TEST_CASE("continuation solve count follows the ladders") {
  auto [m0, m1] = shifted_blobs(16, 2);
  SearchConfig search;
  auto cfg = solver_config(1);
  auto res = continuation_register(m0, m1, 1e-2, 1e-7, cfg, search);
  REQUIRE(res.rungs.size() == 5u);
  CHECK(res.rungs[0].beta_v == 1);
  CHECK(res.rungs[2].beta_v == doctest::Approx(1e-2));
  CHECK(res.rungs[2].beta_w == doctest::Approx(1e-5));
  CHECK(res.rungs[4].beta_w == doctest::Approx(1e-7));
  CHECK(res.total_gn_iterations == total_gn_iterations(res.rungs));

  SUBCASE("beta_w = 0 skips the divergence rungs") {
    auto plain = continuation_register(m0, m1, 1, 0, cfg, search);
    REQUIRE(plain.rungs.size() == 1u);
    CHECK(plain.rungs[0].beta_w == 0);
  }
}

TEST_CASE("trial log format") {
  TrialRecord t;
  t.beta_v = 0.1;
  t.beta_w = 1e-5;
  t.j_min = 0.5;
  t.j_max = 2;
  t.residual = 0.3;
  t.gn_iterations = 4;
  t.seconds = 1.5;
  t.accepted = true;
  t.stage = "beta_v";
  auto path = std::filesystem::temp_directory_path() / "svreg_trials.tsv";
  write_trial_log(path, {t}, true);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header.find("beta_v") != std::string::npos);
  std::istringstream fields(row);
  double bv, bw, jmin, jmax, r, secs;
  int gn, acc;
  std::string stage;
  fields >> bv >> bw >> jmin >> jmax >> r >> gn >> secs >> acc >> stage;
  CHECK(bv == 0.1);
  CHECK(gn == 4);
  CHECK(secs == 0);
  CHECK(acc == 1);
  CHECK(stage == "beta_v");
}
