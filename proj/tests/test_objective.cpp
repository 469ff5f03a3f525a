#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "support.hpp"
#include "svreg/objective.hpp"
#include "svreg/pcg.hpp"

using namespace svreg;

namespace {

RegistrationConfig reg_config(double beta_v, double beta_w, int n_t = 4) {
  RegistrationConfig cfg;
  cfg.beta_v = real(beta_v);
  cfg.beta_w = real(beta_w);
  cfg.n_t = n_t;
  return cfg;
}

struct Pair {
  ScalarField m0, m1;
};

Pair smooth_pair(const Grid& g, std::uint64_t seed) {
  return {test::smooth_scalar(g, seed, 2), test::smooth_scalar(g, seed + 1, 2)};
}

// Relative mismatch between <g, dv> and the central difference of J.
double directional_error(const ScalarField& m0, const ScalarField& m1, const VectorField& v,
                         const VectorField& dv, const RegistrationConfig& cfg, bool reduced) {
  ObjectiveState state(m0, m1, cfg);
  state.set_velocity(v);
  const VectorField g = reduced ? state.reduced_gradient() : state.gradient();
  const double eps = 1e-5;
  auto vp = v, vm = v;
  axpy(real(eps), dv, vp);
  axpy(real(-eps), dv, vm);
  const double fd = (evaluate_objective(m0, m1, vp, cfg) - evaluate_objective(m0, m1, vm, cfg)) / (2 * eps);
  const double an = l2_inner(g, dv);
  return std::abs(fd - an) / std::abs(fd);
}

}  // namespace

TEST_CASE("objective values") {
  Grid g({16, 16, 16});
  auto [m0, m1] = smooth_pair(g, 1);
  auto cfg = reg_config(1e-2, 1e-3);
  SUBCASE("perfect match with zero velocity") {
    CHECK(evaluate_objective(m0, m0, VectorField(g), cfg) == 0);
  }
  SUBCASE("zero velocity leaves only the data term") {
    const double expected = 0.5 * l2_inner(m0 - m1, m0 - m1);
    CHECK(evaluate_objective(m0, m1, VectorField(g), cfg) == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("constant velocity shifts only change the data term") {
    auto v = test::smooth_vector(g, 3, 2, 0.2);
    auto shifted = v + VectorField(g, real(0.3));
    ObjectiveState a(m0, m1, cfg), b(m0, m1, cfg);
    a.set_velocity(v);
    b.set_velocity(shifted);
    CHECK(b.regularization_term() == doctest::Approx(a.regularization_term()).epsilon(1e-10));
    auto m_shifted = solve_state(m0, shifted, cfg.transport());
    CHECK(b.data_term() == doctest::Approx(0.5 * l2_inner(m_shifted - m1, m_shifted - m1)).epsilon(1e-12));
  }
  SUBCASE("terms are non-negative") {
    ObjectiveState s(m0, m1, cfg);
    s.set_velocity(test::smooth_vector(g, 4, 2, 0.5));
    CHECK(s.data_term() >= 0);
    CHECK(s.regularization_term() >= 0);
    CHECK(s.objective() == doctest::Approx(s.data_term() + s.regularization_term()));
  }
}

TEST_CASE("relative residual") {
  Grid g({8, 8, 8});
  auto [m0, m1] = smooth_pair(g, 5);
  CHECK(relative_residual(m0, m1, m1) == 0);
  CHECK(relative_residual(m0, m1, m0) == doctest::Approx(1));
  CHECK(relative_residual(m0, m0, m0) == 0);
  auto half = m1;
  axpy(real(0.5), m0 - m1, half);
  CHECK(relative_residual(m0, m1, half) == doctest::Approx(0.25));
}

TEST_CASE("gradient") {
  Grid g({16, 16, 16});
  auto [m0, m1] = smooth_pair(g, 7);
  auto v = test::smooth_vector(g, 9, 2, 0.2);
  SUBCASE("vanishes at a perfect match") {
    ObjectiveState s(m0, m0, reg_config(1e-2, 1e-3));
    CHECK(max_abs(s.gradient()) == 0);
    CHECK(max_abs(s.reduced_gradient()) == 0);
  }
  SUBCASE("discrete gradient matches finite differences") {
    for (std::uint64_t k = 0; k < 3; ++k) {
      auto dv = test::smooth_vector(g, 100 + 3 * k, 2);
      CHECK(directional_error(m0, m1, v, dv, reg_config(1e-2, 0), true) < 1e-4);
      CHECK(directional_error(m0, m1, v, dv, reg_config(1e-2, 1e-2), false) < 1e-4);
    }
  }
  SUBCASE("continuous gradient converges under refinement") {
    auto cfg = reg_config(1e-2, 0, 8);
    cfg.gradient = GradientScheme::continuous;
    auto error_at = [&](int n) {
      Grid h({n, n, n});
      auto [a, b] = smooth_pair(h, 7);
      return directional_error(a, b, test::smooth_vector(h, 9, 2, 0.2), test::smooth_vector(h, 120, 2),
                               cfg, false);
    };
    const double coarse = error_at(16), fine = error_at(32);
    MESSAGE("continuous gradient error 16^3: " << coarse << ", 32^3: " << fine);
    CHECK(fine < coarse / 4);
  }
  SUBCASE("beta_v enters linearly") {
    ObjectiveState a(m0, m1, reg_config(1e-2, 0)), b(m0, m1, reg_config(2e-2, 0));
    a.set_velocity(v);
    b.set_velocity(v);
    auto diff = b.reduced_gradient() - a.reduced_gradient();
    auto expected = real(1e-2) * apply_A(v, a.operators());
    CHECK(test::rel_l2(diff, expected) < 1e-10);

    ObjectiveState c(m0, m1, reg_config(1e-2, 5e-3)), d(m0, m1, reg_config(2e-2, 5e-3));
    c.set_velocity(v);
    d.set_velocity(v);
    CHECK(test::rel_l2(d.gradient() - c.gradient(), expected) < 1e-10);
  }
  SUBCASE("reduced gradient is K applied to the L2 gradient") {
    ObjectiveState s(m0, m1, reg_config(1e-2, 3e-2));
    s.set_velocity(v);
    auto kg = apply_K(s.gradient(), s.operators());
    CHECK(test::rel_l2(s.reduced_gradient(), kg) < 1e-10);
  }
}

TEST_CASE("Gauss-Newton Hessian") {
  Grid g({16, 16, 16});
  auto [m0, m1] = smooth_pair(g, 11);
  ObjectiveState s(m0, m1, reg_config(1e-2, 1e-3));
  s.set_velocity(test::smooth_vector(g, 12, 2, 0.2));
  SUBCASE("linear: zero maps to zero") {
    VectorField out(g);
    s.gn_hessian_matvec(VectorField(g), out);
    CHECK(max_abs(out) == 0);
  }
  SUBCASE("symmetric") {
    for (std::uint64_t k = 0; k < 3; ++k) {
      auto a = test::smooth_vector(g, 200 + k, 2), b = test::smooth_vector(g, 300 + k, 2);
      VectorField ha(g), hb(g);
      s.gn_hessian_matvec(a, ha);
      s.gn_hessian_matvec(b, hb);
      const double ab = l2_inner(ha, b), ba = l2_inner(a, hb);
      CHECK(std::abs(ab - ba) / std::max(std::abs(ab), std::abs(ba)) <= 1e-3);
    }
  }
  SUBCASE("positive semidefinite") {
    for (std::uint64_t k = 0; k < 4; ++k) {
      auto a = test::smooth_vector(g, 400 + k, 3);
      VectorField ha(g), hd(g);
      s.gn_hessian_matvec(a, ha);
      s.data_hessian_matvec(a, hd);
      CHECK(l2_inner(ha, a) >= 0);
      CHECK(l2_inner(hd, a) >= -1e-12 * norm2(a) * norm2(hd));
    }
  }
  SUBCASE("regularization dominates for large beta_v") {
    ObjectiveState big(m0, m1, reg_config(1e3, 0));
    big.set_velocity(VectorField(g));
    auto a = test::smooth_vector(g, 500, 2);
    a *= real(1 / std::sqrt(l2_inner(a, a)));
    auto ha = hessian_matvec(a, big);
    auto reg = real(1e3) * apply_A(a, big.operators());
    CHECK(test::rel_l2(ha, reg) < 1e-2);
  }
  SUBCASE("reduced Hessian equals K H") {
    auto a = test::smooth_vector(g, 600, 2);
    VectorField ha(g), kha(g), red(g);
    s.gn_hessian_matvec(a, ha);
    s.operators().apply_K(ha, kha);
    s.hessian_matvec(a, red);
    CHECK(test::rel_l2(red, kha) < 1e-10);
  }
  SUBCASE("preconditioner inverts the regularization plus shift") {
    auto a = test::smooth_vector(g, 700, 3);
    auto& ops = s.operators();
    VectorField b(g), pa(g);
    ops.apply_divergence_penalty(a, b);
    auto rhs = ops.beta_v() * apply_A(a, ops) + s.preconditioner_shift() * a;
    axpy(ops.beta_w(), b, rhs);
    s.precondition(rhs, pa);
    CHECK(test::rel_l2(pa, a) < 1e-10);
    CHECK(s.preconditioner_shift() > 0);
  }
}

TEST_CASE("pcg") {
  Grid g({8, 8, 8});
  SUBCASE("zero right-hand side") {
    auto res = pcg_solve([](const VectorField& x, VectorField& y) { y = x; }, VectorField(g), {}, 1e-10, 10);
    CHECK(res.iterations == 0);
    CHECK(max_abs(res.solution) == 0);
  }
  SUBCASE("exact preconditioner converges at once") {
    RegOperators ops(g, real(0.05), 0);
    auto matvec = [&](const VectorField& x, VectorField& y) {
      ops.apply_A(x, y);
      y *= ops.beta_v();
      y += x;
    };
    auto precond = [&](const VectorField& x, VectorField& y) { ops.apply_inv_shifted_A(x, 1, y); };
    auto rhs = test::smooth_vector(g, 13, 3);
    auto res = pcg_solve(matvec, rhs, precond, 1e-10, 20);
    CHECK(res.converged);
    CHECK(res.iterations <= 2);
    VectorField check(g);
    matvec(res.solution, check);
    CHECK(test::rel_l2(check, rhs) < 1e-10);
  }
  SUBCASE("dense SPD operator against a direct solve") {
    const int n = static_cast<int>(3 * g.size());
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) b(i, j) = n01(rng) / std::sqrt(double(n));
    Eigen::MatrixXd a = b.transpose() * b + Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs_vec(n);
    for (int i = 0; i < n; ++i) rhs_vec(i) = n01(rng);

    auto to_field = [&](const Eigen::VectorXd& x) {
      VectorField f(g);
      for (int d = 0; d < 3; ++d)
        for (std::size_t i = 0; i < g.size(); ++i) f[d][i] = x(d * g.size() + i);
      return f;
    };
    auto to_vec = [&](const VectorField& f) {
      Eigen::VectorXd x(n);
      for (int d = 0; d < 3; ++d)
        for (std::size_t i = 0; i < g.size(); ++i) x(d * g.size() + i) = f[d][i];
      return x;
    };
    auto matvec = [&](const VectorField& x, VectorField& y) { y = to_field(a * to_vec(x)); };
    auto jacobi = [&](const VectorField& x, VectorField& y) {
      y = to_field(to_vec(x).cwiseQuotient(a.diagonal()));
    };
    Eigen::VectorXd direct = a.llt().solve(rhs_vec);
    for (bool with_precond : {false, true}) {
      auto res = pcg_solve(matvec, to_field(rhs_vec), with_precond ? LinearOperator(jacobi) : LinearOperator(),
                           1e-12, 500);
      CHECK(res.converged);
      CHECK((to_vec(res.solution) - direct).norm() / direct.norm() < 1e-8);
    }
  }
  SUBCASE("diagonal operator") {
    VectorField diag(g);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(1, 10);
    for (int d = 0; d < 3; ++d)
      for (std::size_t i = 0; i < g.size(); ++i) diag[d][i] = real(u(rng));
    auto rhs = test::smooth_vector(g, 21, 3);
    auto matvec = [&](const VectorField& x, VectorField& y) {
      for (int d = 0; d < 3; ++d)
        for (std::size_t i = 0; i < g.size(); ++i) y[d][i] = diag[d][i] * x[d][i];
    };
    auto res = pcg_solve(matvec, rhs, {}, 1e-12, 500);
    VectorField exact(g);
    for (int d = 0; d < 3; ++d)
      for (std::size_t i = 0; i < g.size(); ++i) exact[d][i] = rhs[d][i] / diag[d][i];
    CHECK(test::rel_l2(res.solution, exact) < 1e-8);
  }
  SUBCASE("negative curvature stops the iteration") {
    auto res = pcg_solve([](const VectorField& x, VectorField& y) { y = real(-1) * x; },
                         test::smooth_vector(g, 23, 2), {}, 1e-10, 10);
    CHECK(res.negative_curvature);
    CHECK_FALSE(res.converged);
  }
  SUBCASE("forcing term") {
    CHECK(forcing_term(1.0) == 0.5);
    CHECK(forcing_term(0.01) == doctest::Approx(0.1));
  }
}

TEST_CASE("registration settings are validated") {
  RegistrationConfig cfg;
  cfg.beta_v = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = RegistrationConfig{};
  cfg.beta_w = real(-1);
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK(parse_gradient_scheme("continuous") == GradientScheme::continuous);
  CHECK_THROWS_AS(parse_gradient_scheme("spectral"), ValidationError);
  Grid g({16, 16, 16});
  CHECK_THROWS_AS(ObjectiveState(ScalarField(g), ScalarField(Grid({16, 16, 32})), cfg), ValidationError);
}
