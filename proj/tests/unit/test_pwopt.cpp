#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "pwdpd/pwopt.hpp"

using namespace pwdpd;

namespace {

QuadraticProblem random_problem(std::mt19937_64& rng, Eigen::Index n) {
  const CMat A = fixtures::crandn(rng, 2 * n, n);
  QuadraticProblem p;
  p.H = A.adjoint() * A / static_cast<double>(2 * n);
  p.H = (0.5 * (p.H + p.H.adjoint())).eval();
  p.b = fixtures::crandn(rng, n);
  p.c0 = 1.0 + p.b.squaredNorm();
  p.t0 = fixtures::crandn(rng, n).transpose();
  p.t0p = fixtures::crandn(rng);
  return p;
}

// Bordered KKT system [H -t0^H; t0 0][g; eta] = [-b; t0p] solved by full-pivot LU.
CVec bordered_solve(const QuadraticProblem& p) {
  const Eigen::Index n = p.size();
  CMat K = CMat::Zero(n + 1, n + 1);
  K.topLeftCorner(n, n) = p.H;
  K.topRightCorner(n, 1) = -p.t0.adjoint();
  K.bottomLeftCorner(1, n) = p.t0;
  CVec rhs(n + 1);
  rhs.head(n) = -p.b;
  rhs[n] = p.t0p;
  return K.fullPivLu().solve(rhs).head(n);
}

double rel(const CVec& a, const CVec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST_SUITE("pwopt") {

TEST_CASE("trivial constrained minima") {
  QuadraticProblem p;
  p.H = CMat::Identity(2, 2);
  p.b = CVec::Zero(2);
  p.t0 = CRowVec(2);
  p.t0 << 1.0, 0.0;
  p.t0p = 1.0;
  OptResult r = solve_kkt(p);
  CHECK(rel(r.gamma_hat, (CVec(2) << 1.0, 0.0).finished()) < 1e-14);
  CHECK(rel(oracle_solve(p), r.gamma_hat) < 1e-12);

  p.t0 << 1.0, 1.0;
  p.t0p = 2.0;
  r = solve_kkt(p);
  CHECK(rel(r.gamma_hat, CVec::Ones(2)) < 1e-14);
  CHECK(rel(oracle_solve(p), r.gamma_hat) < 1e-12);

  QuadraticProblem one;
  one.H = CMat::Identity(1, 1);
  one.b = CVec::Zero(1);
  one.t0 = CRowVec::Ones(1);
  one.t0p = 5.0;
  CHECK(std::abs(solve_kkt(one).gamma_hat[0] - 5.0) < 1e-14);
  CHECK(std::abs(oracle_solve(one)[0] - 5.0) < 1e-14);
}

TEST_CASE("objective evaluation") {
  QuadraticProblem p;
  p.H = CMat::Identity(2, 2);
  p.b = CVec::Zero(2);
  p.c0 = 0.0;
  CHECK(evaluate_objective(p, (CVec(2) << 3.0, 4.0).finished()) == 25.0);
  p.c0 = 1.5;
  p.b << cplx(1.0, 2.0), cplx(-1.0, 0.5);
  CHECK(evaluate_objective(p, CVec::Zero(2)) == 1.5);
  // g^H H g + 2 Re(g^H b) + c0 at g = (i, 1): 2 + 2 Re(-i(1+2i) + (-1+0.5i)) + 1.5
  CVec g(2);
  g << cplx(0.0, 1.0), 1.0;
  CHECK(evaluate_objective(p, g) == doctest::Approx(2.0 + 2.0 * (2.0 - 1.0) + 1.5));
  CHECK_THROWS_AS(evaluate_objective(p, CVec::Zero(3)), DimensionError);
}

TEST_CASE("solve_kkt agrees with the null-space oracle on random instances") {
  std::mt19937_64 rng(2024);
  int count = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(trial % 32);
    const QuadraticProblem p = random_problem(rng, n);
    const OptResult r = solve_kkt(p);
    const CVec g_or = oracle_solve(p);
    const CVec g_bd = bordered_solve(p);
    CAPTURE(trial);
    CHECK(rel(r.gamma_hat, g_or) < 1e-8);
    CHECK(rel(r.gamma_hat, g_bd) < 1e-8);
    const double f_or = evaluate_objective(p, g_or);
    CHECK(std::abs(r.objective_at_opt - f_or) <= 1e-8 * std::max(std::abs(f_or), 1.0));
    CHECK(r.constraint_residual < 1e-9);
    CHECK(r.stationarity_residual < 1e-10);
    ++count;
  }
  CHECK(count >= 100);
}

TEST_CASE("feasible perturbations never lower the objective") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const QuadraticProblem p = random_problem(rng, 12);
    const OptResult r = solve_kkt(p);
    const CMat Z = null_space(CMat(p.t0));
    REQUIRE(Z.cols() == 11);
    for (int i = 0; i < 50; ++i) {
      const double step = std::pow(10.0, -4.0 + 4.0 * unit_uniform(rng()));
      const CVec g = r.gamma_hat + step * Z * fixtures::crandn(rng, Z.cols());
      CHECK(std::abs((p.t0 * g)(0) - p.t0p) < 1e-9);
      CHECK(evaluate_objective(p, g) - r.objective_at_opt >= -1e-9 * p.scale());
    }
  }
}

TEST_CASE("null space basis is orthonormal and annihilated") {
  std::mt19937_64 rng(5);
  const CMat A = fixtures::crandn(rng, 3, 7);
  const CMat Z = null_space(A);
  CHECK(Z.cols() == 4);
  CHECK((A * Z).norm() < 1e-12);
  CHECK((Z.adjoint() * Z - CMat::Identity(4, 4)).norm() < 1e-12);
  CHECK(null_space(CMat(0, 3)).cols() == 3);
}

TEST_CASE("solver errors and ridge") {
  QuadraticProblem p;
  p.H = CMat::Zero(3, 3);
  p.H(0, 0) = 1.0;
  p.b = CVec::Zero(3);
  p.t0 = CRowVec::Ones(3);
  p.t0p = 1.0;
  CHECK_THROWS_AS(solve_kkt(p), SolverError);
  KktOptions o;
  o.ridge = 1e-3;
  const OptResult r = solve_kkt(p, o);
  CHECK(r.ridge_used == 1e-3);
  CHECK(r.constraint_residual < 1e-12);
  KktOptions a;
  a.auto_ridge = true;
  const OptResult ra = solve_kkt(p, a);
  CHECK(ra.ridge_used == doctest::Approx(1e-10 / 3.0));
  CHECK(ra.condition <= 1e12);
  p.H(1, 1) = 1e-8;
  p.H(2, 2) = 1e-9;
  CHECK(solve_kkt(p, a).ridge_used == 0.0);

  QuadraticProblem z;
  z.H = CMat::Identity(2, 2);
  z.b = CVec::Ones(2);
  z.t0 = CRowVec::Zero(2);
  z.t0p = 0.0;
  CHECK_THROWS_AS(solve_kkt(z), SolverError);
  o.ridge = -1.0;
  CHECK_THROWS_AS(solve_kkt(z, o), ConfigError);
  z.b = CVec::Ones(3);
  CHECK_THROWS_AS(solve_kkt(z), DimensionError);
}

TEST_CASE("stacked constraints agree with the oracle") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 8 + trial % 8;
    QuadraticProblem p = random_problem(rng, n);
    // rank-deficient row set: 40 rows spanning 3 directions
    const CMat basis = fixtures::crandn(rng, 3, n);
    p.T0 = fixtures::crandn(rng, 40, 3) * basis;
    p.t0p_rows = p.T0 * fixtures::crandn(rng, n);  // consistent right-hand side
    KktOptions o;
    o.stacked = true;
    const OptResult r = solve_kkt(p, o);
    CHECK(r.stacked);
    CHECK(r.eta_rows.size() == 3);
    CHECK(rel(r.gamma_hat, oracle_solve(p, true)) < 1e-8);
    CHECK(r.constraint_residual < 1e-9 * p.t0p_rows.norm());
    CHECK(r.stationarity_residual < 1e-10);
  }
}

TEST_CASE("assemble_problem trivial cases and summation oracle") {
  const Eigen::Index N = 64;
  std::mt19937_64 rng(9);
  const CMat Qm = fixtures::crandn(rng, N, 3).householderQr().householderQ() * CMat::Identity(N, 3);
  RadiationOperator op{std::sqrt(static_cast<double>(N)) * Qm, CVec::Zero(N), 0.0};
  QuadraticProblem p = assemble_problem({op}, op);
  CHECK((p.H - CMat::Identity(3, 3)).norm() < 1e-12);
  CHECK(p.b.norm() == 0.0);
  CHECK(p.c0 == 0.0);

  std::vector<RadiationOperator> ops;
  for (int t = 0; t < 4; ++t)
    ops.push_back({fixtures::crandn(rng, N, 5), fixtures::crandn(rng, N), 0.1 * t});
  p = assemble_problem(ops, ops[2], true);
  CMat H = CMat::Zero(5, 5);
  CVec b = CVec::Zero(5);
  double c0 = 0.0;
  for (const auto& o : ops)
    for (Eigen::Index n = 0; n < N; ++n) {
      for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) H(i, j) += std::conj(o.T(n, i)) * o.T(n, j);
        b[i] += std::conj(o.T(n, i)) * o.z_res[n];
      }
      c0 += std::norm(o.z_res[n]);
    }
  H /= static_cast<double>(N);
  b /= static_cast<double>(N);
  c0 /= static_cast<double>(N);
  CHECK((p.H - H).norm() <= 1e-12 * H.norm());
  CHECK((p.b - b).norm() <= 1e-12 * b.norm());
  CHECK(std::abs(p.c0 - c0) <= 1e-12 * c0);
  CRowVec t0 = CRowVec::Zero(5);
  for (Eigen::Index n = 0; n < N; ++n) t0 += ops[2].T.row(n);
  t0 /= static_cast<double>(N);
  CHECK((p.t0 - t0).norm() <= 1e-12 * t0.norm());
  CHECK(std::abs(p.t0p - t0.sum()) <= 1e-12 * std::abs(p.t0p));
  CHECK(p.T0 == ops[2].T);

  // objective of the assembled problem equals the averaged residual power
  const CVec g = fixtures::crandn(rng, 5);
  double direct = 0.0;
  for (const auto& o : ops) direct += (o.T * g + o.z_res).squaredNorm() / static_cast<double>(N);
  CHECK(evaluate_objective(p, g) == doctest::Approx(direct).epsilon(1e-12));

  ops[1].T = fixtures::crandn(rng, N, 4);
  CHECK_THROWS_AS(assemble_problem(ops, ops[0]), DimensionError);
  CHECK_THROWS_AS(assemble_problem({}, ops[0]), DimensionError);
}

TEST_CASE("structured assembly equals generic assembly on a trained context") {
  const PwContext& ctx = fixtures::small_context();
  const std::vector<double> angles = angle_grid(-1.5, 1.5, 9);
  for (const PwLayout& L : {build_layout(PwScheme::FF, 4, 6), build_layout(PwScheme::LC, 4, 6, {1, 2}, 1)}) {
    std::vector<RadiationOperator> ops;
    for (double a : angles) ops.push_back(assemble_radiation_operator(ctx, L, a));
    const RadiationOperator op0 = assemble_radiation_operator(ctx, L, 0.0);
    const QuadraticProblem g = assemble_problem(ops, op0, true);
    const QuadraticProblem s = assemble_problem_structured(ctx, L, angles, 0.0, true);
    CHECK((g.H - s.H).norm() <= 1e-11 * g.H.norm());
    CHECK((g.b - s.b).norm() <= 1e-11 * g.b.norm());
    CHECK(std::abs(g.c0 - s.c0) <= 1e-11 * g.c0);
    CHECK((g.t0 - s.t0).norm() <= 1e-11 * g.t0.norm());
    CHECK((g.T0 - s.T0).norm() <= 1e-11 * g.T0.norm());
  }
}

TEST_CASE("FF optimum is no worse than LC, which is no worse than all-ones") {
  const PwContext& ctx = fixtures::small_context();
  const std::vector<double> angles = angle_grid(-1.5707963267948966, 1.5707963267948966, 31);
  KktOptions o;
  o.auto_ridge = true;
  const PwLayout ff = build_layout(PwScheme::FF, 4, 6);
  const PwLayout lc = build_layout(PwScheme::LC, 4, 6, {1, 2}, 1);
  const QuadraticProblem pf = assemble_problem_structured(ctx, ff, angles, 0.0);
  const QuadraticProblem pl = assemble_problem_structured(ctx, lc, angles, 0.0);
  const OptResult rf = solve_kkt(pf, o);
  const OptResult rl = solve_kkt(pl, o);
  CHECK(rf.constraint_residual < 1e-9);
  CHECK(rl.constraint_residual < 1e-9);
  const double tol = 1e-9 * pf.scale();
  CHECK(rf.objective_at_opt <= rl.objective_at_opt + tol);
  CHECK(rl.objective_at_opt <= evaluate_objective(pl, CVec::Ones(lc.n_gamma)) + tol);
  // the expanded LC optimum is feasible for FF
  const CVec lifted = duplication_matrix(lc).cast<cplx>() * rl.gamma_hat;
  CHECK(std::abs((pf.t0 * lifted)(0) - pf.t0p) < 1e-9);
  CHECK(evaluate_objective(pf, lifted) == doctest::Approx(rl.objective_at_opt).epsilon(1e-9));
  // LC with r = 1 is FF
  const QuadraticProblem p1 = assemble_problem_structured(ctx, build_layout(PwScheme::LC, 4, 6, {1, 1}, 0), angles, 0.0);
  CHECK(rel(solve_kkt(p1, o).gamma_hat, rf.gamma_hat) < 1e-10);
}

}
