#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "relsyn/experiments.hpp"
#include "relsyn/h2_solver.hpp"

using namespace relsyn;

namespace {

SynthesisProblem ring_problem(int n, double gamma, int tq) {
  const RingModel rm = make_ring(n, gamma);
  return SynthesisProblem{make_t_systems(build_tilde_plant(rm.plant), rm.r_nom, rm.ms), rm.q_structure,
                          rm.k_structure, tq};
}

}  // namespace

TEST_CASE("least squares matches the normal equations on full-rank data") {
  std::mt19937_64 rng(61);
  const Matrix a = oracle::random(rng, 30, 6);
  const Vector b = oracle::random(rng, 30, 1).col(0);
  const auto res = least_squares(a, b);
  const Vector want = (a.transpose() * a).ldlt().solve(a.transpose() * b);
  CHECK((res.x - want).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_FALSE(res.rank_deficient);
  CHECK(res.residual == doctest::Approx((a * want - b).norm()));
  CHECK(res.gradient_norm < 1e-12);
}

TEST_CASE("least squares returns the minimal-norm solution when rank deficient") {
  std::mt19937_64 rng(62);
  Matrix a = oracle::random(rng, 20, 5);
  a.col(4) = a.col(0) + a.col(1);
  const Vector b = oracle::random(rng, 20, 1).col(0);
  const auto res = least_squares(a, b);
  CHECK(res.rank_deficient);
  CHECK(res.rank == 4);
  const Vector want = a.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
  CHECK((res.x - want).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("general solver matches the brute-force QP on small rings") {
  for (int n : {3, 4}) {
    const auto prob = ring_problem(n, 0.5, 4);
    const auto res = solve(prob);
    const double want = oracle::brute_force_objective(prob.yd, prob.structure, 4, 4 + 150);
    CHECK(res.objective == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("general solver matches the brute-force QP on the motivating plant") {
  const Plant p = motivating_plant();
  const auto ms = validate_c2(p.c2);
  SynthesisProblem prob{make_t_systems(build_tilde_plant(p), StateSpace::zero(4, 4), ms),
                        upper_triangular_structure(4), motivating_k_structure(), 3};
  const auto res = solve(prob);
  const double want = oracle::brute_force_objective(prob.yd, prob.structure, 3, 3 + 120);
  CHECK(res.objective == doctest::Approx(want).epsilon(1e-9));
  CHECK(res.objective < h2_norm_lyap(prob.yd.t1d));
}

TEST_CASE("general and circulant solvers agree") {
  for (int n : {3, 4, 5, 6}) {
    for (double gamma : {0.2, 0.5}) {
      const auto gen = solve(ring_problem(n, gamma, 8));
      const auto circ = solve_ring_circulant(n, gamma, 8, false);
      CHECK(gen.objective == doctest::Approx(circ.objective).epsilon(1e-8));
    }
  }
}

TEST_CASE("synthesized Q and K respect their structures") {
  for (int n : {3, 5}) {
    const RingModel rm = make_ring(n, 0.4);
    const auto res = solve(ring_problem(n, 0.4, 6));
    CHECK(membership(res.q_opt, rm.q_structure));
    CHECK(res.constraint_violation <= 1e-12);
    REQUIRE(res.k_opt.has_value());
    CHECK(membership(*res.k_opt, rm.k_structure));
    const FirSystem r = markov(*res.r_opt, res.k_opt->horizon());
    CHECK((*res.k_opt * rm.plant.c2 - r).max_abs() < 1e-9);
  }
}

TEST_CASE("optimality: the gradient vanishes and perturbations never help") {
  std::mt19937_64 rng(63);
  const auto prob = ring_problem(5, 0.4, 4);
  const auto res = solve(prob, Exec::Serial);
  CHECK(res.residual_gradient < 1e-9);
  const auto cs = compile_constraints(prob.structure, prob.yd.ms.indicators, 4);
  for (int trial = 0; trial < 5; ++trial) {
    const FirSystem dq = cs.expand(0.01 * oracle::random(rng, cs.free_count(), 1).col(0));
    CHECK(h2_norm_lyap(youla_objective(prob.yd, res.q_opt + dq)) >= res.objective - 1e-12);
  }
}

TEST_CASE("serial and parallel solves are bitwise identical") {
  const auto prob = ring_problem(6, 0.3, 6);
  const auto a = solve(prob, Exec::Serial);
  const auto b = solve(prob, Exec::Parallel);
  CHECK(a.objective == b.objective);
  CHECK((a.q_opt - b.q_opt).max_abs() == 0.0);
}

TEST_CASE("objective is non-increasing in the FIR horizon") {
  double prev = std::numeric_limits<double>::infinity();
  for (int tq : {0, 2, 4, 8, 16}) {
    const double j = solve_ring_circulant(6, 0.4, tq, false).objective;
    CHECK(j <= prev + 1e-12);
    prev = j;
  }
}

TEST_CASE("the recovered K achieves the objective on the original plant") {
  for (int n : {3, 4}) {
    const RingModel rm = make_ring(n, 0.5);
    const auto res = solve(ring_problem(n, 0.5, 8));
    const double cl = std::sqrt(oracle::fir_closed_loop_energy(rm.plant, *res.k_opt, 600));
    CHECK(cl == doctest::Approx(res.objective).epsilon(1e-8));
  }
}

TEST_CASE("circulant expansion") {
  const std::vector<Vector> coeffs{Vector::Constant(3, 1.0), Vector::Constant(3, 2.0), Vector::Constant(3, 3.0)};
  const FirSystem q = expand_circulant(4, coeffs, 2);
  CHECK(q.horizon() >= 2);
  // Entry (0, 2) is q_2 delayed by two hops.
  CHECK(q.tap(0)(0, 2) == 0.0);
  CHECK(q.tap(2)(0, 2) == 2.0);
  CHECK(q.tap(1)(0, 1) == 1.0);
  CHECK(q.tap(1)(1, 2) == 1.0);
  CHECK(q.tap(1)(0, 3) == 3.0);
  CHECK(membership(q, ring_delay_structure(4)));
}

TEST_CASE("eliminate_q0 makes the first column relative") {
  const FirSystem m = eliminate_q0(5);
  CHECK(m.rows() == 5);
  CHECK(m.cols() == 4);
  for (int d = 0; d < 4; ++d) {
    double sum = 0.0;
    for (int k = 0; k <= m.horizon(); ++k) sum += m.tap(k).col(d).sum();
    CHECK(sum == 0.0);
  }
}

TEST_CASE("solver rejects a structure that is not quadratically invariant") {
  const Plant p = motivating_plant();
  const auto ms = validate_c2(p.c2);
  IntMatrix lower = IntMatrix::Constant(4, 4, kNever);
  for (int i = 0; i < 4; ++i) lower(i, i) = 0;
  lower(3, 0) = 0;
  SynthesisProblem prob{make_t_systems(build_tilde_plant(p), StateSpace::zero(4, 4), ms), InfoStructure{lower},
                        std::nullopt, 3};
  CHECK_THROWS_AS(solve(prob), DomainError);
}

TEST_CASE("explicit objective horizons that are too short are rejected") {
  auto prob = ring_problem(3, 0.5, 8);
  prob.horizon_obj = 9;
  CHECK_THROWS_AS(solve(prob), DomainError);
}

TEST_CASE("three-node ring optimum has a closed form") {
  // I - L/3 = 11^T/3 clears the disagreement in one step, so T1 has a single
  // tap while T2 Q T3 starts at tap 2; Q = 0 is optimal and
  // J^2 = (1-g)^2 tr(Cbar) + g^2 tr(L^2)/9 = 2(1-g)^2 + 2g^2.
  for (double g : {0.0, 0.2, 0.4, 0.5, 0.8}) {
    const double want = std::sqrt(2.0 * (1.0 - g) * (1.0 - g) + 2.0 * g * g);
    CHECK(solve(ring_problem(3, g, 8)).objective == doctest::Approx(want).epsilon(1e-12));
    CHECK(solve_ring_circulant(3, g, 8, false).objective == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("with a pure control penalty Q still lowers the cost beyond three nodes") {
  for (int n : {4, 5}) {
    const auto prob = ring_problem(n, 1.0, 4);
    const auto res = solve(prob);
    const double nominal = h2_norm_lyap(prob.yd.t1d);
    CHECK(res.objective < nominal - 1e-3);
    CHECK(res.q_opt.max_abs() > 1e-3);
    CHECK(res.objective == doctest::Approx(oracle::brute_force_objective(prob.yd, prob.structure, 4, 4 + 150))
                               .epsilon(1e-9));
  }
}
