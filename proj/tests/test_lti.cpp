#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "relsyn/lti.hpp"

using namespace relsyn;

TEST_CASE("markov taps match direct simulation and eigen powers") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const StateSpace s = oracle::random_system(rng, 4, 2, 3, 0.9);
    const FirSystem m = markov(s, 30);
    CHECK(m.horizon() == 30);
    CHECK(oracle::max_diff(m, oracle::impulse(s, 30)) < 1e-12);
    CHECK(oracle::max_diff(m, oracle::markov_eig(s, 30)) < 1e-9);
  }
}

TEST_CASE("fir_compose is the Markov sequence of the series realization") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const StateSpace g = oracle::random_system(rng, 3, 2, 4, 0.8);
    const StateSpace h = oracle::random_system(rng, 2, 4, 3, 0.7);
    const int t = 25;
    const FirSystem c = fir_compose(markov(g, t), markov(h, t), t);
    CHECK(oracle::max_diff(c, oracle::convolve(oracle::impulse(g, t), oracle::impulse(h, t), t)) < 1e-12);
    CHECK(oracle::max_diff(c, oracle::impulse(series(g, h), t)) < 1e-12);
  }
}

TEST_CASE("fir_compose with default horizon keeps every tap") {
  const FirSystem a = FirSystem::delay(Matrix::Identity(2, 2), 3);
  const FirSystem b = FirSystem::delay(2.0 * Matrix::Identity(2, 2), 4);
  const FirSystem c = fir_compose(a, b);
  REQUIRE(c.horizon() == 7);
  CHECK(c.tap(7).isApprox(2.0 * Matrix::Identity(2, 2)));
  CHECK(c.tap(6).isZero());
}

TEST_CASE("to_state_space reproduces the taps and keeps relative inputs relative") {
  std::mt19937_64 rng(3);
  std::vector<Matrix> taps;
  for (int k = 0; k < 6; ++k) taps.push_back(oracle::random_relative(rng, 3, 4));
  const FirSystem f(taps);
  const StateSpace s = to_state_space(f);
  CHECK(oracle::max_diff(f, oracle::impulse(s, 8)) < 1e-14);
  CHECK((s.b() * Vector::Ones(4)).norm() < 1e-14);
  CHECK((s.d() * Vector::Ones(4)).norm() < 1e-14);
}

TEST_CASE("parallel, negate, scale and multiplications act on the impulse response") {
  std::mt19937_64 rng(4);
  const StateSpace g = oracle::random_system(rng, 3, 2, 2, 0.6);
  const StateSpace h = oracle::random_system(rng, 2, 2, 2, 0.5);
  const int t = 15;
  const auto ig = oracle::impulse(g, t);
  const auto ih = oracle::impulse(h, t);
  CHECK(oracle::max_diff(markov(parallel(g, h), t), oracle::add(ig, ih)) < 1e-13);
  CHECK(oracle::max_diff(markov(negate(g), t) + markov(g, t), std::vector<Matrix>(t + 1, Matrix::Zero(2, 2))) == 0.0);
  const Matrix l = oracle::random(rng, 3, 2);
  const Matrix r = oracle::random(rng, 2, 4);
  const FirSystem lg = markov(left_multiply(l, g), t);
  const FirSystem gr = markov(right_multiply(g, r), t);
  const FirSystem sg = markov(scale(-2.5, g), t);
  for (int k = 0; k <= t; ++k) {
    CHECK((lg.tap(k) - l * ig[static_cast<std::size_t>(k)]).norm() < 1e-13);
    CHECK((gr.tap(k) - ig[static_cast<std::size_t>(k)] * r).norm() < 1e-13);
    CHECK((sg.tap(k) + 2.5 * ig[static_cast<std::size_t>(k)]).norm() < 1e-13);
  }
  const FirSystem st = markov(stack_outputs(g, h), t);
  CHECK(st.rows() == 4);
  CHECK((st.tap(3).topRows(2) - ig[3]).norm() < 1e-13);
  CHECK((st.tap(3).bottomRows(2) - ih[3]).norm() < 1e-13);
}

TEST_CASE("lft agrees with the Neumann series of H (I - G H)^-1") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    StateSpace g = oracle::random_system(rng, 3, 2, 2, 0.5);
    g = StateSpace(g.a(), g.b(), 0.3 * g.c(), Matrix::Zero(2, 2));  // strictly proper, well posed
    const StateSpace h = StateSpace(0.4 * oracle::random_schur(rng, 2, 1.0), 0.3 * oracle::random(rng, 2, 2),
                                    0.3 * oracle::random(rng, 2, 2), 0.3 * oracle::random(rng, 2, 2));
    const int t = 40;
    const auto want = oracle::neumann_lft(oracle::impulse(g, t), oracle::impulse(h, t), t, 60);
    CHECK(oracle::max_diff(markov(lft(g, h), t), want) < 1e-10);
  }
}

TEST_CASE("lft rejects an ill-posed feedthrough") {
  const StateSpace g = StateSpace::gain(Matrix::Identity(1, 1));
  const StateSpace h = StateSpace::gain(Matrix::Identity(1, 1));
  CHECK_THROWS_AS(lft(g, h), WellPosednessError);
}

TEST_CASE("dlyap solves the Stein equation on both solver paths") {
  std::mt19937_64 rng(6);
  for (int n : {3, 12, 20, 21, 35}) {
    const Matrix a = oracle::random_schur(rng, n, 0.95);
    const Matrix b = oracle::random(rng, n, 2);
    const Matrix q = b * b.transpose();
    const Matrix x = dlyap(a, q);
    CHECK((x - a * x * a.transpose() - q).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + x.cwiseAbs().maxCoeff()));
    CHECK((x - x.transpose()).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + x.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("dlyap rejects unstable A") {
  CHECK_THROWS_AS(dlyap(Matrix::Identity(2, 2), Matrix::Identity(2, 2)), DomainError);
}

TEST_CASE("h2_norm_lyap equals the truncated impulse energy") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const StateSpace s = oracle::random_system(rng, 5, 3, 2, 0.85);
    const double direct = std::sqrt(oracle::energy(oracle::impulse(s, 600)));
    CHECK(h2_norm_lyap(s) == doctest::Approx(direct).epsilon(1e-10));
    CHECK(h2_norm_fir(markov(s, 600)) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("tail_energy counts taps from k on") {
  std::mt19937_64 rng(8);
  const StateSpace s = oracle::random_system(rng, 4, 2, 2, 0.8);
  const auto taps = oracle::impulse(s, 800);
  for (int k : {1, 5, 20}) {
    double want = 0.0;
    for (std::size_t i = static_cast<std::size_t>(k); i < taps.size(); ++i) want += taps[i].squaredNorm();
    CHECK(tail_energy(s, k) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("internal stability modulo agreement directions") {
  Matrix a(2, 2);
  a << 1.0, 0.0, 0.0, 0.5;
  const StateSpace s(a, Matrix::Identity(2, 1), Matrix::Identity(1, 2), Matrix::Zero(1, 1));
  CHECK_FALSE(is_internally_stable(s));
  CHECK(is_internally_stable(s, Vector::Unit(2, 0)));
  CHECK_FALSE(is_internally_stable(s, Vector::Unit(2, 1)));
  a(0, 0) = 1.2;
  CHECK_FALSE(is_internally_stable(StateSpace(a, s.b(), s.c(), s.d()), Vector::Unit(2, 0)));
}

TEST_CASE("reduce_agreement drops invariant unobservable directions without changing the response") {
  // Integrator on the mean of two states, observed only through the difference.
  Matrix a(2, 2);
  a << 0.75, 0.25, 0.25, 0.75;  // eigenvalue 1 on [1,1], 0.5 on [1,-1]
  Matrix b(2, 1);
  b << 1, -1;
  Matrix c(1, 2);
  c << 1, -1;
  const StateSpace s(a, b, c, Matrix::Zero(1, 1));
  const StateSpace r = reduce_agreement(s, Vector::Ones(2));
  CHECK(r.states() == 1);
  CHECK(spectral_radius(r.a()) < 1.0);
  CHECK(oracle::max_diff(markov(r, 20), oracle::impulse(s, 20)) < 1e-14);
  // Observable directions are left alone.
  const StateSpace keep = reduce_agreement(StateSpace(a, b, Matrix::Ones(1, 2), Matrix::Zero(1, 1)), Vector::Ones(2));
  CHECK(keep.states() == 2);
}

TEST_CASE("close_loop matches an explicit closed-loop realization") {
  std::mt19937_64 rng(9);
  const Matrix a = oracle::random_schur(rng, 3, 0.7);
  const Matrix b1 = oracle::random(rng, 3, 2);
  const Matrix b2 = oracle::random(rng, 3, 1);
  const Matrix c1 = oracle::random(rng, 2, 3);
  const Matrix d12 = oracle::random(rng, 2, 1);
  const Matrix c2 = oracle::random(rng, 2, 3);
  const Plant p(a, b1, b2, c1, d12, c2);
  const Matrix kd = 0.2 * oracle::random(rng, 1, 2);
  // Static u = Kd y: x+ = (A + B2 Kd C2) x + B1 w, z = (C1 + D12 Kd C2) x.
  const StateSpace want(a + b2 * kd * c2, b1, c1 + d12 * kd * c2, Matrix::Zero(2, 2));
  const StateSpace got = close_loop(p, StateSpace::gain(kd));
  CHECK(oracle::max_diff(markov(got, 40), oracle::impulse(want, 40)) < 1e-12);
}

TEST_CASE("constructors reject inconsistent or non-finite data") {
  CHECK_THROWS_AS(StateSpace(Matrix::Zero(2, 2), Matrix::Zero(3, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 1)),
                  StructuralError);
  Matrix bad = Matrix::Zero(1, 1);
  bad(0, 0) = std::nan("");
  CHECK_THROWS(StateSpace::gain(bad));
  CHECK_THROWS(FirSystem({Matrix::Zero(1, 2), Matrix::Zero(2, 2)}));
}
