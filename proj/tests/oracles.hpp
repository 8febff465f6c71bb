#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the library routine it is meant to check.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <random>
#include <vector>

#include "relsyn/lti.hpp"
#include "relsyn/measurement_graph.hpp"
#include "relsyn/structure.hpp"
#include "relsyn/youla.hpp"

namespace oracle {

using relsyn::FirSystem;
using relsyn::Matrix;
using relsyn::StateSpace;
using relsyn::Vector;

/// Impulse response by stepping x[t+1] = A x + B u one input column at a time.
inline std::vector<Matrix> impulse(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d, int horizon) {
  std::vector<Matrix> out(static_cast<std::size_t>(horizon + 1), Matrix::Zero(c.rows(), b.cols()));
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    Vector x = Vector::Zero(a.rows());
    for (int t = 0; t <= horizon; ++t) {
      const double u = t == 0 ? 1.0 : 0.0;
      Vector y = c * x;
      if (u != 0.0) y += d.col(j);
      out[static_cast<std::size_t>(t)].col(j) = y;
      Vector next = a * x;
      if (u != 0.0) next += b.col(j);
      x = next;
    }
  }
  return out;
}

inline std::vector<Matrix> impulse(const StateSpace& s, int horizon) {
  return impulse(s.a(), s.b(), s.c(), s.d(), horizon);
}

/// Taps C A^(k-1) B through the eigen-decomposition of A (diagonalizable A).
inline std::vector<Matrix> markov_eig(const StateSpace& s, int horizon) {
  Eigen::EigenSolver<Matrix> es(s.a());
  const Eigen::MatrixXcd v = es.eigenvectors();
  const Eigen::VectorXcd lam = es.eigenvalues();
  const Eigen::MatrixXcd vinv = v.inverse();
  const Eigen::MatrixXcd cv = s.c().cast<std::complex<double>>() * v;
  const Eigen::MatrixXcd vb = vinv * s.b().cast<std::complex<double>>();
  std::vector<Matrix> out{s.d()};
  for (int k = 1; k <= horizon; ++k) {
    Eigen::VectorXcd p(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) p(i) = std::pow(lam(i), k - 1);
    out.push_back((cv * p.asDiagonal() * vb).real());
  }
  return out;
}

/// Full Cauchy product of two tap sequences, truncated to `horizon`.
inline std::vector<Matrix> convolve(const std::vector<Matrix>& g, const std::vector<Matrix>& h, int horizon) {
  std::vector<Matrix> out(static_cast<std::size_t>(horizon + 1), Matrix::Zero(g[0].rows(), h[0].cols()));
  for (int t = 0; t <= horizon; ++t)
    for (int a = 0; a <= t; ++a)
      if (a < static_cast<int>(g.size()) && t - a < static_cast<int>(h.size()))
        out[static_cast<std::size_t>(t)] += g[static_cast<std::size_t>(a)] * h[static_cast<std::size_t>(t - a)];
  return out;
}

inline std::vector<Matrix> add(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  std::vector<Matrix> out = a;
  for (std::size_t i = 0; i < out.size() && i < b.size(); ++i) out[i] += b[i];
  return out;
}

/// H (I - G H)^-1 as the truncated Neumann series H + HGH + HGHGH + ...
inline std::vector<Matrix> neumann_lft(const std::vector<Matrix>& g, const std::vector<Matrix>& h, int horizon,
                                       int terms = 200) {
  std::vector<Matrix> term = h;
  term.resize(static_cast<std::size_t>(horizon + 1), Matrix::Zero(h[0].rows(), h[0].cols()));
  std::vector<Matrix> sum = term;
  for (int i = 0; i < terms; ++i) {
    term = convolve(convolve(term, g, horizon), h, horizon);
    sum = add(sum, term);
  }
  return sum;
}

inline double energy(const std::vector<Matrix>& taps) {
  double s = 0.0;
  for (const auto& t : taps) s += t.squaredNorm();
  return s;
}

inline double max_diff(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return m;
}

inline double max_diff(const FirSystem& a, const std::vector<Matrix>& b) { return max_diff(a.taps(), b); }

/// Random matrix with entries uniform in [-1, 1].
inline Matrix random(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
  return m;
}

/// Random A rescaled to spectral radius `rho`.
inline Matrix random_schur(std::mt19937_64& rng, Eigen::Index n, double rho) {
  Matrix a = random(rng, n, n);
  Eigen::EigenSolver<Matrix> es(a, false);
  const double r = es.eigenvalues().cwiseAbs().maxCoeff();
  return r > 0 ? Matrix(a * (rho / r)) : a;
}

inline StateSpace random_system(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p, Eigen::Index m, double rho) {
  return StateSpace(random_schur(rng, n, rho), random(rng, n, m), random(rng, p, n), random(rng, p, m));
}

/// Random connected measurement matrix: a random spanning tree plus extra edges.
inline Matrix random_connected_c2(std::mt19937_64& rng, int n, int extra) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> pick(0, v - 1);
    edges.emplace_back(pick(rng), v);
  }
  std::uniform_int_distribution<int> any(0, n - 1);
  for (int e = 0; e < extra; ++e) {
    const int a = any(rng);
    const int b = any(rng);
    if (a == b) continue;
    bool dup = false;
    for (const auto& [x, y] : edges) dup = dup || (x == a && y == b) || (x == b && y == a);
    if (!dup) edges.emplace_back(a, b);
  }
  std::shuffle(edges.begin(), edges.end(), rng);
  Matrix c2 = Matrix::Zero(static_cast<Eigen::Index>(edges.size()), n);
  std::bernoulli_distribution flip(0.5);
  for (std::size_t r = 0; r < edges.size(); ++r) {
    auto [a, b] = edges[r];
    if (flip(rng)) std::swap(a, b);
    c2(static_cast<Eigen::Index>(r), a) = 1;
    c2(static_cast<Eigen::Index>(r), b) = -1;
  }
  return c2;
}

/// Random matrix whose rows sum to zero.
inline Matrix random_relative(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m = random(rng, r, c);
  for (Eigen::Index i = 0; i < r; ++i) m.row(i).array() -= m.row(i).mean();
  return m;
}

/// Dense QP over every coefficient Q_k(i,j), k <= tq: structural zeros and the
/// indicator row sums enter as equality constraints, the objective is the
/// truncated energy of T1 + T2 Q T3 up to `horizon`. Solved through the KKT
/// system; returns the square root of the minimal energy.
inline double brute_force_objective(const relsyn::YoulaData& yd, const relsyn::InfoStructure& s, int tq,
                                    int horizon) {
  const auto t1 = impulse(yd.t1, horizon);
  const auto t2 = impulse(yd.t2, horizon);
  const auto t3 = impulse(yd.t3, horizon);
  const Eigen::Index nz = t1[0].rows();
  const Eigen::Index nw = t1[0].cols();
  const Eigen::Index n = t2[0].cols();
  const Eigen::Index m = t3[0].rows();
  const Eigen::Index per_tap = nz * nw;
  const Eigen::Index nv = (tq + 1) * n * m;
  auto var = [&](int k, Eigen::Index i, Eigen::Index j) { return (k * n + i) * m + j; };

  Matrix a = Matrix::Zero(per_tap * (horizon + 1), nv);
  Vector b(per_tap * (horizon + 1));
  for (int t = 0; t <= horizon; ++t)
    b.segment(t * per_tap, per_tap) = Eigen::Map<const Vector>(t1[static_cast<std::size_t>(t)].data(), per_tap);
  for (int k = 0; k <= tq; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        // T2 e_i e_j^T z^-k T3: tap t collects T2_a(:, i) T3_c(j, :) with a + k + c = t.
        for (int t = k; t <= horizon; ++t) {
          Matrix acc = Matrix::Zero(nz, nw);
          for (int aa = 0; aa <= t - k; ++aa)
            acc += t2[static_cast<std::size_t>(aa)].col(i) * t3[static_cast<std::size_t>(t - k - aa)].row(j);
          a.block(t * per_tap, var(k, i, j), per_tap, 1) = Eigen::Map<const Vector>(acc.data(), per_tap);
        }
      }

  std::vector<Vector> rows;
  for (int k = 0; k <= tq; ++k)
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j)
        if (!s.allows(i, j, k)) rows.push_back(Vector::Unit(nv, var(k, i, j)));
      for (const auto& e : yd.ms.indicators) {
        Vector r = Vector::Zero(nv);
        for (Eigen::Index j = 0; j < m; ++j) r(var(k, i, j)) = e(j);
        rows.push_back(r);
      }
    }
  const auto nc = static_cast<Eigen::Index>(rows.size());
  Matrix kkt = Matrix::Zero(nv + nc, nv + nc);
  kkt.topLeftCorner(nv, nv) = a.transpose() * a;
  for (Eigen::Index r = 0; r < nc; ++r) {
    kkt.block(nv + r, 0, 1, nv) = rows[static_cast<std::size_t>(r)].transpose();
    kkt.block(0, nv + r, nv, 1) = rows[static_cast<std::size_t>(r)];
  }
  Vector rhs = Vector::Zero(nv + nc);
  rhs.head(nv) = -a.transpose() * b;
  const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  return (a * sol.head(nv) + b).norm();
}

/// Energy of the impulse response w -> z up to `horizon` with u[t] = sum_k
/// K_k y[t-k], y = C2 x, simulated directly on the plant.
inline double fir_closed_loop_energy(const relsyn::Plant& p, const FirSystem& k, int horizon) {
  double total = 0.0;
  for (Eigen::Index w = 0; w < p.disturbances(); ++w) {
    Vector x = Vector::Zero(p.states());
    std::vector<Vector> ys;
    for (int t = 0; t <= horizon; ++t) {
      ys.push_back(p.c2 * x);
      Vector u = Vector::Zero(p.controls());
      for (int d = 0; d <= k.horizon() && d <= t; ++d) u += k.tap(d) * ys[static_cast<std::size_t>(t - d)];
      Vector z = p.c1 * x + p.d12 * u;
      if (t == 0) z += p.d11.col(w);
      total += z.squaredNorm();
      Vector next = p.a * x + p.b2 * u;
      if (t == 0) next += p.b1.col(w);
      x = next;
    }
  }
  return total;
}

}  // namespace oracle
