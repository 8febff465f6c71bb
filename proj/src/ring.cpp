#include "relsyn/ring.hpp"

#include <string>

namespace relsyn {

IntMatrix ring_adjacency(int n) {
  IntMatrix a = IntMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int next = (i + 1) % n;
    if (next == i) continue;
    a(i, next) = 1;
    a(next, i) = 1;
  }
  return a;
}

Matrix ring_c2(int n) {
  if (n < 2) throw DomainError("ring needs at least 2 nodes");
  if (n == 2) {
    Matrix c2(1, 2);
    c2 << 1, -1;
    return c2;
  }
  Matrix c2 = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    c2(j, j) = 1;
    c2(j, (j + n - 1) % n) = -1;
  }
  return c2;
}

Matrix consensus_projector(int n) {
  return Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
}

RingModel make_ring(int n, double gamma) {
  if (n < 2) throw DomainError("ring needs at least 2 nodes, got " + std::to_string(n));
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in [0, 1], got " + std::to_string(gamma));
  const Matrix eye = Matrix::Identity(n, n);
  Matrix c1 = Matrix::Zero(2 * n, n);
  c1.topRows(n) = (1.0 - gamma) * consensus_projector(n);
  Matrix d12 = Matrix::Zero(2 * n, n);
  d12.bottomRows(n) = gamma * eye;
  Plant plant(eye, eye, eye, c1, d12, ring_c2(n));
  auto ms = validate_c2(plant.c2);
  auto q_structure = ring_delay_structure(n);
  auto k_structure = measurement_delay_structure(q_structure, ms);
  auto r_nom = laplacian_rnom(ms.adjacency);
  return RingModel{n, gamma, std::move(plant), std::move(ms), std::move(q_structure), std::move(k_structure),
                   std::move(r_nom)};
}

}  // namespace relsyn
