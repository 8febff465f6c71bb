#include "relsyn/kernels.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

#include "relsyn/structure.hpp"

namespace relsyn {

int worker_count() {
  if (const char* env = std::getenv("RELSYN_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return omp_get_max_threads();
}

namespace {

// First violating (j, k, m) for a fixed row i of s.
std::optional<std::array<int, 4>> qi_row(const IntMatrix& s, const IntMatrix& g, int i) {
  const auto p = s.cols();
  const auto l = s.rows();
  for (int j = 0; j < p; ++j) {
    if (s(i, j) == kNever) continue;
    for (int k = 0; k < l; ++k) {
      if (g(j, k) == kNever) continue;
      for (int m = 0; m < p; ++m) {
        if (s(k, m) == kNever) continue;
        const long long lhs = static_cast<long long>(s(i, j)) + g(j, k) + s(k, m);
        if (s(i, m) == kNever || lhs < s(i, m)) return std::array<int, 4>{i, j, k, m};
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::array<int, 4>> qi_scan(const IntMatrix& s, const IntMatrix& g, Exec exec) {
  const int l = static_cast<int>(s.rows());
  std::vector<std::optional<std::array<int, 4>>> per_row(static_cast<std::size_t>(l));
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (int i = 0; i < l; ++i) per_row[static_cast<std::size_t>(i)] = qi_row(s, g, i);
  } else {
    for (int i = 0; i < l; ++i) per_row[static_cast<std::size_t>(i)] = qi_row(s, g, i);
  }
  for (const auto& v : per_row)
    if (v) return v;
  return std::nullopt;
}

namespace {

Matrix elementary(const FirSystem& t2, const FirSystem& t3, int i, int j, int horizon) {
  const auto p = t2.rows();
  const auto q = t3.cols();
  Matrix e = Matrix::Zero(p * q, horizon + 1);
  for (int a = 0; a <= t2.horizon() && a <= horizon; ++a) {
    const Vector col = t2.tap(a).col(i);
    if (col.isZero(0.0)) continue;
    for (int c = 0; c <= t3.horizon() && a + c <= horizon; ++c) {
      const Eigen::RowVectorXd row = t3.tap(c).row(j);
      Eigen::Map<Matrix> block(e.col(a + c).data(), p, q);
      block.noalias() += col * row;
    }
  }
  return e;
}

void fill_column(Matrix& out, Eigen::Index f, const std::vector<Matrix>& elem, const ConstraintSystem& cs,
                 int horizon) {
  const auto pq = elem.front().rows();
  for (const auto& [v, w] : cs.basis[static_cast<std::size_t>(f)]) {
    const auto& var = cs.variables[static_cast<std::size_t>(v)];
    const Matrix& e = elem[static_cast<std::size_t>(var.row * cs.cols + var.col)];
    for (int t = var.tap; t <= horizon; ++t) {
      out.col(f).segment(t * pq, pq) += w * e.col(t - var.tap);
    }
  }
}

}  // namespace

std::vector<Matrix> elementary_responses(const FirSystem& t2, const FirSystem& t3, int horizon, Exec exec) {
  const int l = static_cast<int>(t2.cols());
  const int n = static_cast<int>(t3.rows());
  std::vector<Matrix> out(static_cast<std::size_t>(l * n));
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (int idx = 0; idx < l * n; ++idx) out[static_cast<std::size_t>(idx)] = elementary(t2, t3, idx / n, idx % n, horizon);
  } else {
    for (int idx = 0; idx < l * n; ++idx) out[static_cast<std::size_t>(idx)] = elementary(t2, t3, idx / n, idx % n, horizon);
  }
  return out;
}

Matrix assemble_regressor(const std::vector<Matrix>& elementary, const ConstraintSystem& cs, int horizon, Exec exec) {
  if (elementary.size() != static_cast<std::size_t>(cs.rows * cs.cols)) {
    throw StructuralError("assemble_regressor: elementary responses do not match the constraint shape");
  }
  const auto pq = elementary.empty() ? 0 : elementary.front().rows();
  const auto free = cs.free_count();
  Matrix out = Matrix::Zero((horizon + 1) * pq, free);
  if (elementary.empty()) return out;
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (Eigen::Index f = 0; f < free; ++f) fill_column(out, f, elementary, cs, horizon);
  } else {
    for (Eigen::Index f = 0; f < free; ++f) fill_column(out, f, elementary, cs, horizon);
  }
  return out;
}

}  // namespace relsyn
