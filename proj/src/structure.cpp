#include "relsyn/structure.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <string>

#include "relsyn/kernels.hpp"

namespace relsyn {

InfoStructure InfoStructure::full(Eigen::Index rows, Eigen::Index cols, int delay) {
  return {IntMatrix::Constant(rows, cols, delay)};
}

InfoStructure InfoStructure::empty(Eigen::Index rows, Eigen::Index cols) {
  return {IntMatrix::Constant(rows, cols, kNever)};
}

InfoStructure InfoStructure::sparsity(const IntMatrix& pattern) {
  return {pattern.unaryExpr([](int v) { return v != 0 ? 0 : kNever; })};
}

InfoStructure ring_delay_structure(int n) {
  if (n < 2) throw DomainError("ring_delay_structure: n must be at least 2");
  IntMatrix d(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int gap = std::abs(i - j);
      d(i, j) = std::min(gap, n - gap);
    }
  }
  return {d};
}

InfoStructure graph_delay_structure(const IntMatrix& adjacency) {
  const auto n = adjacency.rows();
  IntMatrix d = IntMatrix::Constant(n, n, kNever);
  for (Eigen::Index s = 0; s < n; ++s) {
    d(s, s) = 0;
    std::deque<Eigen::Index> queue{s};
    while (!queue.empty()) {
      const auto v = queue.front();
      queue.pop_front();
      for (Eigen::Index w = 0; w < n; ++w) {
        if (adjacency(v, w) && d(s, w) == kNever) {
          d(s, w) = d(s, v) + 1;
          queue.push_back(w);
        }
      }
    }
  }
  return {d};
}

InfoStructure upper_triangular_structure(int n) {
  IntMatrix d = IntMatrix::Constant(n, n, kNever);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) d(i, j) = 0;
  return {d};
}

InfoStructure measurement_delay_structure(const InfoStructure& state_structure, const MeasurementStructure& ms) {
  if (state_structure.cols() != ms.states()) {
    throw StructuralError("measurement_delay_structure: structure has the wrong number of columns");
  }
  IntMatrix d(state_structure.rows(), ms.measurements());
  for (int r = 0; r < ms.measurements(); ++r) {
    int a = -1;
    int b = -1;
    for (int j = 0; j < ms.states(); ++j) {
      if (ms.c2(r, j) == 1) a = j;
      if (ms.c2(r, j) == -1) b = j;
    }
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      d(i, r) = std::min(state_structure.min_delay(i, a), state_structure.min_delay(i, b));
    }
  }
  return {d};
}

bool membership(const FirSystem& q, const InfoStructure& s) {
  if (q.rows() != s.rows() || q.cols() != s.cols()) throw StructuralError("membership: dimension mismatch");
  for (int k = 0; k <= q.horizon(); ++k) {
    const Matrix& t = q.tap(k);
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j)
        if (t(i, j) != 0.0 && !s.allows(i, j, k)) return false;
  }
  return true;
}

InfoStructure plant_pattern(const StateSpace& sys, PatternMode mode, double tol) {
  const auto p = sys.outputs();
  const auto m = sys.inputs();
  const auto n = sys.states();
  IntMatrix d = IntMatrix::Constant(p, m, kNever);

  if (mode == PatternMode::Numerical) {
    const FirSystem f = markov(sys, static_cast<int>(2 * n + 1));
    for (int k = f.horizon(); k >= 0; --k)
      for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          if (std::abs(f.tap(k)(i, j)) > tol) d(i, j) = k;
    return {d};
  }

  // hops(b, a): fewest A-steps carrying state b into state a.
  IntMatrix hops = IntMatrix::Constant(n, n, kNever);
  for (Eigen::Index b = 0; b < n; ++b) {
    hops(b, b) = 0;
    std::deque<Eigen::Index> queue{b};
    while (!queue.empty()) {
      const auto v = queue.front();
      queue.pop_front();
      for (Eigen::Index a = 0; a < n; ++a) {
        if (sys.a()(a, v) != 0.0 && hops(b, a) == kNever) {
          hops(b, a) = hops(b, v) + 1;
          queue.push_back(a);
        }
      }
    }
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (sys.d()(i, j) != 0.0) {
        d(i, j) = 0;
        continue;
      }
      for (Eigen::Index b = 0; b < n; ++b) {
        if (sys.b()(b, j) == 0.0) continue;
        for (Eigen::Index a = 0; a < n; ++a) {
          if (sys.c()(i, a) == 0.0 || hops(b, a) == kNever) continue;
          d(i, j) = std::min(d(i, j), hops(b, a) + 1);
        }
      }
    }
  }
  return {d};
}

QiResult is_qi(const InfoStructure& s, const InfoStructure& g) {
  if (s.cols() != g.rows() || g.cols() != s.rows()) {
    throw StructuralError("is_qi: structure is " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                          " but plant pattern is " + std::to_string(g.rows()) + "x" + std::to_string(g.cols()));
  }
  QiResult out;
  out.violation = qi_scan(s.min_delay, g.min_delay);
  out.invariant = !out.violation.has_value();
  return out;
}

FirSystem ConstraintSystem::expand(const Vector& free) const {
  if (free.size() != free_count()) throw StructuralError("expand: wrong number of free coordinates");
  std::vector<Matrix> taps(static_cast<std::size_t>(horizon + 1), Matrix::Zero(rows, cols));
  for (std::size_t f = 0; f < basis.size(); ++f) {
    const double c = free(static_cast<Eigen::Index>(f));
    for (const auto& [v, w] : basis[f]) {
      const auto& var = variables[static_cast<std::size_t>(v)];
      taps[static_cast<std::size_t>(var.tap)](var.row, var.col) += c * w;
    }
  }
  return FirSystem(std::move(taps));
}

double ConstraintSystem::violation(const FirSystem& q) const {
  double worst = 0.0;
  for (const auto& eq : equalities) {
    double s = 0.0;
    for (const auto& [v, w] : eq) {
      const auto& var = variables[static_cast<std::size_t>(v)];
      if (var.tap <= q.horizon()) s += w * q.tap(var.tap)(var.row, var.col);
    }
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

ConstraintSystem compile_constraints(const InfoStructure& s, const std::vector<Vector>& indicators, int horizon) {
  if (horizon < 0) throw DomainError("compile_constraints: horizon must be nonnegative");
  for (const auto& e : indicators) {
    if (e.size() != s.cols()) throw StructuralError("compile_constraints: indicator length differs from column count");
  }
  ConstraintSystem cs;
  cs.rows = s.rows();
  cs.cols = s.cols();
  cs.horizon = horizon;

  // Column -> indicator group; -1 when no indicator covers it.
  std::vector<int> group(static_cast<std::size_t>(s.cols()), -1);
  for (std::size_t g = 0; g < indicators.size(); ++g)
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      if (indicators[g](j) != 0.0) group[static_cast<std::size_t>(j)] = static_cast<int>(g);

  for (int k = 0; k <= horizon; ++k) {
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      std::map<int, std::vector<int>> members;
      for (Eigen::Index j = 0; j < s.cols(); ++j) {
        if (!s.allows(i, j, k)) {
          ++cs.frozen;
          continue;
        }
        const int v = static_cast<int>(cs.variables.size());
        cs.variables.push_back({k, static_cast<int>(i), static_cast<int>(j)});
        const int g = group[static_cast<std::size_t>(j)];
        if (g < 0) {
          cs.basis.push_back({{v, 1.0}});
        } else {
          members[g].push_back(v);
        }
      }
      for (const auto& [g, vars] : members) {
        (void)g;
        std::vector<std::pair<int, double>> eq;
        for (int v : vars) eq.emplace_back(v, 1.0);
        cs.equalities.push_back(std::move(eq));
        // Helmert vectors span the zero-sum subspace of the group.
        for (std::size_t len = 1; len < vars.size(); ++len) {
          const double scale = 1.0 / std::sqrt(static_cast<double>(len * (len + 1)));
          std::vector<std::pair<int, double>> dir;
          for (std::size_t t = 0; t < len; ++t) dir.emplace_back(vars[t], scale);
          dir.emplace_back(vars[len], -static_cast<double>(len) * scale);
          cs.basis.push_back(std::move(dir));
        }
      }
    }
  }
  return cs;
}

FirSystem recover_structured(const FirSystem& r, const MeasurementStructure& ms, const InfoStructure& k_structure,
                             double tol) {
  if (r.cols() != ms.states()) throw StructuralError("recover_structured: R has the wrong number of columns");
  if (k_structure.rows() != r.rows() || k_structure.cols() != ms.measurements()) {
    throw StructuralError("recover_structured: controller structure has the wrong shape");
  }
  std::map<std::vector<bool>, std::pair<MeasurementStructure, std::vector<int>>> cache;
  std::vector<Matrix> taps;
  for (int k = 0; k <= r.horizon(); ++k) {
    Matrix kt = Matrix::Zero(r.rows(), ms.measurements());
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      std::vector<bool> mask(static_cast<std::size_t>(ms.measurements()));
      for (int q = 0; q < ms.measurements(); ++q) mask[static_cast<std::size_t>(q)] = k_structure.allows(i, q, k);
      auto it = cache.find(mask);
      if (it == cache.end()) {
        std::vector<int> rows;
        for (int q = 0; q < ms.measurements(); ++q)
          if (mask[static_cast<std::size_t>(q)]) rows.push_back(q);
        Matrix sub(static_cast<Eigen::Index>(rows.size()), ms.states());
        for (std::size_t q = 0; q < rows.size(); ++q) sub.row(static_cast<Eigen::Index>(q)) = ms.c2_real().row(rows[q]);
        it = cache.emplace(mask, std::make_pair(validate_c2(sub), rows)).first;
      }
      const auto& [sub_ms, rows] = it->second;
      Matrix coeffs;
      try {
        coeffs = recover_static(r.tap(k).row(i), sub_ms, tol);
      } catch (const InfeasibleDecomposition& e) {
        DecompositionFailure f = e.failure();
        f.tap = k;
        f.row = static_cast<int>(i);
        throw InfeasibleDecomposition(f, "recover_structured: allowed measurements cannot express R");
      }
      for (std::size_t q = 0; q < rows.size(); ++q) kt(i, rows[q]) = coeffs(0, static_cast<Eigen::Index>(q));
    }
    taps.push_back(std::move(kt));
  }
  return FirSystem(std::move(taps));
}

}  // namespace relsyn
