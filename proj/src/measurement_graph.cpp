#include "relsyn/measurement_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <string>
#include <utility>

namespace relsyn {

namespace {

// Endpoints of measurement row r: (+1 column, -1 column).
std::pair<int, int> endpoints(const IntMatrix& c2, int r) {
  int plus = -1;
  int minus = -1;
  for (int j = 0; j < c2.cols(); ++j) {
    if (c2(r, j) == 1) plus = j;
    if (c2(r, j) == -1) minus = j;
  }
  return {plus, minus};
}

}  // namespace

Matrix MeasurementStructure::indicator_matrix() const {
  Matrix e(states(), static_cast<Eigen::Index>(indicators.size()));
  for (std::size_t i = 0; i < indicators.size(); ++i) e.col(static_cast<Eigen::Index>(i)) = indicators[i];
  return e;
}

std::vector<int> MeasurementStructure::component_rows(int c) const {
  std::vector<int> rows;
  for (int r = 0; r < measurements(); ++r) {
    const auto [a, b] = endpoints(c2, r);
    (void)b;
    if (component_of[static_cast<std::size_t>(a)] == c) rows.push_back(r);
  }
  return rows;
}

MeasurementStructure validate_c2(const Matrix& c2) {
  const auto p = c2.rows();
  const auto n = c2.cols();
  MeasurementStructure ms;
  ms.c2 = IntMatrix::Zero(p, n);
  std::set<std::pair<int, int>> seen;
  for (Eigen::Index r = 0; r < p; ++r) {
    int plus = 0;
    int minus = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = c2(r, j);
      if (v == 1.0) {
        ++plus;
        ms.c2(r, j) = 1;
      } else if (v == -1.0) {
        ++minus;
        ms.c2(r, j) = -1;
      } else if (v != 0.0) {
        throw StructuralError("C2 entry (" + std::to_string(r + 1) + "," + std::to_string(j + 1) +
                              ") is not in {0, 1, -1}");
      }
    }
    if (plus != 1 || minus != 1) {
      throw StructuralError("C2 row " + std::to_string(r + 1) + " must hold exactly one +1 and one -1");
    }
    const auto [a, b] = endpoints(ms.c2, static_cast<int>(r));
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      throw StructuralError("C2 row " + std::to_string(r + 1) + " repeats an earlier measurement");
    }
  }

  ms.adjacency = IntMatrix::Zero(n, n);
  for (int r = 0; r < p; ++r) {
    const auto [a, b] = endpoints(ms.c2, r);
    ms.adjacency(a, b) = 1;
    ms.adjacency(b, a) = 1;
  }

  ms.component_of.assign(static_cast<std::size_t>(n), -1);
  for (int s = 0; s < n; ++s) {
    if (ms.component_of[static_cast<std::size_t>(s)] >= 0) continue;
    const int id = static_cast<int>(ms.components.size());
    std::vector<int> members;
    std::deque<int> queue{s};
    ms.component_of[static_cast<std::size_t>(s)] = id;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      members.push_back(v);
      for (int w = 0; w < n; ++w) {
        if (ms.adjacency(v, w) && ms.component_of[static_cast<std::size_t>(w)] < 0) {
          ms.component_of[static_cast<std::size_t>(w)] = id;
          queue.push_back(w);
        }
      }
    }
    std::sort(members.begin(), members.end());
    Vector e = Vector::Zero(n);
    for (int v : members) e(v) = 1.0;
    ms.components.push_back(std::move(members));
    ms.indicators.push_back(std::move(e));
  }
  return ms;
}

bool is_relative_map(const Matrix& f, double tol) {
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    if (std::abs(f.row(i).sum()) > tol) return false;
  }
  return true;
}

FirSystem RelativeDecomposition::reassemble(const MeasurementStructure& ms) const {
  if (blocks.empty()) throw DomainError("reassemble: no blocks");
  const int horizon = blocks.front().horizon();
  std::vector<Matrix> taps(static_cast<std::size_t>(horizon + 1),
                           Matrix::Zero(blocks.front().rows(), ms.states()));
  for (std::size_t c = 0; c < blocks.size(); ++c) {
    const auto& cols = ms.components[c];
    for (int k = 0; k <= horizon; ++k) {
      for (std::size_t j = 0; j < cols.size(); ++j) {
        taps[static_cast<std::size_t>(k)].col(cols[j]) = blocks[c].tap(k).col(static_cast<Eigen::Index>(j));
      }
    }
  }
  return FirSystem(std::move(taps));
}

RelativeDecomposition decompose(const FirSystem& r, const MeasurementStructure& ms, double tol) {
  if (r.cols() != ms.states()) throw StructuralError("decompose: R has the wrong number of columns");
  RelativeDecomposition out;
  for (std::size_t c = 0; c < ms.components.size(); ++c) {
    const auto& cols = ms.components[c];
    std::vector<Matrix> taps;
    for (int k = 0; k <= r.horizon(); ++k) {
      Matrix blk(r.rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t j = 0; j < cols.size(); ++j) blk.col(static_cast<Eigen::Index>(j)) = r.tap(k).col(cols[j]);
      if (!out.failure) {
        for (Eigen::Index i = 0; i < blk.rows(); ++i) {
          const double s = blk.row(i).sum();
          // A single-state block is relative only when it vanishes.
          const double resid = cols.size() == 1 ? std::abs(blk(i, 0)) : std::abs(s);
          if (resid > tol) {
            out.failure = DecompositionFailure{static_cast<int>(c), k, static_cast<int>(i), resid};
            break;
          }
        }
      }
      taps.push_back(std::move(blk));
    }
    out.blocks.emplace_back(std::move(taps));
  }
  return out;
}

RelativeDecomposition decompose(const Matrix& r, const MeasurementStructure& ms, double tol) {
  return decompose(FirSystem({r}), ms, tol);
}

InfeasibleDecomposition::InfeasibleDecomposition(const DecompositionFailure& f, const std::string& context)
    : DomainError(context + ": component " + std::to_string(f.component + 1) + " is not relative at tap " +
                  std::to_string(f.tap) + ", row " + std::to_string(f.row + 1) + " (residual " +
                  std::to_string(f.residual) + ")"),
      failure_(f) {}

IntMatrix chain_matrix(int n) {
  IntMatrix m = IntMatrix::Zero(std::max(n - 1, 0), n);
  for (int k = 0; k + 1 < n; ++k) {
    m(k, k) = 1;
    m(k, k + 1) = -1;
  }
  return m;
}

ChainTransform chain_transform(const MeasurementStructure& ms, int component) {
  if (component < 0 || component >= static_cast<int>(ms.components.size())) {
    throw StructuralError("chain_transform: component index out of range");
  }
  const auto& members = ms.components[static_cast<std::size_t>(component)];
  const int n = ms.states();
  ChainTransform ct;
  ct.rows = ms.component_rows(component);

  // Edge lookup: (a, b) -> measurement row.
  IntMatrix edge = IntMatrix::Constant(n, n, -1);
  for (int r : ct.rows) {
    const auto [a, b] = endpoints(ms.c2, r);
    edge(a, b) = r;
    edge(b, a) = r;
  }

  // BFS spanning tree from the smallest index, neighbours in index order.
  const int root = members.front();
  std::vector<int> parent(static_cast<std::size_t>(n), -2);
  std::vector<int> depth(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
  std::deque<int> queue{root};
  parent[static_cast<std::size_t>(root)] = -1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w = 0; w < n; ++w) {
      if (ms.adjacency(v, w) && parent[static_cast<std::size_t>(w)] == -2) {
        parent[static_cast<std::size_t>(w)] = v;
        depth[static_cast<std::size_t>(w)] = depth[static_cast<std::size_t>(v)] + 1;
        children[static_cast<std::size_t>(v)].push_back(w);
        queue.push_back(w);
      }
    }
  }

  // Depth-first preorder of the tree gives the chain ordering.
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    ct.ordering.push_back(v);
    const auto& ch = children[static_cast<std::size_t>(v)];
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  if (ct.ordering.size() != members.size()) throw StructuralError("chain_transform: component is not connected");

  const auto p_c = static_cast<Eigen::Index>(ct.rows.size());
  std::vector<int> local(static_cast<std::size_t>(ms.measurements()), -1);
  for (Eigen::Index i = 0; i < p_c; ++i) local[static_cast<std::size_t>(ct.rows[static_cast<std::size_t>(i)])] = static_cast<int>(i);

  ct.t = IntMatrix::Zero(p_c, p_c);
  std::vector<bool> in_tree(static_cast<std::size_t>(p_c), false);
  // Signed row for the step v -> parent(v): x_v - x_parent.
  auto add_step = [&](Eigen::Index out_row, int v, int sign) {
    const int pv = parent[static_cast<std::size_t>(v)];
    const int r = edge(v, pv);
    const int li = local[static_cast<std::size_t>(r)];
    ct.t(out_row, li) += sign * ms.c2(r, v);
    in_tree[static_cast<std::size_t>(li)] = true;
  };
  for (std::size_t k = 0; k + 1 < ct.ordering.size(); ++k) {
    // x_u - x_v as a walk u -> lca <- v along tree edges.
    int u = ct.ordering[k];
    int v = ct.ordering[k + 1];
    const auto row = static_cast<Eigen::Index>(k);
    while (u != v) {
      if (depth[static_cast<std::size_t>(u)] >= depth[static_cast<std::size_t>(v)]) {
        add_step(row, u, 1);
        u = parent[static_cast<std::size_t>(u)];
      } else {
        add_step(row, v, -1);
        v = parent[static_cast<std::size_t>(v)];
      }
    }
  }
  Eigen::Index next = static_cast<Eigen::Index>(ct.ordering.size()) - 1;
  for (Eigen::Index i = 0; i < p_c; ++i) {
    if (!in_tree[static_cast<std::size_t>(i)]) ct.t(next++, i) = 1;
  }
  return ct;
}

Matrix solve_chain(const Matrix& f, double tol) {
  if (!is_relative_map(f, tol)) throw DomainError("solve_chain: F is not relative");
  const auto n = f.cols();
  Matrix g = Matrix::Zero(f.rows(), std::max<Eigen::Index>(n - 1, 0));
  if (n < 2) return g;
  g.col(0) = f.col(0);
  for (Eigen::Index i = 1; i + 1 < n; ++i) g.col(i) = g.col(i - 1) + f.col(i);
  return g;
}

Matrix recover_static(const Matrix& f, const MeasurementStructure& ms, double tol) {
  if (f.cols() != ms.states()) throw StructuralError("recover: map has the wrong number of columns");
  const auto dec = decompose(f, ms, tol);
  if (!dec.feasible()) throw InfeasibleDecomposition(*dec.failure, "recover");
  Matrix k = Matrix::Zero(f.rows(), ms.measurements());
  for (std::size_t c = 0; c < ms.components.size(); ++c) {
    if (ms.components[c].size() < 2) continue;
    const auto ct = chain_transform(ms, static_cast<int>(c));
    Matrix ordered(f.rows(), static_cast<Eigen::Index>(ct.ordering.size()));
    for (std::size_t j = 0; j < ct.ordering.size(); ++j) ordered.col(static_cast<Eigen::Index>(j)) = f.col(ct.ordering[j]);
    const Matrix g = solve_chain(ordered, tol);
    const Matrix kc = g * ct.t.topRows(g.cols()).cast<double>();
    for (std::size_t i = 0; i < ct.rows.size(); ++i) k.col(ct.rows[i]) = kc.col(static_cast<Eigen::Index>(i));
  }
  return k;
}

FirSystem recover_controller(const FirSystem& r, const MeasurementStructure& ms, double tol) {
  const auto dec = decompose(r, ms, tol);
  if (!dec.feasible()) throw InfeasibleDecomposition(*dec.failure, "recover_controller");
  std::vector<Matrix> taps;
  for (const auto& t : r.taps()) taps.push_back(recover_static(t, ms, tol));
  return FirSystem(std::move(taps));
}

StateSpace recover_controller(const StateSpace& r, const MeasurementStructure& ms, double tol) {
  try {
    return StateSpace(r.a(), recover_static(r.b(), ms, tol), r.c(), recover_static(r.d(), ms, tol));
  } catch (const InfeasibleDecomposition& e) {
    throw InfeasibleDecomposition(e.failure(), "recover_controller (B or D)");
  }
}

Matrix laplacian(const IntMatrix& adjacency) {
  const Matrix a = adjacency.cast<double>();
  Matrix l = -a;
  l.diagonal() += a.rowwise().sum();
  return l;
}

}  // namespace relsyn
