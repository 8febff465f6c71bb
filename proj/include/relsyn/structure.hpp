#pragma once

#include <array>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "relsyn/measurement_graph.hpp"

namespace relsyn {

inline constexpr int kNever = std::numeric_limits<int>::max();

/// Entry (i,j) may be nonzero from tap min_delay(i,j) on; kNever means the
/// entry is identically zero. Pure sparsity uses only 0 and kNever.
struct InfoStructure {
  IntMatrix min_delay;

  Eigen::Index rows() const { return min_delay.rows(); }
  Eigen::Index cols() const { return min_delay.cols(); }
  bool allows(Eigen::Index i, Eigen::Index j, int tap) const {
    const int d = min_delay(i, j);
    return d != kNever && tap >= d;
  }

  static InfoStructure full(Eigen::Index rows, Eigen::Index cols, int delay = 0);
  static InfoStructure empty(Eigen::Index rows, Eigen::Index cols);
  /// Nonzero pattern entries map to delay 0, zeros to kNever.
  static InfoStructure sparsity(const IntMatrix& pattern);
};

/// Shortest-path length on a ring of n nodes.
InfoStructure ring_delay_structure(int n);
/// BFS hop distance on an arbitrary graph; unreachable pairs are kNever.
InfoStructure graph_delay_structure(const IntMatrix& adjacency);
InfoStructure upper_triangular_structure(int n);

/// Controller structure on measurements: a measurement of x_a - x_b reaches
/// controller i at min(state(i,a), state(i,b)), i.e. at the nearer endpoint.
InfoStructure measurement_delay_structure(const InfoStructure& state_structure, const MeasurementStructure& ms);

bool membership(const FirSystem& q, const InfoStructure& s);

enum class PatternMode { Structural, Numerical };

/// Smallest tap index of each transfer entry. Structural mode walks the
/// binary patterns of B, A and C, so cancellations never hide coupling.
InfoStructure plant_pattern(const StateSpace& sys, PatternMode mode = PatternMode::Structural,
                            double tol = 1e-12);

struct QiResult {
  bool invariant = true;
  /// (i, j, k, m) with s(i,j) + g(j,k) + s(k,m) < s(i,m).
  std::optional<std::array<int, 4>> violation;
};

QiResult is_qi(const InfoStructure& s, const InfoStructure& g);

/// One free coefficient of an FIR Q: tap k, entry (row, col).
struct QVariable {
  int tap;
  int row;
  int col;
};

/// Allowed coefficients of Q and an orthonormal basis of the subspace that
/// also satisfies the indicator row-sum equalities. Structural zeros are not
/// variables at all.
struct ConstraintSystem {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  int horizon = 0;
  std::vector<QVariable> variables;
  /// Each equality is a list of (variable, coefficient) with zero right side.
  std::vector<std::vector<std::pair<int, double>>> equalities;
  /// Free directions, sparse over variables; mutually orthonormal.
  std::vector<std::vector<std::pair<int, double>>> basis;
  int frozen = 0;

  Eigen::Index free_count() const { return static_cast<Eigen::Index>(basis.size()); }
  FirSystem expand(const Vector& free) const;
  /// Largest absolute equality residual.
  double violation(const FirSystem& q) const;
};

ConstraintSystem compile_constraints(const InfoStructure& s, const std::vector<Vector>& indicators, int horizon);

/// Tap-wise recovery of K with K*C2 = R where row i of tap k only uses
/// measurements that k_structure allows; the result is a member of it.
FirSystem recover_structured(const FirSystem& r, const MeasurementStructure& ms,
                             const InfoStructure& k_structure, double tol = kDecomposeTol);

}  // namespace relsyn
