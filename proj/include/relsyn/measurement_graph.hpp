#pragma once

#include <optional>
#include <vector>

#include "relsyn/lti.hpp"

namespace relsyn {

using IntMatrix = Eigen::MatrixXi;

/// Relative measurement matrix C2 with its graph. Rows of C2 hold exactly one
/// +1 and one -1; components partition the states; indicators are their 0/1
/// vectors, mutually orthogonal and summing to the all-ones vector.
struct MeasurementStructure {
  IntMatrix c2;
  IntMatrix adjacency;
  std::vector<std::vector<int>> components;  // ascending state indices
  std::vector<int> component_of;             // state -> component
  std::vector<Vector> indicators;

  int states() const { return static_cast<int>(c2.cols()); }
  int measurements() const { return static_cast<int>(c2.rows()); }
  Matrix c2_real() const { return c2.cast<double>(); }
  /// Indicators as columns (n x N).
  Matrix indicator_matrix() const;
  /// Measurement rows whose endpoints lie in component `c`, ascending.
  std::vector<int> component_rows(int c) const;
};

/// Throws StructuralError on entries outside {0, +-1}, rows without exactly one
/// +1 and one -1, or duplicated measurements (also up to sign).
MeasurementStructure validate_c2(const Matrix& c2);

/// Every row of F sums to zero within `tol`.
bool is_relative_map(const Matrix& f, double tol = 1e-12);

/// First component, tap and row whose block fails the zero row-sum test.
struct DecompositionFailure {
  int component = -1;
  int tap = -1;
  int row = -1;
  double residual = 0.0;
};

/// R split into per-component column blocks (columns in component order).
struct RelativeDecomposition {
  std::vector<FirSystem> blocks;
  std::optional<DecompositionFailure> failure;

  bool feasible() const { return !failure.has_value(); }
  /// Places the blocks back onto full state coordinates.
  FirSystem reassemble(const MeasurementStructure& ms) const;
};

inline constexpr double kDecomposeTol = 1e-9;

RelativeDecomposition decompose(const FirSystem& r, const MeasurementStructure& ms,
                                double tol = kDecomposeTol);
RelativeDecomposition decompose(const Matrix& r, const MeasurementStructure& ms,
                                double tol = kDecomposeTol);

class InfeasibleDecomposition : public DomainError {
 public:
  InfeasibleDecomposition(const DecompositionFailure& f, const std::string& context);
  const DecompositionFailure& failure() const { return failure_; }

 private:
  DecompositionFailure failure_;
};

/// T * C2 restricted to `rows` and re-ordered columns `ordering` has the
/// chain matrix M in its first |ordering|-1 rows; the remaining rows of T are
/// unit vectors on measurements outside the spanning tree.
struct ChainTransform {
  IntMatrix t;
  std::vector<int> ordering;
  std::vector<int> rows;
};

ChainTransform chain_transform(const MeasurementStructure& ms, int component);

/// (n-1)x n first-difference matrix.
IntMatrix chain_matrix(int n);

/// Columns g_i = sum of the first i columns of F, i = 1..n-1, so G*M = F.
/// Throws DomainError unless F is relative.
Matrix solve_chain(const Matrix& f, double tol = kDecomposeTol);

/// K with K*C2 = F for a static relative map F (l x n).
Matrix recover_static(const Matrix& f, const MeasurementStructure& ms, double tol = kDecomposeTol);

/// Tap-wise recovery; throws InfeasibleDecomposition when R does not split.
FirSystem recover_controller(const FirSystem& r, const MeasurementStructure& ms,
                             double tol = kDecomposeTol);
/// Keeps A_R and C_R; solves B_K C2 = B_R and D_K C2 = D_R.
StateSpace recover_controller(const StateSpace& r, const MeasurementStructure& ms,
                              double tol = kDecomposeTol);

/// Degree matrix minus adjacency.
Matrix laplacian(const IntMatrix& adjacency);

}  // namespace relsyn
