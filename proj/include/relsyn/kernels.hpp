#pragma once

#include <array>
#include <optional>
#include <vector>

#include "relsyn/lti.hpp"
#include "relsyn/measurement_graph.hpp"

namespace relsyn {

struct ConstraintSystem;

// Data-parallel kernels. Each has an OpenMP path and a serial reference; both
// evaluate every output element with the same operation order, so their
// results are bitwise identical for any thread count.

enum class Exec { Serial, Parallel };

/// Lexicographically first (i, j, k, m) violating
/// s(i,j) + g(j,k) + s(k,m) >= s(i,m); kNever entries are infinite.
std::optional<std::array<int, 4>> qi_scan(const IntMatrix& s, const IntMatrix& g, Exec exec = Exec::Parallel);

/// Response of T2 * (e_i e_j^T) * T3. Entry i * t3.rows() + j is a
/// (outputs * inputs) x (horizon + 1) matrix; column s holds tap s flattened
/// column-major.
std::vector<Matrix> elementary_responses(const FirSystem& t2, const FirSystem& t3, int horizon,
                                         Exec exec = Exec::Parallel);

/// One column per free direction of `cs`: the stacked taps 0..horizon of
/// T2 * Q * T3 for that direction.
Matrix assemble_regressor(const std::vector<Matrix>& elementary, const ConstraintSystem& cs, int horizon,
                          Exec exec = Exec::Parallel);

/// Number of OpenMP workers: RELSYN_WORKERS if set and positive, otherwise
/// the OpenMP default.
int worker_count();

}  // namespace relsyn
