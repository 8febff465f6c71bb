#pragma once

#include <optional>
#include <vector>

#include "relsyn/kernels.hpp"
#include "relsyn/structure.hpp"
#include "relsyn/youla.hpp"

namespace relsyn {

inline constexpr int kDefaultHorizonQ = 32;

struct LeastSquaresResult {
  Vector x;
  double residual = 0.0;       // ||A x - b||
  double gradient_norm = 0.0;  // ||A^T (A x - b)||
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

/// min ||A x - b|| by column-pivoted QR; minimal-norm x when A is rank deficient.
LeastSquaresResult least_squares(const Matrix& a, const Vector& b);

struct SynthesisProblem {
  YoulaData yd;
  InfoStructure structure;                   // on Q (controls x states)
  std::optional<InfoStructure> k_structure;  // on K; defaults to the nearer-endpoint map
  int horizon_q = kDefaultHorizonQ;
  int horizon_obj = -1;                      // < 0 picks it from tail energies
  bool recover = true;                       // compute r_opt and k_opt
};

struct SynthesisResult {
  FirSystem q_opt = FirSystem::zero(0, 0, 0);
  double objective = 0.0;  // H2 norm of T1 + T2 Q T3, not squared
  double residual = 0.0;
  double residual_gradient = 0.0;
  double constraint_violation = 0.0;
  bool rank_deficient = false;
  Eigen::Index free_variables = 0;
  int horizon_obj = 0;
  std::optional<StateSpace> r_opt;
  std::optional<FirSystem> k_opt;
};

/// Objective horizon: T_Q plus the longest of 4 * states, the combined
/// T2/T3 tail length and the T1 tail length, each tail cut where its energy
/// falls below 1e-20 of the total.
int default_objective_horizon(const YoulaData& yd, int horizon_q);

/// Minimizes ||T1 + T2 Q T3||_2 over FIR Q in the structure with Q E = 0.
/// Throws DomainError when the structure is not quadratically invariant
/// under Pxu.
SynthesisResult solve(const SynthesisProblem& prob, Exec exec = Exec::Parallel);

/// Markov parameters of R, trimmed after the last tap above 1e-15 of the
/// peak, then recovered onto the controller structure.
FirSystem recover_fir_controller(const StateSpace& r, const MeasurementStructure& ms,
                                 const InfoStructure& k_structure);

// Circulant fast path for rings.

/// n x (n-1) FIR map with Q e1 = M q once q0 = -sum_d z^-l_d q_d is
/// substituted; l_d = min(d, n-d).
FirSystem eliminate_q0(int n);

struct CirculantProblem {
  int n = 0;
  StateSpace t1_col = StateSpace::zero(0, 0);  // T1 e1 in disagreement coordinates
  StateSpace g = StateSpace::zero(0, 0);       // T2 T3
  FirSystem m = FirSystem::zero(0, 0, 0);
  double scale = 0.0; // the objective is scale * ||T1 e1 + G M q||^2
};

/// Requires circulant A, B1, B2, R_nom, block-circulant C1, D12 and a
/// circulant structure; throws DomainError otherwise.
CirculantProblem circulant_reduce(const YoulaData& yd, const InfoStructure& structure);

/// Q with entries z^-l(i,j) q_{(j-i) mod n}; coeffs[d-1] holds the taps of q_d.
FirSystem expand_circulant(int n, const std::vector<Vector>& coeffs, int horizon_q);

struct CirculantSolution {
  std::vector<Vector> coeffs;  // q_1 .. q_{n-1}
  double objective = 0.0;      // sqrt(scale * residual^2)
  double residual = 0.0;
  double gradient_norm = 0.0;
  bool rank_deficient = false;
};

/// Exact infinite-horizon least squares: explicit rows up to T_q and the
/// remaining energy folded into an observability-Gramian factor.
CirculantSolution solve_circulant(const CirculantProblem& cp, int horizon_q);

SynthesisResult solve_ring_circulant(int n, double gamma, int horizon_q = kDefaultHorizonQ, bool recover = true);

}  // namespace relsyn
