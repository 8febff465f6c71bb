#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "relsyn/errors.hpp"

namespace relsyn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr int kDefaultHorizon = 200;

/// Discrete-time realization x[t+1] = A x[t] + B u[t], y[t] = C x[t] + D u[t].
/// Immutable after construction; the constructor enforces consistent
/// dimensions and finite entries.
class StateSpace {
 public:
  StateSpace(Matrix a, Matrix b, Matrix c, Matrix d);

  /// Static gain with no internal state.
  static StateSpace gain(const Matrix& d);
  static StateSpace zero(Eigen::Index outputs, Eigen::Index inputs);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& c() const { return c_; }
  const Matrix& d() const { return d_; }

  Eigen::Index states() const { return a_.rows(); }
  Eigen::Index inputs() const { return b_.cols(); }
  Eigen::Index outputs() const { return c_.rows(); }

 private:
  Matrix a_, b_, c_, d_;
};

/// Finite impulse response H0 + H1 z^-1 + ... + HT z^-T.
class FirSystem {
 public:
  explicit FirSystem(std::vector<Matrix> taps);

  static FirSystem zero(Eigen::Index rows, Eigen::Index cols, int horizon);
  static FirSystem identity(Eigen::Index n);
  /// Pure delay z^-k times `gain`.
  static FirSystem delay(const Matrix& gain, int k);

  const std::vector<Matrix>& taps() const { return taps_; }
  const Matrix& tap(int k) const { return taps_.at(static_cast<std::size_t>(k)); }
  int horizon() const { return static_cast<int>(taps_.size()) - 1; }
  Eigen::Index rows() const { return taps_.front().rows(); }
  Eigen::Index cols() const { return taps_.front().cols(); }

  /// Largest absolute entry over all taps.
  double max_abs() const;

 private:
  std::vector<Matrix> taps_;
};

FirSystem operator+(const FirSystem& g, const FirSystem& h);
FirSystem operator-(const FirSystem& g, const FirSystem& h);
FirSystem operator*(double s, const FirSystem& g);
/// Tapwise G_k * M (static right factor).
FirSystem operator*(const FirSystem& g, const Matrix& m);
FirSystem operator*(const Matrix& m, const FirSystem& g);
/// Drop or zero-pad taps to the given horizon.
FirSystem truncate(const FirSystem& g, int horizon);

/// Markov parameters D, CB, CAB, ..., CA^(horizon-1)B.
FirSystem markov(const StateSpace& sys, int horizon = kDefaultHorizon);

/// Product G*H (H acts first). Cauchy convolution of the taps, exact for FIR
/// operands; `horizon` < 0 keeps every tap (horizon G + horizon H).
FirSystem fir_compose(const FirSystem& g, const FirSystem& h, int horizon = -1);

/// Realization with the taps in B, so that B annihilates whatever every tap
/// annihilates (input relativity survives the conversion).
StateSpace to_state_space(const FirSystem& f);

/// G*H with H acting first.
StateSpace series(const StateSpace& g, const StateSpace& h);
StateSpace parallel(const StateSpace& g, const StateSpace& h);
StateSpace negate(const StateSpace& g);
StateSpace scale(double s, const StateSpace& g);
StateSpace left_multiply(const Matrix& m, const StateSpace& g);
StateSpace right_multiply(const StateSpace& g, const Matrix& m);
/// Stack outputs of two systems sharing the same input.
StateSpace stack_outputs(const StateSpace& g, const StateSpace& h);

/// F(G, H) = H (I - G H)^-1.
StateSpace lft(const StateSpace& g, const StateSpace& h);

double spectral_radius(const Matrix& a);

/// Solves X = A X A^T + Q. Requires spectral_radius(A) < 1.
Matrix dlyap(const Matrix& a, const Matrix& q);

/// sqrt(trace(D D^T + C X C^T)) with X the controllability Gramian.
double h2_norm_lyap(const StateSpace& sys);
double h2_norm_fir(const FirSystem& f);

/// Impulse-response energy carried by taps k, k+1, ... (k >= 1).
double tail_energy(const StateSpace& sys, int k);

inline constexpr double kStabilityTol = 1e-9;

/// Strict Schur stability except along `agreement` directions (columns, in
/// state coordinates), which may be marginal.
bool is_internally_stable(const StateSpace& cl, const Matrix& agreement = Matrix());

/// Zero-pad plant-state directions to the state dimension of an
/// interconnection whose leading states are the plant states.
Matrix lift_directions(const Matrix& directions, Eigen::Index total_states);

/// Removes agreement directions that are A-invariant and unobservable from the
/// realization; the transfer function is unchanged. Returns `sys` unchanged when
/// the directions do not qualify.
StateSpace reduce_agreement(const StateSpace& sys, const Matrix& directions);

/// Generalized plant x+ = A x + B1 w + B2 u, z = C1 x + D11 w + D12 u, y = C2 x.
struct Plant {
  Matrix a, b1, b2, c1, d11, d12, c2;

  Plant(Matrix a, Matrix b1, Matrix b2, Matrix c1, Matrix d12, Matrix c2, Matrix d11 = Matrix());

  Eigen::Index states() const { return a.rows(); }
  Eigen::Index disturbances() const { return b1.cols(); }
  Eigen::Index controls() const { return b2.cols(); }
  Eigen::Index performance() const { return c1.rows(); }
  Eigen::Index measurements() const { return c2.rows(); }

  StateSpace pzw() const;
  StateSpace pzu() const;
  StateSpace pyw() const;
  StateSpace pyu() const;
  StateSpace pxw() const;
  StateSpace pxu() const;
};

/// Feedback u = controller(y) with y = C2 x. Closed-loop states are ordered
/// [plant; controller]; the returned map is w -> z.
StateSpace close_loop(const Plant& plant, const StateSpace& controller);

}  // namespace relsyn
