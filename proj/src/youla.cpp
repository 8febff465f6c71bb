#include "relsyn/youla.hpp"

#include <cmath>

namespace relsyn {

Plant build_tilde_plant(const Plant& p) {
  const auto n = p.states();
  return Plant(p.a, p.b1, p.b2, p.c1, p.d12, Matrix::Identity(n, n), p.d11);
}

StateSpace laplacian_rnom(const IntMatrix& adjacency) {
  if (adjacency.rows() != adjacency.cols() || adjacency != adjacency.transpose()) {
    throw StructuralError("laplacian_rnom: adjacency must be square and symmetric");
  }
  const auto n = static_cast<double>(adjacency.rows());
  return StateSpace::gain(-laplacian(adjacency) / n);
}

namespace {

bool annihilates(const Matrix& m, const std::vector<Vector>& indicators, double tol) {
  for (const auto& e : indicators) {
    if (m.cols() != e.size()) throw StructuralError("check_e_constraint: column count differs from indicator length");
    if (m.rows() > 0 && (m * e).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

Matrix orthonormal_indicators(const MeasurementStructure& ms) {
  Matrix v = ms.indicator_matrix();
  for (Eigen::Index c = 0; c < v.cols(); ++c) v.col(c).normalize();
  return v;
}

// Closed loop of the tilde plant with R: A matrix and the state-feedback pieces.
struct Loop {
  Matrix a;
  Matrix c_state;  // [C1 + D12 Dr, D12 Cr]
  Eigen::Index n;
};

Loop loop_of(const Plant& p, const StateSpace& r) {
  const auto n = p.states();
  const auto nr = r.states();
  Loop out{Matrix(n + nr, n + nr), Matrix(p.performance(), n + nr), n};
  out.a << p.a + p.b2 * r.d(), p.b2 * r.c(), r.b(), r.a();
  out.c_state << p.c1 + p.d12 * r.d(), p.d12 * r.c();
  return out;
}

Matrix lifted(const Matrix& b, Eigen::Index total) {
  Matrix out = Matrix::Zero(total, b.cols());
  out.topRows(b.rows()) = b;
  return out;
}

}  // namespace

bool check_e_constraint(const FirSystem& sys, const std::vector<Vector>& indicators, double tol) {
  for (const auto& t : sys.taps())
    if (!annihilates(t, indicators, tol)) return false;
  return true;
}

bool check_e_constraint(const StateSpace& sys, const std::vector<Vector>& indicators, double tol) {
  if (!annihilates(sys.d(), indicators, tol)) return false;
  if (annihilates(sys.b(), indicators, 0.0)) return true;
  const int horizon = static_cast<int>(2 * sys.states());
  return check_e_constraint(markov(sys, horizon), indicators, tol);
}

YoulaVerdicts check_nominal(const Plant& p_tilde, const StateSpace& r_nom, const MeasurementStructure& ms) {
  if (r_nom.inputs() != p_tilde.states() || r_nom.outputs() != p_tilde.controls()) {
    throw StructuralError("nominal controller must map " + std::to_string(p_tilde.states()) + " states to " +
                          std::to_string(p_tilde.controls()) + " controls");
  }
  if (ms.states() != p_tilde.states()) throw StructuralError("measurement structure does not match the plant");
  YoulaVerdicts v;
  v.nominal_stable = r_nom.states() == 0 || spectral_radius(r_nom.a()) < 1.0 - kStabilityTol;
  v.nominal_relative = check_e_constraint(r_nom, ms.indicators);
  const StateSpace cl = close_loop(p_tilde, r_nom);
  v.closed_loop_stable = is_internally_stable(cl, lift_directions(ms.indicator_matrix(), cl.states()));
  return v;
}

YoulaData make_t_systems(const Plant& p_tilde, const StateSpace& r_nom, const MeasurementStructure& ms) {
  using Kind = YoulaValidationError::Kind;
  const auto verdicts = check_nominal(p_tilde, r_nom, ms);
  if (!verdicts.nominal_stable) throw YoulaValidationError(Kind::UnstableNominal, "nominal controller is not stable");
  if (!verdicts.nominal_relative) {
    throw YoulaValidationError(Kind::NominalNotRelative, "nominal controller does not annihilate every indicator vector");
  }
  if (!verdicts.closed_loop_stable) {
    throw YoulaValidationError(Kind::NotStabilizing, "nominal controller does not stabilize the plant modulo agreement");
  }

  const auto n = p_tilde.states();
  const Loop lp = loop_of(p_tilde, r_nom);
  const auto total = lp.a.rows();
  const Matrix b1 = lifted(p_tilde.b1, total);
  const Matrix b2 = lifted(p_tilde.b2, total);
  Matrix c_x = Matrix::Zero(n, total);
  c_x.leftCols(n).setIdentity();

  StateSpace t1(lp.a, b1, lp.c_state, p_tilde.d11);
  StateSpace t2(lp.a, b2, -lp.c_state, -p_tilde.d12);
  StateSpace t3(lp.a, b1, c_x, Matrix::Zero(n, p_tilde.disturbances()));
  StateSpace inner(lp.a, b2, c_x, Matrix::Zero(n, p_tilde.controls()));

  const Matrix v = orthonormal_indicators(ms);
  const Matrix projector = Matrix::Identity(n, n) - v * v.transpose();
  const Matrix dirs = lift_directions(ms.indicator_matrix(), total);
  StateSpace t1d = reduce_agreement(t1, dirs);
  StateSpace t2d = reduce_agreement(t2, dirs);
  StateSpace t3d = reduce_agreement(left_multiply(projector, t3), dirs);
  return YoulaData{p_tilde, r_nom, ms, projector, t1, t2, t3, inner, t1d, t2d, t3d};
}

StateSpace r_from_q(const YoulaData& yd, const StateSpace& q) {
  const StateSpace r = parallel(yd.r_nom, negate(lft(yd.inner, q)));
  // With Q E = 0 the agreement modes of the inner factor are unobservable
  // marginal states of R; drop them so R adds no hidden marginal modes.
  Matrix dirs = Matrix::Zero(r.states(), yd.ms.indicator_matrix().cols());
  dirs.middleRows(yd.r_nom.states(), yd.plant.states()) = yd.ms.indicator_matrix();
  return reduce_agreement(r, dirs);
}

StateSpace r_from_q(const YoulaData& yd, const FirSystem& q) { return r_from_q(yd, to_state_space(q)); }

StateSpace q_from_r(const YoulaData& yd, const StateSpace& r) {
  const StateSpace cl = close_loop(yd.plant, r);
  if (!is_internally_stable(cl, lift_directions(yd.ms.indicator_matrix(), cl.states()))) {
    throw YoulaValidationError(YoulaValidationError::Kind::NotStabilizing,
                               "q_from_r: R does not stabilize the plant modulo agreement");
  }
  // R_nom - R = Q (I - N Q)^-1 solves to Q = H (I + N H)^-1 with H = R_nom - R.
  return lft(negate(yd.inner), parallel(yd.r_nom, negate(r)));
}

StateSpace youla_objective(const YoulaData& yd, const FirSystem& q) {
  return parallel(yd.t1d, series(yd.t2d, series(to_state_space(q), yd.t3d)));
}

}  // namespace relsyn
