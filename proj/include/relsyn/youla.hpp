#pragma once

#include <string>
#include <vector>

#include "relsyn/lti.hpp"
#include "relsyn/measurement_graph.hpp"

namespace relsyn {

/// The plant with its measurement replaced by the full state.
Plant build_tilde_plant(const Plant& p);

/// Static gain -(1/n) L for the Laplacian L of `adjacency`.
StateSpace laplacian_rnom(const IntMatrix& adjacency);

/// Zero D*E and zero Markov parameters times E for every indicator E.
bool check_e_constraint(const FirSystem& sys, const std::vector<Vector>& indicators, double tol = 1e-10);
/// Exact on B*E = 0, otherwise checks taps up to 2 * states.
bool check_e_constraint(const StateSpace& sys, const std::vector<Vector>& indicators, double tol = 1e-10);

class YoulaValidationError : public DomainError {
 public:
  enum class Kind { UnstableNominal, NominalNotRelative, NotStabilizing };
  YoulaValidationError(Kind kind, const std::string& what) : DomainError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct YoulaVerdicts {
  bool nominal_stable = false;
  bool nominal_relative = false;
  bool closed_loop_stable = false;
  bool ok() const { return nominal_stable && nominal_relative && closed_loop_stable; }
};

/// The three independent checks on a candidate nominal controller.
YoulaVerdicts check_nominal(const Plant& p_tilde, const StateSpace& r_nom, const MeasurementStructure& ms);

/// Nominal controller, the T-systems and the inner factor
/// N = Pxu (I - R_nom Pxu)^-1. All realizations share the closed-loop states
/// [x; x_rnom]. The *_d members live in disagreement coordinates: agreement
/// directions that are invariant and unobservable are removed and T3 is
/// projected onto the complement of span{E}, so they are strictly stable.
struct YoulaData {
  Plant plant;
  StateSpace r_nom;
  MeasurementStructure ms;
  Matrix projector;  // I - V V^T, V orthonormal over the indicators
  StateSpace t1, t2, t3, inner;
  StateSpace t1d, t2d, t3d;
};

/// T1 = Pzw + Pzu R_nom (I - Pxu R_nom)^-1 Pxw, T2 = -Pzu (I - R_nom Pxu)^-1,
/// T3 = (I - Pxu R_nom)^-1 Pxw. Throws YoulaValidationError on a bad nominal.
YoulaData make_t_systems(const Plant& p_tilde, const StateSpace& r_nom, const MeasurementStructure& ms);

/// R = R_nom - F(N, Q).
StateSpace r_from_q(const YoulaData& yd, const StateSpace& q);
StateSpace r_from_q(const YoulaData& yd, const FirSystem& q);

/// Q = F(-N, R_nom - R), the inverse of r_from_q. Throws YoulaValidationError when R does not stabilize
/// the tilde plant modulo agreement.
StateSpace q_from_r(const YoulaData& yd, const StateSpace& r);

/// T1 + T2 Q T3 in disagreement coordinates (exact for FIR Q).
StateSpace youla_objective(const YoulaData& yd, const FirSystem& q);

}  // namespace relsyn
