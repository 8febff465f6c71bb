#include "relsyn/h2_solver.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "relsyn/ring.hpp"

namespace relsyn {

namespace {

constexpr double kTailFraction = 1e-20;
constexpr int kMaxTail = 20000;

void require_schur(const StateSpace& sys, const char* name) {
  if (sys.states() > 0 && spectral_radius(sys.a()) >= 1.0 - kStabilityTol) {
    throw DomainError(std::string(name) + " keeps a marginal mode outside the agreement directions");
  }
}

// Smallest k >= 1 with sum_{t >= k} |h_t|^2 <= kTailFraction * |h|^2.
int tail_length(const StateSpace& sys) {
  if (sys.states() == 0) return 1;
  const Matrix wo = dlyap(sys.a().transpose(), sys.c().transpose() * sys.c());
  Matrix x = sys.b();
  const double total = sys.d().squaredNorm() + (x.transpose() * wo * x).trace();
  for (int k = 1; k < kMaxTail; ++k) {
    if ((x.transpose() * wo * x).trace() <= kTailFraction * total) return k;
    x = sys.a() * x;
  }
  return kMaxTail;
}

Vector flatten_taps(const FirSystem& f) {
  const auto pq = f.rows() * f.cols();
  Vector v(pq * (f.horizon() + 1));
  for (int t = 0; t <= f.horizon(); ++t) v.segment(t * pq, pq) = Eigen::Map<const Vector>(f.tap(t).data(), pq);
  return v;
}

double e_violation(const FirSystem& q, const std::vector<Vector>& indicators) {
  double worst = 0.0;
  for (const auto& t : q.taps())
    for (const auto& e : indicators)
      if (t.rows() > 0) worst = std::max(worst, (t * e).cwiseAbs().maxCoeff());
  return worst;
}

bool is_circulant(const Matrix& m) {
  const auto n = m.rows();
  if (m.cols() != n) return false;
  const double tol = 1e-12 * (1.0 + m.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(m(i, j) - m((i + 1) % n, (j + 1) % n)) > tol) return false;
  return true;
}

bool is_block_circulant(const Matrix& m, Eigen::Index n) {
  if (m.cols() != n || m.rows() % n != 0) return false;
  for (Eigen::Index b = 0; b < m.rows() / n; ++b)
    if (!is_circulant(m.middleRows(b * n, n))) return false;
  return true;
}

int ring_distance(int d, int n) { return std::min(d, n - d); }

void finish_recovery(SynthesisResult& res, const YoulaData& yd, const InfoStructure& q_structure,
                     const std::optional<InfoStructure>& k_structure) {
  res.r_opt = r_from_q(yd, res.q_opt);
  const InfoStructure ks = k_structure ? *k_structure : measurement_delay_structure(q_structure, yd.ms);
  res.k_opt = recover_fir_controller(*res.r_opt, yd.ms, ks);
}

}  // namespace

LeastSquaresResult least_squares(const Matrix& a, const Vector& b) {
  if (a.rows() != b.size()) throw StructuralError("least_squares: row count differs from target length");
  LeastSquaresResult out;
  if (a.cols() == 0) {
    out.x = Vector(0);
    out.residual = b.norm();
    return out;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  out.rank = qr.rank();
  if (out.rank < a.cols()) {
    out.rank_deficient = true;
    out.x = Eigen::CompleteOrthogonalDecomposition<Matrix>(a).solve(b);
  } else {
    out.x = qr.solve(b);
  }
  const Vector r = a * out.x - b;
  out.residual = r.norm();
  out.gradient_norm = (a.transpose() * r).norm();
  return out;
}

int default_objective_horizon(const YoulaData& yd, int horizon_q) {
  require_schur(yd.t1d, "T1");
  require_schur(yd.t2d, "T2");
  require_schur(yd.t3d, "T3");
  const StateSpace g = series(yd.t2d, yd.t3d);
  const auto states = std::max({yd.t1d.states(), yd.t2d.states(), yd.t3d.states()});
  const int span = std::max({static_cast<int>(4 * states), tail_length(g), tail_length(yd.t1d)});
  return horizon_q + span;
}

SynthesisResult solve(const SynthesisProblem& prob, Exec exec) {
  const YoulaData& yd = prob.yd;
  if (prob.horizon_q < 0) throw DomainError("horizon_q must be nonnegative");
  if (prob.structure.rows() != yd.plant.controls() || prob.structure.cols() != yd.plant.states()) {
    throw StructuralError("Q structure must be controls x states");
  }
  const auto qi = is_qi(prob.structure, plant_pattern(yd.plant.pxu()));
  if (!qi.invariant) {
    const auto& v = *qi.violation;
    throw DomainError("structure is not quadratically invariant under Pxu; violated at (" + std::to_string(v[0] + 1) +
                      "," + std::to_string(v[1] + 1) + "," + std::to_string(v[2] + 1) + "," +
                      std::to_string(v[3] + 1) + ")");
  }
  const int auto_obj = default_objective_horizon(yd, prob.horizon_q);
  int horizon_obj = prob.horizon_obj < 0 ? auto_obj : prob.horizon_obj;
  const auto min_obj = prob.horizon_q + 2 * std::max(yd.t2d.states(), yd.t3d.states());
  if (horizon_obj < min_obj) {
    throw DomainError("horizon_obj " + std::to_string(horizon_obj) + " is below the minimum " + std::to_string(min_obj));
  }

  const auto cs = compile_constraints(prob.structure, yd.ms.indicators, prob.horizon_q);
  const FirSystem t1 = markov(yd.t1d, horizon_obj);
  const FirSystem t2 = markov(yd.t2d, horizon_obj);
  const FirSystem t3 = markov(yd.t3d, horizon_obj);
  const auto elem = elementary_responses(t2, t3, horizon_obj, exec);
  const Matrix a = assemble_regressor(elem, cs, horizon_obj, exec);
  const Vector b = flatten_taps(t1);
  const auto ls = least_squares(a, -b);

  SynthesisResult res;
  res.q_opt = cs.expand(ls.x);
  res.objective = h2_norm_lyap(youla_objective(yd, res.q_opt));
  res.residual = ls.residual;
  res.residual_gradient = ls.gradient_norm;
  res.rank_deficient = ls.rank_deficient;
  res.free_variables = cs.free_count();
  res.horizon_obj = horizon_obj;
  res.constraint_violation = std::max(cs.violation(res.q_opt), e_violation(res.q_opt, yd.ms.indicators));
  if (prob.recover) finish_recovery(res, yd, prob.structure, prob.k_structure);
  return res;
}

FirSystem recover_fir_controller(const StateSpace& r, const MeasurementStructure& ms, const InfoStructure& k_structure) {
  int horizon = 400;
  FirSystem taps = markov(r, horizon);
  for (;;) {
    const double peak = taps.max_abs();
    int last = 0;
    for (int k = 0; k <= taps.horizon(); ++k)
      if (taps.tap(k).cwiseAbs().maxCoeff() > 1e-15 * peak) last = k;
    if (last < horizon - 8 || horizon >= 6400) {
      taps = truncate(taps, last);
      break;
    }
    horizon *= 2;
    taps = markov(r, horizon);
  }
  return recover_structured(taps, ms, k_structure);
}

FirSystem eliminate_q0(int n) {
  if (n < 2) throw DomainError("eliminate_q0: n must be at least 2");
  const int max_delay = n / 2;
  std::vector<Matrix> taps(static_cast<std::size_t>(max_delay + 1), Matrix::Zero(n, n - 1));
  for (int d = 1; d < n; ++d) {
    const int l = ring_distance(d, n);
    taps[static_cast<std::size_t>(l)](0, d - 1) = -1.0;
    taps[static_cast<std::size_t>(l)](n - d, d - 1) = 1.0;
  }
  return FirSystem(std::move(taps));
}

CirculantProblem circulant_reduce(const YoulaData& yd, const InfoStructure& structure) {
  const Plant& p = yd.plant;
  const auto n = p.states();
  const bool ok = n >= 2 && is_circulant(p.a) && is_circulant(p.b1) && is_circulant(p.b2) &&
                  yd.r_nom.states() == 0 && is_circulant(yd.r_nom.d()) && is_block_circulant(p.c1, n) &&
                  is_block_circulant(p.d12, n) && is_block_circulant(p.d11, n) &&
                  is_circulant(structure.min_delay.cast<double>());
  if (!ok) throw DomainError("circulant_reduce: plant, nominal controller or structure is not circulant");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const int gap = static_cast<int>(std::abs(i - j));
      if (structure.min_delay(i, j) != ring_distance(gap, static_cast<int>(n))) {
        throw DomainError("circulant_reduce: structure is not the ring delay structure");
      }
    }
  }
  require_schur(yd.t1d, "T1");
  CirculantProblem cp;
  cp.n = static_cast<int>(n);
  cp.t1_col = right_multiply(yd.t1d, Matrix::Identity(n, n).col(0));
  cp.g = series(yd.t2d, yd.t3d);
  require_schur(cp.g, "T2 T3");
  cp.m = eliminate_q0(cp.n);
  cp.scale = static_cast<double>(n);
  return cp;
}

FirSystem expand_circulant(int n, const std::vector<Vector>& coeffs, int horizon_q) {
  std::vector<Matrix> taps(static_cast<std::size_t>(horizon_q + 1), Matrix::Zero(n, n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int d = ((j - i) % n + n) % n;
      if (d == 0) continue;
      const int l = ring_distance(d, n);
      const Vector& c = coeffs[static_cast<std::size_t>(d - 1)];
      for (Eigen::Index s = 0; s < c.size() && l + s <= horizon_q; ++s) {
        taps[static_cast<std::size_t>(l + s)](i, j) = c(s);
        taps[static_cast<std::size_t>(l + s)](i, i) -= c(s);
      }
    }
  }
  return FirSystem(std::move(taps));
}

CirculantSolution solve_circulant(const CirculantProblem& cp, int horizon_q) {
  if (horizon_q < 0) throw DomainError("horizon_q must be nonnegative");
  const int n = cp.n;
  const int t0 = horizon_q + 1;
  const auto p = cp.g.outputs();

  // Column layout: (d, s) for d = 1..n-1, s = 0..horizon_q - l_d.
  std::vector<int> offset(static_cast<std::size_t>(n), 0);
  int unknowns = 0;
  for (int d = 1; d < n; ++d) {
    offset[static_cast<std::size_t>(d)] = unknowns;
    unknowns += std::max(0, horizon_q - ring_distance(d, n) + 1);
  }

  const FirSystem g = markov(cp.g, t0);
  const FirSystem t1 = markov(cp.t1_col, t0);
  const auto n1 = cp.t1_col.states();
  const auto ng = cp.g.states();
  const auto ntot = n1 + ng;

  Matrix a = Matrix::Zero(t0 * p + ntot, unknowns);
  Vector b = Vector::Zero(t0 * p + ntot);
  for (int t = 0; t < t0; ++t) b.segment(t * p, p) = -t1.tap(t).col(0);

  // Gramian factor of the autonomous tail from t0 on.
  Matrix factor(0, ntot);
  Matrix a_tot = Matrix::Zero(ntot, ntot);
  Matrix c_tot(p, ntot);
  if (ntot > 0) {
    a_tot.topLeftCorner(n1, n1) = cp.t1_col.a();
    a_tot.bottomRightCorner(ng, ng) = cp.g.a();
    c_tot << cp.t1_col.c(), cp.g.c();
    const Matrix wo = dlyap(a_tot.transpose(), c_tot.transpose() * c_tot);
    Eigen::SelfAdjointEigenSolver<Matrix> es(wo);
    factor = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  }
  if (n1 > 0) {
    Matrix x1 = cp.t1_col.b();
    for (int k = 1; k < t0; ++k) x1 = cp.t1_col.a() * x1;
    b.tail(ntot) = -factor.leftCols(n1) * x1;
  }
  // pow_b[k] = A_G^k B_G.
  std::vector<Matrix> pow_b(static_cast<std::size_t>(t0));
  if (ng > 0) {
    pow_b[0] = cp.g.b();
    for (int k = 1; k < t0; ++k) pow_b[static_cast<std::size_t>(k)] = cp.g.a() * pow_b[static_cast<std::size_t>(k - 1)];
  }

  for (int d = 1; d < n; ++d) {
    const int l = ring_distance(d, n);
    const int len = std::max(0, horizon_q - l + 1);
    for (int s = 0; s < len; ++s) {
      const auto col = offset[static_cast<std::size_t>(d)] + s;
      const int tau = l + s;
      for (int t = tau; t < t0; ++t) {
        a.col(col).segment(t * p, p) = g.tap(t - tau).col(n - d) - g.tap(t - tau).col(0);
      }
      if (ng > 0) {
        const Matrix& pb = pow_b[static_cast<std::size_t>(t0 - 1 - tau)];
        a.col(col).tail(ntot) = factor.rightCols(ng) * (pb.col(n - d) - pb.col(0));
      }
    }
  }

  const auto ls = least_squares(a, b);
  CirculantSolution sol;
  for (int d = 1; d < n; ++d) {
    const int len = std::max(0, horizon_q - ring_distance(d, n) + 1);
    sol.coeffs.push_back(ls.x.segment(offset[static_cast<std::size_t>(d)], len));
  }
  sol.residual = ls.residual;
  sol.gradient_norm = ls.gradient_norm;
  sol.rank_deficient = ls.rank_deficient;
  sol.objective = std::sqrt(cp.scale * ls.residual * ls.residual);
  return sol;
}

SynthesisResult solve_ring_circulant(int n, double gamma, int horizon_q, bool recover) {
  const RingModel ring = make_ring(n, gamma);
  const YoulaData yd = make_t_systems(build_tilde_plant(ring.plant), ring.r_nom, ring.ms);
  const CirculantProblem cp = circulant_reduce(yd, ring.q_structure);
  const CirculantSolution sol = solve_circulant(cp, horizon_q);

  SynthesisResult res;
  res.q_opt = expand_circulant(n, sol.coeffs, horizon_q);
  res.objective = sol.objective;
  res.residual = sol.residual;
  res.residual_gradient = sol.gradient_norm;
  res.rank_deficient = sol.rank_deficient;
  for (const auto& c : sol.coeffs) res.free_variables += c.size();
  res.horizon_obj = horizon_q + 1;
  res.constraint_violation = std::max(e_violation(res.q_opt, ring.ms.indicators),
                                      membership(res.q_opt, ring.q_structure) ? 0.0 : 1.0);
  if (recover) finish_recovery(res, yd, ring.q_structure, ring.k_structure);
  return res;
}

}  // namespace relsyn
