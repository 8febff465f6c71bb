#include "relsyn/lti.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>

namespace relsyn {

namespace {

std::string dims(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), std::max(a.cols(), b.cols()));
  out << a, b;
  return out;
}

Matrix hstack(const Matrix& a, const Matrix& b) {
  Matrix out(std::max(a.rows(), b.rows()), a.cols() + b.cols());
  out << a, b;
  return out;
}

void require_same_shape(const FirSystem& g, const FirSystem& h, const char* what) {
  if (g.rows() != h.rows() || g.cols() != h.cols()) {
    throw StructuralError(std::string(what) + ": FIR shapes differ");
  }
}

}  // namespace

StateSpace::StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
  const auto n = a_.rows();
  if (a_.cols() != n || b_.rows() != n || c_.cols() != n || d_.rows() != c_.rows() ||
      d_.cols() != b_.cols()) {
    throw StructuralError("inconsistent state-space dimensions: A " + dims(a_) + ", B " + dims(b_) +
                          ", C " + dims(c_) + ", D " + dims(d_));
  }
  if (!a_.allFinite() || !b_.allFinite() || !c_.allFinite() || !d_.allFinite()) {
    throw StructuralError("state-space realization has non-finite entries");
  }
}

StateSpace StateSpace::gain(const Matrix& d) {
  return StateSpace(Matrix(0, 0), Matrix(0, d.cols()), Matrix(d.rows(), 0), d);
}

StateSpace StateSpace::zero(Eigen::Index outputs, Eigen::Index inputs) {
  return gain(Matrix::Zero(outputs, inputs));
}

FirSystem::FirSystem(std::vector<Matrix> taps) : taps_(std::move(taps)) {
  if (taps_.empty()) {
    throw StructuralError("FIR system needs at least one tap");
  }
  for (const auto& t : taps_) {
    if (t.rows() != taps_.front().rows() || t.cols() != taps_.front().cols()) {
      throw StructuralError("FIR taps have mismatched dimensions");
    }
    if (!t.allFinite()) {
      throw StructuralError("FIR tap has non-finite entries");
    }
  }
}

FirSystem FirSystem::zero(Eigen::Index rows, Eigen::Index cols, int horizon) {
  return FirSystem(std::vector<Matrix>(static_cast<std::size_t>(std::max(horizon, 0) + 1),
                                       Matrix::Zero(rows, cols)));
}

FirSystem FirSystem::identity(Eigen::Index n) {
  return FirSystem({Matrix::Identity(n, n)});
}

FirSystem FirSystem::delay(const Matrix& gain, int k) {
  auto taps = std::vector<Matrix>(static_cast<std::size_t>(k + 1), Matrix::Zero(gain.rows(), gain.cols()));
  taps.back() = gain;
  return FirSystem(std::move(taps));
}

double FirSystem::max_abs() const {
  double m = 0.0;
  for (const auto& t : taps_) {
    if (t.size() > 0) m = std::max(m, t.cwiseAbs().maxCoeff());
  }
  return m;
}

FirSystem truncate(const FirSystem& g, int horizon) {
  std::vector<Matrix> taps;
  taps.reserve(static_cast<std::size_t>(horizon + 1));
  for (int k = 0; k <= horizon; ++k) {
    taps.push_back(k <= g.horizon() ? g.tap(k) : Matrix::Zero(g.rows(), g.cols()));
  }
  return FirSystem(std::move(taps));
}

FirSystem operator+(const FirSystem& g, const FirSystem& h) {
  require_same_shape(g, h, "FIR sum");
  const int horizon = std::max(g.horizon(), h.horizon());
  auto out = truncate(g, horizon).taps();
  for (int k = 0; k <= h.horizon(); ++k) out[static_cast<std::size_t>(k)] += h.tap(k);
  return FirSystem(std::move(out));
}

FirSystem operator-(const FirSystem& g, const FirSystem& h) { return g + (-1.0) * h; }

FirSystem operator*(double s, const FirSystem& g) {
  auto taps = g.taps();
  for (auto& t : taps) t *= s;
  return FirSystem(std::move(taps));
}

FirSystem operator*(const FirSystem& g, const Matrix& m) {
  if (g.cols() != m.rows()) throw StructuralError("FIR times matrix: inner dimensions differ");
  std::vector<Matrix> taps;
  for (const auto& t : g.taps()) taps.emplace_back(t * m);
  return FirSystem(std::move(taps));
}

FirSystem operator*(const Matrix& m, const FirSystem& g) {
  if (m.cols() != g.rows()) throw StructuralError("matrix times FIR: inner dimensions differ");
  std::vector<Matrix> taps;
  for (const auto& t : g.taps()) taps.emplace_back(m * t);
  return FirSystem(std::move(taps));
}

FirSystem markov(const StateSpace& sys, int horizon) {
  if (horizon < 0) throw DomainError("markov: horizon must be nonnegative");
  std::vector<Matrix> taps;
  taps.reserve(static_cast<std::size_t>(horizon + 1));
  taps.push_back(sys.d());
  Matrix x = sys.b();
  for (int k = 1; k <= horizon; ++k) {
    taps.emplace_back(sys.c() * x);
    if (k < horizon) x = sys.a() * x;
  }
  return FirSystem(std::move(taps));
}

FirSystem fir_compose(const FirSystem& g, const FirSystem& h, int horizon) {
  if (g.cols() != h.rows()) throw StructuralError("fir_compose: inner dimensions differ");
  const int full = g.horizon() + h.horizon();
  const int out_h = horizon < 0 ? full : horizon;
  std::vector<Matrix> taps(static_cast<std::size_t>(out_h + 1), Matrix::Zero(g.rows(), h.cols()));
  for (int a = 0; a <= g.horizon() && a <= out_h; ++a) {
    for (int b = 0; b <= h.horizon() && a + b <= out_h; ++b) {
      taps[static_cast<std::size_t>(a + b)].noalias() += g.tap(a) * h.tap(b);
    }
  }
  return FirSystem(std::move(taps));
}

StateSpace to_state_space(const FirSystem& f) {
  const int horizon = f.horizon();
  if (horizon == 0) return StateSpace::gain(f.tap(0));
  const auto p = f.rows();
  const auto m = f.cols();
  const auto n = p * horizon;
  Matrix a = Matrix::Zero(n, n);
  Matrix b(n, m);
  Matrix c = Matrix::Zero(p, n);
  for (int k = 0; k < horizon; ++k) {
    b.middleRows(k * p, p) = f.tap(k + 1);
    if (k + 1 < horizon) a.block(k * p, (k + 1) * p, p, p).setIdentity();
  }
  c.leftCols(p).setIdentity();
  return StateSpace(std::move(a), std::move(b), std::move(c), f.tap(0));
}

StateSpace series(const StateSpace& g, const StateSpace& h) {
  if (g.inputs() != h.outputs()) throw StructuralError("series: inner dimensions differ");
  const auto nh = h.states();
  const auto ng = g.states();
  Matrix a = Matrix::Zero(nh + ng, nh + ng);
  a.topLeftCorner(nh, nh) = h.a();
  a.bottomLeftCorner(ng, nh) = g.b() * h.c();
  a.bottomRightCorner(ng, ng) = g.a();
  Matrix b(nh + ng, h.inputs());
  b << h.b(), g.b() * h.d();
  Matrix c(g.outputs(), nh + ng);
  c << g.d() * h.c(), g.c();
  return StateSpace(std::move(a), std::move(b), std::move(c), g.d() * h.d());
}

StateSpace parallel(const StateSpace& g, const StateSpace& h) {
  if (g.inputs() != h.inputs() || g.outputs() != h.outputs()) {
    throw StructuralError("parallel: systems have different shapes");
  }
  return StateSpace(block_diag(g.a(), h.a()), vstack(g.b(), h.b()), hstack(g.c(), h.c()), g.d() + h.d());
}

StateSpace negate(const StateSpace& g) { return scale(-1.0, g); }

StateSpace scale(double s, const StateSpace& g) {
  return StateSpace(g.a(), g.b(), s * g.c(), s * g.d());
}

StateSpace left_multiply(const Matrix& m, const StateSpace& g) {
  if (m.cols() != g.outputs()) throw StructuralError("left_multiply: inner dimensions differ");
  return StateSpace(g.a(), g.b(), m * g.c(), m * g.d());
}

StateSpace right_multiply(const StateSpace& g, const Matrix& m) {
  if (g.inputs() != m.rows()) throw StructuralError("right_multiply: inner dimensions differ");
  return StateSpace(g.a(), g.b() * m, g.c(), g.d() * m);
}

StateSpace stack_outputs(const StateSpace& g, const StateSpace& h) {
  if (g.inputs() != h.inputs()) throw StructuralError("stack_outputs: input dimensions differ");
  return StateSpace(block_diag(g.a(), h.a()), vstack(g.b(), h.b()), block_diag(g.c(), h.c()),
                    vstack(g.d(), h.d()));
}

StateSpace lft(const StateSpace& g, const StateSpace& h) {
  // Loop: e = r + G y, y = H e, output y. G maps y (dim b) to dim a, H maps a to b.
  if (g.inputs() != h.outputs() || g.outputs() != h.inputs()) {
    throw StructuralError("lft: G and H dimensions are not compatible");
  }
  const auto nb = h.outputs();
  const Matrix loop = Matrix::Identity(nb, nb) - h.d() * g.d();
  Eigen::FullPivLU<Matrix> lu(loop);
  if (!lu.isInvertible() || lu.rcond() < 1e-12) {
    throw WellPosednessError("lft: I - D_G D_H is singular");
  }
  const auto ng = g.states();
  const auto nh = h.states();
  const auto na = h.inputs();

  // y = Yx [xg; xh] + Yr r, e = Ex [xg; xh] + Er r.
  Matrix yx(nb, ng + nh);
  yx << h.d() * g.c(), h.c();
  yx = lu.solve(yx);
  const Matrix yr = lu.solve(h.d());
  Matrix ex = g.d() * yx;
  ex.leftCols(ng) += g.c();
  const Matrix er = Matrix::Identity(na, na) + g.d() * yr;

  Matrix a = block_diag(g.a(), h.a());
  a.topRows(ng) += g.b() * yx;
  a.bottomRows(nh) += h.b() * ex;
  Matrix b(ng + nh, na);
  b << g.b() * yr, h.b() * er;
  return StateSpace(std::move(a), std::move(b), yx, yr);
}

double spectral_radius(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix dlyap(const Matrix& a, const Matrix& q) {
  const auto n = a.rows();
  if (n == 0) return Matrix(0, 0);
  if (spectral_radius(a) >= 1.0) throw DomainError("dlyap: A is not Schur stable");
  Matrix x;
  if (n <= 20) {
    const auto nn = n * n;
    Matrix k = Matrix::Identity(nn, nn);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index l = 0; l < n; ++l)
          for (Eigen::Index kk = 0; kk < n; ++kk) k(i + j * n, kk + l * n) -= a(i, kk) * a(j, l);
    const Vector v = Eigen::Map<const Vector>(q.data(), nn);
    const Vector sol = k.partialPivLu().solve(v);
    x = Eigen::Map<const Matrix>(sol.data(), n, n);
  } else {
    // Smith doubling: X <- X + A_k X A_k^T, A_k <- A_k^2.
    x = q;
    Matrix ak = a;
    for (int it = 0; it < 200; ++it) {
      const Matrix inc = ak * x * ak.transpose();
      x += inc;
      if (inc.norm() <= 1e-16 * std::max(1.0, x.norm())) break;
      ak = ak * ak;
    }
  }
  return 0.5 * (x + x.transpose());
}

double h2_norm_lyap(const StateSpace& sys) {
  double val = sys.d().squaredNorm();
  if (sys.states() > 0) {
    if (spectral_radius(sys.a()) >= 1.0) throw DomainError("h2_norm_lyap: system is not Schur stable");
    const Matrix x = dlyap(sys.a(), sys.b() * sys.b().transpose());
    val += (sys.c() * x * sys.c().transpose()).trace();
  }
  return std::sqrt(std::max(0.0, val));
}

double h2_norm_fir(const FirSystem& f) {
  double s = 0.0;
  for (const auto& t : f.taps()) s += t.squaredNorm();
  return std::sqrt(s);
}

double tail_energy(const StateSpace& sys, int k) {
  if (k <= 0) return std::pow(h2_norm_lyap(sys), 2);
  if (sys.states() == 0) return 0.0;
  const Matrix wo = dlyap(sys.a().transpose(), sys.c().transpose() * sys.c());
  Matrix x = sys.b();
  for (int t = 1; t < k; ++t) x = sys.a() * x;
  return std::max(0.0, (x.transpose() * wo * x).trace());
}

Matrix lift_directions(const Matrix& directions, Eigen::Index total_states) {
  if (directions.rows() > total_states) throw StructuralError("lift_directions: too many rows");
  Matrix out = Matrix::Zero(total_states, directions.cols());
  out.topRows(directions.rows()) = directions;
  return out;
}

namespace {

struct Split {
  Matrix v;  // orthonormal basis of the directions
  Matrix u;  // orthonormal complement
};

Split orthonormal_split(const Matrix& directions) {
  const auto n = directions.rows();
  Eigen::ColPivHouseholderQR<Matrix> qr(directions);
  qr.setThreshold(1e-10);
  const auto r = qr.rank();
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return {q.leftCols(r), q.rightCols(n - r)};
}

bool is_invariant(const Matrix& a, const Matrix& v) {
  const Matrix av = a * v;
  return (av - v * (v.transpose() * av)).norm() <= 1e-9 * (1.0 + a.norm());
}

}  // namespace

bool is_internally_stable(const StateSpace& cl, const Matrix& agreement) {
  const Matrix& a = cl.a();
  if (a.rows() == 0) return true;
  if (agreement.cols() == 0) return spectral_radius(a) < 1.0 - kStabilityTol;
  if (agreement.rows() != a.rows()) throw StructuralError("agreement directions must match the state dimension");

  const auto split = orthonormal_split(agreement);
  if (is_invariant(a, split.v)) {
    const Matrix on_v = split.v.transpose() * a * split.v;
    const Matrix on_u = split.u.transpose() * a * split.u;
    return spectral_radius(on_u) < 1.0 - kStabilityTol && spectral_radius(on_v) <= 1.0 + kStabilityTol;
  }
  // Not invariant: each marginal eigenvector must still lie inside the span.
  Eigen::EigenSolver<Matrix> es(a, true);
  const Eigen::MatrixXcd vc = split.v.cast<std::complex<double>>();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double mod = std::abs(es.eigenvalues()(i));
    if (mod < 1.0 - kStabilityTol) continue;
    if (mod > 1.0 + kStabilityTol) return false;
    const Eigen::VectorXcd ev = es.eigenvectors().col(i);
    const Eigen::VectorXcd resid = ev - vc * (vc.adjoint() * ev);
    if (resid.norm() > 1e-6 * ev.norm()) return false;
  }
  return true;
}

StateSpace reduce_agreement(const StateSpace& sys, const Matrix& directions) {
  if (directions.cols() == 0 || sys.states() == 0) return sys;
  if (directions.rows() != sys.states()) throw StructuralError("reduce_agreement: direction size mismatch");
  const auto split = orthonormal_split(directions);
  if (split.v.cols() == 0) return sys;
  if (!is_invariant(sys.a(), split.v)) return sys;
  if ((sys.c() * split.v).norm() > 1e-9 * (1.0 + sys.c().norm())) return sys;
  const Matrix& u = split.u;
  return StateSpace(u.transpose() * sys.a() * u, u.transpose() * sys.b(), sys.c() * u, sys.d());
}

Plant::Plant(Matrix a_, Matrix b1_, Matrix b2_, Matrix c1_, Matrix d12_, Matrix c2_, Matrix d11_)
    : a(std::move(a_)),
      b1(std::move(b1_)),
      b2(std::move(b2_)),
      c1(std::move(c1_)),
      d11(std::move(d11_)),
      d12(std::move(d12_)),
      c2(std::move(c2_)) {
  const auto n = a.rows();
  if (d11.size() == 0) d11 = Matrix::Zero(c1.rows(), b1.cols());
  if (a.cols() != n || b1.rows() != n || b2.rows() != n || c1.cols() != n || c2.cols() != n ||
      d12.rows() != c1.rows() || d12.cols() != b2.cols() || d11.rows() != c1.rows() ||
      d11.cols() != b1.cols()) {
    throw StructuralError("inconsistent plant dimensions");
  }
  // Validates finiteness as a side effect.
  (void)StateSpace(a, b2, c1, d12);
  (void)StateSpace(a, b1, c2, Matrix::Zero(c2.rows(), b1.cols()));
  if (!d11.allFinite()) throw StructuralError("plant D11 has non-finite entries");
}

StateSpace Plant::pzw() const { return StateSpace(a, b1, c1, d11); }
StateSpace Plant::pzu() const { return StateSpace(a, b2, c1, d12); }
StateSpace Plant::pyw() const { return StateSpace(a, b1, c2, Matrix::Zero(c2.rows(), b1.cols())); }
StateSpace Plant::pyu() const { return StateSpace(a, b2, c2, Matrix::Zero(c2.rows(), b2.cols())); }
StateSpace Plant::pxw() const {
  return StateSpace(a, b1, Matrix::Identity(states(), states()), Matrix::Zero(states(), b1.cols()));
}
StateSpace Plant::pxu() const {
  return StateSpace(a, b2, Matrix::Identity(states(), states()), Matrix::Zero(states(), b2.cols()));
}

StateSpace close_loop(const Plant& plant, const StateSpace& k) {
  if (k.inputs() != plant.measurements() || k.outputs() != plant.controls()) {
    throw StructuralError("close_loop: controller is " + std::to_string(k.outputs()) + "x" +
                          std::to_string(k.inputs()) + ", plant expects " +
                          std::to_string(plant.controls()) + "x" + std::to_string(plant.measurements()));
  }
  const auto n = plant.states();
  const auto nk = k.states();
  Matrix a(n + nk, n + nk);
  a << plant.a + plant.b2 * k.d() * plant.c2, plant.b2 * k.c(), k.b() * plant.c2, k.a();
  Matrix b = Matrix::Zero(n + nk, plant.disturbances());
  b.topRows(n) = plant.b1;
  Matrix c(plant.performance(), n + nk);
  c << plant.c1 + plant.d12 * k.d() * plant.c2, plant.d12 * k.c();
  return StateSpace(std::move(a), std::move(b), std::move(c), plant.d11);
}

}  // namespace relsyn
