#include "relsyn/experiments.hpp"

#include <omp.h>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "relsyn/matrix_io.hpp"

namespace relsyn {

namespace fs = std::filesystem;

Plant motivating_plant() {
  const int n = 4;
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = 0.5;
    for (int j = i + 1; j < n; ++j) a(i, j) = 0.1;
  }
  const Matrix eye = Matrix::Identity(n, n);
  Matrix c1 = Matrix::Zero(2 * n, n);
  c1.topRows(n) = eye;
  Matrix d12 = Matrix::Zero(2 * n, n);
  d12.bottomRows(n) = eye;
  Matrix c2 = Matrix::Zero(6, n);
  int r = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++r) {
      c2(r, i) = 1;
      c2(r, j) = -1;
    }
  }
  return Plant(a, eye, eye, c1, d12, c2);
}

InfoStructure motivating_k_structure() {
  IntMatrix pattern = IntMatrix::Zero(4, 6);
  pattern.row(0).head(3).setOnes();
  pattern(1, 3) = 1;
  pattern(1, 4) = 1;
  pattern(2, 5) = 1;
  return InfoStructure::sparsity(pattern);
}

MotivatingReport run_motivating_example(int horizon_q) {
  const Plant plant = motivating_plant();
  const auto ms = validate_c2(plant.c2);
  const auto s_k = motivating_k_structure();
  const auto upper = upper_triangular_structure(4);

  MotivatingReport rep;
  rep.output_feedback = is_qi(s_k, plant_pattern(plant.pyu()));
  rep.state_feedback = is_qi(upper, plant_pattern(plant.pxu()));

  SynthesisProblem prob{make_t_systems(build_tilde_plant(plant), StateSpace::zero(4, 4), ms), upper, s_k, horizon_q};
  const auto res = solve(prob);
  rep.objective = res.objective;
  rep.constraint_violation = res.constraint_violation;
  rep.k_opt = *res.k_opt;
  rep.k_member = membership(rep.k_opt, s_k);
  const FirSystem kc2 = rep.k_opt * plant.c2;
  rep.k_relative = check_e_constraint(kc2, ms.indicators);
  const FirSystem r = markov(*res.r_opt, rep.k_opt.horizon());
  rep.k_error = (kc2 - r).max_abs();
  return rep;
}

Matrix example1_c2() {
  Matrix c2(2, 5);
  c2 << 1, 0, -1, 0, 0,
        0, -1, 0, 1, 0;
  return c2;
}

Example1Report run_example_1(std::uint64_t seed) {
  Example1Report rep;
  rep.ms = validate_c2(example1_c2());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int rows = 3;
  const int horizon = 2;

  // Centre each block so every row sums to zero over its component; the
  // isolated fifth state keeps random entries and must be rejected.
  std::vector<Matrix> taps;
  for (int k = 0; k <= horizon; ++k) {
    Matrix t(rows, 5);
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = unif(rng);
    for (const auto& comp : rep.ms.components) {
      if (comp.size() < 2) continue;
      for (Eigen::Index i = 0; i < t.rows(); ++i) {
        double mean = 0.0;
        for (int j : comp) mean += t(i, j);
        mean /= static_cast<double>(comp.size());
        for (int j : comp) t(i, j) -= mean;
      }
    }
    taps.push_back(t);
  }
  const auto bad = decompose(FirSystem(taps), rep.ms);
  if (bad.feasible()) throw DomainError("example 1: a nonzero fifth column must be rejected");
  rep.failure = *bad.failure;

  for (auto& t : taps) t.col(4).setZero();
  const FirSystem r(taps);
  rep.k = recover_controller(r, rep.ms);
  rep.k_error = (rep.k * rep.ms.c2_real() - r).max_abs();
  for (int k = 0; k <= horizon; ++k) {
    // R1 acts on (x1, x3), R2 on (x2, x4).
    rep.k1_error = std::max(rep.k1_error, (rep.k.tap(k).col(0) - r.tap(k).col(0)).cwiseAbs().maxCoeff());
    rep.k2_error = std::max(rep.k2_error, (rep.k.tap(k).col(1) + r.tap(k).col(1)).cwiseAbs().maxCoeff());
  }
  return rep;
}

void SweepConfig::validate() const {
  if (n_values.empty() || gamma_values.empty()) throw DomainError("sweep needs at least one n and one gamma");
  for (int n : n_values)
    if (n < 2) throw DomainError("sweep n values must be at least 2");
  for (double g : gamma_values)
    if (!(g >= 0.0 && g <= 1.0)) throw DomainError("sweep gamma values must lie in [0, 1]");
  if (horizon_q < 0) throw DomainError("sweep horizon_q must be nonnegative");
}

SweepConfig read_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sweep config '" + path + "'");
  SweepConfig cfg;
  try {
    const auto j = nlohmann::json::parse(in, nullptr, true, true);
    if (j.contains("n_values")) cfg.n_values = j.at("n_values").get<std::vector<int>>();
    if (j.contains("gamma_values")) cfg.gamma_values = j.at("gamma_values").get<std::vector<double>>();
    if (j.contains("horizon_q")) cfg.horizon_q = j.at("horizon_q").get<int>();
    if (j.contains("horizon_obj")) cfg.horizon_obj = j.at("horizon_obj").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_path")) cfg.output_path = j.at("output_path").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

std::vector<SweepRow> run_ring_sweep(const SweepConfig& cfg) {
  cfg.validate();
  std::vector<int> ns = cfg.n_values;
  std::vector<double> gs = cfg.gamma_values;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::sort(gs.begin(), gs.end());
  gs.erase(std::unique(gs.begin(), gs.end()), gs.end());
  std::vector<SweepRow> rows;
  for (int n : ns)
    for (double g : gs) {
      SweepRow row;
      row.n = n;
      row.gamma = g;
      rows.push_back(row);
    }
  const int count = static_cast<int>(rows.size());
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (int i = 0; i < count; ++i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto res = solve_ring_circulant(row.n, row.gamma, cfg.horizon_q, false);
      row.j = res.objective;
      row.j_per_node = res.objective / row.n;
      row.residual = res.residual;
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      row.j = row.j_per_node = row.residual = std::nan("");
    }
    row.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return rows;
}

namespace {

std::string g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string format_csv(const std::vector<SweepRow>& rows) {
  std::string out = "n,gamma,J,J_per_node,solve_ms,residual\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + g12(r.gamma) + "," + g12(r.j) + "," + g12(r.j_per_node) + "," +
           g12(r.solve_ms) + "," + g12(r.residual) + "\n";
  }
  return out;
}

void emit_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << format_csv(rows);
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<SweepRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "n,gamma,J,J_per_node,solve_ms,residual") {
    throw IoError("sweep CSV has an unexpected header");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw IoError("sweep CSV row has " + std::to_string(cells.size()) + " fields");
    SweepRow r;
    r.n = std::stoi(cells[0]);
    r.gamma = std::stod(cells[1]);
    r.j = std::stod(cells[2]);
    r.j_per_node = std::stod(cells[3]);
    r.solve_ms = std::stod(cells[4]);
    r.residual = std::stod(cells[5]);
    r.failed = std::isnan(r.j);
    rows.push_back(r);
  }
  return rows;
}

std::string plot_script(const std::string& csv_path) {
  std::string s;
  s += "import csv\nimport collections\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n";
  s += "series = collections.defaultdict(list)\n";
  s += "with open(" + nlohmann::json(csv_path).dump() + ") as f:\n";
  s += "    for row in csv.DictReader(f):\n";
  s += "        series[float(row['gamma'])].append((int(row['n']), float(row['J_per_node'])))\n\n";
  s += "for gamma, pts in sorted(series.items()):\n";
  s += "    pts.sort()\n";
  s += "    plt.plot([p[0] for p in pts], [p[1] for p in pts], marker='o', label=f'gamma={gamma:g}')\n";
  s += "plt.xlabel('n')\nplt.ylabel('J / n')\nplt.legend()\nplt.grid(True)\n";
  s += "plt.savefig(" + nlohmann::json(fs::path(csv_path).replace_extension(".png").string()).dump() + ", dpi=150)\n";
  return s;
}

SimulationResult simulate_closed_loop(const Plant& plant, const FirSystem& k, const SimulationOptions& opts) {
  if (k.rows() != plant.controls() || k.cols() != plant.measurements()) {
    throw StructuralError("simulate: controller is " + std::to_string(k.rows()) + "x" + std::to_string(k.cols()) +
                          ", plant expects " + std::to_string(plant.controls()) + "x" +
                          std::to_string(plant.measurements()));
  }
  if (opts.steps < 1) throw DomainError("simulate: steps must be positive");
  const auto n = plant.states();
  const int taps = k.horizon() + 1;
  const int total = opts.burn_in + opts.steps;

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SimulationResult res;
  if (opts.keep_trajectories) {
    res.x = Matrix::Zero(n, opts.steps);
    res.u = Matrix::Zero(plant.controls(), opts.steps);
    res.z = Matrix::Zero(plant.performance(), opts.steps);
  }
  // Ring buffer of past measurements; slot t % taps holds y(t).
  Matrix y_hist = Matrix::Zero(plant.measurements(), taps);
  Vector x = Vector::Zero(n);
  Vector w(plant.disturbances());
  Vector u(plant.controls());
  std::vector<double> energy;
  energy.reserve(static_cast<std::size_t>(opts.steps));

  for (int t = 0; t < total; ++t) {
    y_hist.col(t % taps) = plant.c2 * x;
    u.setZero();
    for (int j = 0; j < taps && j <= t; ++j) u.noalias() += k.tap(j) * y_hist.col((t - j) % taps);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = opts.zero_disturbance ? 0.0 : normal(rng);
    const Vector z = plant.c1 * x + plant.d11 * w + plant.d12 * u;
    if (t >= opts.burn_in) {
      const int s = t - opts.burn_in;
      energy.push_back(z.squaredNorm());
      if (opts.keep_trajectories) {
        res.x.col(s) = x;
        res.u.col(s) = u;
        res.z.col(s) = z;
      }
    }
    x = plant.a * x + plant.b1 * w + plant.b2 * u;
    res.steps_run = t + 1;
    if (!x.allFinite() || x.norm() > opts.divergence_bound) {
      res.diverged = true;
      break;
    }
  }
  if (energy.empty()) return res;

  double sum = 0.0;
  for (double e : energy) sum += e;
  res.mean_z_energy = sum / static_cast<double>(energy.size());

  const int batches = std::max(2, std::min<int>(opts.batches, static_cast<int>(energy.size())));
  const std::size_t per = energy.size() / static_cast<std::size_t>(batches);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < per; ++i) s += energy[static_cast<std::size_t>(b) * per + i];
    means.push_back(s / static_cast<double>(per));
  }
  double m = 0.0;
  for (double v : means) m += v;
  m /= batches;
  double var = 0.0;
  for (double v : means) var += (v - m) * (v - m);
  var /= (batches - 1);
  // Student t quantile 0.995 with 99 degrees of freedom; 2.576 is the normal limit.
  const double q = batches == 100 ? 2.626405 : 2.575829;
  const double half = q * std::sqrt(var / batches);
  res.ci_low = m - half;
  res.ci_high = m + half;
  return res;
}

InfoStructure read_structure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::istringstream body(strip_comments(in));
  long rows = -1;
  long cols = -1;
  if (!(body >> rows >> cols) || rows < 0 || cols < 0) throw IoError(path + ": expected 'rows cols'");
  IntMatrix d(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      std::string tok;
      if (!(body >> tok)) throw IoError(path + ": structure ends early");
      if (tok == "inf") {
        d(i, j) = kNever;
        continue;
      }
      std::size_t used = 0;
      int v = -1;
      try {
        v = std::stoi(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || v < 0) throw IoError(path + ": bad delay entry '" + tok + "'");
      d(i, j) = v;
    }
  }
  return {d};
}

void write_structure(const std::string& path, const InfoStructure& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << s.rows() << ' ' << s.cols() << '\n';
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      out << (j ? " " : "");
      if (s.min_delay(i, j) == kNever) {
        out << "inf";
      } else {
        out << s.min_delay(i, j);
      }
    }
    out << '\n';
  }
}

Bundle load_bundle(const std::string& path, bool force_laplacian) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open bundle '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& key) { return (base / j.at(key).get<std::string>()).string(); };

  try {
    auto finish = [&](Bundle b) {
      if (j.contains("horizon_q")) b.horizon_q = j.at("horizon_q").get<int>();
      if (j.contains("horizon_obj")) b.horizon_obj = j.at("horizon_obj").get<int>();
      if (j.contains("gamma")) b.gamma = j.at("gamma").get<double>();
      b.output_dir = j.contains("output_dir") ? resolve("output_dir") : base.string();
      return b;
    };
    if (j.contains("ring")) {
      const int n = j.at("ring").at("n").get<int>();
      const double gamma = j.at("ring").at("gamma").get<double>();
      RingModel ring = make_ring(n, gamma);
      Bundle b{ring.plant, ring.ms, ring.q_structure, ring.k_structure, ring.r_nom, kDefaultHorizonQ, -1, gamma, {}};
      return finish(std::move(b));
    }
    Plant plant = read_plant(resolve("plant"));
    if (j.contains("c2")) plant.c2 = read_matrix(resolve("c2"));
    if (plant.c2.cols() != plant.states()) throw StructuralError("C2 does not match the plant state dimension");
    auto ms = validate_c2(plant.c2);
    const InfoStructure structure = read_structure(resolve("structure"));
    std::optional<InfoStructure> k_structure;
    if (j.contains("k_structure")) k_structure = read_structure(resolve("k_structure"));
    const bool lap = force_laplacian || j.value("laplacian", false);
    StateSpace r_nom = StateSpace::zero(plant.controls(), plant.states());
    if (lap) {
      r_nom = laplacian_rnom(ms.adjacency);
    } else if (j.contains("rnom")) {
      r_nom = to_state_space(read_fir(resolve("rnom")));
    }
    return finish(Bundle{std::move(plant), std::move(ms), structure, k_structure, std::move(r_nom),
                         kDefaultHorizonQ, -1, std::nullopt, {}});
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace relsyn
