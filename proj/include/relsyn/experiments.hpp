#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relsyn/h2_solver.hpp"
#include "relsyn/ring.hpp"

namespace relsyn {

// Four-subsystem example with every pairwise relative measurement.

/// Upper-triangular A (0.5 on the diagonal, 0.1 above), B1 = B2 = I,
/// z = [x; u], and C2 holding x_i - x_j for all i < j.
Plant motivating_plant();
/// Controller i reads only the measurements located at subsystem i.
InfoStructure motivating_k_structure();

struct MotivatingReport {
  QiResult output_feedback;  // S against Pyu
  QiResult state_feedback;   // upper triangular against Pxu
  double objective = 0.0;
  double constraint_violation = 0.0;
  bool k_member = false;
  bool k_relative = false;
  double k_error = 0.0;  // max tap entry of K C2 - R
  FirSystem k_opt = FirSystem::zero(0, 0, 0);
};

MotivatingReport run_motivating_example(int horizon_q = 16);

// Five states, three components.

Matrix example1_c2();

struct Example1Report {
  MeasurementStructure ms;
  DecompositionFailure failure;  // of the R with a nonzero fifth column
  FirSystem k = FirSystem::zero(0, 0, 0);
  double k_error = 0.0;          // max tap entry of K C2 - R
  double k1_error = 0.0;         // |K1 - R1 [1; 0]|
  double k2_error = 0.0;         // |K2 - R2 [-1; 0]|
};

Example1Report run_example_1(std::uint64_t seed = 7);

// Ring sweep.

struct SweepConfig {
  std::vector<int> n_values{3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::vector<double> gamma_values{0.2, 0.4, 0.5};
  int horizon_q = kDefaultHorizonQ;
  int horizon_obj = -1;
  std::uint64_t seed = 1;
  std::string output_path = "ring_sweep.csv";

  /// Throws DomainError on empty lists, n < 2 or gamma outside [0, 1].
  void validate() const;
};

/// JSON object with any of the SweepConfig fields, named as above.
SweepConfig read_sweep_config(const std::string& path);

struct SweepRow {
  int n = 0;
  double gamma = 0.0;
  double j = 0.0;
  double j_per_node = 0.0;
  double solve_ms = 0.0;
  double residual = 0.0;
  bool failed = false;
  std::string error;
};

/// Rows sorted by (n, gamma), duplicates dropped; failures are marked and the
/// sweep continues.
std::vector<SweepRow> run_ring_sweep(const SweepConfig& cfg);

/// Header n,gamma,J,J_per_node,solve_ms,residual; 12 significant digits.
void emit_csv(const std::vector<SweepRow>& rows, const std::string& path);
std::string format_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_csv(const std::string& text);

/// Matplotlib script plotting J/n against n, one line per gamma.
std::string plot_script(const std::string& csv_path);

// Closed-loop simulation.

struct SimulationOptions {
  int steps = 100000;
  int burn_in = 1000;
  std::uint64_t seed = 1;
  bool zero_disturbance = false;
  bool keep_trajectories = false;
  int batches = 100;
  double divergence_bound = 1e8;
};

struct SimulationResult {
  Matrix x, u, z;             // one column per step when kept
  double mean_z_energy = 0.0; // per-step E||z||^2 after burn-in
  double ci_low = 0.0;        // 99% batch-means interval
  double ci_high = 0.0;
  bool diverged = false;
  int steps_run = 0;
};

/// x+ = A x + B1 w + B2 u, y = C2 x, u = K applied to the y history, with
/// i.i.d. standard normal w.
SimulationResult simulate_closed_loop(const Plant& plant, const FirSystem& k, const SimulationOptions& opts);

// Problem bundles.

/// JSON bundle. Either {"ring": {"n": .., "gamma": ..}} or file paths
/// relative to the bundle: "plant", optional "c2", "structure", "rnom" or
/// "laplacian": true, optional "k_structure". Optional "horizon_q",
/// "horizon_obj", "gamma", "output_dir".
struct Bundle {
  Plant plant;
  MeasurementStructure ms;
  InfoStructure structure;
  std::optional<InfoStructure> k_structure;
  StateSpace r_nom;
  int horizon_q = kDefaultHorizonQ;
  int horizon_obj = -1;
  std::optional<double> gamma;
  std::string output_dir;
};

Bundle load_bundle(const std::string& path, bool force_laplacian = false);

InfoStructure read_structure(const std::string& path);
void write_structure(const std::string& path, const InfoStructure& s);

}  // namespace relsyn
