// relsyn: command-line front end for relative-measurement H2 synthesis.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "relsyn/experiments.hpp"
#include "relsyn/matrix_io.hpp"

using namespace relsyn;
namespace fs = std::filesystem;

namespace {

std::string g(double v, int digits = 12) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string quad(const std::array<int, 4>& v) {
  return "(" + std::to_string(v[0] + 1) + "," + std::to_string(v[1] + 1) + "," + std::to_string(v[2] + 1) + "," +
         std::to_string(v[3] + 1) + ")";
}

nlohmann::json graph_json(const MeasurementStructure& ms) {
  nlohmann::json j;
  j["states"] = ms.states();
  j["measurements"] = ms.measurements();
  auto comps = nlohmann::json::array();
  auto inds = nlohmann::json::array();
  for (std::size_t c = 0; c < ms.components.size(); ++c) {
    auto members = nlohmann::json::array();
    for (int v : ms.components[c]) members.push_back(v + 1);
    comps.push_back(members);
    auto e = nlohmann::json::array();
    for (Eigen::Index i = 0; i < ms.indicators[c].size(); ++i) e.push_back(static_cast<int>(ms.indicators[c](i)));
    inds.push_back(e);
  }
  j["components"] = comps;
  j["indicators"] = inds;
  auto adj = nlohmann::json::array();
  for (Eigen::Index i = 0; i < ms.adjacency.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < ms.adjacency.cols(); ++k) row.push_back(ms.adjacency(i, k));
    adj.push_back(row);
  }
  j["adjacency"] = adj;
  return j;
}

// "3..12" or "5".
std::vector<int> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) return {std::stoi(text)};
    const int a = std::stoi(text.substr(0, dots));
    const int b = std::stoi(text.substr(dots + 2));
    if (b < a) throw DomainError("empty range '" + text + "'");
    std::vector<int> out;
    for (int v = a; v <= b; ++v) out.push_back(v);
    return out;
  } catch (const std::logic_error&) {
    throw DomainError("bad range '" + text + "', expected a..b");
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      throw DomainError("bad number '" + item + "' in list");
    }
  }
  return out;
}

struct SolveOutcome {
  Bundle bundle;
  SynthesisResult result;
};

SolveOutcome solve_bundle(const std::string& path, bool laplacian, int horizon_q, int horizon_obj) {
  Bundle b = load_bundle(path, laplacian);
  if (horizon_q >= 0) b.horizon_q = horizon_q;
  if (horizon_obj >= 0) b.horizon_obj = horizon_obj;
  SynthesisProblem prob{make_t_systems(build_tilde_plant(b.plant), b.r_nom, b.ms), b.structure, b.k_structure,
                        b.horizon_q, b.horizon_obj, true};
  auto res = solve(prob);
  return {std::move(b), std::move(res)};
}

int cmd_graph(const std::string& c2file) {
  const auto ms = validate_c2(read_matrix(c2file));
  std::cout << graph_json(ms).dump() << '\n';
  return 0;
}

int cmd_qi(const std::string& structfile, const std::string& plantfile) {
  const InfoStructure s = read_structure(structfile);
  const Plant plant = read_plant(plantfile);
  const bool on_states = s.cols() == plant.states() && s.cols() != plant.measurements();
  const StateSpace block = on_states ? plant.pxu() : plant.pyu();
  const auto res = is_qi(s, plant_pattern(block));
  std::cout << "block: " << (on_states ? "Pxu" : "Pyu") << '\n';
  std::cout << "quadratically invariant: " << (res.invariant ? "yes" : "no") << '\n';
  if (res.violation) std::cout << "violation (i,j,k,m): " << quad(*res.violation) << '\n';
  return res.invariant ? 0 : 1;
}

int cmd_solve(const std::string& bundle, bool laplacian, int horizon_q, int horizon_obj) {
  const auto out = solve_bundle(bundle, laplacian, horizon_q, horizon_obj);
  const auto& res = out.result;
  fs::create_directories(out.bundle.output_dir);
  const auto dir = fs::path(out.bundle.output_dir);
  write_fir((dir / "q_opt.fir").string(), res.q_opt);
  write_fir((dir / "k_opt.fir").string(), *res.k_opt);
  std::cout << "n=" << out.bundle.plant.states() << " gamma=" << (out.bundle.gamma ? g(*out.bundle.gamma) : "na")
            << " J=" << g(res.objective) << " residual=" << g(res.residual) << '\n';
  std::cerr << "free variables " << res.free_variables << ", objective horizon " << res.horizon_obj
            << ", constraint violation " << g(res.constraint_violation, 3)
            << (res.rank_deficient ? ", rank deficient (minimal-norm Q)" : "") << '\n';
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& nrange, const std::string& gammas, std::int64_t seed,
              const std::string& out_path, int horizon_q) {
  SweepConfig cfg = config.empty() ? SweepConfig{} : read_sweep_config(config);
  if (!nrange.empty()) cfg.n_values = parse_range(nrange);
  if (!gammas.empty()) cfg.gamma_values = parse_list(gammas);
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (!out_path.empty()) cfg.output_path = out_path;
  if (horizon_q >= 0) cfg.horizon_q = horizon_q;
  const auto rows = run_ring_sweep(cfg);
  emit_csv(rows, cfg.output_path);
  const auto script = fs::path(cfg.output_path).replace_extension(".py").string();
  std::ofstream(script) << plot_script(cfg.output_path);
  int failed = 0;
  for (const auto& r : rows) {
    std::cout << "n=" << r.n << " gamma=" << g(r.gamma) << " J=" << g(r.j) << " J/n=" << g(r.j_per_node);
    if (r.failed) {
      std::cout << " FAILED: " << r.error;
      ++failed;
    }
    std::cout << '\n';
  }
  std::cout << "wrote " << cfg.output_path << " and " << script << '\n';
  return failed ? 1 : 0;
}

int cmd_simulate(const std::string& bundle, int steps, std::int64_t seed) {
  const auto out = solve_bundle(bundle, false, -1, -1);
  SimulationOptions opts;
  opts.steps = steps;
  opts.seed = static_cast<std::uint64_t>(seed);
  const auto sim = simulate_closed_loop(out.bundle.plant, *out.result.k_opt, opts);
  const double j2 = out.result.objective * out.result.objective;
  std::cout << "steps=" << steps << " seed=" << seed << '\n';
  std::cout << "analytic J^2 = " << g(j2) << '\n';
  std::cout << "empirical E|z|^2 = " << g(sim.mean_z_energy) << "  99% CI [" << g(sim.ci_low) << ", "
            << g(sim.ci_high) << "]\n";
  std::cout << "diverged: " << (sim.diverged ? "yes" : "no") << '\n';
  return sim.diverged ? 1 : 0;
}

int cmd_example(const std::string& which) {
  if (which == "motivating") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = run_motivating_example();
    std::cout << "output feedback: S vs Pyu quadratically invariant: " << (rep.output_feedback.invariant ? "yes" : "no");
    if (rep.output_feedback.violation) std::cout << "  violation (i,j,k,m) = " << quad(*rep.output_feedback.violation);
    std::cout << '\n';
    std::cout << "state feedback: upper triangular vs Pxu quadratically invariant: "
              << (rep.state_feedback.invariant ? "yes" : "no") << '\n';
    std::cout << "relative synthesis: J = " << g(rep.objective) << ", constraint violation " << g(rep.constraint_violation, 3)
              << '\n';
    std::cout << "recovered K in S: " << (rep.k_member ? "yes" : "no") << ", K C2 relative: " << (rep.k_relative ? "yes" : "no")
              << ", max |K C2 - R| = " << g(rep.k_error, 3) << '\n';
    std::cout << "K tap 0:\n" << rep.k_opt.tap(0) << '\n';
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "elapsed " << g(ms, 4) << " ms\n";
    return 0;
  }
  if (which == "example1") {
    const auto rep = run_example_1();
    std::cout << graph_json(rep.ms).dump() << '\n';
    std::cout << "R with a nonzero column 5: rejected, component " << rep.failure.component + 1 << " at tap "
              << rep.failure.tap << '\n';
    std::cout << "R with column 5 zeroed and relative blocks: recovered, max |K C2 - R| = " << g(rep.k_error, 3) << '\n';
    std::cout << "max |K1 - R1 [1;0]| = " << g(rep.k1_error, 3) << ", max |K2 - R2 [-1;0]| = " << g(rep.k2_error, 3)
              << '\n';
    return 0;
  }
  throw DomainError("unknown example '" + which + "', expected motivating or example1");
}

int cmd_youla_check(const std::string& plantfile, const std::string& rnomfile, bool laplacian) {
  const Plant plant = read_plant(plantfile);
  const auto ms = validate_c2(plant.c2);
  StateSpace r_nom = StateSpace::zero(plant.controls(), plant.states());
  if (laplacian) {
    r_nom = laplacian_rnom(ms.adjacency);
  } else if (!rnomfile.empty()) {
    r_nom = to_state_space(read_fir(rnomfile));
  }
  const auto v = check_nominal(build_tilde_plant(plant), r_nom, ms);
  std::cout << "nominal stable: " << (v.nominal_stable ? "yes" : "no") << '\n';
  std::cout << "nominal annihilates indicators: " << (v.nominal_relative ? "yes" : "no") << '\n';
  std::cout << "closed loop stable modulo agreement: " << (v.closed_loop_stable ? "yes" : "no") << '\n';
  return v.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative-measurement H2 controller synthesis"};
  app.require_subcommand(1);
  int rc = 0;

  std::string c2file;
  auto* graph = app.add_subcommand("graph", "Components, indicators and adjacency of a C2 matrix");
  graph->add_option("c2file", c2file)->required()->check(CLI::ExistingFile);
  graph->callback([&] { rc = cmd_graph(c2file); });

  std::string structfile, plantfile;
  auto* qi = app.add_subcommand("qi", "Quadratic invariance of a structure under the plant");
  qi->add_option("structfile", structfile)->required()->check(CLI::ExistingFile);
  qi->add_option("plantfile", plantfile)->required()->check(CLI::ExistingFile);
  qi->callback([&] { rc = cmd_qi(structfile, plantfile); });

  std::string bundle;
  bool laplacian = false;
  int horizon_q = -1;
  int horizon_obj = -1;
  auto* solve_cmd = app.add_subcommand("solve", "Synthesize the optimal relative controller for a bundle");
  solve_cmd->add_option("bundle", bundle)->required()->check(CLI::ExistingFile);
  solve_cmd->add_flag("--laplacian", laplacian, "Use -(1/n) L as the nominal controller");
  solve_cmd->add_option("--horizon-q", horizon_q, "FIR taps of Q")->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--horizon-obj", horizon_obj, "Objective truncation")->check(CLI::NonNegativeNumber);
  solve_cmd->callback([&] { rc = cmd_solve(bundle, laplacian, horizon_q, horizon_obj); });

  std::string config, nrange, gammas, out_path;
  std::int64_t seed = -1;
  auto* sweep = app.add_subcommand("ring-sweep", "Cost per node of the ring consensus problem");
  sweep->add_option("--config", config, "JSON sweep configuration")->check(CLI::ExistingFile);
  sweep->add_option("--n", nrange, "Range a..b of ring sizes");
  sweep->add_option("--gamma", gammas, "Comma-separated gamma values");
  sweep->add_option("--seed", seed);
  sweep->add_option("--out", out_path, "CSV output path");
  sweep->add_option("--horizon-q", horizon_q)->check(CLI::NonNegativeNumber);
  sweep->callback([&] { rc = cmd_sweep(config, nrange, gammas, seed, out_path, horizon_q); });

  int steps = 100000;
  std::int64_t sim_seed = 1;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo closed loop under the synthesized controller");
  sim->add_option("bundle", bundle)->required()->check(CLI::ExistingFile);
  sim->add_option("--steps", steps)->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed);
  sim->callback([&] { rc = cmd_simulate(bundle, steps, sim_seed); });

  std::string which;
  auto* example = app.add_subcommand("example", "Built-in examples");
  example->add_option("which", which, "motivating or example1")->required();
  example->callback([&] { rc = cmd_example(which); });

  std::string rnomfile;
  auto* youla = app.add_subcommand("youla", "Youla parameterization utilities");
  youla->require_subcommand(1);
  auto* check = youla->add_subcommand("check", "Validate a nominal controller against a plant");
  check->add_option("plantfile", plantfile)->required()->check(CLI::ExistingFile);
  check->add_option("--rnom", rnomfile, "FIR file of the nominal controller (default zero)")->check(CLI::ExistingFile);
  check->add_flag("--laplacian", laplacian, "Use -(1/n) L");
  check->callback([&] { rc = cmd_youla_check(plantfile, rnomfile, laplacian); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "relsyn: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "relsyn: unexpected failure: " << e.what() << '\n';
    return 3;
  }
  return rc;
}
