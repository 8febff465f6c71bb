// Serial reference vs OpenMP timings for the solver kernels. Every pair of
// results is also compared bit for bit.
//
//   bench_kernels [n] [horizon_q] [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "relsyn/experiments.hpp"

using namespace relsyn;

namespace {

// Best time of each path; runs alternate so that allocator and cache warm-up
// effects land on both sides equally.
std::pair<double, double> best_ms(int repeats, const std::function<void()>& serial,
                                  const std::function<void()>& parallel) {
  using clock = std::chrono::steady_clock;
  auto time = [](const std::function<void()>& f) {
    const auto t0 = clock::now();
    f();
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };
  serial();
  parallel();
  double bs = 1e300, bp = 1e300;
  for (int r = 0; r < repeats; ++r) {
    bs = std::min(bs, time(serial));
    bp = std::min(bp, time(parallel));
  }
  return {bs, bp};
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s serial %9.3f ms  parallel %9.3f ms  speedup %5.2fx  %s\n", name, serial, parallel,
              serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 6;
  const int tq = argc > 2 ? std::atoi(argv[2]) : 12;
  const int repeats = argc > 3 ? std::atoi(argv[3]) : 3;
  std::printf("ring n=%d, T_Q=%d, workers=%d, best of %d\n", n, tq, worker_count(), repeats);

  const RingModel rm = make_ring(n, 0.4);
  const YoulaData yd = make_t_systems(build_tilde_plant(rm.plant), rm.r_nom, rm.ms);
  const int horizon = default_objective_horizon(yd, tq);
  const FirSystem t2 = markov(yd.t2d, horizon);
  const FirSystem t3 = markov(yd.t3d, horizon);
  bool all_same = true;

  {
    const InfoStructure g = plant_pattern(rm.plant.pxu());
    // Tile the ring structure to get a scan worth timing.
    const int reps = 8;
    IntMatrix s(n * reps, n * reps);
    IntMatrix gg(n * reps, n * reps);
    for (int a = 0; a < reps; ++a)
      for (int b = 0; b < reps; ++b) {
        s.block(a * n, b * n, n, n) = rm.q_structure.min_delay;
        gg.block(a * n, b * n, n, n) = g.min_delay;
      }
    std::optional<std::array<int, 4>> rs, rp;
    const auto [ts, tp] =
        best_ms(repeats, [&] { rs = qi_scan(s, gg, Exec::Serial); }, [&] { rp = qi_scan(s, gg, Exec::Parallel); });
    all_same = all_same && rs == rp;
    report("qi_scan", ts, tp, rs == rp);
  }

  std::vector<Matrix> es, ep;
  {
    const auto [ts, tp] = best_ms(
        repeats, [&] { es = elementary_responses(t2, t3, horizon, Exec::Serial); },
        [&] { ep = elementary_responses(t2, t3, horizon, Exec::Parallel); });
    const bool same = es == ep;
    all_same = all_same && same;
    report("elementary_responses", ts, tp, same);
  }

  {
    const auto cs = compile_constraints(rm.q_structure, rm.ms.indicators, tq);
    Matrix as, ap;
    const auto [ts, tp] = best_ms(
        repeats, [&] { as = assemble_regressor(es, cs, horizon, Exec::Serial); },
        [&] { ap = assemble_regressor(es, cs, horizon, Exec::Parallel); });
    const bool same = as == ap;
    all_same = all_same && same;
    report("assemble_regressor", ts, tp, same);
  }

  {
    SynthesisProblem prob{yd, rm.q_structure, rm.k_structure, tq};
    prob.recover = false;
    double js = 0.0, jp = 0.0;
    const auto [ts, tp] = best_ms(
        1, [&] { js = solve(prob, Exec::Serial).objective; }, [&] { jp = solve(prob, Exec::Parallel).objective; });
    all_same = all_same && js == jp;
    report("solve (end to end)", ts, tp, js == jp);
  }

  return all_same ? 0 : 1;
}
