// Serial vs OpenMP timings for the replicate loops, with an equality check.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "addgxe/analysis.hpp"
#include "addgxe/parallel.hpp"
#include "addgxe/simulation.hpp"
#include "addgxe/variance.hpp"

using namespace addgxe;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t reps = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 200;
  set_threads(default_threads());
  std::printf("threads: %d\n", current_threads());
  bool same = true;

  const auto grid = size_table_grid(0.5, 0.0);
  const std::vector<Scenario> cells(grid.begin(), grid.begin() + 2);
  const std::vector<SimTest> tests = {SimTest::u, SimTest::u_ind, SimTest::prosp};
  PowerTable serial, parallel;
  const double ts = seconds([&] { serial = run_power_experiment(cells, tests, reps, 7, Execution::serial); });
  const double tp = seconds([&] { parallel = run_power_experiment(cells, tests, reps, 7, Execution::parallel); });
  for (std::size_t i = 0; i < serial.rows.size(); ++i)
    same = same && serial.rows[i].rejections == parallel.rows[i].rejections &&
           serial.rows[i].failures == parallel.rows[i].failures;
  std::printf("power experiment (2 cells x %zu reps): serial %.2fs  parallel %.2fs  speedup %.2fx\n", reps, ts, tp,
              ts / tp);

  const Dataset ds = generate_case_control(grid[0], 11);
  const ModelPlan plan;
  const Pipeline pipe = [&](const Dataset& d) { return mean_contribution(d, plan, CenteredProduct{}); };
  std::vector<double> bs, bp;
  BootstrapOptions opt{1000, 3, true, Execution::serial};
  const double bts = seconds([&] { bs = bootstrap_replicates(ds, pipe, opt); });
  opt.execution = Execution::parallel;
  const double btp = seconds([&] { bp = bootstrap_replicates(ds, pipe, opt); });
  for (std::size_t i = 0; i < bs.size(); ++i) same = same && bs[i] == bp[i];
  std::printf("bootstrap (B=1000, n=8000): serial %.2fs  parallel %.2fs  speedup %.2fx\n", bts, btp, bts / btp);

  std::printf("serial and parallel results identical: %s\n", same ? "yes" : "NO");
  return same ? 0 : 1;
}
