// Serial reference vs OpenMP kernel for the hot loops. Arg(0) = serial, Arg(1) = parallel.
#include <benchmark/benchmark.h>

#include <vector>

#include "twincf/model.hpp"
#include "twincf/rng.hpp"
#include "twincf/sensitivity.hpp"
#include "twincf/stats.hpp"

using namespace twincf;

namespace {

Exec mode(const benchmark::State& s) { return s.range(0) == 0 ? Exec::serial : Exec::parallel; }

WorldSpec example_world() {
  WorldSpec w;
  w.strata.push_back({{MarginalLaw::normal(6, 2), MarginalLaw::normal(5, 2)}, 0.5});
  return w;
}

std::vector<double> normals(std::size_t n, std::uint32_t stream) {
  NoiseStream s({42, stream, 0});
  std::vector<double> v(n);
  for (auto& x : v) x = s.normal();
  return v;
}

void BM_simulate_twins(benchmark::State& state) {
  const WorldSpec w = example_world();
  const WorldSample ws = generate_world(w, 20000, 1, Exec::serial);
  SimulatorSpec sim = SimulatorSpec::oracle_of(w);
  sim.copula = CopulaSpec::gaussian(0.9);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_twins(sim, ws.data, 20, 7, mode(state)));
}

void BM_energy_bruteforce(benchmark::State& state) {
  const auto x = normals(2000, 1), y = normals(2000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(energy_distance_bruteforce(x, y, mode(state)));
}

void BM_ad_permutation(benchmark::State& state) {
  const auto x = normals(500, 3), y = normals(500, 4);
  for (auto _ : state) benchmark::DoNotOptimize(anderson_darling_two_sample(x, y, 199, 5, mode(state)));
}

void BM_sensitivity_curve(benchmark::State& state) {
  const ArmLaws laws{MarginalLaw::normal(6, 2), MarginalLaw::normal(5, 2)};
  const auto grid = default_rho_grid();
  for (auto _ : state)
    benchmark::DoNotOptimize(sensitivity_curve(laws, CopulaFamily::gaussian, grid, Theta{Functional::var_tau, 0.0},
                                               20000, 9, std::nullopt, mode(state)));
}

}  // namespace

BENCHMARK(BM_simulate_twins)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_energy_bruteforce)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ad_permutation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sensitivity_curve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
