// Serial references against the OpenMP kernels. Thread count follows
// OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include "linforms/cyclic.hpp"
#include "linforms/equid.hpp"
#include "linforms/extremal.hpp"
#include "linforms/rng.hpp"
#include "linforms/torus.hpp"

using namespace linforms;

namespace {

CyclicFunction random_function(std::size_t N) {
  CounterRng rng(1, 0);
  std::vector<Complex> v(N);
  for (auto& z : v) z = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
  return CyclicFunction::make(v);
}

template <bool Parallel>
void BM_SolDiscrete(benchmark::State& state) {
  const auto f = random_function(static_cast<std::size_t>(state.range(0)));
  const auto sys = make_cube_system(3);
  const auto pat = ConjugationPattern::alternating(8);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? sol_discrete(f, sys, pat)
                                      : serial::sol_discrete(f, sys, pat));
}

template <bool Parallel>
void BM_GowersU3(benchmark::State& state) {
  const auto f = random_function(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? gowers_norm_pow(f, 3)
                                      : serial::gowers_norm_pow(f, 3));
}

template <bool Parallel>
void BM_McAverage(benchmark::State& state) {
  const auto model = build_model(FilteredTorusSpec::make({1, 2}), make_ap_system(4));
  const TrigPolynomial f{2, {{{0, 0}, 0.5}, {{1, 0}, 0.25}, {{-1, 0}, 0.25}}};
  const TorusFunction fn = [&](std::span<const double> x) { return f(x); };
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? mc_average(fn, model, {}, n, 1)
                                      : serial::mc_average(fn, model, {}, n, 1));
}

template <bool Parallel>
void BM_CharacterMeans(benchmark::State& state) {
  const auto model = build_model(FilteredTorusSpec::make({1, 2}), make_ap_system(3));
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? mc_character_means(model, 1, n, 1)
                                      : serial::mc_character_means(model, 1, n, 1));
}

template <bool Parallel>
void BM_BalanceReport(benchmark::State& state) {
  const auto map = PhiKMap::make(5, 2);
  const auto sys = make_cube_system(2);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? phi_k_balance_report(map, sys, 2, 2)
                                      : serial::phi_k_balance_report(map, sys, 2, 2));
}

template <bool Parallel>
void BM_WeylBalance(benchmark::State& state) {
  const auto p = state.range(0);
  const auto orbit = parse_orbit(p, "n/" + std::to_string(p) + "; (n^2)/" + std::to_string(p));
  const auto spec = FilteredTorusSpec::make({1, 2});
  const auto sys = make_ap_system(3);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? weyl_balance_test(orbit, spec, sys, 1)
                                      : serial::weyl_balance_test(orbit, spec, sys, 1));
}

template <bool Parallel>
void BM_Exhaustive(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const auto sys = make_ap_system(3);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? m_discrete_exhaustive(sys, p, 0.4)
                                      : serial::m_discrete_exhaustive(sys, p, 0.4));
}

}  // namespace

BENCHMARK(BM_SolDiscrete<false>)->Arg(13)->Arg(23)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolDiscrete<true>)->Arg(13)->Arg(23)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GowersU3<false>)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GowersU3<true>)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McAverage<false>)->Arg(100'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McAverage<true>)->Arg(100'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CharacterMeans<false>)->Arg(20'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CharacterMeans<true>)->Arg(20'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BalanceReport<false>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BalanceReport<true>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeylBalance<false>)->Arg(31)->Arg(101)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeylBalance<true>)->Arg(31)->Arg(101)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Exhaustive<false>)->Arg(23)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Exhaustive<true>)->Arg(23)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
