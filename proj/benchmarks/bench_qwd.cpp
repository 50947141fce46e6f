#include <benchmark/benchmark.h>

#include "qwd/qwd.hpp"

namespace {

using namespace qwd;

const CaseStudySpec& spec_for(int which) {
  static const CaseStudySpec paa = build_paa(0.01);
  static const CaseStudySpec qw = build_qw(0);
  static const CaseStudySpec rus = build_rus(1);
  return which == 0 ? paa : which == 1 ? qw : rus;
}

const char* name_for(int which) { return which == 0 ? "paa" : which == 1 ? "qw" : "rus"; }

void BM_Expectation(benchmark::State& state) {
  const CaseStudySpec& spec = spec_for(static_cast<int>(state.range(0)));
  state.SetLabel(name_for(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    auto r = expectation(spec.program, spec.theta0, spec.inputs[0].rho,
                         spec.inputs[0].observable);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_Expectation)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_GradientShots(benchmark::State& state) {
  const int which = static_cast<int>(state.range(0));
  const CaseStudySpec& spec = spec_for(which);
  state.SetLabel(name_for(which));
  const DiffProgram diff =
      transform_commutator(spec.program, spec.program.params.front().name);
  SamplingOptions options;
  options.shots = state.range(1);
  options.workers = 1;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    options.seed = seed++;
    auto g = estimate_gradient(diff, spec.theta0, spec.inputs[0].rho,
                               spec.inputs[0].observable, options);
    benchmark::DoNotOptimize(g.mean);
  }
  state.SetItemsProcessed(state.iterations() * options.shots);
}
BENCHMARK(BM_GradientShots)
    ->Args({0, 2000})
    ->Args({1, 200})
    ->Args({2, 20000})
    ->Unit(benchmark::kMillisecond);

void BM_SpectralEpsilon(benchmark::State& state) {
  const int which = static_cast<int>(state.range(0));
  const CaseStudySpec& spec = spec_for(which);
  state.SetLabel(name_for(which));
  const Statement* loop = collect_loops(spec.program.body).front();
  for (auto _ : state) {
    auto r = epsilon_spectral(spec.program, *loop, spec.theta0);
    benchmark::DoNotOptimize(r.epsilon);
  }
}
BENCHMARK(BM_SpectralEpsilon)->Arg(0)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_MuTables(benchmark::State& state) {
  const MuDistribution mu(0.25);
  for (auto _ : state) {
    auto t = mu_tables(mu, state.range(0));
    benchmark::DoNotOptimize(t.S);
  }
}
BENCHMARK(BM_MuTables)->Arg(1000)->Arg(100000);

void BM_ParseFormat(benchmark::State& state) {
  const std::string text = format(spec_for(2).program);
  for (auto _ : state) {
    Program p = parse(text);
    benchmark::DoNotOptimize(p.registers.size());
  }
}
BENCHMARK(BM_ParseFormat);

}  // namespace

BENCHMARK_MAIN();
