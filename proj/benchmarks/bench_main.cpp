#include <random>

#include <benchmark/benchmark.h>

#include "qoq/synthesis.hpp"
#include "qoq/verify.hpp"

namespace {

using namespace qoq;

void BM_ElementaryX(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    std::size_t pulses = 0;
    for (auto _ : state) {
        const PulseSequence s = synth::synthesize_elementary(n, n, synth::ElementarySigma::X);
        pulses = s.size();
        benchmark::DoNotOptimize(pulses);
    }
    state.counters["pulses"] = static_cast<double>(pulses);
}
BENCHMARK(BM_ElementaryX)->DenseRange(3, 12, 3)->Unit(benchmark::kMillisecond);

void BM_ElementaryMinusI(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(synth::synthesize_elementary(n, 1, synth::ElementarySigma::MinusI).size());
}
BENCHMARK(BM_ElementaryMinusI)->DenseRange(3, 9, 3)->Unit(benchmark::kMillisecond);

void BM_ApplySequence(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const PulseSequence s = synth::synthesize_elementary(n, 2, synth::ElementarySigma::Y);
    const QOQuditDims dims{n, 2};
    for (auto _ : state) benchmark::DoNotOptimize(apply_sequence(s, dims).matrix.data());
    state.counters["pulses"] = static_cast<double>(s.size());
}
BENCHMARK(BM_ApplySequence)->DenseRange(3, 9, 3)->Unit(benchmark::kMicrosecond);

void BM_CompileSU8(benchmark::State& state)
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    Eigen::MatrixXcd a(8, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) a(r, c) = cplx(g(rng), g(rng));
    const Eigen::MatrixXcd u = Eigen::HouseholderQR<Eigen::MatrixXcd>(a).householderQ();
    for (auto _ : state) benchmark::DoNotOptimize(synth::compile_unitary(3, u).sequence.size());
}
BENCHMARK(BM_CompileSU8)->Unit(benchmark::kMillisecond);

void BM_LieClosure(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const auto gens = verify::qo_generators(n);
    for (auto _ : state) benchmark::DoNotOptimize(verify::lie_closure_dimension(gens));
}
BENCHMARK(BM_LieClosure)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
