// Serial reference vs OpenMP split search, and the speedup strategies on a
// whole tree.

#include <random>

#include <benchmark/benchmark.h>

#include "plrt/dataset.hpp"
#include "plrt/splitsearch.hpp"
#include "plrt/tree.hpp"

using namespace plrt;

namespace {

struct Problem {
    Matrix design, psi;
    std::vector<double> y;
    std::vector<std::size_t> idx;
};

Problem make_problem(std::size_t n, std::size_t d, std::size_t D) {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g(0.0, 1.0);
    Problem p{Matrix(n, d + 1), Matrix(n, D), std::vector<double>(n), std::vector<std::size_t>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) p.design(i, j) = g(rng);
        p.design(i, d) = 1.0;
        for (std::size_t j = 0; j < D; ++j) p.psi(i, j) = g(rng);
        const double s = p.psi(i, 0) > 0 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < d; ++j) p.y[i] += (j % 2 ? s : 1.0) * p.design(i, j);
        p.y[i] += 0.1 * g(rng);
        p.idx[i] = i;
    }
    return p;
}

void split_args(benchmark::internal::Benchmark* b) {
    for (long n : {1000, 8000})
        for (long D : {4, 16}) b->Args({n, 8, D});
}

void BM_SplitSerial(benchmark::State& state) {
    const auto p = make_problem(state.range(0), state.range(1), state.range(2));
    NodeContext ctx{.indices = p.idx, .lambda = 1.0};
    ctx.config.strategy = Strategy::NoSpeedup;
    const SplitData data{.design = p.design, .psi = p.psi, .y = p.y};
    for (auto _ : state) benchmark::DoNotOptimize(find_best_split_serial(ctx, data));
}
BENCHMARK(BM_SplitSerial)->Apply(split_args)->Unit(benchmark::kMillisecond);

void BM_SplitParallel(benchmark::State& state) {
    const auto p = make_problem(state.range(0), state.range(1), state.range(2));
    NodeContext ctx{.indices = p.idx, .lambda = 1.0};
    ctx.config.strategy = Strategy::NoSpeedup;
    ctx.config.feature_wave = 0;
    const SplitData data{.design = p.design, .psi = p.psi, .y = p.y};
    for (auto _ : state) benchmark::DoNotOptimize(find_best_split(ctx, data));
}
BENCHMARK(BM_SplitParallel)->Apply(split_args)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_TrainStrategy(benchmark::State& state) {
    const auto p = make_problem(5000, 8, 8);
    Matrix X(5000, 8);
    for (std::size_t i = 0; i < 5000; ++i)
        for (std::size_t j = 0; j < 8; ++j) X(i, j) = p.design(i, j);
    const auto data = make_dataset(std::move(X), p.psi, p.y);
    TrainConfig cfg;
    cfg.max_depth = 6;
    cfg.split.strategy = Strategy(state.range(0));
    std::size_t scanned = 0;
    for (auto _ : state) {
        TrainStats stats;
        benchmark::DoNotOptimize(train_plrt(data, cfg, &stats));
        scanned = stats.scanned;
    }
    state.SetLabel(std::string(strategy_name(cfg.split.strategy)));
    state.counters["scanned"] = double(scanned);
}
BENCHMARK(BM_TrainStrategy)
    ->DenseRange(int(Strategy::NoSpeedup), int(Strategy::ApproxMax))
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

} // namespace

BENCHMARK_MAIN();
