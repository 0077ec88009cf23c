#include <benchmark/benchmark.h>

#include "seeker/codec.hpp"
#include "seeker/coreset.hpp"
#include "seeker/recovery.hpp"
#include "seeker/rng.hpp"

using namespace seeker;

namespace {

SensorWindow make_window() {
    Rng rng(1);
    SensorWindow w = SensorWindow::zeros(60, 1);
    for (int i = 0; i < 60; ++i) w.at(i, 0) = rng.uniform(-1.0, 1.0);
    return w;
}

const std::vector<ChannelRange> kRanges = {{-1.0, 1.0}};

void BM_KMeansCoreset(benchmark::State& state) {
    const auto w = make_window();
    for (auto _ : state) {
        benchmark::DoNotOptimize(coreset::kmeans_coreset(w, kRanges, state.range(0), 4));
    }
}
BENCHMARK(BM_KMeansCoreset)->Arg(8)->Arg(12);

void BM_SampleCoreset(benchmark::State& state) {
    const auto w = make_window();
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(coreset::sample_coreset(w, kRanges, 20, 2, 7, seed++));
    }
}
BENCHMARK(BM_SampleCoreset);

void BM_EncodeDecodeCluster(benchmark::State& state) {
    const auto w = make_window();
    const auto cs = coreset::kmeans_coreset(w, kRanges, 12, 4);
    for (auto _ : state) {
        const auto body = codec::encode_cluster(cs, true).bytes;
        benchmark::DoNotOptimize(codec::decode_cluster(body, 12, 1, 60, kRanges));
    }
}
BENCHMARK(BM_EncodeDecodeCluster);

void BM_ReconstructCluster(benchmark::State& state) {
    const auto w = make_window();
    const auto cs = coreset::kmeans_coreset(w, kRanges, 12, 4);
    const auto dec = codec::decode_cluster(codec::encode_cluster(cs, true).bytes, 12, 1, 60, kRanges);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(recovery::reconstruct_cluster(dec, 60, seed++));
    }
}
BENCHMARK(BM_ReconstructCluster);

} // namespace

BENCHMARK_MAIN();
