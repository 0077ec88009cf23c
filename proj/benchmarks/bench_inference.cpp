#include <benchmark/benchmark.h>

#include "seeker/dataio.hpp"
#include "seeker/inference.hpp"

using namespace seeker;

namespace {

struct Fixture {
    std::vector<SensorWindow> windows;
    std::vector<ChannelRange> ranges;
    ml::QuantModel full, q16, q12;
    ml::TemplateBank bank;

    Fixture() {
        dataio::SyntheticSpec spec{4, 20, 1, 60, 0.1};
        const auto stream = dataio::gen_synthetic(spec, 3);
        windows = dataio::window_stream(stream, 60, 0);
        ranges = stream.channel_ranges;
        ml::TrainHyper h;
        h.epochs = 20;
        full = ml::train(windows, ranges, h);
        q16 = ml::quantize(full, 16);
        q12 = ml::quantize(full, 12);
        bank = ml::build_template_bank(windows, ranges, 4);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

void BM_InferFloat(benchmark::State& state) {
    auto& f = fixture();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ml::infer(f.full, f.windows[i++ % f.windows.size()]));
    }
}
BENCHMARK(BM_InferFloat);

void BM_Infer16(benchmark::State& state) {
    auto& f = fixture();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ml::infer(f.q16, f.windows[i++ % f.windows.size()]));
    }
}
BENCHMARK(BM_Infer16);

void BM_Infer12(benchmark::State& state) {
    auto& f = fixture();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ml::infer(f.q12, f.windows[i++ % f.windows.size()]));
    }
}
BENCHMARK(BM_Infer12);

void BM_Correlate(benchmark::State& state) {
    auto& f = fixture();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ml::correlate(f.windows[i++ % f.windows.size()], f.bank));
    }
}
BENCHMARK(BM_Correlate);

} // namespace
