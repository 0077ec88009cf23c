#include <cmath>
#include <cstdio>

#include "doctest.h"

#include "seeker/dataio.hpp"
#include "seeker/errors.hpp"
#include "seeker/inference.hpp"
#include "seeker/rng.hpp"

using namespace seeker;
using namespace seeker::ml;

namespace {

struct Split {
    std::vector<SensorWindow> train, test;
    std::vector<ChannelRange> ranges;
    int n_classes;
};

Split synthetic_split(int classes, int train_per_class, int test_per_class, double sigma,
                      std::uint64_t seed, std::size_t channels = 1) {
    dataio::SyntheticSpec spec{classes, train_per_class, channels, 60, sigma};
    const auto train_stream = dataio::gen_synthetic(spec, seed);
    spec.n_windows_per_class = test_per_class;
    const auto test_stream = dataio::gen_synthetic(spec, seed + 1);
    Split s;
    s.train = dataio::window_stream(train_stream, 60, 0);
    s.test = dataio::window_stream(test_stream, 60, 0);
    s.ranges = train_stream.channel_ranges;
    s.n_classes = classes;
    return s;
}

Dataset to_dataset(const std::vector<SensorWindow>& windows,
                   const std::vector<ChannelRange>& ranges, int n_classes) {
    Dataset d;
    for (const auto& w : windows) {
        d.x.push_back(window_features(w, ranges));
        d.y.push_back(*w.label);
    }
    d.n_classes = n_classes;
    return d;
}

double window_accuracy(const QuantModel& m, const std::vector<SensorWindow>& windows) {
    std::size_t hit = 0;
    for (const auto& w : windows) {
        if (infer(m, w).first == *w.label) ++hit;
    }
    return static_cast<double>(hit) / windows.size();
}

} // namespace

TEST_SUITE_BEGIN("inference");

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(5);
    QuantModel m;
    m.input_dim = 7;
    m.hidden = 5;
    m.n_classes = 3;
    m.w1.resize(m.hidden * m.input_dim);
    m.b1.resize(m.hidden);
    m.w2.resize(m.n_classes * m.hidden);
    m.b2.resize(m.n_classes);
    for (auto* t : {&m.w1, &m.b1, &m.w2, &m.b2}) {
        for (auto& v : *t) v = rng.uniform(-0.8, 0.8);
    }
    std::vector<double> x(m.input_dim);
    for (auto& v : x) v = rng.uniform(0.0, 1.0);
    const int y = 1;

    const auto analytic = loss_gradient(m, x, y);
    const double h = 1e-5;
    std::size_t idx = 0;
    const auto check_tensor = [&](std::vector<double>& tensor) {
        for (auto& w : tensor) {
            const double keep = w;
            w = keep + h;
            const double up = loss_value(m, x, y);
            w = keep - h;
            const double down = loss_value(m, x, y);
            w = keep;
            const double numeric = (up - down) / (2.0 * h);
            const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic[idx])});
            CHECK(std::abs(numeric - analytic[idx]) / denom < 1e-4);
            ++idx;
        }
    };
    check_tensor(m.w1);
    check_tensor(m.b1);
    check_tensor(m.w2);
    check_tensor(m.b2);
}

TEST_CASE("noiseless separable set trains to full accuracy within 50 epochs") {
    auto s = synthetic_split(2, 10, 5, 0.0, 7);
    TrainHyper h;
    h.epochs = 50;
    const auto m = train(s.train, s.ranges, h);
    CHECK(window_accuracy(m, s.train) == doctest::Approx(1.0));
}

TEST_CASE("four-class noisy benchmark reaches 95% held-out accuracy") {
    auto s = synthetic_split(4, 50, 25, 0.1, 13, 3);
    TrainHyper h;
    const auto m = train(s.train, s.ranges, h);
    CHECK(window_accuracy(m, s.test) >= 0.95);
}

TEST_CASE("training is deterministic for a fixed seed") {
    auto s = synthetic_split(2, 10, 5, 0.1, 3);
    TrainHyper h;
    h.epochs = 20;
    const auto a = train(s.train, s.ranges, h);
    const auto b = train(s.train, s.ranges, h);
    CHECK(a.w1 == b.w1);
    CHECK(a.w2 == b.w2);
    CHECK(a.b1 == b.b1);
    CHECK(a.b2 == b.b2);
}

TEST_CASE("single-class training set is rejected") {
    auto s = synthetic_split(2, 6, 1, 0.1, 3);
    for (auto& w : s.train) w.label = 0;
    TrainHyper h;
    CHECK_THROWS_AS(train(s.train, s.ranges, h), config_error);
}

TEST_CASE("quantize round trip error is bounded by half a scale step") {
    auto s = synthetic_split(2, 10, 5, 0.1, 9);
    TrainHyper h;
    h.epochs = 20;
    const auto full = train(s.train, s.ranges, h);
    for (int bits : {16, 12}) {
        const auto q = quantize(full, bits);
        const auto check_tensor = [&](const std::vector<double>& orig,
                                      const std::vector<double>& quant, double scale) {
            for (std::size_t i = 0; i < orig.size(); ++i) {
                CHECK(std::abs(orig[i] - quant[i]) <= scale / 2.0 + 1e-15);
            }
        };
        check_tensor(full.w1, q.w1, q.scales[0]);
        check_tensor(full.b1, q.b1, q.scales[1]);
        check_tensor(full.w2, q.w2, q.scales[2]);
        check_tensor(full.b2, q.b2, q.scales[3]);
    }
}

TEST_CASE("16-bit accuracy within 1% of full precision; argmax agreement at least 98%") {
    auto s = synthetic_split(4, 40, 40, 0.1, 17);
    TrainHyper h;
    const auto full = train(s.train, s.ranges, h);
    const auto calib = to_dataset(s.train, s.ranges, s.n_classes);
    const auto q16 = quantize(full, 16, &calib, &h);

    const double acc32 = window_accuracy(full, s.test);
    const double acc16 = window_accuracy(q16, s.test);
    CHECK(acc16 >= acc32 - 0.01);

    std::size_t agree = 0;
    for (const auto& w : s.test) {
        if (infer(full, w).first == infer(q16, w).first) ++agree;
    }
    CHECK(static_cast<double>(agree) / s.test.size() >= 0.98);
}

TEST_CASE("12-bit accuracy does not beat 16-bit by more than 0.5% across seeds") {
    double sum16 = 0.0, sum12 = 0.0;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        auto s = synthetic_split(4, 30, 25, 0.1, seed);
        TrainHyper h;
        h.epochs = 50;
        h.seed = seed;
        const auto full = train(s.train, s.ranges, h);
        const auto calib = to_dataset(s.train, s.ranges, s.n_classes);
        sum16 += window_accuracy(quantize(full, 16, &calib, &h), s.test);
        sum12 += window_accuracy(quantize(full, 12, &calib, &h), s.test);
    }
    CHECK(sum12 / 5.0 <= sum16 / 5.0 + 0.005);
}

TEST_CASE("infer returns confidences in [0,1] and a proper distribution") {
    auto s = synthetic_split(3, 10, 5, 0.1, 19);
    TrainHyper h;
    h.epochs = 20;
    const auto m = train(s.train, s.ranges, h);
    for (const auto& w : s.test) {
        const auto [cls, conf] = infer(m, w);
        CHECK(cls >= 0);
        CHECK(cls < 3);
        CHECK(conf >= 0.0);
        CHECK(conf <= 1.0);
        const auto p = infer_probs(m, w);
        double sum = 0.0;
        for (double v : p) sum += v;
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
}

TEST_CASE("infer rejects mismatched window shapes") {
    auto s = synthetic_split(2, 6, 1, 0.1, 23);
    TrainHyper h;
    h.epochs = 5;
    const auto m = train(s.train, s.ranges, h);
    const SensorWindow bad = SensorWindow::zeros(30, 1);
    CHECK_THROWS_AS(infer(m, bad), config_error);
}

TEST_CASE("correlate: self gives 1, negation gives -1") {
    auto s = synthetic_split(3, 5, 1, 0.0, 29);
    const auto bank = build_template_bank(s.train, s.ranges, 3);
    for (int cls = 0; cls < 3; ++cls) {
        const auto [best, r] = correlate(bank.templates[cls], bank);
        CHECK(best == cls);
        CHECK(r == doctest::Approx(1.0));
    }
    SensorWindow neg = bank.templates[0];
    for (auto& v : neg.values) v = -v;
    const auto [cls0, r0] = [&] {
        // Correlate against a bank holding only template 0.
        TemplateBank one;
        one.ranges = bank.ranges;
        one.templates = {bank.templates[0]};
        return correlate(neg, one);
    }();
    CHECK(cls0 == 0);
    CHECK(r0 == doctest::Approx(-1.0));
}

TEST_CASE("correlate: slightly noisy windows of the template class stay above 0.95") {
    dataio::SyntheticSpec spec{3, 10, 1, 60, 0.0};
    const auto clean = dataio::gen_synthetic(spec, 31);
    const auto bank = build_template_bank(dataio::window_stream(clean, 60, 0), clean.channel_ranges, 3);

    spec.noise_sigma = 0.01;
    const auto noisy = dataio::gen_synthetic(spec, 31);
    int hits = 0, total = 0;
    for (const auto& w : dataio::window_stream(noisy, 60, 0)) {
        const auto [cls, r] = correlate(w, bank);
        ++total;
        if (cls == *w.label && r >= 0.95) ++hits;
    }
    // Phase jitter leaves some windows below threshold; most must pass.
    CHECK(hits >= total / 2);
}

TEST_CASE("correlate is invariant to positive affine scaling per channel") {
    auto s = synthetic_split(3, 8, 4, 0.1, 37);
    const auto bank = build_template_bank(s.train, s.ranges, 3);
    Rng rng(41);
    for (const auto& w : s.test) {
        const auto [cls, r] = correlate(w, bank);
        SensorWindow scaled = w;
        const double a = rng.uniform(0.2, 3.0);
        const double b = rng.uniform(-0.5, 0.5);
        for (auto& v : scaled.values) v = a * v + b;
        const auto [cls2, r2] = correlate(scaled, bank);
        CHECK(cls2 == cls);
        CHECK(r2 == doctest::Approx(r).epsilon(1e-9));
    }
}

TEST_CASE("correlate zero-variance rule") {
    TemplateBank bank;
    bank.ranges = {{-1.0, 1.0}};
    SensorWindow flat = SensorWindow::zeros(60, 1);
    for (int i = 0; i < 60; ++i) flat.at(i, 0) = 0.5;
    bank.templates = {flat};

    SensorWindow same = flat;
    CHECK(correlate(same, bank).second == doctest::Approx(1.0));

    SensorWindow other = flat;
    for (int i = 0; i < 60; ++i) other.at(i, 0) = -0.5;
    CHECK(correlate(other, bank).second == doctest::Approx(0.0));
}

TEST_CASE("ensemble: weighted vote, identity, and tie break") {
    CHECK(ensemble({{0, 0.9}, {0, 0.8}, {1, 0.99}}) == 0);
    CHECK(ensemble({{1, 0.5}}) == 1);
    CHECK(ensemble({{0, 0.5}, {1, 0.5}}) == 0);
    CHECK_THROWS_AS(ensemble({}), config_error);
}

TEST_CASE("model save/load round trip preserves everything") {
    auto s = synthetic_split(2, 8, 2, 0.1, 43);
    TrainHyper h;
    h.epochs = 10;
    const auto m = quantize(train(s.train, s.ranges, h), 16);
    const std::string path = "t_model.bin";
    save_model(m, path);
    const auto loaded = load_model(path);
    std::remove(path.c_str());
    CHECK(loaded.bits == 16);
    CHECK(loaded.w1 == m.w1);
    CHECK(loaded.b2 == m.b2);
    CHECK(loaded.scales[0] == m.scales[0]);
    CHECK(loaded.input_ranges.size() == m.input_ranges.size());
    CHECK(loaded.window_length == m.window_length);
}

TEST_SUITE_END();
