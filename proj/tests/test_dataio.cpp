#include <cstdio>
#include <fstream>

#include "doctest.h"

#include "seeker/dataio.hpp"
#include "seeker/errors.hpp"

using namespace seeker;
using namespace seeker::dataio;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) : path(name) {
        std::ofstream f(path);
        f << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_SUITE_BEGIN("dataio");

TEST_CASE("load_dataset maps labels to contiguous ids and records ranges") {
    TempFile f("t_mhealth.log",
               "0.1 0.2 0.3 9.0 5\n"
               "0.4 0.5 0.6 9.0 5\n"
               "0.7 -0.8 0.9 9.0 12\n"
               "1.0 1.1 1.2 9.0 2\n");
    const auto s = load_dataset(f.path, DatasetFormat::mhealth, {0, 1, 2}, 4);
    CHECK(s.channels == 3);
    CHECK(s.size() == 4);
    // Raw labels {5, 12, 2} -> {1, 2, 0} in ascending raw order.
    CHECK(s.labels == std::vector<int>{1, 1, 2, 0});
    CHECK(s.channel_ranges[1].min == doctest::Approx(-0.8));
    CHECK(s.channel_ranges[1].max == doctest::Approx(1.1));
}

TEST_CASE("load_dataset minimal single-row file") {
    TempFile f("t_single.log", "0.0 0.0 0.0 1\n");
    const auto s = load_dataset(f.path, DatasetFormat::mhealth, {0, 1, 2}, 3);
    CHECK(s.size() == 1);
    CHECK(s.labels == std::vector<int>{0});
}

TEST_CASE("load_dataset rejects NaN naming the line") {
    TempFile f("t_nan.log",
               "0.0 0.0 0.0 1\n"
               "0.1 NaN 0.2 1\n");
    try {
        load_dataset(f.path, DatasetFormat::mhealth, {0, 1, 2}, 3);
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("load_dataset missing column is a configuration error") {
    TempFile f("t_short.log", "0.0 0.0 1\n");
    CHECK_THROWS_AS(load_dataset(f.path, DatasetFormat::mhealth, {0, 1, 2}, 3), config_error);
}

TEST_CASE("load_dataset ignores NaN in columns it does not use") {
    TempFile f("t_pamap.log",
               "1 0.1 NaN 0.2 0.3\n"
               "1 0.4 NaN 0.5 0.3\n");
    const auto s = load_dataset(f.path, DatasetFormat::pamap2, {1, 3}, 0);
    CHECK(s.size() == 2);
    CHECK(s.channels == 2);
}

TEST_CASE("load_dataset bearing csv uses commas") {
    TempFile f("t_bearing.csv", "0.5,1.5,0\n0.6,1.4,1\n");
    const auto s = load_dataset(f.path, DatasetFormat::bearing_csv, {0, 1}, 2);
    CHECK(s.channels == 2);
    CHECK(s.labels == std::vector<int>{0, 1});
}

TEST_CASE("window_stream stride arithmetic") {
    LabeledStream s;
    s.channels = 1;
    s.channel_ranges = {{-10.0, 10.0}};
    s.samples.assign(120, 0.0);
    s.labels.assign(120, 0);
    const auto windows = window_stream(s, 60, 30);
    REQUIRE(windows.size() == 3);
    CHECK(windows[0].t0 == 0);
    CHECK(windows[1].t0 == 30);
    CHECK(windows[2].t0 == 60);
}

TEST_CASE("window_stream short stream yields empty sequence") {
    LabeledStream s;
    s.channels = 1;
    s.channel_ranges = {{-1.0, 1.0}};
    s.samples.assign(59, 0.0);
    s.labels.assign(59, 0);
    CHECK(window_stream(s, 60, 30).empty());
}

TEST_CASE("window_stream majority label with tie to lowest id") {
    LabeledStream s;
    s.channels = 1;
    s.channel_ranges = {{-1.0, 1.0}};
    s.samples.assign(60, 0.0);
    s.labels.assign(40, 0);
    s.labels.insert(s.labels.end(), 20, 1);
    auto windows = window_stream(s, 60, 30);
    REQUIRE(windows.size() == 1);
    CHECK(*windows[0].label == 0);

    s.labels.assign(30, 2);
    s.labels.insert(s.labels.end(), 30, 1);
    windows = window_stream(s, 60, 30);
    CHECK(*windows[0].label == 1); // 30/30 tie, lowest id wins
}

TEST_CASE("window count formula holds for assorted shapes") {
    for (std::size_t n : {60u, 61u, 89u, 90u, 150u, 600u}) {
        for (std::size_t overlap : {0u, 10u, 30u, 59u}) {
            LabeledStream s;
            s.channels = 1;
            s.channel_ranges = {{-1.0, 1.0}};
            s.samples.assign(n, 0.0);
            s.labels.assign(n, 0);
            const std::size_t expect = (n - 60) / (60 - overlap) + 1;
            CHECK(window_stream(s, 60, overlap).size() == expect);
        }
    }
}

TEST_CASE("window_stream clamps samples to channel ranges") {
    LabeledStream s;
    s.channels = 1;
    s.channel_ranges = {{-1.0, 1.0}};
    s.samples.assign(60, 0.0);
    s.samples[5] = 50.0; // spike beyond calibration
    s.labels.assign(60, 0);
    const auto windows = window_stream(s, 60, 30);
    CHECK(windows[0].at(5, 0) == doctest::Approx(1.0));
}

TEST_CASE("gen_synthetic is bit-reproducible and respects ranges") {
    SyntheticSpec spec{2, 10, 1, 60, 0.1};
    const auto a = gen_synthetic(spec, 7);
    const auto b = gen_synthetic(spec, 7);
    CHECK(a.samples == b.samples);
    CHECK(a.labels == b.labels);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.at(i, 0) >= a.channel_ranges[0].min);
        CHECK(a.at(i, 0) <= a.channel_ranges[0].max);
    }
    const auto c = gen_synthetic(spec, 8);
    CHECK(a.samples != c.samples);
}

TEST_CASE("gen_synthetic with zero noise is clean and class-labeled") {
    SyntheticSpec spec{2, 3, 1, 60, 0.0};
    const auto s = gen_synthetic(spec, 7);
    CHECK(s.size() == 2 * 3 * 60);
    // Each emitted block is constant-labeled.
    for (std::size_t i = 0; i < s.size(); i += 60) {
        for (std::size_t j = i; j < i + 60; ++j) CHECK(s.labels[j] == s.labels[i]);
    }
}

TEST_CASE("gen_synthetic shares the class timeline across noise seeds") {
    SyntheticSpec spec{3, 5, 1, 60, 0.2};
    const auto a = gen_synthetic(spec, 9, 1);
    const auto b = gen_synthetic(spec, 9, 2);
    CHECK(a.labels == b.labels);
    CHECK(a.samples != b.samples);
}

TEST_SUITE_END();
