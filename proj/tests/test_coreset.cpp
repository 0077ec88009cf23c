#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"

#include "seeker/coreset.hpp"
#include "seeker/dataio.hpp"
#include "seeker/errors.hpp"
#include "seeker/rng.hpp"

using namespace seeker;
using namespace seeker::coreset;

namespace {

SensorWindow constant_window(std::size_t L, double value) {
    SensorWindow w = SensorWindow::zeros(L, 1);
    for (std::size_t i = 0; i < L; ++i) w.at(i, 0) = value;
    return w;
}

SensorWindow random_window(std::size_t L, Rng& rng) {
    SensorWindow w = SensorWindow::zeros(L, 1);
    for (std::size_t i = 0; i < L; ++i) w.at(i, 0) = rng.uniform(-1.0, 1.0);
    return w;
}

const std::vector<ChannelRange> kUnitRange = {{-1.0, 1.0}};

} // namespace

TEST_SUITE_BEGIN("coreset");

TEST_CASE("importance weights are uniform on a constant window") {
    const auto w = constant_window(60, 0.25);
    const auto wt = importance_weights(w, 0);
    for (double v : wt) CHECK(v == doctest::Approx(1.0 / 60.0));
}

TEST_CASE("importance weights peak at a spike and its falling edge") {
    auto w = constant_window(60, 0.0);
    w.at(5, 0) = 0.9;
    const auto wt = importance_weights(w, 0);
    const std::size_t top = std::max_element(wt.begin(), wt.end()) - wt.begin();
    CHECK((top == 5 || top == 6));
    CHECK(wt[5] > wt[10]);
    CHECK(wt[6] > wt[10]);
}

TEST_CASE("importance weights always sum to one") {
    Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const auto w = random_window(60, rng);
        const auto wt = importance_weights(w, 0);
        double sum = 0.0;
        for (double v : wt) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("sample_coreset with m = L selects every index and exact moments") {
    Rng rng(3);
    const auto w = random_window(60, rng);
    const auto cs = sample_coreset(w, kUnitRange, 60, 1, 7, 5);
    REQUIRE(cs.channels[0].size() == 60);
    for (int i = 0; i < 60; ++i) {
        CHECK(cs.channels[0][i].index == i);
        CHECK(cs.channels[0][i].value == doctest::Approx(w.at(i, 0)));
    }
    double mean = 0.0;
    for (int i = 0; i < 60; ++i) mean += w.at(i, 0);
    mean /= 60.0;
    double var = 0.0;
    for (int i = 0; i < 60; ++i) var += (w.at(i, 0) - mean) * (w.at(i, 0) - mean);
    var /= 60.0;
    CHECK(cs.mean[0] == doctest::Approx(mean));
    CHECK(cs.variance[0] == doctest::Approx(var));
}

TEST_CASE("sample_coreset on a constant window has zero variance") {
    const auto w = constant_window(60, 0.5);
    const auto cs = sample_coreset(w, kUnitRange, 20, 2, 7, 3);
    CHECK(cs.channels[0].size() == 20);
    CHECK(cs.mean[0] == doctest::Approx(0.5));
    CHECK(cs.variance[0] == doctest::Approx(0.0));
}

TEST_CASE("sample_coreset is deterministic for a fixed seed") {
    dataio::SyntheticSpec spec{2, 2, 1, 60, 0.1};
    const auto stream = dataio::gen_synthetic(spec, 5);
    const auto windows = dataio::window_stream(stream, 60, 0);
    const auto a = sample_coreset(windows[0], stream.channel_ranges, 20, 2, 7, 3);
    const auto b = sample_coreset(windows[0], stream.channel_ranges, 20, 2, 7, 3);
    for (std::size_t i = 0; i < a.channels[0].size(); ++i) {
        CHECK(a.channels[0][i].index == b.channels[0][i].index);
    }
}

TEST_CASE("sample_coreset indices always satisfy min_gap") {
    Rng rng(17);
    for (int rep = 0; rep < 200; ++rep) {
        const auto w = random_window(60, rng);
        const int min_gap = 1 + static_cast<int>(rng.below(3));
        const int m_max = (60 + min_gap - 1) / min_gap;
        const int m = 2 + static_cast<int>(rng.below(std::min(m_max - 1, 25)));
        const auto cs = sample_coreset(w, kUnitRange, m, min_gap, 7, rng.next());
        const auto& pts = cs.channels[0];
        REQUIRE(static_cast<int>(pts.size()) == m);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            CHECK(pts[i].index - pts[i - 1].index >= min_gap);
        }
    }
}

TEST_CASE("sample_coreset rejects infeasible spacing") {
    const auto w = constant_window(60, 0.0);
    CHECK_THROWS_AS(sample_coreset(w, kUnitRange, 31, 2, 7, 1), config_error);
}

TEST_CASE("kmeans k=1 on a repeated value: radius equals the time-axis spread oracle") {
    const auto w = constant_window(60, 0.3);
    const auto cs = kmeans_coreset(w, kUnitRange, 1, 4);
    REQUIRE(cs.channels[0].size() == 1);
    const auto& cl = cs.channels[0][0];

    // Oracle: direct computation of max |t_i/(L-1) - mean_t|; values carry no
    // spread, so the radius is purely temporal.
    double mean_t = 0.0;
    for (int i = 0; i < 60; ++i) mean_t += i / 59.0;
    mean_t /= 60.0;
    double expect_radius = 0.0;
    for (int i = 0; i < 60; ++i) expect_radius = std::max(expect_radius, std::abs(i / 59.0 - mean_t));

    CHECK(expect_radius == doctest::Approx(0.5));
    CHECK(cl.radius == doctest::Approx(expect_radius));
    CHECK(cl.center_v == doctest::Approx((0.3 + 1.0) / 2.0)); // normalized value
    CHECK(cl.count == 60);
}

TEST_CASE("kmeans k=2 splits a two-level window exactly at the block boundary") {
    SensorWindow w = SensorWindow::zeros(60, 1);
    for (int i = 0; i < 30; ++i) w.at(i, 0) = -1.0;
    for (int i = 30; i < 60; ++i) w.at(i, 0) = 1.0;
    const auto cs = kmeans_coreset(w, kUnitRange, 2, 4);
    REQUIRE(cs.channels[0].size() == 2);
    CHECK(cs.channels[0][0].count == 30);
    CHECK(cs.channels[0][1].count == 30);

    // Brute-force oracle: the two value levels make every candidate optimal
    // partition time-contiguous, so scanning all contiguous splits bounds the
    // optimum from below.
    const auto sse_of_split = [&](int split) {
        double sse = 0.0;
        for (int part = 0; part < 2; ++part) {
            const int lo = part == 0 ? 0 : split;
            const int hi = part == 0 ? split : 60;
            double ct = 0.0, cv = 0.0;
            for (int i = lo; i < hi; ++i) {
                ct += i / 59.0;
                cv += (w.at(i, 0) + 1.0) / 2.0;
            }
            const int n = hi - lo;
            ct /= n;
            cv /= n;
            for (int i = lo; i < hi; ++i) {
                const double dt = i / 59.0 - ct;
                const double dv = (w.at(i, 0) + 1.0) / 2.0 - cv;
                sse += dt * dt + dv * dv;
            }
        }
        return sse;
    };
    double best = sse_of_split(1);
    int best_split = 1;
    for (int split = 2; split < 60; ++split) {
        if (sse_of_split(split) < best) {
            best = sse_of_split(split);
            best_split = split;
        }
    }
    CHECK(best_split == 30);

    double lloyd_sse = 0.0;
    for (int i = 0; i < 60; ++i) {
        double dmin = 1e30;
        for (const auto& cl : cs.channels[0]) {
            const double dt = i / 59.0 - cl.center_t;
            const double dv = (w.at(i, 0) + 1.0) / 2.0 - cl.center_v;
            dmin = std::min(dmin, dt * dt + dv * dv);
        }
        lloyd_sse += dmin;
    }
    CHECK(lloyd_sse == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("kmeans objective is non-increasing across iterations") {
    Rng rng(23);
    for (int rep = 0; rep < 30; ++rep) {
        const auto w = random_window(60, rng);
        const auto cs = kmeans_coreset(w, kUnitRange, 6, 10);
        for (const auto& trace : cs.objective_trace) {
            for (std::size_t i = 1; i < trace.size(); ++i) {
                CHECK(trace[i] <= trace[i - 1] + 1e-12);
            }
        }
    }
}

TEST_CASE("kmeans fixed points satisfy nearest-center and center-as-mean") {
    Rng rng(31);
    int checked = 0;
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t n = 4 + rng.below(9); // n <= 12
        const int k = 1 + static_cast<int>(rng.below(3));
        if (static_cast<std::size_t>(k) > n) continue;
        SensorWindow w = SensorWindow::zeros(n, 1);
        for (std::size_t i = 0; i < n; ++i) w.at(i, 0) = rng.uniform(-1.0, 1.0);
        const auto cs = kmeans_coreset(w, kUnitRange, k, 50);
        if (!cs.converged) continue;
        ++checked;

        const double t_den = n > 1 ? static_cast<double>(n - 1) : 1.0;
        std::vector<std::pair<double, double>> pts(n);
        for (std::size_t i = 0; i < n; ++i) {
            pts[i] = {i / t_den, (w.at(i, 0) + 1.0) / 2.0};
        }
        const auto& cls = cs.channels[0];
        std::vector<int> assign(n);
        for (std::size_t i = 0; i < n; ++i) {
            double dmin = 1e30;
            for (std::size_t j = 0; j < cls.size(); ++j) {
                const double dt = pts[i].first - cls[j].center_t;
                const double dv = pts[i].second - cls[j].center_v;
                const double d = dt * dt + dv * dv;
                if (d < dmin) {
                    dmin = d;
                    assign[i] = static_cast<int>(j);
                }
            }
        }
        for (std::size_t j = 0; j < cls.size(); ++j) {
            double st = 0.0, sv = 0.0;
            int cnt = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (assign[i] == static_cast<int>(j)) {
                    st += pts[i].first;
                    sv += pts[i].second;
                    ++cnt;
                }
            }
            REQUIRE(cnt == cls[j].count);
            CHECK(cls[j].center_t == doctest::Approx(st / cnt).epsilon(1e-9));
            CHECK(cls[j].center_v == doctest::Approx(sv / cnt).epsilon(1e-9));
        }
    }
    CHECK(checked >= 30);
}

TEST_CASE("kmeans counts sum to the window length") {
    dataio::SyntheticSpec spec{4, 5, 1, 60, 0.1};
    const auto stream = dataio::gen_synthetic(spec, 3);
    for (const auto& w : dataio::window_stream(stream, 60, 0)) {
        const auto cs = kmeans_coreset(w, stream.channel_ranges, 12, 4);
        int total = 0;
        for (const auto& cl : cs.channels[0]) total += cl.count;
        CHECK(total == 60);
    }
}

TEST_CASE("select_cluster_count follows table, budget, and default") {
    ClusterBudgetTable table;
    table.k_max = 12;
    table.min_clusters[3] = 8;
    CHECK(select_cluster_count(3, 12, table) == 8);
    CHECK(select_cluster_count(std::nullopt, 12, table) == 12);
    CHECK(select_cluster_count(3, 5, table) == 5);
    CHECK(select_cluster_count(1, 12, table) == 12); // class absent -> k_max
}

TEST_CASE("select_cluster_count is monotone in affordable_k") {
    ClusterBudgetTable table;
    table.min_clusters[0] = 8;
    Rng rng(41);
    for (int rep = 0; rep < 100; ++rep) {
        const int a = 1 + static_cast<int>(rng.below(12));
        const int b = a + static_cast<int>(rng.below(5));
        const std::optional<int> cls =
            rng.u01() < 0.5 ? std::optional<int>(static_cast<int>(rng.below(2))) : std::nullopt;
        CHECK(select_cluster_count(cls, a, table) <= select_cluster_count(cls, b, table));
    }
}

TEST_SUITE_END();
