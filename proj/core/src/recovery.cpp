#include "seeker/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seeker/errors.hpp"
#include "seeker/rng.hpp"

namespace seeker::recovery {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Rescale counts proportionally so they sum to L, keeping every cluster at
// least one point. Largest-remainder rounding keeps the result deterministic.
std::vector<int> rescale_counts(const std::vector<coreset::Cluster>& clusters, int L) {
    const int k = static_cast<int>(clusters.size());
    double total = 0.0;
    for (const auto& cl : clusters) total += std::max(cl.count, 1);
    std::vector<int> out(k, 1);
    std::vector<std::pair<double, int>> remainders;
    int assigned = 0;
    for (int j = 0; j < k; ++j) {
        const double share = std::max(clusters[j].count, 1) / total * L;
        out[j] = std::max(1, static_cast<int>(std::floor(share)));
        assigned += out[j];
        remainders.push_back({share - std::floor(share), j});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::size_t r = 0;
    while (assigned < L) {
        out[remainders[r % remainders.size()].second]++;
        ++assigned;
        ++r;
    }
    while (assigned > L) {
        // Take back from the largest count.
        int j_max = 0;
        for (int j = 1; j < k; ++j)
            if (out[j] > out[j_max]) j_max = j;
        if (out[j_max] <= 1) break;
        out[j_max]--;
        --assigned;
    }
    return out;
}

} // namespace

Reconstruction reconstruct_cluster(const coreset::ClusterCoreset& c,
                                   std::size_t length,
                                   std::uint64_t seed) {
    if (!c.has_counts) {
        throw config_error("reconstruct_cluster needs a recoverable coreset (counts present)");
    }
    const int L = static_cast<int>(length);
    Reconstruction rec;
    rec.window = SensorWindow::zeros(length, c.channels.size());

    for (std::size_t ch = 0; ch < c.channels.size(); ++ch) {
        const auto& clusters = c.channels[ch];
        int total = 0;
        for (const auto& cl : clusters) total += cl.count;
        std::vector<int> counts(clusters.size());
        if (total == L) {
            for (std::size_t j = 0; j < clusters.size(); ++j) counts[j] = clusters[j].count;
        } else {
            counts = rescale_counts(clusters, L);
            rec.counts_rescaled = true;
        }

        Rng rng(seed, 200 + ch);
        struct Drawn {
            double t, v;
        };
        std::vector<Drawn> drawn;
        drawn.reserve(L);
        for (std::size_t j = 0; j < clusters.size(); ++j) {
            const auto& cl = clusters[j];
            for (int p = 0; p < counts[j]; ++p) {
                // Uniform in the disk of radius cl.radius.
                const double theta = rng.uniform(0.0, 2.0 * kPi);
                const double rad = cl.radius * std::sqrt(rng.u01());
                drawn.push_back({cl.center_t + rad * std::cos(theta),
                                 std::clamp(cl.center_v + rad * std::sin(theta), 0.0, 1.0)});
            }
        }
        std::stable_sort(drawn.begin(), drawn.end(),
                         [](const Drawn& a, const Drawn& b) { return a.t < b.t; });

        const auto& r = c.quant_meta[ch];
        for (int i = 0; i < L; ++i) {
            rec.window.at(i, ch) = r.min + drawn[i].v * r.span();
        }
    }
    return rec;
}

SensorWindow reconstruct_sample(const coreset::SampleCoreset& s,
                                std::size_t length,
                                std::uint64_t seed) {
    const int L = static_cast<int>(length);
    SensorWindow out = SensorWindow::zeros(length, s.channels.size());

    for (std::size_t ch = 0; ch < s.channels.size(); ++ch) {
        const auto& pts = s.channels[ch];
        std::vector<double> y(L, 0.0);
        std::vector<bool> kept(L, false);
        for (const auto& p : pts) {
            y[p.index] = p.value;
            kept[p.index] = true;
        }

        const bool all_kept = static_cast<int>(pts.size()) == L;
        if (!all_kept) {
            // Linear interpolation between kept neighbours; ends hold the
            // nearest kept value.
            int prev = -1;
            for (int i = 0; i < L; ++i) {
                if (kept[i]) {
                    prev = i;
                    continue;
                }
                int next = -1;
                for (int j = i + 1; j < L; ++j) {
                    if (kept[j]) {
                        next = j;
                        break;
                    }
                }
                if (prev < 0 && next < 0) {
                    y[i] = s.mean[ch];
                } else if (prev < 0) {
                    y[i] = y[next];
                } else if (next < 0) {
                    y[i] = y[prev];
                } else {
                    const double a = static_cast<double>(i - prev) / (next - prev);
                    y[i] = (1.0 - a) * y[prev] + a * y[next];
                }
            }

            const double target_var = s.variance[ch];
            double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / L;
            double var_y = 0.0;
            for (double v : y) var_y += (v - mean_y) * (v - mean_y);
            var_y /= L;

            // Interpolation usually undershoots the variance; noise brings it
            // back into the 5% band. Aiming near the low edge of the band
            // keeps the perturbation minimal.
            const double low_edge = 0.96 * target_var;
            if (low_edge > var_y) {
                // One closed-form step: draw mean-free noise z, solve
                // var(y + a*z) = low_edge exactly for a >= 0.
                Rng rng(seed, 300 + ch);
                std::vector<double> z(L);
                double mean_z = 0.0;
                for (auto& v : z) {
                    v = rng.gaussian();
                    mean_z += v;
                }
                mean_z /= L;
                for (auto& v : z) v -= mean_z;
                double var_z = 0.0, cov_yz = 0.0;
                for (int i = 0; i < L; ++i) {
                    var_z += z[i] * z[i];
                    cov_yz += (y[i] - mean_y) * z[i];
                }
                var_z /= L;
                cov_yz /= L;
                if (var_z > 0.0) {
                    const double disc = cov_yz * cov_yz + var_z * (low_edge - var_y);
                    const double a = (-cov_yz + std::sqrt(std::max(disc, 0.0))) / var_z;
                    for (int i = 0; i < L; ++i) y[i] += a * z[i];
                }
            } else if (var_y > 1.05 * target_var && var_y > 0.0) {
                const double a = std::sqrt(std::max(target_var, 0.0) / var_y);
                for (auto& v : y) v = mean_y + a * (v - mean_y);
            }

            // Exact mean restoration (variance is shift invariant).
            double mean_now = std::accumulate(y.begin(), y.end(), 0.0) / L;
            const double shift = s.mean[ch] - mean_now;
            for (auto& v : y) v += shift;
        }

        for (int i = 0; i < L; ++i) out.at(i, ch) = y[i];
    }
    return out;
}

} // namespace seeker::recovery
