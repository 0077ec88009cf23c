#include "seeker/coreset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "seeker/errors.hpp"
#include "seeker/rng.hpp"

namespace seeker::coreset {

namespace {

constexpr double kEps = 1e-6;

double norm_value(double x, const ChannelRange& r) {
    return std::clamp((x - r.min) / r.span(), 0.0, 1.0);
}

struct Point2 {
    double t, v;
};

double dist2(const Point2& a, const Point2& b) {
    const double dt = a.t - b.t;
    const double dv = a.v - b.v;
    return dt * dt + dv * dv;
}

} // namespace

std::vector<double> importance_weights(const SensorWindow& window, std::size_t channel) {
    const std::size_t L = window.length;
    std::vector<double> w(L, 0.0);
    double mean = 0.0;
    for (std::size_t i = 0; i < L; ++i) mean += window.at(i, channel);
    mean /= static_cast<double>(L);

    double sum = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        const double x = window.at(i, channel);
        const double prev = (i == 0) ? x : window.at(i - 1, channel);
        w[i] = kEps + std::abs(x - mean) + std::abs(x - prev);
        sum += w[i];
    }
    for (auto& wi : w) wi /= sum;
    return w;
}

namespace {

// Weighted draw from indices satisfying `allowed`; -1 when none qualify.
template <typename Pred>
int weighted_draw(const std::vector<double>& weights, Pred allowed, Rng& rng) {
    double mass = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (allowed(i)) mass += weights[i];
    if (mass <= 0.0) return -1;
    double u = rng.u01() * mass;
    int last = -1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!allowed(i)) continue;
        last = static_cast<int>(i);
        u -= weights[i];
        if (u <= 0.0) return last;
    }
    return last;
}

bool gap_ok(const std::vector<int>& sorted_idx, int min_gap) {
    for (std::size_t j = 1; j < sorted_idx.size(); ++j)
        if (sorted_idx[j] - sorted_idx[j - 1] < min_gap) return false;
    return true;
}

// How many further samples the gaps of `kept` (sorted) can still host.
int spacing_capacity(const std::vector<int>& kept, int min_gap, int L) {
    if (kept.empty()) return (L - 1) / min_gap + 1;
    int cap = kept.front() / min_gap + (L - 1 - kept.back()) / min_gap;
    for (std::size_t i = 1; i < kept.size(); ++i) {
        cap += (kept[i] - kept[i - 1]) / min_gap - 1;
    }
    return cap;
}

// Deterministic greedy sweep in descending weight order: an index is kept
// when it respects min_gap against the kept set and keeping it still leaves
// room to reach m samples. Passes repeat until m indices are kept, which the
// feasibility precondition guarantees.
std::vector<int> greedy_spaced(const std::vector<double>& weights, int m, int min_gap, int L) {
    std::vector<int> order(L);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (weights[a] != weights[b]) return weights[a] > weights[b];
        return a < b;
    });

    std::vector<int> kept;
    kept.reserve(m);
    while (static_cast<int>(kept.size()) < m) {
        const std::size_t before = kept.size();
        for (int i : order) {
            if (static_cast<int>(kept.size()) == m) break;
            const auto pos = std::lower_bound(kept.begin(), kept.end(), i);
            if (pos != kept.end() && *pos - i < min_gap) continue;
            if (pos != kept.begin() && i - *(pos - 1) < min_gap) continue;
            std::vector<int> trial = kept;
            trial.insert(std::lower_bound(trial.begin(), trial.end(), i), i);
            if (static_cast<int>(trial.size()) + spacing_capacity(trial, min_gap, L) < m) continue;
            kept = std::move(trial);
        }
        if (kept.size() == before) break; // no progress; cannot happen for feasible inputs
    }
    return kept;
}

} // namespace

SampleCoreset sample_coreset(const SensorWindow& window,
                             const std::vector<ChannelRange>& ranges,
                             int m, int min_gap, int max_rounds, std::uint64_t seed) {
    const int L = static_cast<int>(window.length);
    if (m < 1 || min_gap < 1) throw config_error("sample_coreset: m and min_gap must be >= 1");
    if (m * min_gap - (min_gap - 1) > L) {
        throw config_error("sample_coreset: cannot place " + std::to_string(m) +
                           " samples with gap " + std::to_string(min_gap) + " in " +
                           std::to_string(L) + " points");
    }

    SampleCoreset cs;
    cs.window_len = window.length;
    cs.quant_meta = ranges;
    cs.min_gap = min_gap;
    cs.channels.resize(window.channels);
    cs.mean.resize(window.channels);
    cs.variance.resize(window.channels);

    for (std::size_t c = 0; c < window.channels; ++c) {
        const std::vector<double> w = importance_weights(window, c);
        Rng rng(seed, 100 + c);

        std::vector<bool> taken(L, false);
        std::vector<int> sel;
        sel.reserve(m);
        for (int j = 0; j < m; ++j) {
            const int i = weighted_draw(w, [&](std::size_t idx) { return !taken[idx]; }, rng);
            taken[i] = true;
            sel.push_back(i);
        }
        std::sort(sel.begin(), sel.end());

        // Redraw the later index of each violating pair, restricted to
        // positions that do not collide with the rest of the selection.
        for (int round = 0; round < max_rounds && !gap_ok(sel, min_gap); ++round) {
            for (std::size_t j = 1; j < sel.size(); ++j) {
                if (sel[j] - sel[j - 1] < min_gap) {
                    taken[sel[j]] = false;
                    const auto feasible = [&](std::size_t idx) {
                        if (taken[idx]) return false;
                        for (int other : sel) {
                            if (other == sel[j]) continue;
                            if (std::abs(static_cast<int>(idx) - other) < min_gap) return false;
                        }
                        return true;
                    };
                    const int repl = weighted_draw(w, feasible, rng);
                    if (repl < 0) {
                        taken[sel[j]] = true; // nothing feasible this pass
                        continue;
                    }
                    taken[repl] = true;
                    sel[j] = repl;
                }
            }
            std::sort(sel.begin(), sel.end());
        }
        if (!gap_ok(sel, min_gap)) sel = greedy_spaced(w, m, min_gap, L);

        auto& pts = cs.channels[c];
        pts.reserve(m);
        for (int i : sel) pts.push_back({i, window.at(i, c)});

        double mean = 0.0;
        for (int i = 0; i < L; ++i) mean += window.at(i, c);
        mean /= L;
        double var = 0.0;
        for (int i = 0; i < L; ++i) {
            const double d = window.at(i, c) - mean;
            var += d * d;
        }
        var /= L;
        cs.mean[c] = mean;
        cs.variance[c] = var;
    }
    return cs;
}

ClusterCoreset kmeans_coreset(const SensorWindow& window,
                              const std::vector<ChannelRange>& ranges,
                              int k_per_channel, int max_iter) {
    const int L = static_cast<int>(window.length);
    if (k_per_channel < 1 || k_per_channel > L) {
        throw config_error("kmeans_coreset: need 1 <= k <= window length");
    }

    ClusterCoreset cs;
    cs.k_per_channel = k_per_channel;
    cs.window_len = window.length;
    cs.quant_meta = ranges;
    cs.has_counts = true;
    cs.converged = true;
    cs.channels.resize(window.channels);

    const double t_den = (L > 1) ? static_cast<double>(L - 1) : 1.0;

    for (std::size_t c = 0; c < window.channels; ++c) {
        std::vector<Point2> pts(L);
        double mean_v = 0.0;
        for (int i = 0; i < L; ++i) {
            pts[i] = {static_cast<double>(i) / t_den, norm_value(window.at(i, c), ranges[c])};
            mean_v += pts[i].v;
        }
        mean_v /= L;

        const int k = k_per_channel;
        std::vector<Point2> centers;
        centers.reserve(k);

        // Maximin init: first center at the largest value deviation, then
        // farthest-first. Ties go to the lowest index.
        int seed_idx = 0;
        for (int i = 1; i < L; ++i)
            if (std::abs(pts[i].v - mean_v) > std::abs(pts[seed_idx].v - mean_v)) seed_idx = i;
        centers.push_back(pts[seed_idx]);
        while (static_cast<int>(centers.size()) < k) {
            int far_idx = 0;
            double far_d = -1.0;
            for (int i = 0; i < L; ++i) {
                double dmin = std::numeric_limits<double>::max();
                for (const auto& ctr : centers) dmin = std::min(dmin, dist2(pts[i], ctr));
                if (dmin > far_d) {
                    far_d = dmin;
                    far_idx = i;
                }
            }
            centers.push_back(pts[far_idx]);
        }

        const auto assign = [&](std::vector<int>& a) {
            for (int i = 0; i < L; ++i) {
                int best = 0;
                double bd = dist2(pts[i], centers[0]);
                for (int j = 1; j < k; ++j) {
                    const double d = dist2(pts[i], centers[j]);
                    if (d < bd) {
                        bd = d;
                        best = j;
                    }
                }
                a[i] = best;
            }
        };
        const auto objective = [&](const std::vector<int>& a) {
            double s = 0.0;
            for (int i = 0; i < L; ++i) s += dist2(pts[i], centers[a[i]]);
            return s;
        };

        std::vector<int> a(L), a2(L);
        assign(a);
        bool converged = false;
        int rounds = 0;
        auto& obj_trace = cs.objective_trace.emplace_back();
        for (int it = 0; it < max_iter; ++it) {
            ++rounds;
            // Update step: centers become member means; empty clusters are
            // re-seeded at the point farthest from their stale center.
            std::vector<double> sum_t(k, 0.0), sum_v(k, 0.0);
            std::vector<int> n(k, 0);
            for (int i = 0; i < L; ++i) {
                sum_t[a[i]] += pts[i].t;
                sum_v[a[i]] += pts[i].v;
                n[a[i]]++;
            }
            std::vector<bool> used(L, false);
            for (int j = 0; j < k; ++j) {
                if (n[j] > 0) {
                    centers[j] = {sum_t[j] / n[j], sum_v[j] / n[j]};
                } else {
                    int far_idx = -1;
                    double far_d = -1.0;
                    for (int i = 0; i < L; ++i) {
                        if (used[i]) continue;
                        const double d = dist2(pts[i], centers[j]);
                        if (d > far_d) {
                            far_d = d;
                            far_idx = i;
                        }
                    }
                    centers[j] = pts[far_idx];
                    used[far_idx] = true;
                }
            }
            assign(a2);
            obj_trace.push_back(objective(a2));
            if (a2 == a) {
                converged = true;
                break;
            }
            a = a2;
        }
        cs.converged = cs.converged && converged;
        cs.iterations = std::max(cs.iterations, rounds);

        std::vector<Cluster> clusters(k);
        for (int j = 0; j < k; ++j) {
            clusters[j].center_t = centers[j].t;
            clusters[j].center_v = centers[j].v;
        }
        for (int i = 0; i < L; ++i) {
            auto& cl = clusters[a[i]];
            cl.count++;
            cl.radius = std::max(cl.radius, std::sqrt(dist2(pts[i], centers[a[i]])));
        }
        std::sort(clusters.begin(), clusters.end(), [](const Cluster& x, const Cluster& y) {
            if (x.center_t != y.center_t) return x.center_t < y.center_t;
            return x.center_v < y.center_v;
        });
        cs.channels[c] = std::move(clusters);
    }
    return cs;
}

int select_cluster_count(std::optional<int> predicted_class,
                         int affordable_k,
                         const ClusterBudgetTable& table) {
    if (affordable_k < 1) throw config_error("select_cluster_count: affordable_k must be >= 1");
    if (predicted_class.has_value()) {
        return std::min(affordable_k, table.lookup(*predicted_class));
    }
    return std::min(affordable_k, table.k_max);
}

} // namespace seeker::coreset
