#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "seeker/types.hpp"

namespace seeker::coreset {

/// One cluster in the normalized (time, value) plane. center_t and center_v
/// live in [0,1]; radius is a Euclidean distance in that plane; count is the
/// number of member points.
struct Cluster {
    double center_t = 0.0;
    double center_v = 0.0;
    double radius = 0.0;
    int count = 0;
};

/// Clustering coreset of one window: per channel a list of clusters plus the
/// calibration bounds used for value normalization. When has_counts is false
/// (non-recoverable transport mode) the counts are not meaningful.
struct ClusterCoreset {
    std::vector<std::vector<Cluster>> channels;
    int k_per_channel = 0;
    std::size_t window_len = 0;
    std::vector<ChannelRange> quant_meta;
    bool has_counts = true;

    // Construction diagnostics (not part of the payload).
    bool converged = false;
    int iterations = 0;
    std::vector<std::vector<double>> objective_trace; // per channel, per round
};

/// Importance-sampling coreset of one window: per channel m (index, value)
/// pairs sorted by index, plus the full-window first and second central
/// moments. Values are raw sensor units.
struct SampleCoreset {
    struct Point {
        int index = 0;
        double value = 0.0;
    };
    std::vector<std::vector<Point>> channels;
    std::vector<double> mean;
    std::vector<double> variance;
    std::size_t window_len = 0;
    std::vector<ChannelRange> quant_meta;
    int min_gap = 2;
};

/// Per-class minimum cluster count preserving accuracy. Classes absent from
/// the table fall back to k_max.
struct ClusterBudgetTable {
    std::map<int, int> min_clusters;
    int k_max = 12;

    int lookup(int cls) const {
        auto it = min_clusters.find(cls);
        return it == min_clusters.end() ? k_max : it->second;
    }
};

/// Per-timestep importance weights for one channel: nonnegative, summing to
/// one, proportional to eps + |x_i - mean| + |x_i - x_{i-1}| with x_{-1} = x_0.
std::vector<double> importance_weights(const SensorWindow& window, std::size_t channel);

/// Draws m indices per channel without replacement by importance weight,
/// spacing them at least min_gap apart. Gap violations redraw the later index
/// for up to max_rounds passes; whatever remains is resolved by a
/// deterministic greedy sweep that keeps the highest-weight feasible points.
/// Moments are computed over the full window. Deterministic for fixed seed.
SampleCoreset sample_coreset(const SensorWindow& window,
                             const std::vector<ChannelRange>& ranges,
                             int m = 20,
                             int min_gap = 2,
                             int max_rounds = 7,
                             std::uint64_t seed = 0);

/// Lloyd clustering of per-channel points (t/(L-1), normalized value):
/// deterministic maximin initialization seeded at the point of maximum value
/// deviation, at most max_iter assignment/update rounds, empty clusters
/// re-seeded at the point farthest from the stale center. Cluster radius is
/// the max member distance to the center; clusters come out sorted by
/// center_t.
ClusterCoreset kmeans_coreset(const SensorWindow& window,
                              const std::vector<ChannelRange>& ranges,
                              int k_per_channel = 12,
                              int max_iter = 4);

/// Activity-aware cluster count: min(affordable_k, table[class]) when the
/// class is known, min(affordable_k, k_max) otherwise.
int select_cluster_count(std::optional<int> predicted_class,
                         int affordable_k,
                         const ClusterBudgetTable& table);

} // namespace seeker::coreset
