#pragma once

#include <cstdint>

#include "seeker/coreset.hpp"
#include "seeker/types.hpp"

namespace seeker::recovery {

struct Reconstruction {
    SensorWindow window;
    /// Set when per-cluster counts did not sum to the window length and were
    /// proportionally rescaled before redistribution.
    bool counts_rescaled = false;
};

/// Rebuilds a full-length window from a cluster coreset: per channel, `count`
/// points are drawn uniformly inside each cluster's disk, the pooled points
/// are sorted by time and placed onto the uniform grid in order (the
/// minimum-movement assignment of points to grid slots), then denormalized.
/// Deterministic for fixed seed.
Reconstruction reconstruct_cluster(const coreset::ClusterCoreset& c,
                                   std::size_t length,
                                   std::uint64_t seed);

/// Rebuilds a full-length window from a sample coreset: kept indices copy
/// their values, gaps are filled by linear interpolation, and one closed-form
/// correction matches the transmitted variance (noise is added when the
/// interpolation undershoots it, a scale about the mean is applied when it
/// overshoots). The transmitted mean is restored exactly. When every index
/// was kept the values pass through untouched. Deterministic for fixed seed.
SensorWindow reconstruct_sample(const coreset::SampleCoreset& s,
                                std::size_t length,
                                std::uint64_t seed);

} // namespace seeker::recovery
