#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace seeker {

/// Per-channel calibration bounds used for value normalization everywhere
/// (codec quantization, model inputs, correlation step size).
struct ChannelRange {
    double min = 0.0;
    double max = 1.0;
    double span() const { return max - min; }
};

/// One fixed-length multi-channel slice of a stream; the unit of inference
/// and compression. Values are stored row-major (length x channels) in raw
/// sensor units.
struct SensorWindow {
    std::vector<double> values;
    std::size_t length = 0;
    std::size_t channels = 0;
    std::optional<int> label;
    std::uint64_t window_id = 0;
    std::size_t t0 = 0;

    double at(std::size_t i, std::size_t c) const { return values[i * channels + c]; }
    double& at(std::size_t i, std::size_t c) { return values[i * channels + c]; }

    static SensorWindow zeros(std::size_t length, std::size_t channels) {
        SensorWindow w;
        w.length = length;
        w.channels = channels;
        w.values.assign(length * channels, 0.0);
        return w;
    }
};

/// A labeled multi-channel sample stream with its sampling rate and
/// calibration bounds. samples is row-major (size x channels).
struct LabeledStream {
    std::vector<double> samples;
    std::vector<int> labels;
    std::size_t channels = 0;
    double sample_rate_hz = 50.0;
    std::vector<ChannelRange> channel_ranges;

    std::size_t size() const { return channels == 0 ? 0 : samples.size() / channels; }
    double at(std::size_t i, std::size_t c) const { return samples[i * channels + c]; }
    double& at(std::size_t i, std::size_t c) { return samples[i * channels + c]; }
};

} // namespace seeker
