#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "seeker/coreset.hpp"

namespace seeker::codec {

/// Encoded payload body plus codec warnings. A warning is raised when a
/// cluster count exceeds the 4-bit field and had to be clamped.
struct Encoded {
    std::vector<std::uint8_t> bytes;
    bool count_clamped = false;
};

/// Body size in bytes of a cluster coreset: per channel, k 24-bit records
/// plus (when counts are included) k 4-bit count fields padded to a byte
/// boundary.
std::size_t cluster_body_bytes(int k, std::size_t channels, bool with_counts = true);

/// Body size in bytes of a sample coreset: per channel, m 16-bit records plus
/// 16-bit mean and 16-bit variance.
std::size_t sample_body_bytes(int m, std::size_t channels);

/// Raw transmission size of a window at 4 bytes per sample.
std::size_t raw_window_bytes(std::size_t length, std::size_t channels);

/// Encodes a cluster coreset body. Per channel: k records of 24 bits,
/// MSB-first — center_t 6 bits (round(center_t*(L-1))), center_v 10 bits
/// (round(center_v*1023)), radius 8 bits (round(min(radius,1)*255)) —
/// followed, when with_counts, by k 4-bit fields storing count-1 clamped to
/// 15, zero-padded to a byte boundary. Channels are concatenated.
/// Throws format_error when k > 63 or L > 64.
Encoded encode_cluster(const coreset::ClusterCoreset& c, bool with_counts = true);

/// Inverse of encode_cluster. Whether counts are present is inferred from the
/// byte length; a length matching neither layout is a format_error.
coreset::ClusterCoreset decode_cluster(const std::vector<std::uint8_t>& bytes,
                                       int k_per_channel,
                                       std::size_t channels,
                                       std::size_t window_len,
                                       const std::vector<ChannelRange>& quant_meta);

/// Encodes a sample coreset body. Per channel: m records of 16 bits
/// (index 6 bits, value 10 bits normalized), then mean as 16 bits normalized
/// to the channel range and variance as 16 bits normalized to the squared
/// range. Throws format_error when m > 63 or L > 64.
Encoded encode_sample(const coreset::SampleCoreset& s);

/// Inverse of encode_sample; length mismatch is a format_error.
coreset::SampleCoreset decode_sample(const std::vector<std::uint8_t>& bytes,
                                     int m,
                                     std::size_t channels,
                                     std::size_t window_len,
                                     const std::vector<ChannelRange>& quant_meta);

} // namespace seeker::codec
