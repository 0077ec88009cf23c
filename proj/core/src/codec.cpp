#include "seeker/codec.hpp"

#include <algorithm>
#include <cmath>

#include "seeker/errors.hpp"

namespace seeker::codec {

namespace {

// MSB-first bit packing; records never straddle intent-unfriendly boundaries
// by construction (24- and 16-bit records are byte aligned, count nibbles are
// padded per channel).
class BitWriter {
public:
    void put(std::uint32_t value, int bits) {
        for (int b = bits - 1; b >= 0; --b) {
            if (nbits_ % 8 == 0) bytes_.push_back(0);
            const std::uint8_t bit = (value >> b) & 1u;
            bytes_.back() |= bit << (7 - (nbits_ % 8));
            ++nbits_;
        }
    }
    void pad_to_byte() { nbits_ = (nbits_ + 7) / 8 * 8; }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t nbits_ = 0;
};

class BitReader {
public:
    explicit BitReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint32_t get(int bits) {
        std::uint32_t v = 0;
        for (int b = 0; b < bits; ++b) {
            const std::size_t byte = pos_ / 8;
            if (byte >= bytes_.size()) throw format_error("payload body truncated");
            const std::uint8_t bit = (bytes_[byte] >> (7 - (pos_ % 8))) & 1u;
            v = (v << 1) | bit;
            ++pos_;
        }
        return v;
    }
    void skip_to_byte() { pos_ = (pos_ + 7) / 8 * 8; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t quant(double x01, int levels) {
    const double q = std::round(std::clamp(x01, 0.0, 1.0) * levels);
    return static_cast<std::uint32_t>(q);
}

} // namespace

std::size_t cluster_body_bytes(int k, std::size_t channels, bool with_counts) {
    const std::size_t per_channel =
        3 * static_cast<std::size_t>(k) + (with_counts ? (static_cast<std::size_t>(k) + 1) / 2 : 0);
    return per_channel * channels;
}

std::size_t sample_body_bytes(int m, std::size_t channels) {
    return (2 * static_cast<std::size_t>(m) + 4) * channels;
}

std::size_t raw_window_bytes(std::size_t length, std::size_t channels) {
    return 4 * length * channels;
}

Encoded encode_cluster(const coreset::ClusterCoreset& c, bool with_counts) {
    const int k = c.k_per_channel;
    const std::size_t L = c.window_len;
    if (k < 1 || k > 63) throw format_error("cluster codec: k out of range [1, 63]");
    if (L < 2 || L > 64) throw format_error("cluster codec: window length out of range [2, 64]");

    Encoded out;
    BitWriter bw;
    for (const auto& channel : c.channels) {
        if (static_cast<int>(channel.size()) != k) {
            throw format_error("cluster codec: channel cluster count != k");
        }
        for (const auto& cl : channel) {
            bw.put(quant(cl.center_t, static_cast<int>(L - 1)), 6);
            bw.put(quant(cl.center_v, 1023), 10);
            bw.put(quant(std::min(cl.radius, 1.0), 255), 8);
        }
        if (with_counts) {
            for (const auto& cl : channel) {
                int stored = cl.count - 1;
                if (stored > 15) {
                    stored = 15;
                    out.count_clamped = true;
                }
                bw.put(static_cast<std::uint32_t>(std::max(stored, 0)), 4);
            }
            bw.pad_to_byte();
        }
    }
    out.bytes = bw.take();
    return out;
}

coreset::ClusterCoreset decode_cluster(const std::vector<std::uint8_t>& bytes,
                                       int k_per_channel,
                                       std::size_t channels,
                                       std::size_t window_len,
                                       const std::vector<ChannelRange>& quant_meta) {
    if (k_per_channel < 1 || k_per_channel > 63) {
        throw format_error("cluster codec: k out of range [1, 63]");
    }
    if (window_len < 2 || window_len > 64) {
        throw format_error("cluster codec: window length out of range [2, 64]");
    }
    const std::size_t with = cluster_body_bytes(k_per_channel, channels, true);
    const std::size_t without = cluster_body_bytes(k_per_channel, channels, false);
    bool has_counts;
    if (bytes.size() == with) {
        has_counts = true;
    } else if (bytes.size() == without) {
        has_counts = false;
    } else {
        throw format_error("cluster body length " + std::to_string(bytes.size()) +
                           " matches neither " + std::to_string(with) + " (with counts) nor " +
                           std::to_string(without) + " (without)");
    }

    coreset::ClusterCoreset c;
    c.k_per_channel = k_per_channel;
    c.window_len = window_len;
    c.quant_meta = quant_meta;
    c.has_counts = has_counts;
    c.channels.resize(channels);

    BitReader br(bytes);
    for (std::size_t ch = 0; ch < channels; ++ch) {
        auto& clusters = c.channels[ch];
        clusters.resize(k_per_channel);
        for (auto& cl : clusters) {
            cl.center_t = static_cast<double>(br.get(6)) / static_cast<double>(window_len - 1);
            cl.center_v = static_cast<double>(br.get(10)) / 1023.0;
            cl.radius = static_cast<double>(br.get(8)) / 255.0;
        }
        if (has_counts) {
            for (auto& cl : clusters) cl.count = static_cast<int>(br.get(4)) + 1;
            br.skip_to_byte();
        }
    }
    return c;
}

Encoded encode_sample(const coreset::SampleCoreset& s) {
    const std::size_t L = s.window_len;
    if (L < 2 || L > 64) throw format_error("sample codec: window length out of range [2, 64]");

    Encoded out;
    BitWriter bw;
    for (std::size_t ch = 0; ch < s.channels.size(); ++ch) {
        const auto& pts = s.channels[ch];
        if (pts.size() > 63) throw format_error("sample codec: m out of range [1, 63]");
        const auto& r = s.quant_meta[ch];
        for (const auto& p : pts) {
            bw.put(static_cast<std::uint32_t>(p.index), 6);
            bw.put(quant((p.value - r.min) / r.span(), 1023), 10);
        }
        bw.put(quant((s.mean[ch] - r.min) / r.span(), 65535), 16);
        bw.put(quant(s.variance[ch] / (r.span() * r.span()), 65535), 16);
    }
    out.bytes = bw.take();
    return out;
}

coreset::SampleCoreset decode_sample(const std::vector<std::uint8_t>& bytes,
                                     int m,
                                     std::size_t channels,
                                     std::size_t window_len,
                                     const std::vector<ChannelRange>& quant_meta) {
    if (m < 1 || m > 63) throw format_error("sample codec: m out of range [1, 63]");
    if (bytes.size() != sample_body_bytes(m, channels)) {
        throw format_error("sample body length " + std::to_string(bytes.size()) + " != expected " +
                           std::to_string(sample_body_bytes(m, channels)));
    }

    coreset::SampleCoreset s;
    s.window_len = window_len;
    s.quant_meta = quant_meta;
    s.channels.resize(channels);
    s.mean.resize(channels);
    s.variance.resize(channels);

    BitReader br(bytes);
    for (std::size_t ch = 0; ch < channels; ++ch) {
        const auto& r = quant_meta[ch];
        auto& pts = s.channels[ch];
        pts.resize(m);
        int prev = -1;
        for (auto& p : pts) {
            p.index = static_cast<int>(br.get(6));
            p.value = r.min + static_cast<double>(br.get(10)) / 1023.0 * r.span();
            if (p.index <= prev) throw format_error("sample body indices not strictly increasing");
            prev = p.index;
        }
        s.mean[ch] = r.min + static_cast<double>(br.get(16)) / 65535.0 * r.span();
        s.variance[ch] = static_cast<double>(br.get(16)) / 65535.0 * r.span() * r.span();
    }
    return s;
}

} // namespace seeker::codec
