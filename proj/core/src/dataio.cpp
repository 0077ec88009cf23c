#include "seeker/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "seeker/errors.hpp"
#include "seeker/rng.hpp"

namespace seeker::dataio {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<std::string> split_tokens(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    const auto is_sep = [&](char c) {
        if (sep == ' ') return c == ' ' || c == '\t';
        return c == sep;
    };
    while (pos < line.size()) {
        while (pos < line.size() && is_sep(line[pos])) ++pos;
        if (pos >= line.size()) break;
        std::size_t end = pos;
        while (end < line.size() && !is_sep(line[end])) ++end;
        out.push_back(line.substr(pos, end - pos));
        pos = end;
    }
    return out;
}

// Parses one needed column; columns outside channel_spec/label_col may hold
// anything (PAMAP2 logs carry NaN in unused fields).
double parse_cell(const std::string& tok, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v)) {
            throw data_error("malformed value '" + tok + "' at line " + std::to_string(line_no));
        }
        return v;
    } catch (const data_error&) {
        throw;
    } catch (const std::exception&) {
        throw data_error("malformed value '" + tok + "' at line " + std::to_string(line_no));
    }
}

} // namespace

DatasetFormat parse_format(const std::string& name) {
    if (name == "mhealth") return DatasetFormat::mhealth;
    if (name == "pamap2") return DatasetFormat::pamap2;
    if (name == "bearing-csv") return DatasetFormat::bearing_csv;
    throw config_error("unknown dataset format '" + name + "'");
}

LabeledStream load_dataset(const std::string& path,
                           DatasetFormat format,
                           const std::vector<std::size_t>& channel_spec,
                           std::size_t label_col) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open dataset file '" + path + "'");
    if (channel_spec.empty()) throw config_error("channel_spec must name at least one column");

    const char sep = (format == DatasetFormat::bearing_csv) ? ',' : ' ';
    const std::size_t channels = channel_spec.size();

    LabeledStream stream;
    stream.channels = channels;
    std::vector<double> raw_labels;

    std::size_t max_needed = label_col;
    for (std::size_t c : channel_spec) max_needed = std::max(max_needed, c);

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::vector<std::string> row = split_tokens(line, sep);

        if (max_needed >= row.size()) {
            if (stream.size() == 0) {
                throw config_error("column " + std::to_string(max_needed) + " not present (row has " +
                                   std::to_string(row.size()) + " columns)");
            }
            throw data_error("short row at line " + std::to_string(line_no));
        }
        for (std::size_t c : channel_spec) stream.samples.push_back(parse_cell(row[c], line_no));
        raw_labels.push_back(parse_cell(row[label_col], line_no));
    }
    if (raw_labels.empty()) throw data_error("dataset file '" + path + "' contains no rows");

    // Remap raw labels to contiguous 0-based ids, ascending raw order.
    std::map<long long, int> id_of;
    for (double rl : raw_labels) id_of[std::llround(rl)] = 0;
    int next_id = 0;
    for (auto& [raw, id] : id_of) id = next_id++;
    stream.labels.reserve(raw_labels.size());
    for (double rl : raw_labels) stream.labels.push_back(id_of[std::llround(rl)]);

    stream.channel_ranges.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        double lo = stream.at(0, c), hi = stream.at(0, c);
        for (std::size_t i = 1; i < stream.size(); ++i) {
            lo = std::min(lo, stream.at(i, c));
            hi = std::max(hi, stream.at(i, c));
        }
        if (hi <= lo) hi = lo + 1.0; // degenerate constant channel
        stream.channel_ranges[c] = {lo, hi};
    }
    return stream;
}

std::vector<SensorWindow> window_stream(const LabeledStream& stream,
                                        std::size_t length,
                                        std::size_t overlap) {
    if (length == 0 || overlap >= length) throw config_error("window overlap must be < length");
    const std::size_t n = stream.size();
    std::vector<SensorWindow> windows;
    if (n < length) return windows;

    const std::size_t stride = length - overlap;
    const std::size_t count = (n - length) / stride + 1;
    windows.reserve(count);

    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t t0 = w * stride;
        SensorWindow win = SensorWindow::zeros(length, stream.channels);
        win.window_id = w;
        win.t0 = t0;
        for (std::size_t i = 0; i < length; ++i) {
            for (std::size_t c = 0; c < stream.channels; ++c) {
                const auto& r = stream.channel_ranges[c];
                win.at(i, c) = std::clamp(stream.at(t0 + i, c), r.min, r.max);
            }
        }
        // Majority label, ties to lowest class id.
        std::map<int, std::size_t> votes;
        for (std::size_t i = 0; i < length; ++i) votes[stream.labels[t0 + i]]++;
        int best = votes.begin()->first;
        std::size_t best_n = votes.begin()->second;
        for (const auto& [cls, cnt] : votes) {
            if (cnt > best_n) {
                best = cls;
                best_n = cnt;
            }
        }
        win.label = best;
        windows.push_back(std::move(win));
    }
    return windows;
}

namespace {

// Class waveform parameters. Frequencies are well separated while amplitudes
// stay equal, so a classifier has to pick up temporal structure rather than
// signal energy; that keeps compressed-representation comparisons honest.
double class_freq(int cls) { return 1.5 + 1.2 * cls; }
double class_amp(int) { return 0.9; }
constexpr double kPhaseJitter = 0.7;  // radians, uniform per window
constexpr int kRunLength = 5;         // consecutive windows per class run
constexpr double kRangeBound = 1.5;   // fixed calibration bounds for synthetic data

} // namespace

LabeledStream gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    return gen_synthetic(spec, seed, seed);
}

LabeledStream gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                            std::uint64_t noise_seed) {
    if (spec.n_classes < 2) throw config_error("gen_synthetic needs at least 2 classes");
    if (spec.noise_sigma < 0.0) throw config_error("noise_sigma must be >= 0");

    Rng order_rng(seed, 0);
    Rng noise_rng(noise_seed, 1);

    LabeledStream stream;
    stream.channels = spec.channels;
    stream.sample_rate_hz = 50.0;
    stream.channel_ranges.assign(spec.channels, {-kRangeBound, kRangeBound});

    // Emit windows in short per-class runs, round-robin, until each class has
    // its quota. Run boundaries land on window boundaries.
    std::vector<int> remaining(spec.n_classes, spec.n_windows_per_class);
    int emitted_total = 0;
    const int total = spec.n_classes * spec.n_windows_per_class;
    int cls = 0;
    while (emitted_total < total) {
        while (remaining[cls] == 0) cls = (cls + 1) % spec.n_classes;
        const int run = std::min(remaining[cls], kRunLength);
        for (int w = 0; w < run; ++w) {
            const double phase = order_rng.uniform(-kPhaseJitter, kPhaseJitter);
            for (std::size_t i = 0; i < spec.length; ++i) {
                const double t = static_cast<double>(i) / static_cast<double>(spec.length);
                for (std::size_t c = 0; c < spec.channels; ++c) {
                    const double chan_phase = 2.0 * kPi * static_cast<double>(c) / 3.0;
                    double v = class_amp(cls) *
                               std::sin(2.0 * kPi * class_freq(cls) * t + phase + chan_phase);
                    v += spec.noise_sigma * noise_rng.gaussian();
                    stream.samples.push_back(std::clamp(v, -kRangeBound, kRangeBound));
                }
                stream.labels.push_back(cls);
            }
        }
        remaining[cls] -= run;
        emitted_total += run;
        cls = (cls + 1) % spec.n_classes;
    }
    return stream;
}

} // namespace seeker::dataio
