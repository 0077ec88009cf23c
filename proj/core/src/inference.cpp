#include "seeker/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "seeker/errors.hpp"
#include "seeker/rng.hpp"

namespace seeker::ml {

namespace {

std::vector<double> softmax(const std::vector<double>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<double> forward_float(const QuantModel& m, const std::vector<double>& x,
                                  std::vector<double>* hidden_out = nullptr) {
    std::vector<double> h(m.hidden);
    for (std::size_t i = 0; i < m.hidden; ++i) {
        double acc = m.b1[i];
        const double* row = &m.w1[i * m.input_dim];
        for (std::size_t j = 0; j < m.input_dim; ++j) acc += row[j] * x[j];
        h[i] = std::max(acc, 0.0);
    }
    if (hidden_out) *hidden_out = h;
    std::vector<double> logits(m.n_classes);
    for (std::size_t i = 0; i < m.n_classes; ++i) {
        double acc = m.b2[i];
        const double* row = &m.w2[i * m.hidden];
        for (std::size_t j = 0; j < m.hidden; ++j) acc += row[j] * h[j];
        logits[i] = acc;
    }
    return logits;
}

// Integer matmul layer with 32-bit accumulators: activations are quantized
// symmetrically with a cap that keeps |sum| < 2^31 for the given fan-in and
// weight magnitude, biases are added back in float after dequantization.
std::vector<double> integer_layer(const std::vector<double>& w_lattice, double w_scale,
                                  const std::vector<double>& bias,
                                  const std::vector<double>& act,
                                  std::size_t rows, std::size_t cols) {
    double w_max_q = 0.0;
    for (double w : w_lattice) w_max_q = std::max(w_max_q, std::abs(w));
    w_max_q = (w_scale > 0.0) ? std::round(w_max_q / w_scale) : 0.0;

    double a_max = 0.0;
    for (double a : act) a_max = std::max(a_max, std::abs(a));

    std::vector<double> out(rows);
    if (a_max == 0.0 || w_max_q == 0.0) {
        for (std::size_t i = 0; i < rows; ++i) out[i] = bias[i];
        return out;
    }

    const double budget = 2147483647.0 / (static_cast<double>(cols) * w_max_q);
    const int a_cap = std::max(1, static_cast<int>(std::min(1023.0, std::floor(budget))));
    const double a_scale = a_max / a_cap;

    std::vector<std::int32_t> aq(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        aq[j] = static_cast<std::int32_t>(std::llround(act[j] / a_scale));
    }
    for (std::size_t i = 0; i < rows; ++i) {
        std::int32_t acc = 0;
        const double* row = &w_lattice[i * cols];
        for (std::size_t j = 0; j < cols; ++j) {
            const std::int32_t wq = static_cast<std::int32_t>(std::llround(row[j] / w_scale));
            acc += wq * aq[j];
        }
        out[i] = static_cast<double>(acc) * w_scale * a_scale + bias[i];
    }
    return out;
}

std::vector<double> forward_quantized(const QuantModel& m, const std::vector<double>& x) {
    std::vector<double> h =
        integer_layer(m.w1, m.scales[0], m.b1, x, m.hidden, m.input_dim);
    for (auto& v : h) v = std::max(v, 0.0);
    return integer_layer(m.w2, m.scales[2], m.b2, h, m.n_classes, m.hidden);
}

std::vector<double> forward(const QuantModel& m, const std::vector<double>& x) {
    return (m.bits == 32) ? forward_float(m, x) : forward_quantized(m, x);
}

void init_weights(QuantModel& m, Rng& rng) {
    const auto init = [&](std::vector<double>& w, std::size_t fan_in, std::size_t fan_out) {
        const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (auto& v : w) v = rng.uniform(-s, s);
    };
    m.w1.assign(m.hidden * m.input_dim, 0.0);
    m.b1.assign(m.hidden, 0.0);
    m.w2.assign(m.n_classes * m.hidden, 0.0);
    m.b2.assign(m.n_classes, 0.0);
    init(m.w1, m.input_dim, m.hidden);
    init(m.w2, m.hidden, m.n_classes);
}

// Accumulates the cross-entropy gradient of one example into (gw1, gb1, gw2, gb2).
void backward(const QuantModel& m, const std::vector<double>& x, int y,
              std::vector<double>& gw1, std::vector<double>& gb1,
              std::vector<double>& gw2, std::vector<double>& gb2) {
    std::vector<double> h;
    const std::vector<double> logits = forward_float(m, x, &h);
    std::vector<double> p = softmax(logits);
    p[y] -= 1.0; // dL/dlogits

    std::vector<double> dh(m.hidden, 0.0);
    for (std::size_t i = 0; i < m.n_classes; ++i) {
        gb2[i] += p[i];
        for (std::size_t j = 0; j < m.hidden; ++j) {
            gw2[i * m.hidden + j] += p[i] * h[j];
            dh[j] += p[i] * m.w2[i * m.hidden + j];
        }
    }
    for (std::size_t j = 0; j < m.hidden; ++j) {
        if (h[j] <= 0.0) continue; // ReLU gate
        gb1[j] += dh[j];
        for (std::size_t i = 0; i < m.input_dim; ++i) {
            gw1[j * m.input_dim + i] += dh[j] * x[i];
        }
    }
}

// Plain mini-batch SGD over the dataset, continuing from the model's current
// weights. Deterministic for a fixed seed.
void sgd(QuantModel& m, const Dataset& data, int epochs, double lr, int batch,
         std::uint64_t seed) {
    Rng rng(seed, 7);
    const std::size_t n = data.x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> gw1(m.w1.size()), gb1(m.b1.size()), gw2(m.w2.size()), gb2(m.b2.size());

    for (int epoch = 0; epoch < epochs; ++epoch) {
        // Fisher-Yates with the deterministic rng.
        for (std::size_t i = n - 1; i > 0; --i) {
            std::swap(order[i], order[rng.below(i + 1)]);
        }
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(start + static_cast<std::size_t>(batch), n);
            std::fill(gw1.begin(), gw1.end(), 0.0);
            std::fill(gb1.begin(), gb1.end(), 0.0);
            std::fill(gw2.begin(), gw2.end(), 0.0);
            std::fill(gb2.begin(), gb2.end(), 0.0);
            for (std::size_t s = start; s < stop; ++s) {
                backward(m, data.x[order[s]], data.y[order[s]], gw1, gb1, gw2, gb2);
            }
            const double step = lr / static_cast<double>(stop - start);
            for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= step * gw1[i];
            for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= step * gb1[i];
            for (std::size_t i = 0; i < m.w2.size(); ++i) m.w2[i] -= step * gw2[i];
            for (std::size_t i = 0; i < m.b2.size(); ++i) m.b2[i] -= step * gb2[i];
        }
    }
}

} // namespace

std::vector<double> window_features(const SensorWindow& w,
                                    const std::vector<ChannelRange>& ranges) {
    std::vector<double> x(w.length * w.channels);
    for (std::size_t i = 0; i < w.length; ++i) {
        for (std::size_t c = 0; c < w.channels; ++c) {
            const auto& r = ranges[c];
            x[i * w.channels + c] = std::clamp((w.at(i, c) - r.min) / r.span(), 0.0, 1.0);
        }
    }
    return x;
}

std::vector<double> cluster_features(const coreset::ClusterCoreset& c) {
    std::vector<double> x;
    for (const auto& channel : c.channels) {
        for (const auto& cl : channel) {
            x.push_back(cl.center_t);
            x.push_back(cl.center_v);
            x.push_back(cl.radius);
            x.push_back(c.has_counts ? static_cast<double>(cl.count) / 16.0 : 0.0);
        }
    }
    return x;
}

std::vector<double> sample_features(const coreset::SampleCoreset& s) {
    std::vector<double> x;
    const double t_den = (s.window_len > 1) ? static_cast<double>(s.window_len - 1) : 1.0;
    for (std::size_t ch = 0; ch < s.channels.size(); ++ch) {
        const auto& r = s.quant_meta[ch];
        for (const auto& p : s.channels[ch]) {
            x.push_back(static_cast<double>(p.index) / t_den);
            x.push_back(std::clamp((p.value - r.min) / r.span(), 0.0, 1.0));
        }
        x.push_back(std::clamp((s.mean[ch] - r.min) / r.span(), 0.0, 1.0));
        x.push_back(std::clamp(s.variance[ch] / (r.span() * r.span()), 0.0, 1.0));
    }
    return x;
}

QuantModel train_features(const Dataset& data, const TrainHyper& hyper) {
    if (data.x.empty()) throw config_error("train: empty training set");
    if (data.n_classes < 2) throw config_error("train: need at least 2 classes");
    bool multi = false;
    for (int y : data.y)
        if (y != data.y.front()) multi = true;
    if (!multi) throw config_error("train: training set contains a single class");

    QuantModel m;
    m.input_dim = data.x.front().size();
    m.hidden = hyper.hidden;
    m.n_classes = data.n_classes;
    m.bits = 32;
    m.input_ranges.assign(1, {0.0, 1.0});

    Rng rng(hyper.seed, 3);
    init_weights(m, rng);
    sgd(m, data, hyper.epochs, hyper.lr, hyper.batch, hyper.seed);
    return m;
}

QuantModel train(const std::vector<SensorWindow>& train_set,
                 const std::vector<ChannelRange>& ranges,
                 const TrainHyper& hyper) {
    Dataset data;
    int max_label = 0;
    for (const auto& w : train_set) {
        if (!w.label) throw config_error("train: unlabeled window in training set");
        data.x.push_back(window_features(w, ranges));
        data.y.push_back(*w.label);
        max_label = std::max(max_label, *w.label);
    }
    data.n_classes = static_cast<std::size_t>(max_label) + 1;
    QuantModel m = train_features(data, hyper);
    m.input_ranges = ranges;
    if (!train_set.empty()) {
        m.window_length = train_set.front().length;
        m.window_channels = train_set.front().channels;
    }
    return m;
}

namespace {

void quantize_tensor(std::vector<double>& w, int bits, double& scale) {
    const double qmax = static_cast<double>((1 << (bits - 1)) - 1);
    double mx = 0.0;
    for (double v : w) mx = std::max(mx, std::abs(v));
    if (mx == 0.0) {
        scale = 1.0;
        return;
    }
    scale = mx / qmax;
    for (auto& v : w) v = std::round(v / scale) * scale;
}

QuantModel quantize_once(const QuantModel& m, int bits) {
    QuantModel q = m;
    q.bits = bits;
    quantize_tensor(q.w1, bits, q.scales[0]);
    quantize_tensor(q.b1, bits, q.scales[1]);
    quantize_tensor(q.w2, bits, q.scales[2]);
    quantize_tensor(q.b2, bits, q.scales[3]);
    return q;
}

} // namespace

QuantModel quantize(const QuantModel& m, int bits, const Dataset* calibration,
                    const TrainHyper* fine_tune) {
    if (m.bits != 32) throw config_error("quantize: source model must be full precision");
    if (bits != 16 && bits != 12) throw config_error("quantize: bits must be 16 or 12");

    QuantModel q = quantize_once(m, bits);
    if (calibration && fine_tune) {
        const double acc_fp = accuracy(m, *calibration);
        const double acc_q = accuracy(q, *calibration);
        if (acc_fp - acc_q > 0.01) {
            // Fine-tune at full precision for a few epochs, then re-quantize,
            // and keep whichever quantized model calibrates better.
            QuantModel ft = m;
            sgd(ft, *calibration, std::max(1, fine_tune->epochs / 10), fine_tune->lr * 0.1,
                fine_tune->batch, fine_tune->seed + 11);
            QuantModel q2 = quantize_once(ft, bits);
            if (accuracy(q2, *calibration) > acc_q) return q2;
        }
    }
    return q;
}

std::pair<int, double> infer_features(const QuantModel& m, const std::vector<double>& features) {
    if (features.size() != m.input_dim) {
        throw config_error("infer: feature size " + std::to_string(features.size()) +
                           " does not match model input " + std::to_string(m.input_dim));
    }
    const std::vector<double> p = softmax(forward(m, features));
    const int cls = argmax(p);
    return {cls, p[cls]};
}

std::pair<int, double> infer(const QuantModel& m, const SensorWindow& w) {
    if (m.window_length != 0 &&
        (w.length != m.window_length || w.channels != m.window_channels)) {
        throw config_error("infer: window shape does not match model input");
    }
    return infer_features(m, window_features(w, m.input_ranges));
}

std::vector<double> infer_probs(const QuantModel& m, const SensorWindow& w) {
    return softmax(forward(m, window_features(w, m.input_ranges)));
}

TemplateBank build_template_bank(const std::vector<SensorWindow>& windows,
                                 const std::vector<ChannelRange>& ranges,
                                 std::size_t n_classes) {
    if (windows.empty()) throw config_error("template bank: no windows");
    const std::size_t L = windows.front().length;
    const std::size_t C = windows.front().channels;

    TemplateBank bank;
    bank.ranges = ranges;
    bank.templates.assign(n_classes, SensorWindow::zeros(L, C));
    std::vector<std::size_t> counts(n_classes, 0);
    for (const auto& w : windows) {
        if (!w.label || static_cast<std::size_t>(*w.label) >= n_classes) continue;
        auto& t = bank.templates[*w.label];
        for (std::size_t i = 0; i < L * C; ++i) t.values[i] += w.values[i];
        counts[*w.label]++;
    }
    for (std::size_t cls = 0; cls < n_classes; ++cls) {
        if (counts[cls] == 0) throw config_error("template bank: class " + std::to_string(cls) +
                                                 " has no windows");
        for (auto& v : bank.templates[cls].values) v /= static_cast<double>(counts[cls]);
        bank.templates[cls].label = static_cast<int>(cls);
    }
    return bank;
}

std::pair<int, double> correlate(const SensorWindow& w, const TemplateBank& bank) {
    int best_cls = 0;
    double best_r = -2.0;
    for (std::size_t cls = 0; cls < bank.templates.size(); ++cls) {
        const auto& t = bank.templates[cls];
        double avg = 0.0;
        for (std::size_t c = 0; c < w.channels; ++c) {
            double mean_a = 0.0, mean_b = 0.0;
            for (std::size_t i = 0; i < w.length; ++i) {
                mean_a += w.at(i, c);
                mean_b += t.at(i, c);
            }
            mean_a /= w.length;
            mean_b /= w.length;
            double saa = 0.0, sbb = 0.0, sab = 0.0, max_diff = 0.0;
            for (std::size_t i = 0; i < w.length; ++i) {
                const double da = w.at(i, c) - mean_a;
                const double db = t.at(i, c) - mean_b;
                saa += da * da;
                sbb += db * db;
                sab += da * db;
                max_diff = std::max(max_diff, std::abs(w.at(i, c) - t.at(i, c)));
            }
            double r;
            if (saa == 0.0 || sbb == 0.0) {
                const double step = bank.ranges[c].span() / 1023.0;
                r = (saa == 0.0 && sbb == 0.0 && max_diff <= step) ? 1.0 : 0.0;
            } else {
                r = sab / std::sqrt(saa * sbb);
            }
            avg += r;
        }
        avg /= static_cast<double>(w.channels);
        if (avg > best_r) {
            best_r = avg;
            best_cls = static_cast<int>(cls);
        }
    }
    return {best_cls, best_r};
}

int ensemble(const std::vector<std::pair<int, double>>& results) {
    if (results.empty()) throw config_error("ensemble: no results");
    int max_cls = 0;
    for (const auto& [cls, conf] : results) max_cls = std::max(max_cls, cls);
    std::vector<double> score(max_cls + 1, 0.0);
    for (const auto& [cls, conf] : results) score[cls] += conf;
    int best = 0;
    for (int c = 1; c <= max_cls; ++c)
        if (score[c] > score[best]) best = c;
    return best;
}

double accuracy(const QuantModel& m, const Dataset& data) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        if (infer_features(m, data.x[i]).first == data.y[i]) ++hit;
    }
    return data.x.empty() ? 0.0 : static_cast<double>(hit) / data.x.size();
}

double loss_value(const QuantModel& m, const std::vector<double>& x, int y) {
    const std::vector<double> p = softmax(forward_float(m, x));
    return -std::log(std::max(p[y], 1e-300));
}

std::vector<double> loss_gradient(const QuantModel& m, const std::vector<double>& x, int y) {
    std::vector<double> gw1(m.w1.size(), 0.0), gb1(m.b1.size(), 0.0);
    std::vector<double> gw2(m.w2.size(), 0.0), gb2(m.b2.size(), 0.0);
    backward(m, x, y, gw1, gb1, gw2, gb2);
    std::vector<double> g;
    g.reserve(gw1.size() + gb1.size() + gw2.size() + gb2.size());
    g.insert(g.end(), gw1.begin(), gw1.end());
    g.insert(g.end(), gb1.begin(), gb1.end());
    g.insert(g.end(), gw2.begin(), gw2.end());
    g.insert(g.end(), gb2.begin(), gb2.end());
    return g;
}

namespace {
constexpr char kMagic[4] = {'S', 'K', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_doubles(std::ofstream& f, const std::vector<double>& v) {
    f.write(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size());
}
std::uint32_t read_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
void read_doubles(std::ifstream& f, std::vector<double>& v, std::size_t n) {
    v.resize(n);
    f.read(reinterpret_cast<char*>(v.data()), sizeof(double) * n);
}
} // namespace

void save_model(const QuantModel& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot write model file '" + path + "'");
    f.write(kMagic, 4);
    write_u32(f, kVersion);
    write_u32(f, static_cast<std::uint32_t>(m.input_dim));
    write_u32(f, static_cast<std::uint32_t>(m.hidden));
    write_u32(f, static_cast<std::uint32_t>(m.n_classes));
    write_u32(f, static_cast<std::uint32_t>(m.bits));
    write_u32(f, static_cast<std::uint32_t>(m.window_length));
    write_u32(f, static_cast<std::uint32_t>(m.window_channels));
    write_u32(f, static_cast<std::uint32_t>(m.input_ranges.size()));
    std::vector<double> ranges;
    for (const auto& r : m.input_ranges) {
        ranges.push_back(r.min);
        ranges.push_back(r.max);
    }
    write_doubles(f, ranges);
    write_doubles(f, {m.scales[0], m.scales[1], m.scales[2], m.scales[3]});
    write_doubles(f, m.w1);
    write_doubles(f, m.b1);
    write_doubles(f, m.w2);
    write_doubles(f, m.b2);
}

QuantModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot read model file '" + path + "'");
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0) {
        throw format_error("'" + path + "' is not a model file");
    }
    if (read_u32(f) != kVersion) throw format_error("unsupported model file version");

    QuantModel m;
    m.input_dim = read_u32(f);
    m.hidden = read_u32(f);
    m.n_classes = read_u32(f);
    m.bits = static_cast<int>(read_u32(f));
    m.window_length = read_u32(f);
    m.window_channels = read_u32(f);
    const std::uint32_t n_ranges = read_u32(f);
    std::vector<double> ranges;
    read_doubles(f, ranges, 2 * n_ranges);
    for (std::uint32_t i = 0; i < n_ranges; ++i) {
        m.input_ranges.push_back({ranges[2 * i], ranges[2 * i + 1]});
    }
    std::vector<double> scales;
    read_doubles(f, scales, 4);
    std::copy(scales.begin(), scales.end(), m.scales);
    read_doubles(f, m.w1, m.hidden * m.input_dim);
    read_doubles(f, m.b1, m.hidden);
    read_doubles(f, m.w2, m.n_classes * m.hidden);
    read_doubles(f, m.b2, m.n_classes);
    if (!f) throw format_error("model file '" + path + "' truncated");
    return m;
}

} // namespace seeker::ml
