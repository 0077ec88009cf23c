#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seeker/coreset.hpp"
#include "seeker/types.hpp"

namespace seeker::ml {

/// Two-layer perceptron (input -> H -> classes, ReLU) with per-tensor
/// symmetric quantization metadata. For bits < 32 the stored weights lie
/// exactly on the quantization lattice (w = q * scale).
struct QuantModel {
    std::size_t input_dim = 0;
    std::size_t hidden = 64;
    std::size_t n_classes = 0;
    int bits = 32;

    std::vector<double> w1, b1; // hidden x input, hidden
    std::vector<double> w2, b2; // classes x hidden, classes

    // Per-tensor symmetric scales (w1, b1, w2, b2); zero for 32-bit models.
    double scales[4] = {0, 0, 0, 0};

    // Input normalization carried with the model. Window inputs are scaled
    // per channel to [0,1]; generic feature inputs use identity ranges.
    std::vector<ChannelRange> input_ranges;
    std::size_t window_length = 0; // 0 when the model takes generic features
    std::size_t window_channels = 0;
};

struct TrainHyper {
    double lr = 0.08;
    int epochs = 80;
    std::size_t hidden = 64;
    int batch = 32;
    std::uint64_t seed = 1;
};

/// Generic feature/label training set.
struct Dataset {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    std::size_t n_classes = 0;
};

/// One ground-truth trace per class for correlation memoization.
struct TemplateBank {
    std::vector<SensorWindow> templates; // index == class id
    std::vector<ChannelRange> ranges;
};

/// Flattens a window into a feature vector normalized per channel to [0,1].
std::vector<double> window_features(const SensorWindow& w, const std::vector<ChannelRange>& ranges);

/// Direct (no reconstruction) feature vectors for models that classify the
/// compressed representations themselves: per cluster (center_t, center_v,
/// radius, count/16), per sample point (index, value) plus the moments, all
/// in normalized units.
std::vector<double> cluster_features(const coreset::ClusterCoreset& c);
std::vector<double> sample_features(const coreset::SampleCoreset& s);

/// Mini-batch SGD with cross-entropy on raw feature vectors. Deterministic
/// for a fixed hyper.seed. Throws config_error for single-class sets.
QuantModel train_features(const Dataset& data, const TrainHyper& hyper);

/// Convenience wrapper: trains on windows, recording the channel ranges and
/// window geometry in the model.
QuantModel train(const std::vector<SensorWindow>& train_set,
                 const std::vector<ChannelRange>& ranges,
                 const TrainHyper& hyper);

/// Per-tensor symmetric post-training quantization to 16 or 12 bits. When a
/// calibration set is supplied and the accuracy drop exceeds one percent, a
/// short fine-tune pass runs at full precision before re-quantizing.
QuantModel quantize(const QuantModel& m, int bits,
                    const Dataset* calibration = nullptr,
                    const TrainHyper* fine_tune = nullptr);

/// Forward pass; integer arithmetic with 32-bit accumulators for quantized
/// models. Returns (class id, softmax confidence).
std::pair<int, double> infer(const QuantModel& m, const SensorWindow& w);
std::pair<int, double> infer_features(const QuantModel& m, const std::vector<double>& features);

/// Full softmax distribution (diagnostics and tests).
std::vector<double> infer_probs(const QuantModel& m, const SensorWindow& w);

/// Builds a bank holding the per-class mean of the given windows.
TemplateBank build_template_bank(const std::vector<SensorWindow>& windows,
                                 const std::vector<ChannelRange>& ranges,
                                 std::size_t n_classes);

/// Channel-averaged Pearson correlation of w against each class template;
/// returns the best class and its coefficient in [-1, 1]. A zero-variance
/// channel contributes 1 when both sides are constant and equal within the
/// channel quantization step, else 0.
std::pair<int, double> correlate(const SensorWindow& w, const TemplateBank& bank);

/// Confidence-weighted vote; ties resolve to the lowest class id.
/// Throws config_error on empty input.
int ensemble(const std::vector<std::pair<int, double>>& results);

/// Accuracy of the model over a feature dataset (helper shared by tests,
/// quantize calibration, and the trainer).
double accuracy(const QuantModel& m, const Dataset& data);

/// Flat binary model file (magic, dims, bits, scales, ranges, weights).
void save_model(const QuantModel& m, const std::string& path);
QuantModel load_model(const std::string& path);

/// Analytic gradient of the cross-entropy loss for one example, flattened as
/// (w1, b1, w2, b2). Exposed so tests can check it against finite
/// differences.
std::vector<double> loss_gradient(const QuantModel& m, const std::vector<double>& x, int y);
double loss_value(const QuantModel& m, const std::vector<double>& x, int y);

} // namespace seeker::ml
