// Operator entry point: train models, round-trip payloads through the codecs,
// generate harvest traces, run simulations, and summarize reports.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "seeker/codec.hpp"
#include "seeker/coreset.hpp"
#include "seeker/dataio.hpp"
#include "seeker/energy.hpp"
#include "seeker/errors.hpp"
#include "seeker/inference.hpp"
#include "seeker/recovery.hpp"
#include "seeker/sim.hpp"

namespace {

using namespace seeker;

SensorWindow read_window_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open window file '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw data_error("ragged window row at line " + std::to_string(line_no));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw data_error("window file '" + path + "' is empty");
    SensorWindow w = SensorWindow::zeros(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) w.at(i, c) = rows[i][c];
    }
    return w;
}

void write_window_csv(const SensorWindow& w, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write window file '" + path + "'");
    out.precision(9);
    for (std::size_t i = 0; i < w.length; ++i) {
        for (std::size_t c = 0; c < w.channels; ++c) {
            if (c) out << ',';
            out << w.at(i, c);
        }
        out << '\n';
    }
}

std::vector<ChannelRange> make_ranges(double lo, double hi, std::size_t channels) {
    if (hi <= lo) throw config_error("range must satisfy min < max");
    return std::vector<ChannelRange>(channels, ChannelRange{lo, hi});
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write '" + path + "'");
    out << text;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open '" + path + "'");
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

struct TrainArgs {
    std::string out_dir = "models";
    int classes = 4;
    int windows_per_class = 60;
    int test_windows_per_class = 20;
    std::size_t channels = 1;
    std::size_t length = 60;
    std::size_t overlap = 30;
    double sigma = 0.1;
    std::uint64_t seed = 1;
    double lr = 0.08;
    int epochs = 80;
    std::size_t hidden = 64;
    int batch = 32;
    int k = 12;
    int m = 20;
};

int cmd_train(const TrainArgs& a) {
    dataio::SyntheticSpec spec{a.classes, a.windows_per_class, a.channels, a.length, a.sigma};
    const auto train_stream = dataio::gen_synthetic(spec, a.seed);
    spec.n_windows_per_class = a.test_windows_per_class;
    const auto test_stream = dataio::gen_synthetic(spec, a.seed + 1);
    const auto train_windows = dataio::window_stream(train_stream, a.length, a.overlap);
    const auto test_windows = dataio::window_stream(test_stream, a.length, a.overlap);
    const auto& ranges = train_stream.channel_ranges;

    ml::TrainHyper hyper{a.lr, a.epochs, a.hidden, a.batch, a.seed};
    const auto full = ml::train(train_windows, ranges, hyper);

    ml::Dataset calib;
    for (const auto& w : train_windows) {
        calib.x.push_back(ml::window_features(w, ranges));
        calib.y.push_back(*w.label);
    }
    calib.n_classes = a.classes;
    const auto q16 = ml::quantize(full, 16, &calib, &hyper);
    const auto q12 = ml::quantize(full, 12, &calib, &hyper);

    // Reconstruction-input and direct-coreset-input variants.
    std::vector<SensorWindow> rc_set, rs_set;
    ml::Dataset dc_set, ds_set;
    dc_set.n_classes = ds_set.n_classes = a.classes;
    for (std::size_t i = 0; i < train_windows.size(); ++i) {
        const auto& w = train_windows[i];
        const auto cc = coreset::kmeans_coreset(w, ranges, a.k);
        const auto cdec = codec::decode_cluster(codec::encode_cluster(cc).bytes, a.k, w.channels,
                                                w.length, ranges);
        auto rec = recovery::reconstruct_cluster(cdec, w.length, a.seed + 100 + i);
        rec.window.label = w.label;
        rc_set.push_back(std::move(rec.window));
        dc_set.x.push_back(ml::cluster_features(cdec));
        dc_set.y.push_back(*w.label);

        const auto sc = coreset::sample_coreset(w, ranges, a.m, 2, 7, a.seed + 200 + i);
        const auto sdec = codec::decode_sample(codec::encode_sample(sc).bytes, a.m, w.channels,
                                               w.length, ranges);
        auto rec2 = recovery::reconstruct_sample(sdec, w.length, a.seed + 300 + i);
        rec2.label = w.label;
        rs_set.push_back(std::move(rec2));
        ds_set.x.push_back(ml::sample_features(sdec));
        ds_set.y.push_back(*w.label);
    }
    auto h2 = hyper;
    h2.seed = a.seed + 11;
    const auto recon_cluster = ml::train(rc_set, ranges, h2);
    h2.seed = a.seed + 12;
    const auto recon_sample = ml::train(rs_set, ranges, h2);
    h2.seed = a.seed + 13;
    const auto direct_cluster = ml::train_features(dc_set, h2);
    h2.seed = a.seed + 14;
    const auto direct_sample = ml::train_features(ds_set, h2);

    std::filesystem::create_directories(a.out_dir);
    const auto save = [&](const ml::QuantModel& m, const std::string& name) {
        ml::save_model(m, a.out_dir + "/" + name);
    };
    save(full, "full.bin");
    save(q16, "q16.bin");
    save(q12, "q12.bin");
    save(recon_cluster, "recon_cluster.bin");
    save(recon_sample, "recon_sample.bin");
    save(direct_cluster, "direct_cluster.bin");
    save(direct_sample, "direct_sample.bin");

    ml::Dataset test;
    for (const auto& w : test_windows) {
        test.x.push_back(ml::window_features(w, ranges));
        test.y.push_back(*w.label);
    }
    test.n_classes = a.classes;
    std::cout << "models written to " << a.out_dir << "\n";
    std::cout << "test accuracy: full " << ml::accuracy(full, test) << ", 16-bit "
              << ml::accuracy(q16, test) << ", 12-bit " << ml::accuracy(q12, test) << "\n";
    return 0;
}

int cmd_encode(const std::string& codec_name, const std::string& window_path, int k, int m,
               double range_lo, double range_hi, std::uint64_t seed, const std::string& out) {
    const SensorWindow w = read_window_csv(window_path);
    const auto ranges = make_ranges(range_lo, range_hi, w.channels);
    std::vector<std::uint8_t> body;
    if (codec_name == "cluster") {
        body = codec::encode_cluster(coreset::kmeans_coreset(w, ranges, k)).bytes;
    } else if (codec_name == "sample") {
        body = codec::encode_sample(coreset::sample_coreset(w, ranges, m, 2, 7, seed)).bytes;
    } else {
        throw config_error("codec must be 'cluster' or 'sample'");
    }
    if (!out.empty()) {
        std::ofstream f(out, std::ios::binary);
        f.write(reinterpret_cast<const char*>(body.data()), body.size());
    }
    std::cout << "body: " << body.size() << " bytes\n";
    return 0;
}

int cmd_decode(const std::string& codec_name, const std::string& body_path, int k, int m,
               std::size_t channels, std::size_t length, double range_lo, double range_hi,
               std::uint64_t seed, const std::string& out) {
    const auto body = read_bytes(body_path);
    const auto ranges = make_ranges(range_lo, range_hi, channels);
    SensorWindow rec;
    if (codec_name == "cluster") {
        const auto c = codec::decode_cluster(body, k, channels, length, ranges);
        rec = recovery::reconstruct_cluster(c, length, seed).window;
        std::cout << "decoded cluster coreset: k=" << c.k_per_channel
                  << (c.has_counts ? " (recoverable)" : " (centers only)") << "\n";
    } else if (codec_name == "sample") {
        const auto s = codec::decode_sample(body, m, channels, length, ranges);
        rec = recovery::reconstruct_sample(s, length, seed);
        std::cout << "decoded sample coreset: m=" << s.channels[0].size() << "\n";
    } else {
        throw config_error("codec must be 'cluster' or 'sample'");
    }
    if (!out.empty()) write_window_csv(rec, out);
    return 0;
}

int cmd_trace_gen(const std::string& profile, const energy::TraceParams& params,
                  std::uint64_t seed, const std::string& out) {
    const auto trace = energy::gen_trace(energy::parse_profile(profile), params, seed);
    energy::save_trace(trace, out);
    std::cout << "trace: " << trace.time_s.size() << " samples, " << trace.duration()
              << " s -> " << out << "\n";
    return 0;
}

int cmd_simulate(const std::string& config_path, std::int64_t seed_override,
                 const std::string& out_json, const std::string& out_csv) {
    auto config = cfg::Config::parse_file(config_path);
    if (seed_override >= 0) config.set("seed", std::to_string(seed_override));
    const auto report = sim::run_system(config);
    if (!out_json.empty()) write_file(out_json, sim::report_to_json(report));
    if (!out_csv.empty()) write_file(out_csv, sim::report_to_csv(report));
    const auto& m = report.aggregate;
    std::cout << "policy=" << config.get_str("policy", "seeker")
              << " scheduled=" << m.scheduled
              << " completion=" << m.completion_fraction
              << " edge=" << m.edge_completion_fraction
              << " volume_ratio=" << m.data_volume_ratio
              << " accuracy=" << m.accuracy
              << " strict=" << m.strict_accuracy << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_csv) {
    std::ostringstream csv;
    csv << "report,policy,scheduled,completion_fraction,edge_completion_fraction,"
           "data_volume_ratio,accuracy,strict_accuracy\n";
    std::cout << std::left << std::setw(28) << "report" << std::setw(14) << "policy"
              << std::setw(12) << "completion" << std::setw(12) << "edge" << std::setw(12)
              << "volume" << std::setw(12) << "accuracy" << std::setw(12) << "strict" << "\n";
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw data_error("cannot open report '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw data_error("report '" + path + "' is not valid JSON: " + e.what());
        }
        const auto& m = j.at("metrics");
        const std::string policy = j.at("config").value("policy", "seeker");
        csv << path << ',' << policy << ',' << m.at("scheduled").get<std::size_t>() << ','
            << m.at("completion_fraction").get<double>() << ','
            << m.at("edge_completion_fraction").get<double>() << ','
            << m.at("data_volume_ratio").get<double>() << ',' << m.at("accuracy").get<double>()
            << ',' << m.at("strict_accuracy").get<double>() << '\n';
        std::cout << std::left << std::setw(28) << std::filesystem::path(path).filename().string()
                  << std::setw(14) << policy << std::setw(12)
                  << m.at("completion_fraction").get<double>() << std::setw(12)
                  << m.at("edge_completion_fraction").get<double>() << std::setw(12)
                  << m.at("data_volume_ratio").get<double>() << std::setw(12)
                  << m.at("accuracy").get<double>() << std::setw(12)
                  << m.at("strict_accuracy").get<double>() << "\n";
    }
    if (!out_csv.empty()) write_file(out_csv, csv.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"energy-harvesting sensor network simulator and coreset codec toolkit"};
    app.require_subcommand(1);

    // train
    TrainArgs ta;
    auto* train = app.add_subcommand("train", "train and save the model suite on synthetic data");
    train->add_option("--out", ta.out_dir, "output directory");
    train->add_option("--classes", ta.classes);
    train->add_option("--windows-per-class", ta.windows_per_class);
    train->add_option("--channels", ta.channels);
    train->add_option("--length", ta.length);
    train->add_option("--overlap", ta.overlap);
    train->add_option("--sigma", ta.sigma);
    train->add_option("--seed", ta.seed);
    train->add_option("--lr", ta.lr);
    train->add_option("--epochs", ta.epochs);
    train->add_option("--hidden", ta.hidden);
    train->add_option("--batch", ta.batch);

    // quantize
    std::string q_in, q_out = "quantized.bin";
    int q_bits = 16;
    auto* quant = app.add_subcommand("quantize", "quantize a saved full-precision model");
    quant->add_option("--model", q_in, "input model file")->required();
    quant->add_option("--bits", q_bits, "target bits (16 or 12)");
    quant->add_option("--out", q_out, "output model file");

    // encode
    std::string e_codec = "cluster", e_window, e_out;
    int e_k = 12, e_m = 20;
    double e_lo = -1.5, e_hi = 1.5;
    std::uint64_t e_seed = 0;
    auto* enc = app.add_subcommand("encode", "encode a window file into a payload body");
    enc->add_option("--codec", e_codec, "cluster or sample");
    enc->add_option("--window", e_window, "window CSV (L rows x C cols)")->required();
    enc->add_option("--k", e_k, "clusters per channel");
    enc->add_option("--m", e_m, "sample count per channel");
    enc->add_option("--range", [&e_lo, &e_hi](const std::vector<std::string>& vals) {
        return sscanf(vals[0].c_str(), "%lf,%lf", &e_lo, &e_hi) == 2;
    }, "channel calibration range as min,max (default -1.5,1.5)");
    enc->add_option("--seed", e_seed);
    enc->add_option("--out", e_out, "write body bytes here");

    // decode
    std::string d_codec = "cluster", d_body, d_out;
    int d_k = 12, d_m = 20;
    std::size_t d_channels = 1, d_length = 60;
    double d_lo = -1.5, d_hi = 1.5;
    std::uint64_t d_seed = 0;
    auto* dec = app.add_subcommand("decode", "decode a payload body and reconstruct the window");
    dec->add_option("--codec", d_codec, "cluster or sample");
    dec->add_option("--body", d_body, "payload body file")->required();
    dec->add_option("--k", d_k);
    dec->add_option("--m", d_m);
    dec->add_option("--channels", d_channels);
    dec->add_option("--length", d_length);
    dec->add_option("--range", [&d_lo, &d_hi](const std::vector<std::string>& vals) {
        return sscanf(vals[0].c_str(), "%lf,%lf", &d_lo, &d_hi) == 2;
    }, "channel calibration range as min,max");
    dec->add_option("--seed", d_seed);
    dec->add_option("--out", d_out, "write reconstructed window CSV here");

    // trace-gen
    std::string t_profile = "constant", t_out = "trace.csv";
    energy::TraceParams tp;
    std::uint64_t t_seed = 0;
    auto* tg = app.add_subcommand("trace-gen", "generate a harvested-power trace CSV");
    tg->add_option("--profile", t_profile, "constant | square-wave | markov-burst");
    tg->add_option("--duration", tp.duration_s, "seconds");
    tg->add_option("--step", tp.step_s, "seconds per sample");
    tg->add_option("--power", tp.power_uw, "high/on level in microwatts");
    tg->add_option("--low", tp.low_uw, "low/off level in microwatts");
    tg->add_option("--period", tp.period_s, "square wave period (s)");
    tg->add_option("--duty", tp.duty, "square wave duty cycle [0,1]");
    tg->add_option("--p-on-off", tp.p_on_off, "markov: P(on->off) per step");
    tg->add_option("--p-off-on", tp.p_off_on, "markov: P(off->on) per step");
    tg->add_option("--seed", t_seed);
    tg->add_option("--out", t_out)->required();

    // simulate
    std::string s_config, s_json = "report.json", s_csv;
    std::int64_t s_seed = -1;
    auto* sm = app.add_subcommand("simulate", "run the sensor-host system from a config file");
    sm->add_option("--config", s_config, "config file")->required();
    sm->add_option("--seed", s_seed, "override the config seed");
    sm->add_option("--out", s_json, "report JSON path");
    sm->add_option("--csv", s_csv, "per-window CSV path");

    // report
    std::vector<std::string> r_inputs;
    std::string r_out;
    auto* rp = app.add_subcommand("report", "summarize one or more report JSON files");
    rp->add_option("reports", r_inputs, "report JSON files")->required();
    rp->add_option("--out", r_out, "summary CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*train) return cmd_train(ta);
        if (*quant) {
            const auto m = ml::load_model(q_in);
            ml::save_model(ml::quantize(m, q_bits), q_out);
            std::cout << "quantized to " << q_bits << " bits -> " << q_out << "\n";
            return 0;
        }
        if (*enc) return cmd_encode(e_codec, e_window, e_k, e_m, e_lo, e_hi, e_seed, e_out);
        if (*dec) {
            return cmd_decode(d_codec, d_body, d_k, d_m, d_channels, d_length, d_lo, d_hi, d_seed,
                              d_out);
        }
        if (*tg) return cmd_trace_gen(t_profile, tp, t_seed, t_out);
        if (*sm) return cmd_simulate(s_config, s_seed, s_json, s_csv);
        if (*rp) return cmd_report(r_inputs, r_out);
    } catch (const seeker::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const seeker::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const seeker::format_error& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
