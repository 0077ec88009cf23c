#include "seeker/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "seeker/dataio.hpp"
#include "seeker/errors.hpp"
#include "seeker/recovery.hpp"
#include "seeker/rng.hpp"

namespace seeker::sim {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    return x;
}
std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) { return mix(mix(a, b), c); }

constexpr double kEps = 1e-9;

} // namespace

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::D0: return "D0";
        case Strategy::D1: return "D1";
        case Strategy::D2: return "D2";
        case Strategy::D3: return "D3";
        case Strategy::D4: return "D4";
        case Strategy::DEFER: return "DEFER";
        case Strategy::DROP: return "DROP";
    }
    return "?";
}

PolicySpec PolicySpec::parse(const std::string& name) {
    PolicySpec p;
    if (name == "seeker") {
        p.kind = PolicyKind::seeker;
    } else if (name == "table-greedy") {
        p.kind = PolicyKind::table_greedy;
    } else if (name == "force-d3") {
        p.kind = PolicyKind::force_d3;
    } else if (name == "force-d4") {
        p.kind = PolicyKind::force_d4;
    } else if (name.rfind("err", 0) == 0 && name.size() > 3) {
        p.kind = PolicyKind::err;
        try {
            p.err_n = std::stoi(name.substr(3));
        } catch (const std::exception&) {
            throw config_error("bad ERR policy '" + name + "' (use err1, err3, ...)");
        }
        if (p.err_n < 1) throw config_error("ERR policy needs n >= 1");
    } else {
        throw config_error("unknown policy '" + name + "'");
    }
    return p;
}

std::string PolicySpec::name() const {
    switch (kind) {
        case PolicyKind::seeker: return "seeker";
        case PolicyKind::table_greedy: return "table-greedy";
        case PolicyKind::err: return "err" + std::to_string(err_n);
        case PolicyKind::force_d3: return "force-d3";
        case PolicyKind::force_d4: return "force-d4";
    }
    return "?";
}

namespace {

double d3_cost(const NodeConfig& cfg, int k) {
    if (k == cfg.k_default) return cfg.costs.d3.total_uj;
    const std::size_t bytes = codec::cluster_body_bytes(k, cfg.channels, true);
    return cfg.costs.d3.sensor_uj +
           energy::comm_energy(bytes, energy::MessageKind::payload, cfg.costs);
}

std::optional<Target> try_d3(const NodeConfig& cfg, const DecideInput& in, double budget) {
    int k = 0;
    if (cfg.aac) {
        int affordable = 0;
        for (int cand = cfg.budget.k_max; cand >= 1; --cand) {
            if (d3_cost(cfg, cand) <= budget + kEps) {
                affordable = cand;
                break;
            }
        }
        if (affordable < 1) return std::nullopt;
        k = coreset::select_cluster_count(in.last_local_class, affordable, cfg.budget);
    } else {
        k = cfg.k_default;
    }
    const double cost = d3_cost(cfg, k);
    if (budget + kEps < cost) return std::nullopt;
    return Target{Strategy::D3, k, cost, codec::cluster_body_bytes(k, cfg.channels, true)};
}

std::optional<Target> try_d4(const NodeConfig& cfg, const DecideInput& in, double budget) {
    (void)in;
    if (budget + kEps < cfg.costs.d4.total_uj) return std::nullopt;
    return Target{Strategy::D4, 0, cfg.costs.d4.total_uj,
                  codec::sample_body_bytes(cfg.sample_m, cfg.channels)};
}

Target defer_or_drop(const DecideInput& in) {
    return Target{in.last_chance ? Strategy::DROP : Strategy::DEFER, 0, 0.0, 0};
}

} // namespace

Target decide(const NodeConfig& cfg, const DecideInput& in) {
    const double budget = in.stored_uj + in.predicted_uj;

    switch (cfg.policy.kind) {
        case PolicyKind::err:
            if (budget + kEps >= cfg.costs.d1.total_uj) {
                return {Strategy::D1, 0, cfg.costs.d1.total_uj, 2};
            }
            return defer_or_drop(in);
        case PolicyKind::force_d3: {
            if (auto t = try_d3(cfg, in, budget)) return *t;
            return defer_or_drop(in);
        }
        case PolicyKind::force_d4: {
            if (auto t = try_d4(cfg, in, budget)) return *t;
            return defer_or_drop(in);
        }
        default:
            break;
    }

    if (in.correlation && in.correlation->second >= cfg.corr_threshold &&
        budget + kEps >= cfg.costs.d0.total_uj) {
        return {Strategy::D0, 0, cfg.costs.d0.total_uj, 2};
    }
    if (budget + kEps >= cfg.costs.d1.total_uj) {
        return {Strategy::D1, 0, cfg.costs.d1.total_uj, 2};
    }
    if (budget + kEps >= cfg.costs.d2.total_uj) {
        return {Strategy::D2, 0, cfg.costs.d2.total_uj, 2};
    }
    if (cfg.policy.kind == PolicyKind::table_greedy) {
        if (auto t = try_d4(cfg, in, budget)) return *t;
        if (auto t = try_d3(cfg, in, budget)) return *t;
    } else {
        if (auto t = try_d3(cfg, in, budget)) return *t;
        if (auto t = try_d4(cfg, in, budget)) return *t;
    }
    return defer_or_drop(in);
}

NodeLog run_node(Node& node, const std::vector<SensorWindow>& windows,
                 const energy::HarvestTrace& trace, const RunParams& params) {
    const double dt = params.step_s;
    const double rate = params.sample_rate_hz;
    const double stride_s = static_cast<double>(params.stride_samples) / rate;

    std::vector<double> arrival(windows.size()), deadline(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        arrival[i] = (static_cast<double>(windows[i].t0) + params.window_length) / rate;
        deadline[i] = arrival[i] + stride_s;
    }
    const double horizon = windows.empty() ? 0.0 : deadline.back();
    if (trace.duration() + kEps < horizon) {
        throw data_error("harvest trace covers " + std::to_string(trace.duration()) +
                         " s but the run needs " + std::to_string(horizon) + " s");
    }

    NodeLog log;
    log.ledger.initial_uj = node.energy.stored_uj;

    struct Pending {
        std::size_t idx = 0;
        std::optional<std::pair<int, double>> corr;
        int defer_steps = 0;
    };
    std::optional<Pending> pending;
    std::size_t next = 0;

    const bool uses_corr = node.cfg.policy.kind == PolicyKind::seeker ||
                           node.cfg.policy.kind == PolicyKind::table_greedy;

    const std::size_t n_steps = static_cast<std::size_t>(std::ceil(horizon / dt - kEps));
    for (std::size_t step_i = 0; step_i < n_steps; ++step_i) {
        const double t = static_cast<double>(step_i) * dt;
        const double power = trace.power_at(t);
        const double harvested = power * dt;
        node.energy.push_history(power);

        if (!pending && next < windows.size() && t + kEps >= arrival[next]) {
            if (node.cfg.policy.kind == PolicyKind::err &&
                static_cast<int>(next % (node.cfg.policy.err_n + 1)) != node.cfg.policy.err_n) {
                // Store cycle: accumulate energy, skip this window.
                WindowOutcome o;
                o.window_id = windows[next].window_id;
                o.t_arrival_s = arrival[next];
                o.strategy = Strategy::DROP;
                o.true_label = windows[next].label;
                log.outcomes.push_back(std::move(o));
                ++next;
            } else {
                Pending p;
                p.idx = next;
                if (uses_corr) p.corr = ml::correlate(windows[next], node.bank);
                pending = p;
                ++next;
            }
        }

        double consumed = 0.0;
        if (pending) {
            const std::size_t wi = pending->idx;
            const bool last_chance = (t + dt + kEps >= deadline[wi]);
            DecideInput in;
            in.stored_uj = node.energy.stored_uj;
            in.predicted_uj =
                energy::predict_power(node.energy.history_uw, std::max(deadline[wi] - t, 0.0));
            in.correlation = pending->corr;
            in.last_local_class = node.last_local_class;
            in.last_chance = last_chance;

            const Target tgt = decide(node.cfg, in);
            const bool actionable = tgt.strategy != Strategy::DEFER && tgt.strategy != Strategy::DROP;
            const bool affordable = tgt.cost_uj <= node.energy.stored_uj + harvested + kEps;

            if (actionable && affordable) {
                consumed = tgt.cost_uj;
                const SensorWindow& w = windows[wi];
                WindowOutcome o;
                o.window_id = w.window_id;
                o.t_arrival_s = arrival[wi];
                o.strategy = tgt.strategy;
                o.k = tgt.k;
                o.bytes = tgt.body_bytes;
                o.energy_uj = tgt.cost_uj;
                o.defer_steps = pending->defer_steps;
                o.true_label = w.label;
                switch (tgt.strategy) {
                    case Strategy::D0: {
                        o.local_class = pending->corr->first;
                        o.local_conf = std::clamp(pending->corr->second, 0.0, 1.0);
                        break;
                    }
                    case Strategy::D1: {
                        const auto [cls, conf] = ml::infer(*node.model16, w);
                        o.local_class = cls;
                        o.local_conf = conf;
                        break;
                    }
                    case Strategy::D2: {
                        const auto [cls, conf] = ml::infer(*node.model12, w);
                        o.local_class = cls;
                        o.local_conf = conf;
                        break;
                    }
                    case Strategy::D3: {
                        const auto cs = coreset::kmeans_coreset(w, node.ranges, tgt.k,
                                                                node.cfg.kmeans_max_iter);
                        o.payload = codec::encode_cluster(cs, true).bytes;
                        o.bytes = o.payload.size();
                        break;
                    }
                    case Strategy::D4: {
                        const auto cs = coreset::sample_coreset(
                            w, node.ranges, node.cfg.sample_m, node.cfg.sample_min_gap,
                            node.cfg.sample_max_rounds, mix(node.seed, 0xD4, w.window_id));
                        o.payload = codec::encode_sample(cs).bytes;
                        o.bytes = o.payload.size();
                        break;
                    }
                    default:
                        break;
                }
                if (o.local_class) node.last_local_class = o.local_class;
                log.outcomes.push_back(std::move(o));
                pending.reset();
            } else if (tgt.strategy == Strategy::DROP || (last_chance && !(actionable && affordable))) {
                WindowOutcome o;
                o.window_id = windows[wi].window_id;
                o.t_arrival_s = arrival[wi];
                o.strategy = Strategy::DROP;
                o.defer_steps = pending->defer_steps;
                o.true_label = windows[wi].label;
                log.outcomes.push_back(std::move(o));
                pending.reset();
            } else {
                pending->defer_steps++;
            }
        }

        energy::step(node.energy, harvested, consumed, dt, &log.ledger);
        if (node.energy.stored_uj < -kEps || node.energy.stored_uj > node.energy.capacity_uj + kEps) {
            throw config_error("energy state left [0, capacity] (simulator bug)");
        }
    }

    log.final_stored_uj = node.energy.stored_uj;
    log.ledger_ok = log.ledger.balances(node.energy.stored_uj, 1e-6 + 1e-9 * log.ledger.harvested_uj);
    return log;
}

namespace {

struct SystemSetup {
    std::uint64_t seed = 42;
    std::size_t n_sensors = 3;
    std::size_t length = 60, overlap = 30;
    double sample_rate = 50.0;
    NodeConfig node_cfg;
    double capacity_uj = 200.0, initial_uj = 200.0, leakage_uw = 0.0;
    std::size_t predictor_window = 16;
    double step_s = 0.001;
    ml::TrainHyper hyper;
};

NodeConfig parse_node_config(const cfg::Config& c) {
    NodeConfig ncfg;
    ncfg.policy = PolicySpec::parse(c.get_str("policy", "seeker"));
    ncfg.corr_threshold = c.get_double("corr.threshold", 0.95);
    ncfg.k_default = static_cast<int>(c.get_int("coreset.k", 12));
    ncfg.budget.k_max = static_cast<int>(c.get_int("coreset.k_max", 12));
    ncfg.sample_m = static_cast<int>(c.get_int("coreset.m", 20));
    ncfg.sample_min_gap = static_cast<int>(c.get_int("coreset.min_gap", 2));
    ncfg.sample_max_rounds = static_cast<int>(c.get_int("coreset.max_rounds", 7));
    ncfg.kmeans_max_iter = static_cast<int>(c.get_int("coreset.kmeans_max_iter", 4));
    ncfg.aac = c.get_bool("aac.enabled", true);
    for (const auto& [key, value] : c.entries()) {
        if (key.rfind("aac.class.", 0) == 0) {
            const int cls = std::stoi(key.substr(10));
            ncfg.budget.min_clusters[cls] = std::stoi(value);
        }
    }
    // Cost table overrides (energy.cost_table.d1.sensor_uj = ... etc).
    const auto cost_override = [&](const std::string& name, energy::StrategyCost& sc) {
        const std::string base = "energy.cost_table." + name + ".";
        sc.sensor_uj = c.get_double(base + "sensor_uj", sc.sensor_uj);
        sc.comm_uj = c.get_double(base + "comm_uj", sc.comm_uj);
        sc.total_uj = c.get_double(base + "total_uj", sc.sensor_uj + sc.comm_uj);
    };
    cost_override("d0", ncfg.costs.d0);
    cost_override("d1", ncfg.costs.d1);
    cost_override("d2", ncfg.costs.d2);
    cost_override("d3", ncfg.costs.d3);
    cost_override("d4", ncfg.costs.d4);
    ncfg.costs.raw_comm_uj =
        c.get_double("energy.cost_table.raw.comm_uj", ncfg.costs.raw_comm_uj);
    return ncfg;
}

energy::TraceParams parse_trace_params(const cfg::Config& c, double horizon_s) {
    energy::TraceParams tp;
    tp.duration_s = c.get_double("trace.duration_s", horizon_s);
    tp.step_s = c.get_double("trace.step_s", 0.001);
    tp.power_uw = c.get_double("trace.power_uw", 50.0);
    tp.low_uw = c.get_double("trace.low_uw", 0.0);
    tp.period_s = c.get_double("trace.period_s", 1.0);
    tp.duty = c.get_double("trace.duty", 0.5);
    tp.p_on_off = c.get_double("trace.p_on_off", 0.05);
    tp.p_off_on = c.get_double("trace.p_off_on", 0.02);
    if (tp.duration_s < horizon_s) tp.duration_s = horizon_s;
    return tp;
}

} // namespace

Metrics metrics(const SimReport& report) {
    Metrics m;
    for (const char* name : {"D0", "D1", "D2", "D3", "D4", "DROP"}) m.strategy_histogram[name] = 0;

    std::size_t raw = 0, sent = 0, edge = 0, done = 0;
    for (const auto& node : report.nodes) {
        for (const auto& o : node.outcomes) {
            m.scheduled++;
            m.strategy_histogram[strategy_name(o.strategy)]++;
            sent += o.bytes;
            switch (o.strategy) {
                case Strategy::D0:
                case Strategy::D1:
                case Strategy::D2:
                    edge++;
                    done++;
                    break;
                case Strategy::D3:
                case Strategy::D4:
                    done++;
                    break;
                default:
                    break;
            }
        }
    }
    // Raw baseline: every scheduled window shipped as 4-byte floats.
    raw = m.scheduled * codec::raw_window_bytes(report.window_length, report.channels);

    m.transmitted_bytes = sent;
    m.raw_bytes = raw;
    m.edge_completion_fraction = m.scheduled ? static_cast<double>(edge) / m.scheduled : 0.0;
    m.completion_fraction = m.scheduled ? static_cast<double>(done) / m.scheduled : 0.0;
    m.data_volume_ratio = raw ? static_cast<double>(sent) / raw : 0.0;

    std::size_t correct = 0, classified = 0;
    for (const auto& f : report.finals) {
        if (f.ensembled_class) {
            classified++;
            if (f.true_label && *f.ensembled_class == *f.true_label) correct++;
        }
    }
    m.system_windows = report.finals.size();
    m.classified_windows = classified;
    m.accuracy = classified ? static_cast<double>(correct) / classified : 0.0;
    m.strict_accuracy =
        report.finals.empty() ? 0.0 : static_cast<double>(correct) / report.finals.size();
    return m;
}

SimReport run_system(const cfg::Config& config) {
    SimReport report;
    report.config = config;

    SystemSetup s;
    s.seed = static_cast<std::uint64_t>(config.get_int("seed", 42));
    s.n_sensors = static_cast<std::size_t>(config.get_int("sensors", 3));
    if (s.n_sensors < 1) throw config_error("sensors must be >= 1");
    s.length = static_cast<std::size_t>(config.get_int("window.length", 60));
    s.overlap = static_cast<std::size_t>(config.get_int("window.overlap", 30));
    if (s.length < 2 || s.length > 64) {
        throw config_error("window.length must be in [2, 64] (payload codec index width)");
    }
    if (s.overlap >= s.length) throw config_error("window.overlap must be < window.length");
    s.node_cfg = parse_node_config(config);
    s.capacity_uj = config.get_double("energy.capacity_uj", 200.0);
    s.initial_uj = config.get_double("energy.initial_uj", s.capacity_uj);
    s.leakage_uw = config.get_double("energy.leakage_uw", 0.0);
    s.predictor_window = static_cast<std::size_t>(config.get_int("energy.predictor_window", 16));
    s.step_s = config.get_double("sim.step_ms", 1.0) / 1000.0;
    s.hyper.lr = config.get_double("train.lr", 0.08);
    s.hyper.epochs = static_cast<int>(config.get_int("train.epochs", 60));
    s.hyper.hidden = static_cast<std::size_t>(config.get_int("train.hidden", 64));
    s.hyper.batch = static_cast<int>(config.get_int("train.batch", 32));
    s.hyper.seed = mix(s.seed, 0x17a1);

    const std::string kind = config.get_str("dataset.kind", "synthetic");

    std::vector<std::vector<SensorWindow>> train_windows(s.n_sensors), test_windows(s.n_sensors);
    std::vector<ChannelRange> ranges;
    std::size_t n_classes = 0;
    double sample_rate = 50.0;

    if (kind == "synthetic") {
        dataio::SyntheticSpec spec;
        spec.n_classes = static_cast<int>(config.get_int("synthetic.classes", 4));
        spec.channels = static_cast<std::size_t>(config.get_int("synthetic.channels", 1));
        spec.length = s.length;
        spec.noise_sigma = config.get_double("synthetic.noise_sigma", 0.1);
        dataio::SyntheticSpec train_spec = spec;
        train_spec.n_windows_per_class =
            static_cast<int>(config.get_int("synthetic.train_windows_per_class", 60));
        dataio::SyntheticSpec test_spec = spec;
        test_spec.n_windows_per_class =
            static_cast<int>(config.get_int("synthetic.test_windows_per_class", 40));

        const std::uint64_t train_seed = mix(s.seed, 0x7121);
        const std::uint64_t test_seed = mix(s.seed, 0x7e57);
        for (std::size_t sn = 0; sn < s.n_sensors; ++sn) {
            const auto train_stream =
                dataio::gen_synthetic(train_spec, train_seed, mix(train_seed, sn + 1));
            const auto test_stream =
                dataio::gen_synthetic(test_spec, test_seed, mix(test_seed, sn + 1));
            train_windows[sn] = dataio::window_stream(train_stream, s.length, s.overlap);
            test_windows[sn] = dataio::window_stream(test_stream, s.length, s.overlap);
            if (sn == 0) {
                ranges = train_stream.channel_ranges;
                sample_rate = train_stream.sample_rate_hz;
            }
        }
        n_classes = static_cast<std::size_t>(spec.n_classes);
    } else if (kind == "file") {
        const auto format = dataio::parse_format(config.get_str("dataset.format", "mhealth"));
        std::vector<std::size_t> channels;
        for (long long c : config.get_int_list("dataset.channels", {0, 1, 2})) {
            channels.push_back(static_cast<std::size_t>(c));
        }
        const auto stream = dataio::load_dataset(config.get_str("dataset.path"), format, channels,
                                                 static_cast<std::size_t>(config.get_int("dataset.label_col")));
        const double frac = config.get_double("dataset.train_fraction", 0.6);
        const std::size_t split = static_cast<std::size_t>(stream.size() * frac);
        LabeledStream train_stream = stream, test_stream = stream;
        train_stream.samples.assign(stream.samples.begin(),
                                    stream.samples.begin() + split * stream.channels);
        train_stream.labels.assign(stream.labels.begin(), stream.labels.begin() + split);
        test_stream.samples.assign(stream.samples.begin() + split * stream.channels,
                                   stream.samples.end());
        test_stream.labels.assign(stream.labels.begin() + split, stream.labels.end());
        for (std::size_t sn = 0; sn < s.n_sensors; ++sn) {
            train_windows[sn] = dataio::window_stream(train_stream, s.length, s.overlap);
            test_windows[sn] = dataio::window_stream(test_stream, s.length, s.overlap);
        }
        ranges = stream.channel_ranges;
        sample_rate = stream.sample_rate_hz;
        int max_label = 0;
        for (int l : stream.labels) max_label = std::max(max_label, l);
        n_classes = static_cast<std::size_t>(max_label) + 1;
    } else {
        throw config_error("dataset.kind must be 'synthetic' or 'file'");
    }
    s.node_cfg.channels = ranges.size();
    report.window_length = s.length;
    report.channels = ranges.size();

    // Shared models trained on all sensors' training windows.
    std::vector<SensorWindow> all_train;
    for (const auto& tw : train_windows) all_train.insert(all_train.end(), tw.begin(), tw.end());
    if (all_train.empty()) throw config_error("empty training split");

    const ml::QuantModel full = ml::train(all_train, ranges, s.hyper);
    ml::Dataset calib;
    for (const auto& w : all_train) {
        calib.x.push_back(ml::window_features(w, ranges));
        calib.y.push_back(*w.label);
    }
    calib.n_classes = n_classes;
    const ml::QuantModel q16 = ml::quantize(full, 16, &calib, &s.hyper);
    const ml::QuantModel q12 = ml::quantize(full, 12, &calib, &s.hyper);

    // Host-side models trained on reconstructed training windows.
    std::vector<SensorWindow> recon_cluster_set, recon_sample_set;
    for (std::size_t i = 0; i < all_train.size(); ++i) {
        const auto& w = all_train[i];
        {
            const auto cs = coreset::kmeans_coreset(w, ranges, s.node_cfg.k_default,
                                                    s.node_cfg.kmeans_max_iter);
            const auto body = codec::encode_cluster(cs, true).bytes;
            const auto dec = codec::decode_cluster(body, s.node_cfg.k_default, w.channels,
                                                   w.length, ranges);
            auto rec = recovery::reconstruct_cluster(dec, w.length, mix(s.seed, 0xC3, i));
            rec.window.label = w.label;
            recon_cluster_set.push_back(std::move(rec.window));
        }
        {
            const auto cs = coreset::sample_coreset(w, ranges, s.node_cfg.sample_m,
                                                    s.node_cfg.sample_min_gap,
                                                    s.node_cfg.sample_max_rounds,
                                                    mix(s.seed, 0x54, i));
            const auto body = codec::encode_sample(cs).bytes;
            const auto dec = codec::decode_sample(body, s.node_cfg.sample_m, w.channels, w.length,
                                                  ranges);
            auto rec = recovery::reconstruct_sample(dec, w.length, mix(s.seed, 0x55, i));
            rec.label = w.label;
            recon_sample_set.push_back(std::move(rec));
        }
    }
    ml::TrainHyper host_hyper = s.hyper;
    host_hyper.seed = mix(s.hyper.seed, 2);
    const ml::QuantModel host_cluster = ml::train(recon_cluster_set, ranges, host_hyper);
    host_hyper.seed = mix(s.hyper.seed, 3);
    const ml::QuantModel host_sample = ml::train(recon_sample_set, ranges, host_hyper);

    // Simulation horizon and traces.
    const std::size_t stride = s.length - s.overlap;
    const std::size_t n_windows = test_windows[0].size();
    const double horizon =
        (static_cast<double>((n_windows ? n_windows - 1 : 0) * stride) + s.length) / sample_rate +
        static_cast<double>(stride) / sample_rate + 1.0;

    RunParams rp;
    rp.sample_rate_hz = sample_rate;
    rp.window_length = s.length;
    rp.stride_samples = stride;
    rp.step_s = s.step_s;

    for (std::size_t sn = 0; sn < s.n_sensors; ++sn) {
        energy::HarvestTrace trace;
        const std::string file_key = "trace." + std::to_string(sn) + ".file";
        if (config.has(file_key)) {
            trace = energy::load_trace(config.get_str(file_key));
        } else if (config.has("trace.file")) {
            trace = energy::load_trace(config.get_str("trace.file"));
        } else {
            const auto profile = energy::parse_profile(config.get_str("trace.profile", "constant"));
            trace = energy::gen_trace(profile, parse_trace_params(config, horizon),
                                      mix(s.seed, 0x7a, sn));
        }

        Node node;
        node.cfg = s.node_cfg;
        node.energy.capacity_uj = s.capacity_uj;
        node.energy.stored_uj = std::min(s.initial_uj, s.capacity_uj);
        node.energy.leakage_uw = s.leakage_uw;
        node.energy.predictor_window = s.predictor_window;
        node.model16 = &q16;
        node.model12 = &q12;
        node.bank = ml::build_template_bank(train_windows[sn], ranges, n_classes);
        node.ranges = ranges;
        node.seed = mix(s.seed, 0x0de, sn);

        NodeLog log = run_node(node, test_windows[sn], trace, rp);

        // Host-side decode + reconstruct + classify for offloaded windows.
        for (auto& o : log.outcomes) {
            if (o.strategy == Strategy::D3) {
                const auto dec = codec::decode_cluster(o.payload, o.k, s.node_cfg.channels,
                                                       s.length, ranges);
                const auto rec = recovery::reconstruct_cluster(
                    dec, s.length, mix(s.seed, 0xAB, mix(sn, o.window_id)));
                const auto [cls, conf] = ml::infer(host_cluster, rec.window);
                o.host_class = cls;
                o.host_conf = conf;
            } else if (o.strategy == Strategy::D4) {
                const auto dec = codec::decode_sample(o.payload, s.node_cfg.sample_m,
                                                      s.node_cfg.channels, s.length, ranges);
                const auto rec = recovery::reconstruct_sample(
                    dec, s.length, mix(s.seed, 0xAC, mix(sn, o.window_id)));
                const auto [cls, conf] = ml::infer(host_sample, rec);
                o.host_class = cls;
                o.host_conf = conf;
            }
        }
        report.nodes.push_back(std::move(log));
    }

    // Host ensembling across sensors, per window.
    for (std::size_t w = 0; w < n_windows; ++w) {
        SimReport::FinalClass fc;
        fc.window_id = test_windows[0][w].window_id;
        fc.true_label = test_windows[0][w].label;
        std::vector<std::pair<int, double>> votes;
        for (const auto& node : report.nodes) {
            if (w >= node.outcomes.size()) continue;
            const auto& o = node.outcomes[w];
            if (o.local_class) {
                votes.push_back({*o.local_class, o.local_conf});
            } else if (o.host_class) {
                votes.push_back({*o.host_class, o.host_conf});
            }
        }
        if (!votes.empty()) fc.ensembled_class = ml::ensemble(votes);
        report.finals.push_back(fc);
    }

    report.aggregate = metrics(report);
    return report;
}

std::string report_to_json(const SimReport& report) {
    using json = nlohmann::ordered_json;
    json j;
    json jc = json::object();
    for (const auto& [k, v] : report.config.entries()) jc[k] = v;
    j["config"] = jc;

    json jnodes = json::array();
    for (const auto& node : report.nodes) {
        json jn;
        jn["ledger"] = {{"initial_uj", node.ledger.initial_uj},
                        {"harvested_uj", node.ledger.harvested_uj},
                        {"consumed_uj", node.ledger.consumed_uj},
                        {"discarded_uj", node.ledger.discarded_uj},
                        {"leaked_uj", node.ledger.leaked_uj},
                        {"final_stored_uj", node.final_stored_uj},
                        {"balanced", node.ledger_ok}};
        json jw = json::array();
        for (const auto& o : node.outcomes) {
            json je;
            je["window"] = o.window_id;
            je["t_s"] = o.t_arrival_s;
            je["strategy"] = strategy_name(o.strategy);
            je["k"] = o.k;
            je["bytes"] = o.bytes;
            je["energy_uj"] = o.energy_uj;
            je["defer_steps"] = o.defer_steps;
            if (o.local_class) je["local_class"] = *o.local_class;
            if (o.host_class) je["host_class"] = *o.host_class;
            if (o.true_label) je["true_label"] = *o.true_label;
            jw.push_back(je);
        }
        jn["windows"] = jw;
        jnodes.push_back(jn);
    }
    j["nodes"] = jnodes;

    json jf = json::array();
    for (const auto& f : report.finals) {
        json je;
        je["window"] = f.window_id;
        if (f.true_label) je["true_label"] = *f.true_label;
        if (f.ensembled_class) je["class"] = *f.ensembled_class;
        jf.push_back(je);
    }
    j["finals"] = jf;

    const Metrics& m = report.aggregate;
    json jh = json::object();
    for (const auto& [name, count] : m.strategy_histogram) jh[name] = count;
    j["metrics"] = {{"scheduled", m.scheduled},
                    {"edge_completion_fraction", m.edge_completion_fraction},
                    {"completion_fraction", m.completion_fraction},
                    {"data_volume_ratio", m.data_volume_ratio},
                    {"accuracy", m.accuracy},
                    {"strict_accuracy", m.strict_accuracy},
                    {"transmitted_bytes", m.transmitted_bytes},
                    {"raw_bytes", m.raw_bytes},
                    {"classified_windows", m.classified_windows},
                    {"system_windows", m.system_windows},
                    {"strategy_histogram", jh}};
    return j.dump(2);
}

std::string report_to_csv(const SimReport& report) {
    std::ostringstream out;
    out << "node,window,t_s,strategy,k,bytes,energy_uj,defer_steps,local_class,host_class,"
           "true_label\n";
    for (std::size_t n = 0; n < report.nodes.size(); ++n) {
        for (const auto& o : report.nodes[n].outcomes) {
            out << n << ',' << o.window_id << ',' << o.t_arrival_s << ',' << strategy_name(o.strategy)
                << ',' << o.k << ',' << o.bytes << ',' << o.energy_uj << ',' << o.defer_steps << ',';
            if (o.local_class) out << *o.local_class;
            out << ',';
            if (o.host_class) out << *o.host_class;
            out << ',';
            if (o.true_label) out << *o.true_label;
            out << '\n';
        }
    }
    return out.str();
}

} // namespace seeker::sim
