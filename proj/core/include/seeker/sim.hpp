#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seeker/codec.hpp"
#include "seeker/config.hpp"
#include "seeker/coreset.hpp"
#include "seeker/energy.hpp"
#include "seeker/inference.hpp"
#include "seeker/types.hpp"

namespace seeker::sim {

/// Per-window strategies, in decision-flow order. DEFER and DROP are the
/// store-cycle and give-up outcomes.
enum class Strategy { D0, D1, D2, D3, D4, DEFER, DROP };

const char* strategy_name(Strategy s);

enum class PolicyKind { seeker, table_greedy, err, force_d3, force_d4 };

struct PolicySpec {
    PolicyKind kind = PolicyKind::seeker;
    int err_n = 3; // store cycles per execute cycle for ERR(n)

    static PolicySpec parse(const std::string& name);
    std::string name() const;
};

struct NodeConfig {
    energy::CostTable costs;
    coreset::ClusterBudgetTable budget;
    double corr_threshold = 0.95;
    int k_default = 12;
    int sample_m = 20;
    int sample_min_gap = 2;
    int sample_max_rounds = 7;
    int kmeans_max_iter = 4;
    bool aac = true;
    PolicySpec policy;
    std::size_t channels = 1;
};

/// One decision-flow evaluation. stored/predicted form the budget; the
/// correlation is computed once per window and cached by the caller.
struct DecideInput {
    double stored_uj = 0.0;
    double predicted_uj = 0.0;
    std::optional<std::pair<int, double>> correlation;
    std::optional<int> last_local_class;
    bool last_chance = false;
};

/// The strategy the flow settles on, with its committed cost. For D3 the
/// cost is the calibrated table total at the default k and the actual-bytes
/// communication fit otherwise.
struct Target {
    Strategy strategy = Strategy::DROP;
    int k = 0;
    double cost_uj = 0.0;
    std::size_t body_bytes = 0;
};

/// Walks the decision flow in order: memoized result, 16-bit inference,
/// 12-bit inference, cluster coreset at the activity-aware k, sample coreset,
/// then DEFER until the deadline and DROP after it. table-greedy swaps the
/// two coreset steps; ERR and the force-* policies bypass the flow.
Target decide(const NodeConfig& cfg, const DecideInput& in);

/// Per-window outcome of one node.
struct WindowOutcome {
    std::uint64_t window_id = 0;
    double t_arrival_s = 0.0;
    Strategy strategy = Strategy::DROP;
    int k = 0;
    std::size_t bytes = 0;
    double energy_uj = 0.0;
    int defer_steps = 0;
    std::optional<int> local_class;
    double local_conf = 0.0;
    std::optional<int> host_class;
    double host_conf = 0.0;
    std::optional<int> true_label;
    std::vector<std::uint8_t> payload; // D3/D4 body, consumed host-side
};

struct NodeLog {
    std::vector<WindowOutcome> outcomes;
    energy::EnergyLedger ledger;
    double final_stored_uj = 0.0;
    bool ledger_ok = false;
};

/// Everything a simulated node carries.
struct Node {
    NodeConfig cfg;
    energy::NodeEnergyState energy;
    const ml::QuantModel* model16 = nullptr;
    const ml::QuantModel* model12 = nullptr;
    ml::TemplateBank bank;
    std::vector<ChannelRange> ranges;
    std::optional<int> last_local_class;
    std::uint64_t seed = 0;
};

struct RunParams {
    double sample_rate_hz = 50.0;
    std::size_t window_length = 60;
    std::size_t stride_samples = 30;
    double step_s = 0.001;
};

/// Drives one node over its window sequence under the harvest trace:
/// windows arrive one stride apart, each is re-evaluated every step until its
/// deadline (one stride), and energy is debited atomically when a strategy
/// commits. Throws data_error when the trace does not cover the horizon.
NodeLog run_node(Node& node, const std::vector<SensorWindow>& windows,
                 const energy::HarvestTrace& trace, const RunParams& params);

struct Metrics {
    std::size_t scheduled = 0;
    double edge_completion_fraction = 0.0;
    double completion_fraction = 0.0;
    double data_volume_ratio = 0.0;
    double accuracy = 0.0;
    double strict_accuracy = 0.0;
    std::map<std::string, std::size_t> strategy_histogram;
    std::size_t transmitted_bytes = 0;
    std::size_t raw_bytes = 0;
    std::size_t classified_windows = 0;
    std::size_t system_windows = 0;
};

struct SimReport {
    cfg::Config config;
    std::size_t window_length = 60;
    std::size_t channels = 1;
    std::vector<NodeLog> nodes;
    struct FinalClass {
        std::uint64_t window_id = 0;
        std::optional<int> true_label;
        std::optional<int> ensembled_class;
    };
    std::vector<FinalClass> finals;
    Metrics aggregate;
};

/// Runs the full sensor-host system from a parsed config: builds streams and
/// traces, trains (or loads) the models, runs every node, decodes and
/// reconstructs payloads host-side, ensembles per window, and aggregates
/// metrics. Deterministic for a fixed config.
SimReport run_system(const cfg::Config& config);

/// Aggregates metrics from the per-node logs (exposed separately so reports
/// can be recomputed from logs).
Metrics metrics(const SimReport& report);

/// Canonical JSON serialization; byte-identical for identical runs.
std::string report_to_json(const SimReport& report);

/// Per-window CSV log (one row per node-window).
std::string report_to_csv(const SimReport& report);

} // namespace seeker::sim
