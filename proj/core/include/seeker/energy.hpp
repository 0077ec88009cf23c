#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace seeker::energy {

enum class TraceSource { rf, piezo, wifi, synthetic };

/// Harvested-power trace: (seconds, microwatts) samples, strictly increasing
/// timestamps, zero-order hold between samples.
struct HarvestTrace {
    std::vector<double> time_s;
    std::vector<double> power_uw;
    TraceSource source = TraceSource::synthetic;

    double duration() const { return time_s.empty() ? 0.0 : time_s.back(); }
    /// Power at time t (last sample at or before t; first sample before the
    /// trace starts).
    double power_at(double t) const;
};

/// Capacitor state plus the recent harvested-power history feeding the
/// moving-average predictor.
struct NodeEnergyState {
    double stored_uj = 0.0;
    double capacity_uj = 200.0;
    double leakage_uw = 0.0;
    std::size_t predictor_window = 16;
    std::deque<double> history_uw;

    void push_history(double power_uw) {
        history_uw.push_back(power_uw);
        while (history_uw.size() > predictor_window) history_uw.pop_front();
    }
};

/// Running conservation ledger; all quantities in microjoules.
struct EnergyLedger {
    double initial_uj = 0.0;
    double harvested_uj = 0.0;
    double consumed_uj = 0.0;
    double discarded_uj = 0.0;
    double leaked_uj = 0.0;

    bool balances(double stored_uj, double tol = 1e-6) const {
        const double expect = initial_uj + harvested_uj - consumed_uj - discarded_uj - leaked_uj;
        return std::abs(expect - stored_uj) <= tol &&
               consumed_uj <= harvested_uj + initial_uj + tol;
    }
};

struct StrategyCost {
    double sensor_uj = 0.0;
    double comm_uj = 0.0;
    double total_uj = 0.0;
};

/// Per-strategy energy costs, defaulting to the calibrated table:
/// D0 (0.54, 8.27, 8.81), D1 (29.23, 8.27, 37.5), D2 (16.58, 8.27, 24.85),
/// D3 (1.07, 15.97, 17.04), D4 (0.87, 15.97, 16.84), raw comm 70.16.
struct CostTable {
    StrategyCost d0{0.54, 8.27, 8.81};
    StrategyCost d1{29.23, 8.27, 37.5};
    StrategyCost d2{16.58, 8.27, 24.85};
    StrategyCost d3{1.07, 15.97, 17.04};
    StrategyCost d4{0.87, 15.97, 16.84};
    double raw_comm_uj = 70.16;
};

HarvestTrace load_trace(const std::string& path);

enum class TraceProfile { constant, square_wave, markov_burst };

struct TraceParams {
    double duration_s = 10.0;
    double step_s = 0.001;
    double power_uw = 50.0;      // constant level / square high level / burst on level
    double low_uw = 0.0;         // square low level / burst off level
    double period_s = 1.0;       // square wave period
    double duty = 0.5;           // square wave duty cycle
    double p_on_off = 0.05;      // markov: P(on -> off) per step
    double p_off_on = 0.02;      // markov: P(off -> on) per step
};

TraceProfile parse_profile(const std::string& name);

/// Deterministic trace generator for the three synthetic profiles.
HarvestTrace gen_trace(TraceProfile profile, const TraceParams& params, std::uint64_t seed);

void save_trace(const HarvestTrace& trace, const std::string& path);

/// Advances the capacitor one step: stored' = clamp(stored + harvested -
/// consumed - leakage*dt, 0, capacity); overflow is discarded into the
/// ledger. Throws config_error when the caller attempts an overdraw
/// (consumed beyond stored + harvested), which would be a simulator bug.
void step(NodeEnergyState& state, double harvested_uj, double consumed_uj, double dt_s,
          EnergyLedger* ledger = nullptr);

/// Expected income over the horizon: simple moving average of the recent
/// per-step power history times the horizon.
double predict_power(const std::deque<double>& history_uw, double horizon_s);

enum class MessageKind { result, payload };

/// Transmission energy: result messages cost the calibrated fixed amount;
/// payload messages follow the affine per-byte fit through the calibrated
/// (42 B, 15.97 uJ) and (240 B, 70.16 uJ) anchor points.
double comm_energy(std::size_t body_bytes, MessageKind kind,
                   const CostTable& table = CostTable{});

} // namespace seeker::energy
