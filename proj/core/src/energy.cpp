#include "seeker/energy.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "seeker/errors.hpp"
#include "seeker/rng.hpp"

namespace seeker::energy {

double HarvestTrace::power_at(double t) const {
    if (time_s.empty()) return 0.0;
    if (t <= time_s.front()) return power_uw.front();
    // Last sample at or before t.
    auto it = std::upper_bound(time_s.begin(), time_s.end(), t);
    const std::size_t idx = static_cast<std::size_t>(it - time_s.begin()) - 1;
    return power_uw[idx];
}

HarvestTrace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open trace file '" + path + "'");
    HarvestTrace trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double t, p;
        if (!(ss >> t >> p)) {
            throw data_error("malformed trace row at line " + std::to_string(line_no));
        }
        if (!trace.time_s.empty() && t <= trace.time_s.back()) {
            throw data_error("non-monotone timestamp at line " + std::to_string(line_no));
        }
        if (p < 0.0) throw data_error("negative power at line " + std::to_string(line_no));
        trace.time_s.push_back(t);
        trace.power_uw.push_back(p);
    }
    if (trace.time_s.empty()) throw data_error("trace file '" + path + "' contains no rows");
    return trace;
}

TraceProfile parse_profile(const std::string& name) {
    if (name == "constant") return TraceProfile::constant;
    if (name == "square-wave") return TraceProfile::square_wave;
    if (name == "markov-burst") return TraceProfile::markov_burst;
    throw config_error("unknown trace profile '" + name + "'");
}

HarvestTrace gen_trace(TraceProfile profile, const TraceParams& params, std::uint64_t seed) {
    if (params.step_s <= 0.0 || params.duration_s <= 0.0) {
        throw config_error("gen_trace: step and duration must be positive");
    }
    HarvestTrace trace;
    const std::size_t n = static_cast<std::size_t>(params.duration_s / params.step_s + 0.5);
    trace.time_s.reserve(n);
    trace.power_uw.reserve(n);

    Rng rng(seed, 42);
    bool on = true;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * params.step_s;
        double p = 0.0;
        switch (profile) {
            case TraceProfile::constant:
                p = params.power_uw;
                break;
            case TraceProfile::square_wave: {
                const double phase = std::fmod(t, params.period_s) / params.period_s;
                p = (phase < params.duty) ? params.power_uw : params.low_uw;
                break;
            }
            case TraceProfile::markov_burst: {
                if (on && rng.u01() < params.p_on_off) on = false;
                else if (!on && rng.u01() < params.p_off_on) on = true;
                p = on ? params.power_uw : params.low_uw;
                break;
            }
        }
        trace.time_s.push_back(t);
        trace.power_uw.push_back(p);
    }
    return trace;
}

void save_trace(const HarvestTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write trace file '" + path + "'");
    out << "# t_seconds,microwatts\n";
    out.precision(9);
    for (std::size_t i = 0; i < trace.time_s.size(); ++i) {
        out << trace.time_s[i] << "," << trace.power_uw[i] << "\n";
    }
}

void step(NodeEnergyState& state, double harvested_uj, double consumed_uj, double dt_s,
          EnergyLedger* ledger) {
    if (harvested_uj < 0.0 || consumed_uj < 0.0) {
        throw config_error("energy step: harvested and consumed must be >= 0");
    }
    if (consumed_uj > state.stored_uj + harvested_uj + 1e-9) {
        throw config_error("energy step: overdraw attempted (simulator bug)");
    }
    const double leak = std::min(state.leakage_uw * dt_s,
                                 std::max(state.stored_uj + harvested_uj - consumed_uj, 0.0));
    double next = state.stored_uj + harvested_uj - consumed_uj - leak;
    double discarded = 0.0;
    if (next > state.capacity_uj) {
        discarded = next - state.capacity_uj;
        next = state.capacity_uj;
    }
    if (next < 0.0) next = 0.0;
    if (ledger) {
        ledger->harvested_uj += harvested_uj;
        ledger->consumed_uj += consumed_uj;
        ledger->discarded_uj += discarded;
        ledger->leaked_uj += leak;
    }
    state.stored_uj = next;
}

double predict_power(const std::deque<double>& history_uw, double horizon_s) {
    if (history_uw.empty()) return 0.0;
    double sum = 0.0;
    for (double p : history_uw) sum += p;
    return sum / static_cast<double>(history_uw.size()) * horizon_s;
}

double comm_energy(std::size_t body_bytes, MessageKind kind, const CostTable& table) {
    if (kind == MessageKind::result) return table.d0.comm_uj;
    // Affine fit through the (42 B, payload) and (240 B, raw) anchor points.
    const double slope = (table.raw_comm_uj - table.d3.comm_uj) / (240.0 - 42.0);
    const double base = table.d3.comm_uj - 42.0 * slope;
    return base + slope * static_cast<double>(body_bytes);
}

} // namespace seeker::energy
