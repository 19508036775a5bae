#pragma once

#include "hybridsim/network.hpp"

#include <istream>
#include <map>
#include <string>
#include <vector>

namespace hybridsim {

enum class FaultKind { slg, ll, llg, three_phase };

std::string to_string(FaultKind k);

struct FaultSpec {
    std::string id;
    net::BusId bus = 0;
    FaultKind kind = FaultKind::slg;
    std::uint8_t phases = 0b001;   // bit k -> phase k involved
    double r_fault = 0.0;          // ohms
    double t_on = 0.0;
    double t_off = 0.0;
};

enum class SignalKind { motor_stall, motor_run, breaker, generic_control };

std::string to_string(SignalKind k);
SignalKind parse_signal_kind(const std::string& s);

/// A discrete signal produced on the EMT side. `target` is an EMT element id.
struct EventSignal {
    double t_emt = 0.0;
    SignalKind kind = SignalKind::motor_stall;
    std::string target;
    double value = 0.0;
};

inline bool operator<(const EventSignal& x, const EventSignal& y) {
    if (x.t_emt != y.t_emt) return x.t_emt < y.t_emt;
    return x.target < y.target;
}

struct SwitchConfig {
    double t_delay = 0.2;
    double eps_rate = 0.005;
    double eps_dv = 0.005;
    double hold_cycles = 2.0;
};

struct RunConfig {
    double t_end = 10.0;
    double dt_ts = 0.005;
    double dt_emt = 20e-6;
    double t_hybrid_start = 0.3;
    bool switching = true;
    bool reconcile = true;
    SwitchConfig sw;
    double warmup = 0.1;
    double warmup_tol = 0.01;
    double ts_tol = 1e-8;
    int ts_max_iter = 20;
};

struct CaseData {
    std::string name;
    net::NetworkModel net;
    std::vector<net::BusId> boundary;
    std::map<std::string, std::string> emt_map;   // EMT element id -> phasor id
    std::vector<FaultSpec> faults;
    std::vector<EventSignal> scripted;             // signals injected on the EMT side
    RunConfig config;
};

CaseData parse_case(std::istream& in, const std::string& name = "case");
CaseData load_case(const std::string& path);

/// Per-unit value of `ohms` at a bus of `base_kv` on the 100 MVA base.
inline double ohms_to_pu(double ohms, double base_kv) { return ohms / (base_kv * base_kv / 100.0); }

inline constexpr double kMinFaultR = 1e-6;   // pu, stands in for a bolted fault

/// Phase-domain shunt conductance of a fault at a bus of `base_kv`.
Eigen::Matrix3d fault_conductance(const FaultSpec& f, double base_kv);

/// Problems that make a case unusable for the configured plan. Empty when clean.
std::vector<std::string> validate_case(const CaseData& c);

} // namespace hybridsim
