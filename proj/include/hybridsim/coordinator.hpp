#pragma once

#include "hybridsim/case.hpp"
#include "hybridsim/controller.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hybridsim {

enum class RunMode { ts_only, hybrid_no_switch, hybrid_switch, emt_only };
enum class TransportKind { inproc, tcp };

std::string to_string(RunMode m);
RunMode parse_run_mode(const std::string& s);

struct RunOptions {
    RunMode mode = RunMode::hybrid_switch;
    TransportKind transport = TransportKind::inproc;
    std::string waveform_path;                  // EMT samples written here when set
    std::optional<double> warmup_motor_speed;   // forces a wrong start (diagnostics)
};

/// One EMT signal and what became of it on the phasor side.
struct EventRecord {
    EventSignal signal;
    double t_delivered = 0.0;
    std::string phasor_target;   // empty when not reconciled
    bool applied = false;
};

struct StageTiming {
    double stage1 = 0.0;
    double stage2 = 0.0;
    double stage3 = 0.0;
    double total = 0.0;
};

struct ControllerTrace {
    double t = 0.0;
    ControllerPhase phase = ControllerPhase::waiting_delay;
    double max_dv = 0.0;
    double rate = 0.0;
    int counter = 0;
    bool decision = false;
};

struct SimulationResult {
    RunMode mode = RunMode::hybrid_switch;
    std::vector<std::string> columns;        // first is time_s, last is stage
    std::vector<std::vector<double>> rows;   // one per ΔT
    std::vector<EventRecord> events;
    std::vector<std::string> log;            // stage transitions and notes
    StageTiming timing;
    std::optional<double> t_stage2;
    std::optional<double> t_switch;
    double warmup_residual = 0.0;
    std::vector<ControllerTrace> controller;
    std::map<std::string, bool> phasor_stalled;   // final, by phasor motor id
    std::map<std::string, bool> emt_stalled;      // final EMT state, by EMT motor id

    /// Column by name; throws when absent.
    std::vector<double> column(const std::string& name) const;
    std::size_t column_index(const std::string& name) const;
};

/// Runs a validated case in the requested mode.
SimulationResult run_simulation(const CaseData& c, const RunOptions& opt);

} // namespace hybridsim
