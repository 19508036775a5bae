#pragma once

#include "hybridsim/case.hpp"
#include "hybridsim/fortescue.hpp"

#include <vector>

namespace hybridsim {

enum class ControllerPhase { waiting_delay, watching_rate, watching_dv };

std::string to_string(ControllerPhase p);

struct ControllerState {
    ControllerPhase phase = ControllerPhase::waiting_delay;
    double t_clear = 0.0;
    int counter = 0;
    bool decision = false;   // true = switch
    double last_dv = 0.0;
    double last_rate = 0.0;
    std::vector<double> dv_history;     // recent max boundary-voltage differences
    std::vector<double> rate_history;   // recent max per-step changes
    std::vector<double> v_prev;         // boundary magnitudes of the previous step
};

/// Consecutive in-tolerance steps needed: ceil(hold_cycles / (f0·dt_ts)).
int hold_steps(const SwitchConfig& cfg, double dt_ts);

/// Core update from precomputed maxΔV and rate (pu per step).
ControllerState controller_update(const ControllerState& cs, const SwitchConfig& cfg, double dt_ts, double max_dv,
                                  double rate, double t, double t_clear);

/// Full step: v_de are detailed-model phase voltages at the boundary, v_ex
/// external-model sequence voltages at the same buses.
ControllerState controller_step(const ControllerState& cs, const SwitchConfig& cfg, double dt_ts,
                                const std::vector<ThreePhasePhasor>& v_de, const std::vector<SequencePhasor>& v_ex,
                                double t, double t_clear);

} // namespace hybridsim
