#pragma once

#include "hybridsim/network.hpp"

#include <map>
#include <string>
#include <vector>

namespace hybridsim::phasor {

struct PowerFlowResult {
    CVector v;                                 // positive sequence, indexed like net.buses()
    std::map<std::string, Complex> machine_s;  // terminal output per machine
    int iterations = 0;
    double mismatch = 0.0;
};

/// Newton-Raphson on the positive-sequence network. Constant-impedance loads
/// enter the admittance matrix; A/C motor groups are voltage-dependent PQ
/// draws from their running curves, a third of each group per sequence.
PowerFlowResult solve_power_flow(const net::NetworkModel& net, double tol = 1e-11, int max_iter = 30);

} // namespace hybridsim::phasor
