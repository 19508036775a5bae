#pragma once

#include "hybridsim/equivalents.hpp"
#include "hybridsim/fortescue.hpp"
#include "hybridsim/phasor.hpp"

#include <array>
#include <vector>

namespace hybridsim::boundary {

/// Samples per fundamental cycle: round(1/(f0·dt)), e.g. 833 at 20 µs.
int samples_per_cycle(double f0, double dt);

/// Per-phase samples with exact timestamps (seconds from the global t = 0).
struct WaveformBuffer {
    std::vector<double> t;
    std::array<std::vector<double>, 3> x;
    bool ready = false;
};

/// Peak phasor X of each phase such that x(t) ≈ Re(X·e^{j2πf0·t}), referred
/// to the global reference anchored at t = 0. The window need not hold an
/// integer number of cycles: the fit uses the exact sample instants, which
/// removes the leakage a plain DFT would show on 833.33 samples per cycle.
/// An offset and a linear trend are fitted alongside and discarded.
ThreePhasePhasor extract_phasors(const WaveformBuffer& buf, double f0);
Complex extract_phasor(const std::vector<double>& t, const std::vector<double>& x, double f0);

struct SequenceInjectionFrame {
    double t = 0.0;
    std::vector<net::BusId> buses;
    std::vector<SequencePhasor> i;   // current from the detailed system into the external bus
    bool ready = false;
};

SequenceInjectionFrame injections_to_sequence(const std::vector<net::BusId>& buses,
                                              const std::vector<ThreePhasePhasor>& i_abc, double t);

/// Multi-port impedance of a three_sequence or three_phase subsystem seen
/// from `buses`, abc coordinates. Zero-sequence ports without a ground path
/// are reported through `zero_open`.
CMatrix thevenin_impedance(phasor::Subsystem& ext, const std::vector<net::BusId>& buses, bool& zero_open);

/// Open-circuit voltage behind `z`: v_th = V_port - Z·I_inj, where I_inj is
/// the present injection into the external buses.
TheveninEquivalent3ph thevenin_external(const phasor::Subsystem& ext, const std::vector<net::BusId>& buses,
                                        const CMatrix& z, bool zero_open, const std::vector<SequencePhasor>& i_inj);

NortonEquivalent3ph thevenin_to_norton(const TheveninEquivalent3ph& th);
TheveninEquivalent3ph norton_to_thevenin(const NortonEquivalent3ph& n);

} // namespace hybridsim::boundary
