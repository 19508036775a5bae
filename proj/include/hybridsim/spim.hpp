#pragma once

#include "hybridsim/network.hpp"

#include <optional>

namespace hybridsim::motor {

/// Fundamental-frequency solution of the single-phase induction motor at a
/// fixed speed, stationary frame, motor per-unit. Torque is the average part.
struct SpimPhasors {
    Complex is{};
    Complex idr{};
    Complex iqr{};
    double te = 0.0;
    Complex s{};   // V·conj(Is)
};

SpimPhasors spim_phasors(const net::SpimParams& p, Complex v, double omega);

/// Stator input impedance with the rotor blocked.
Complex locked_rotor_impedance(const net::SpimParams& p);

/// Load torque c + k·ω²; the constant share models compressor back pressure.
struct SpimLoad {
    double c = 0.0;
    double k = 0.0;
    double torque(double w) const { return c + k * w * w; }
};

/// Load sized so that 1 pu voltage gives equilibrium at the rated speed.
SpimLoad spim_load(const net::SpimParams& p);

/// High-speed equilibrium at terminal voltage magnitude `v`, or nothing if
/// the torque curve never reaches the load (the motor cannot run).
std::optional<double> spim_equilibrium_speed(const net::SpimParams& p, const SpimLoad& load, double v);

/// Ratio from motor per-unit to system per-phase per-unit so that the motor
/// draws p0 at 1 pu voltage.
double spim_scale(const net::MotorData& m);

/// Periodic steady state of the motor on v(t) = vmag·cos(ω0·t + phase),
/// integrated with the EMT discretization. The torque pulsation at twice
/// the supply frequency lowers the mean speed of a light rotor, so the
/// cycle average differs from the constant-speed phasor solution.
struct SpimPeriodic {
    double omega_mean = 0.0;
    Complex s{};                 // fundamental V·conj(I), motor base
    Eigen::Vector3d x_end;       // i_s, i_dr, i_qr at the last sample
    double omega_end = 0.0;
    double te_end = 0.0;
};

/// `end_phase` is the supply angle ω0·t + phase at the returned state.
/// Empty when the motor stalls at this voltage.
std::optional<SpimPeriodic> spim_periodic(const net::SpimParams& p, const SpimLoad& load, double vmag,
                                          double dt = 20e-6, double end_phase = 0.0);

} // namespace hybridsim::motor
