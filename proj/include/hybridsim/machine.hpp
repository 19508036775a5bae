#pragma once

#include "hybridsim/network.hpp"

namespace hybridsim::phasor {

inline constexpr double kOmegaBase = 2.0 * kPi * 60.0;

struct MachineState {
    double delta = 0.0;
    double omega = 1.0;
    double eqp = 0.0;
    double edp = 0.0;
    double efd = 0.0;
    double pm = 0.0;
};

/// Two-axis machine with a first-order exciter. The network sees a Norton
/// source behind (ra + j·x_avg); the saliency remainder is a current term
/// that depends on the terminal current and is resolved by iteration.
class Machine {
public:
    Machine(net::MachineData d, Complex v_term, Complex s_term);

    const net::MachineData& data() const { return d_; }
    const MachineState& state() const { return x_; }
    MachineState& state() { return x_; }
    double vref() const { return vref_; }

    /// Positive-sequence Norton admittance.
    Complex admittance() const;
    Complex negative_admittance() const;

    /// Norton source current for terminal voltage `v` (positive sequence).
    Complex norton_current(const MachineState& x, Complex v) const;
    /// Stator current leaving the machine into the network.
    Complex terminal_current(const MachineState& x, Complex v) const;

    /// Time derivatives of (delta, omega, eqp, edp, efd).
    Eigen::Matrix<double, 5, 1> derivatives(const MachineState& x, Complex v) const;
    double electrical_torque(const MachineState& x, Complex v) const;

    static Eigen::Matrix<double, 5, 1> pack(const MachineState& x);
    static void unpack(const Eigen::Matrix<double, 5, 1>& v, MachineState& x);

private:
    Complex to_dq(const MachineState& x, Complex v) const;
    Complex from_dq(const MachineState& x, Complex v) const;
    Complex current_dq(const MachineState& x, Complex v) const;
    double algebraic_edp(const MachineState& x, Complex idq) const;

    net::MachineData d_;
    MachineState x_;
    double vref_ = 1.0;
};

} // namespace hybridsim::phasor
