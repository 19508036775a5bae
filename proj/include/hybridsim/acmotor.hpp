#pragma once

#include "hybridsim/case.hpp"
#include "hybridsim/network.hpp"

#include <optional>

namespace hybridsim::phasor {

enum class MotorStatus { running, stalled };

/// Voltage-to-power curves of one single-phase A/C motor group, system
/// per-phase pu. The running curve is calibrated against the dynamic motor's
/// steady state so both representations agree after a disturbance settles.
struct AcMotorCurve {
    double p0 = 0.0;
    double q0 = 0.0;
    double qa = 0.0;   // Q/q0 = qa·v² + qb·v + qc
    double qb = 0.0;
    double qc = 1.0;
    double v_zlow = 0.4;
    Complex y_stall{};   // locked-rotor admittance
};

AcMotorCurve make_curve(const net::MotorData& m);

class AcMotorPerf {
public:
    AcMotorPerf() = default;
    AcMotorPerf(net::MotorData data, AcMotorCurve curve) : data_(std::move(data)), curve_(curve) {}

    const net::MotorData& data() const { return data_; }
    const AcMotorCurve& curve() const { return curve_; }
    MotorStatus status() const { return status_; }
    bool override_active() const { return override_; }

    /// P + jQ drawn at voltage magnitude v.
    Complex power(double v) const;
    /// Admittance used in the network matrix; the compensation current
    /// carries whatever the curve draws beyond it. A running motor is
    /// linearized at its last operating voltage so the fixed point contracts.
    Complex linear_admittance() const;
    /// Re-linearizes at voltage v. True when the admittance moved by more
    /// than `rel_tol` (relative) and the matrix needs a rebuild.
    bool relinearize(double v, double rel_tol);

    /// Autonomous stall trigger, evaluated on each accepted step.
    /// Returns true when the status changed.
    bool update_trigger(double t, double v);

    /// Externally commanded status. Returns true when the status changed.
    bool apply_override(SignalKind kind);
    void release_override() { override_ = false; }

private:
    net::MotorData data_;
    AcMotorCurve curve_;
    MotorStatus status_ = MotorStatus::running;
    bool override_ = false;
    double t_below_ = -1.0;
    std::optional<Complex> y_op_;
};

/// Functional form of the curve evaluation.
Complex acmotor_pq(const AcMotorPerf& m, double v);

} // namespace hybridsim::phasor
