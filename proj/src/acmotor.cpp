#include "hybridsim/acmotor.hpp"
#include "hybridsim/spim.hpp"

#include <cmath>

namespace hybridsim::phasor {

AcMotorCurve make_curve(const net::MotorData& m) {
    const double sf = motor::spim_scale(m);
    const auto load = motor::spim_load(m.spim);
    AcMotorCurve c;
    c.p0 = m.p0;
    c.v_zlow = m.v_zlow;
    c.y_stall = sf / motor::locked_rotor_impedance(m.spim);

    const double vs[3] = {0.9, 1.0, 1.1};
    double qs[3];
    for (int k = 0; k < 3; ++k) {
        const auto per = motor::spim_periodic(m.spim, load, vs[k]);
        if (!per) throw std::invalid_argument("motor " + m.id + " cannot run near nominal voltage");
        qs[k] = sf * per->s.imag();
    }
    c.q0 = qs[1];
    // Quadratic through the three points, normalized by q0.
    Eigen::Matrix3d a;
    Eigen::Vector3d b;
    for (int k = 0; k < 3; ++k) {
        a.row(k) << vs[k] * vs[k], vs[k], 1.0;
        b(k) = qs[k] / c.q0;
    }
    const Eigen::Vector3d coef = a.fullPivLu().solve(b);
    c.qa = coef(0);
    c.qb = coef(1);
    c.qc = coef(2);
    return c;
}

Complex AcMotorPerf::power(double v) const {
    if (status_ == MotorStatus::stalled) return v * v * std::conj(curve_.y_stall);
    auto running = [&](double x) {
        return Complex{curve_.p0, curve_.q0 * (curve_.qa * x * x + curve_.qb * x + curve_.qc)};
    };
    if (v >= curve_.v_zlow) return running(v);
    const double r = v / curve_.v_zlow;
    return running(curve_.v_zlow) * r * r;
}

Complex AcMotorPerf::linear_admittance() const {
    if (status_ == MotorStatus::stalled) return curve_.y_stall;
    return y_op_.value_or(Complex{curve_.p0, -curve_.q0});
}

bool AcMotorPerf::relinearize(double v, double rel_tol) {
    if (status_ == MotorStatus::stalled || v < 1e-6) return false;
    // Complex-linear part of I = conj(S(|V|)/V): conj(dS/dv)/(2v). Exact for
    // constant impedance, near zero for constant power.
    const double h = 1e-6;
    const Complex ds = (power(v + h) - power(std::max(v - h, 0.0))) / (v + h - std::max(v - h, 0.0));
    const Complex y = std::conj(ds) / (2.0 * v);
    const Complex old = linear_admittance();
    if (std::abs(y - old) <= rel_tol * std::max(std::abs(old), std::abs(Complex{curve_.p0, curve_.q0}))) return false;
    y_op_ = y;
    return true;
}

bool AcMotorPerf::update_trigger(double t, double v) {
    if (override_ || status_ == MotorStatus::stalled) return false;
    if (v >= data_.v_stall) {
        t_below_ = -1.0;
        return false;
    }
    if (t_below_ < 0.0) t_below_ = t;
    if (t - t_below_ >= data_.t_stall - 1e-9) {
        status_ = MotorStatus::stalled;
        return true;
    }
    return false;
}

bool AcMotorPerf::apply_override(SignalKind kind) {
    if (kind != SignalKind::motor_stall && kind != SignalKind::motor_run)
        throw std::invalid_argument("motor " + data_.id + " cannot take a " + to_string(kind) + " signal");
    override_ = true;
    t_below_ = -1.0;
    const auto want = kind == SignalKind::motor_stall ? MotorStatus::stalled : MotorStatus::running;
    if (status_ == want) return false;
    status_ = want;
    y_op_.reset();
    return true;
}

Complex acmotor_pq(const AcMotorPerf& m, double v) { return m.power(v); }

} // namespace hybridsim::phasor
