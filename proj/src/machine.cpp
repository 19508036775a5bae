#include "hybridsim/machine.hpp"

#include <algorithm>
#include <cmath>

namespace hybridsim::phasor {

namespace {
const Complex kJ{0.0, 1.0};
}

Machine::Machine(net::MachineData d, Complex v, Complex s) : d_(std::move(d)) {
    const Complex i = std::conj(s / v);
    const Complex eq = v + Complex{d_.ra, d_.xq} * i;
    x_.delta = std::arg(eq);
    const Complex idq = to_dq(x_, i);
    const Complex vdq = to_dq(x_, v);
    x_.edp = vdq.real() + d_.ra * idq.real() - d_.xqp * idq.imag();
    x_.eqp = vdq.imag() + d_.ra * idq.imag() + d_.xdp * idq.real();
    x_.efd = x_.eqp + (d_.xd - d_.xdp) * idq.real();
    x_.omega = 1.0;
    vref_ = std::abs(v) + x_.efd / d_.ka;
    x_.pm = electrical_torque(x_, v);
}

Complex Machine::to_dq(const MachineState& x, Complex v) const { return v * std::polar(1.0, -(x.delta - kPi / 2)); }
Complex Machine::from_dq(const MachineState& x, Complex v) const { return v * std::polar(1.0, x.delta - kPi / 2); }

Complex Machine::admittance() const { return 1.0 / Complex{d_.ra, 0.5 * (d_.xdp + d_.xqp)}; }
Complex Machine::negative_admittance() const { return 1.0 / Complex{d_.ra, d_.x2}; }

double Machine::algebraic_edp(const MachineState& x, Complex idq) const {
    return d_.tq0p > 0.0 ? x.edp : (d_.xq - d_.xqp) * idq.imag();
}

// Stator equations in dq solved exactly for the current:
//   vd = edp - ra·id + xqp·iq,  vq = eqp - ra·iq - xdp·id
Complex Machine::current_dq(const MachineState& x, Complex v) const {
    const Complex vdq = to_dq(x, v);
    const double ra = d_.ra;
    if (d_.tq0p > 0.0) {
        Eigen::Matrix2d m;
        m << -ra, d_.xqp, -d_.xdp, -ra;
        const Eigen::Vector2d rhs(vdq.real() - x.edp, vdq.imag() - x.eqp);
        const Eigen::Vector2d i = m.partialPivLu().solve(rhs);
        return {i(0), i(1)};
    }
    // E'd = (xq - xqp)·iq folds into the d-axis equation.
    Eigen::Matrix2d m;
    m << -ra, d_.xq, -d_.xdp, -ra;
    const Eigen::Vector2d rhs(vdq.real(), vdq.imag() - x.eqp);
    const Eigen::Vector2d i = m.partialPivLu().solve(rhs);
    return {i(0), i(1)};
}

Complex Machine::terminal_current(const MachineState& x, Complex v) const { return from_dq(x, current_dq(x, v)); }

Complex Machine::norton_current(const MachineState& x, Complex v) const {
    // I = y·(E_src) - y·V with E_src chosen so the Norton form reproduces the
    // exact stator current at this voltage.
    return terminal_current(x, v) + admittance() * v;
}

double Machine::electrical_torque(const MachineState& x, Complex v) const {
    const Complex idq = current_dq(x, v);
    const double edp = algebraic_edp(x, idq);
    return edp * idq.real() + x.eqp * idq.imag() + (d_.xqp - d_.xdp) * idq.real() * idq.imag();
}

Eigen::Matrix<double, 5, 1> Machine::derivatives(const MachineState& x, Complex v) const {
    const Complex idq = current_dq(x, v);
    const double edp = algebraic_edp(x, idq);
    const double te = edp * idq.real() + x.eqp * idq.imag() + (d_.xqp - d_.xdp) * idq.real() * idq.imag();
    Eigen::Matrix<double, 5, 1> f;
    f(0) = kOmegaBase * (x.omega - 1.0);
    f(1) = (x.pm - te - d_.d * (x.omega - 1.0)) / (2.0 * d_.h);
    f(2) = (x.efd - x.eqp - (d_.xd - d_.xdp) * idq.real()) / d_.td0p;
    f(3) = d_.tq0p > 0.0 ? (-x.edp + (d_.xq - d_.xqp) * idq.imag()) / d_.tq0p : 0.0;
    double fe = (d_.ka * (vref_ - std::abs(v)) - x.efd) / d_.ta;
    if ((x.efd >= d_.efd_max && fe > 0.0) || (x.efd <= d_.efd_min && fe < 0.0)) fe = 0.0;
    f(4) = fe;
    return f;
}

Eigen::Matrix<double, 5, 1> Machine::pack(const MachineState& x) {
    Eigen::Matrix<double, 5, 1> v;
    v << x.delta, x.omega, x.eqp, x.edp, x.efd;
    return v;
}

void Machine::unpack(const Eigen::Matrix<double, 5, 1>& v, MachineState& x) {
    x.delta = v(0);
    x.omega = v(1);
    x.eqp = v(2);
    x.edp = v(3);
    x.efd = v(4);
}

} // namespace hybridsim::phasor
