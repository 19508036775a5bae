#include "hybridsim/emt.hpp"

#include <algorithm>
#include <cmath>

namespace hybridsim::emt {

Circuit::Circuit(int n_nodes, double dt) : n_(n_nodes), dt_(dt), u_(RVector::Zero(n_nodes)) {
    if (!(dt > 0.0)) throw std::invalid_argument("EMT time step must be positive");
}

RVector Circuit::port_voltage(const PortMap& ports, const RVector& u) {
    RVector w = RVector::Zero(static_cast<Eigen::Index>(ports.size()));
    for (std::size_t p = 0; p < ports.size(); ++p)
        for (const auto& [node, coef] : ports[p]) w(static_cast<Eigen::Index>(p)) += coef * u(node);
    return w;
}

void Circuit::add_port_current(const PortMap& ports, const RVector& i, RVector& b, double sign) {
    for (std::size_t p = 0; p < ports.size(); ++p)
        for (const auto& [node, coef] : ports[p]) b(node) += sign * coef * i(static_cast<Eigen::Index>(p));
}

void Circuit::stamp(const PortMap& ports, const RMatrix& g, RMatrix& y) {
    for (std::size_t p = 0; p < ports.size(); ++p)
        for (std::size_t q = 0; q < ports.size(); ++q) {
            const double gpq = g(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
            if (gpq == 0.0) continue;
            for (const auto& [n1, c1] : ports[p])
                for (const auto& [n2, c2] : ports[q]) y(n1, n2) += c1 * c2 * gpq;
        }
}

namespace {

void check_ports(const PortMap& ports, int n, const std::string& id) {
    for (const auto& port : ports)
        for (const auto& [node, coef] : port)
            if (node < 0 || node >= n) throw std::invalid_argument("element " + id + " references a bad node");
}

} // namespace

std::size_t Circuit::add_rl(RlElement e) {
    check_ports(e.ports, n_, e.id);
    const auto m = static_cast<Eigen::Index>(e.ports.size());
    if (e.r.rows() != m || e.l.rows() != m) throw std::invalid_argument("element " + e.id + ": R/L size mismatch");
    const RMatrix a = e.r + (2.0 / dt_) * e.l;
    e.g = a.inverse();
    if (!e.g.allFinite()) throw std::invalid_argument("element " + e.id + ": R + 2L/dt is singular");
    e.kh = (2.0 / dt_) * e.l - e.r;
    e.i = RVector::Zero(m);
    e.w = RVector::Zero(m);
    e.hist = RVector::Zero(m);
    e.e_now = RVector::Zero(m);
    if (e.e_phasor.size() == 0) e.e_phasor = CVector::Zero(m);
    rl_.push_back(std::move(e));
    dirty_ = true;
    return rl_.size() - 1;
}

std::size_t Circuit::add_cap(CapElement e) {
    check_ports(e.ports, n_, e.id);
    const auto m = static_cast<Eigen::Index>(e.ports.size());
    e.g = (2.0 / dt_) * e.c;
    e.i = RVector::Zero(m);
    e.w = RVector::Zero(m);
    e.hist = RVector::Zero(m);
    cap_.push_back(std::move(e));
    dirty_ = true;
    return cap_.size() - 1;
}

std::size_t Circuit::add_conductance(ConductanceElement e) {
    check_ports(e.ports, n_, e.id);
    g_el_.push_back(std::move(e));
    dirty_ = true;
    return g_el_.size() - 1;
}

std::size_t Circuit::add_motor(MotorElement m) {
    if (m.node < 0 || m.node >= n_) throw std::invalid_argument("motor " + m.id + " references a bad node");
    if (m.stall_samples <= 0) m.stall_samples = std::lround(1.0 / (kF0 * dt_));
    motors_.push_back(std::move(m));
    dirty_ = true;
    return motors_.size() - 1;
}

void Circuit::update_rl(std::size_t k, const RMatrix& r, const RMatrix& l) {
    auto& e = rl_.at(k);
    if (r.rows() != e.r.rows() || l.rows() != e.l.rows()) throw std::invalid_argument("element " + e.id + ": R/L size mismatch");
    if (r == e.r && l == e.l) return;
    const RMatrix g = (r + (2.0 / dt_) * l).inverse();
    if (!g.allFinite()) throw std::invalid_argument("element " + e.id + ": R + 2L/dt is singular");
    e.r = r;
    e.l = l;
    e.g = g;
    e.kh = (2.0 / dt_) * l - r;
    dirty_ = true;
}

void Circuit::set_switch(std::size_t k, bool on) {
    if (g_el_.at(k).on == on) return;
    g_el_[k].on = on;
    dirty_ = true;
}

void Circuit::factorize() {
    RMatrix y = RMatrix::Zero(n_, n_);
    for (const auto& e : rl_) stamp(e.ports, e.g, y);
    for (const auto& e : cap_) stamp(e.ports, e.g, y);
    for (const auto& e : g_el_)
        if (e.on) stamp(e.ports, e.g, y);
    Eigen::FullPivLU<RMatrix> check(y);
    if (check.rank() < n_) throw TopologyError("EMT conductance matrix is singular (floating node)");
    lu_.compute(y);
    const auto nm = static_cast<Eigen::Index>(motors_.size());
    RMatrix u = RMatrix::Zero(n_, nm);
    for (Eigen::Index k = 0; k < nm; ++k) u(motors_[static_cast<std::size_t>(k)].node, k) = 1.0;
    wz_ = lu_.solve(u);
    uwz_ = u.transpose() * wz_;
    dirty_ = false;
}

void Circuit::prime() {
    for (auto& e : rl_) {
        if (e.source) e.source(time(), e.e_now);
        else e.e_now.setZero();
        e.w = port_voltage(e.ports, u_) - e.e_now;
    }
    for (auto& e : cap_) e.w = port_voltage(e.ports, u_);
    for (auto& m : motors_) m.v_prev = u_(m.node);
    primed_ = true;
}

std::vector<std::string> Circuit::step() {
    if (dirty_) factorize();
    if (!primed_) prime();
    const double t1 = static_cast<double>(k_ + 1) * dt_;
    RVector b = RVector::Zero(n_);

    for (auto& e : rl_) {
        if (e.source) e.source(t1, e.e_now);
        else e.e_now.setZero();
        // Purely resistive elements carry no history, so an inconsistent start cannot ring.
        if (e.l.isZero(0.0)) e.hist = -e.g * e.e_now;
        else e.hist = e.g * (e.w + e.kh * e.i - e.e_now);
        add_port_current(e.ports, e.hist, b, -1.0);
    }
    for (auto& e : cap_) {
        e.hist = -e.g * e.w - e.i;
        add_port_current(e.ports, e.hist, b, -1.0);
    }
    const auto nm = static_cast<Eigen::Index>(motors_.size());
    RVector d(nm);
    for (Eigen::Index k = 0; k < nm; ++k) {
        auto& m = motors_[static_cast<std::size_t>(k)];
        const double xs = m.p.xls + m.p.xm;
        const double xr = m.p.xlr + m.p.xm;
        Eigen::Matrix3d lm;
        lm << xs, m.p.xm, 0.0, m.p.xm, xr, 0.0, 0.0, 0.0, xr;
        Eigen::Matrix3d kk;
        kk << m.p.rs, 0.0, 0.0, 0.0, m.p.rr, m.omega * xr, -m.omega * m.p.xm, -m.omega * xr, m.p.rr;
        const Eigen::Matrix3d two_m = (2.0 / (dt_ * m.wb)) * lm;
        const Eigen::Matrix3d pinv = (two_m + kk).inverse();
        m.x_pre = pinv * ((two_m - kk) * m.x + Eigen::Vector3d(m.v_prev, 0.0, 0.0));
        m.gvec = pinv.col(0);
        m.g_node = m.scale * m.gvec(0);
        d(k) = m.g_node;
        b(m.node) -= m.scale * m.x_pre(0);
    }

    RVector u = lu_.solve(b);
    if (nm > 0) {
        // Woodbury update for the motor conductances on top of the static matrix.
        const RMatrix lhs = RMatrix::Identity(nm, nm) + d.asDiagonal() * uwz_;
        RVector ut(nm);
        for (Eigen::Index k = 0; k < nm; ++k) ut(k) = u(motors_[static_cast<std::size_t>(k)].node);
        const RVector y = lhs.partialPivLu().solve(d.asDiagonal() * ut);
        u -= wz_ * y;
    }
    u_ = u;

    for (auto& e : rl_) {
        e.w = port_voltage(e.ports, u_) - e.e_now;
        e.i = e.g * port_voltage(e.ports, u_) + e.hist;
    }
    for (auto& e : cap_) {
        e.w = port_voltage(e.ports, u_);
        e.i = e.g * e.w + e.hist;
    }
    std::vector<std::string> stalled;
    for (auto& m : motors_) {
        const double v1 = u_(m.node);
        m.x = m.x_pre + m.gvec * v1;
        const double te1 = -2.0 * m.p.xm * m.x(0) * m.x(2);
        const double a = 2.0 * m.p.h / dt_;
        const double rhs = a * m.omega + 0.5 * (m.te + te1) - m.load.c - 0.5 * m.load.k * m.omega * m.omega;
        double w1 = 0.0;
        if (m.load.k > 0.0) {
            const double disc = a * a + 2.0 * m.load.k * rhs;
            w1 = disc > 0.0 ? (-a + std::sqrt(disc)) / m.load.k : 0.0;
        } else {
            w1 = rhs / a;
        }
        m.omega = std::clamp(w1, 0.0, 1.2);
        m.te = te1;
        m.v_prev = v1;
        if (m.status == MotorStatus::running) {
            if (m.omega < m.p.stall_speed) {
                if (++m.below_count >= m.stall_samples) {
                    m.status = MotorStatus::stalled;
                    stalled.push_back(m.id);
                }
            } else {
                m.below_count = 0;
            }
        }
    }
    ++k_;
    return stalled;
}

void Circuit::initialize_from_phasors(const CVector& up, std::optional<double> motor_speed) {
    if (up.size() != n_) throw std::invalid_argument("initialize_from_phasors: size mismatch");
    const double t = time();
    const Complex rot = std::polar(1.0, kOmega0 * t);
    auto re = [&](const CVector& x) -> RVector { return (x * rot).real(); };
    auto port_phasor = [&](const PortMap& ports) {
        CVector w = CVector::Zero(static_cast<Eigen::Index>(ports.size()));
        for (std::size_t p = 0; p < ports.size(); ++p)
            for (const auto& [node, coef] : ports[p]) w(static_cast<Eigen::Index>(p)) += coef * up(node);
        return w;
    };
    u_ = re(up);
    for (auto& e : rl_) {
        const CVector w = port_phasor(e.ports) - e.e_phasor;
        const CMatrix z = e.r.cast<Complex>() + Complex{0.0, kOmega0} * e.l.cast<Complex>();
        const CVector i = z.partialPivLu().solve(w);
        e.i = re(i);
        e.w = re(w);
        if (e.source) e.source(t, e.e_now);
    }
    for (auto& e : cap_) {
        const CVector w = port_phasor(e.ports);
        e.w = re(w);
        e.i = re(Complex{0.0, kOmega0} * (e.c.cast<Complex>() * w));
    }
    for (auto& m : motors_) {
        const Complex v = up(m.node);
        std::optional<motor::SpimPeriodic> per;
        if (!motor_speed) per = motor::spim_periodic(m.p, m.load, std::abs(v), dt_, std::arg(v) + kOmega0 * t);
        if (per) {
            m.x = per->x_end;
            m.omega = per->omega_end;
            m.te = per->te_end;
        } else {
            m.omega = motor_speed.value_or(0.0);
            const auto ph = motor::spim_phasors(m.p, v, m.omega);
            m.x = Eigen::Vector3d((ph.is * rot).real(), (ph.idr * rot).real(), (ph.iqr * rot).real());
            m.te = -2.0 * m.p.xm * m.x(0) * m.x(2);
        }
        m.status = m.omega < m.p.stall_speed ? MotorStatus::stalled : MotorStatus::running;
        m.v_prev = u_(m.node);
        m.below_count = 0;
    }
    primed_ = true;
}

double Circuit::stored_energy() const {
    double e = 0.0;
    for (const auto& r : rl_) e += 0.5 * r.i.dot(r.l * r.i);
    for (const auto& c : cap_) e += 0.5 * c.w.dot(c.c * c.w);
    return e;
}

} // namespace hybridsim::emt
