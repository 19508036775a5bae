#include "hybridsim/emt_engine.hpp"

#include "hybridsim/spim.hpp"

#include <algorithm>
#include <cmath>

namespace hybridsim::emt {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

RMatrix real_block(const Eigen::Matrix3cd& m, bool imag) { return imag ? RMatrix(m.imag()) : RMatrix(m.real()); }

} // namespace

EmtEngine::EmtEngine(const net::NetworkModel& net, std::vector<net::BusId> ports, double dt)
    : net_(net), ports_(std::move(ports)), c_(static_cast<int>(3 * net.size()), dt) {
    for (auto b : ports_)
        if (!net_.has_bus(b)) throw std::invalid_argument("EMT port bus " + std::to_string(b) + " is not in the network");
    spc_ = boundary::samples_per_cycle(kF0, dt);
    cap_ = spc_ + 4;
    ring_u_ = RMatrix::Zero(c_.nodes(), cap_);
    ring_i_ = RMatrix::Zero(static_cast<Eigen::Index>(3 * ports_.size()), cap_);
    build();
}

int EmtEngine::node(net::BusId bus, int phase) const { return static_cast<int>(3 * net_.bus_index(bus)) + phase; }

void EmtEngine::build() {
    const Complex j{0.0, 1.0};
    auto nodes3 = [&](net::BusId b) { return std::array<int, 3>{node(b, 0), node(b, 1), node(b, 2)}; };

    for (const auto& br : net_.branches()) {
        if (!br.closed()) continue;
        const auto f = nodes3(br.from);
        const auto t = nodes3(br.to);
        const double tau = br.tap;
        const double shift = br.shift_deg;
        if (std::abs(shift) < 1e-9 && br.zero == net::ZeroSequence::through) {
            RlElement e;
            e.id = br.id;
            for (int k = 0; k < 3; ++k) e.ports.push_back({{f[k], 1.0 / tau}, {t[k], -1.0}});
            const Eigen::Matrix3cd z = sequence_to_phase_block(br.z0, br.z1, br.z2);
            e.r = real_block(z, false);
            e.l = real_block(z, true) / kOmega0;
            c_.add_rl(std::move(e));
        } else if (std::abs(shift) < 1e-9) {
            // Positive/negative path through the projector that removes the
            // zero sequence, plus a separate grounding branch.
            RlElement e;
            e.id = br.id;
            for (int k = 0; k < 3; ++k) {
                std::vector<std::pair<int, double>> port;
                for (int m = 0; m < 3; ++m) {
                    const double pkm = (k == m ? 1.0 : 0.0) - 1.0 / 3.0;
                    port.push_back({f[m], pkm / tau});
                    port.push_back({t[m], -pkm});
                }
                e.ports.push_back(std::move(port));
            }
            e.r = RMatrix::Identity(3, 3) * br.z1.real();
            e.l = RMatrix::Identity(3, 3) * (br.z1.imag() / kOmega0);
            c_.add_rl(std::move(e));
            if (br.zero == net::ZeroSequence::ground_from || br.zero == net::ZeroSequence::ground_to) {
                const bool from_side = br.zero == net::ZeroSequence::ground_from;
                RlElement g;
                g.id = br.id + ".zero";
                std::vector<std::pair<int, double>> port;
                for (int m = 0; m < 3; ++m) port.push_back({from_side ? f[m] : t[m], from_side ? 1.0 / tau : 1.0});
                g.ports.push_back(std::move(port));
                g.r = RMatrix::Constant(1, 1, 3.0 * br.z0.real());
                g.l = RMatrix::Constant(1, 1, 3.0 * br.z0.imag() / kOmega0);
                c_.add_rl(std::move(g));
            }
        } else if (std::abs(std::abs(shift) - 30.0) < 1e-9) {
            // Delta on the from side, grounded wye on the to side.
            if (br.zero != net::ZeroSequence::ground_to)
                throw TopologyError("branch " + br.id + ": a ±30° EMT transformer needs zero=ground_to");
            RlElement e;
            e.id = br.id;
            const int other = shift > 0.0 ? 1 : 2;   // +30: A-B, B-C, C-A; -30: A-C, B-A, C-B
            const double c = 1.0 / (kSqrt3 * tau);
            for (int k = 0; k < 3; ++k)
                e.ports.push_back({{f[k], c}, {f[(k + other) % 3], -c}, {t[k], -1.0}});
            e.r = RMatrix::Identity(3, 3) * br.z1.real();
            e.l = RMatrix::Identity(3, 3) * (br.z1.imag() / kOmega0);
            c_.add_rl(std::move(e));
        } else {
            throw TopologyError("branch " + br.id + ": phase shift " + std::to_string(shift) + " has no EMT realization");
        }
        if (br.b1 != 0.0 || br.b0 != 0.0) {
            const Eigen::Matrix3cd bc = sequence_to_phase_block(0.5 * br.b0, 0.5 * br.b1, 0.5 * br.b1);
            for (const auto& side : {f, t}) {
                CapElement cap;
                cap.id = br.id + ".b";
                for (int k = 0; k < 3; ++k) cap.ports.push_back({{side[k], 1.0}});
                cap.c = real_block(bc, false) / kOmega0;
                c_.add_cap(std::move(cap));
            }
        }
    }

    for (const auto& b : net_.buses()) {
        if (b.shunt1 == Complex{} && b.shunt0 == Complex{}) continue;
        // star part on the common-mode port, delta part between phase pairs;
        // each piece is then a plain capacitor or inductor whatever the signs
        const auto n = nodes3(b.id);
        const std::string id = "shunt" + std::to_string(b.id);
        const PortMap star{{{n[0], 1.0}, {n[1], 1.0}, {n[2], 1.0}}};
        const PortMap delta{{{n[0], 1.0}, {n[1], -1.0}}, {{n[1], 1.0}, {n[2], -1.0}}, {{n[2], 1.0}, {n[0], -1.0}}};
        auto add_part = [&](const std::string& tag, const PortMap& ports, Complex y) {
            const int m = static_cast<int>(ports.size());
            const RMatrix eye = RMatrix::Identity(m, m);
            if (y.real() != 0.0) c_.add_conductance({id + tag + ".g", ports, eye * y.real(), true});
            if (y.imag() > 0.0) {
                CapElement cap;
                cap.id = id + tag;
                cap.ports = ports;
                cap.c = eye * (y.imag() / kOmega0);
                c_.add_cap(std::move(cap));
            } else if (y.imag() < 0.0) {
                RlElement e;
                e.id = id + tag;
                e.ports = ports;
                e.r = RMatrix::Zero(m, m);
                e.l = eye / (-y.imag() * kOmega0);
                c_.add_rl(std::move(e));
            }
        };
        add_part(".0", star, b.shunt0 / 3.0);
        add_part(".1", delta, b.shunt1 / 3.0);
    }

    for (const auto& ld : net_.loads()) {
        for (int k = 0; k < 3; ++k) {
            if (!(ld.phases & (1u << k))) continue;
            const int nd = node(ld.bus, k);
            const std::string id = ld.id + "." + net::phase_letter(static_cast<net::Phase>(k));
            if (ld.p != 0.0) c_.add_conductance({id + ".p", {{{nd, 1.0}}}, RMatrix::Constant(1, 1, ld.p), true});
            if (ld.q > 0.0) {
                RlElement e;
                e.id = id + ".q";
                e.ports = {{{nd, 1.0}}};
                e.r = RMatrix::Zero(1, 1);
                e.l = RMatrix::Constant(1, 1, 1.0 / (kOmega0 * ld.q));
                c_.add_rl(std::move(e));
            } else if (ld.q < 0.0) {
                CapElement cap;
                cap.id = id + ".q";
                cap.ports = {{{nd, 1.0}}};
                cap.c = RMatrix::Constant(1, 1, -ld.q / kOmega0);
                c_.add_cap(std::move(cap));
            }
        }
    }

    for (const auto& md : net_.motors()) {
        MotorElement m;
        m.id = md.emt_id.empty() ? md.id : md.emt_id;
        m.node = node(md.bus, static_cast<int>(md.phase));
        m.p = md.spim;
        m.load = motor::spim_load(md.spim);
        m.scale = motor::spim_scale(md);
        c_.add_motor(std::move(m));
    }

    for (const auto& md : net_.machines()) {
        RlElement e;
        e.id = md.id;
        const auto n = nodes3(md.bus);
        for (int k = 0; k < 3; ++k) e.ports.push_back({{n[k], 1.0}});
        e.r = RMatrix::Identity(3, 3) * md.ra;
        e.l = RMatrix::Identity(3, 3) * (md.xdp / kOmega0);
        const std::size_t idx = machines_.size();
        e.source = [this, idx](double t, RVector& out) {
            const auto& m = machines_[idx];
            out.resize(3);
            for (int k = 0; k < 3; ++k) out(k) = m.e_mag * std::cos(kOmega0 * t + m.delta - 2.0 * kPi * k / 3.0);
        };
        ClassicalMachine cm;
        cm.id = md.id;
        cm.h = md.h;
        cm.d = md.d;
        cm.element = c_.add_rl(std::move(e));
        machines_.push_back(cm);
    }

    if (!ports_.empty()) {
        RlElement e;
        e.id = "boundary";
        for (auto b : ports_)
            for (int k = 0; k < 3; ++k) e.ports.push_back({{node(b, k), 1.0}});
        const auto m = static_cast<Eigen::Index>(3 * ports_.size());
        e.r = RMatrix::Identity(m, m) * 1e-3;
        e.l = RMatrix::Identity(m, m) * (0.01 / kOmega0);
        e.source = [this](double t, RVector& out) { source_at(t, 0, out); };
        boundary_el_ = c_.add_rl(std::move(e));
        has_boundary_el_ = true;
    }
}

void EmtEngine::source_at(double t, std::size_t, RVector& out) const {
    const auto n = th_new_.v_th.size();
    out.resize(n);
    double s = 1.0;
    if (t_ramp1_ > t_ramp0_) s = std::clamp((t - t_ramp0_) / (t_ramp1_ - t_ramp0_), 0.0, 1.0);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Complex a = th_old_.v_th(k);
        const Complex b = th_new_.v_th(k);
        const double ma = std::abs(a);
        const double mb = std::abs(b);
        double pa = std::arg(a);
        double dp = std::remainder(std::arg(b) - pa, 2.0 * kPi);
        if (ma == 0.0) pa = std::arg(b), dp = 0.0;
        const double mag = ma + s * (mb - ma);
        out(k) = mag * std::cos(kOmega0 * t + pa + s * dp);
    }
}

void EmtEngine::set_boundary(const TheveninEquivalent3ph& th, double t_reach) {
    if (!has_boundary_el_) throw std::logic_error("EMT engine has no boundary ports");
    const auto m = static_cast<Eigen::Index>(3 * ports_.size());
    if (th.v_th.size() != m || th.z.rows() != m) throw std::invalid_argument("boundary equivalent size mismatch");
    // Present source value becomes the start of the new ramp.
    TheveninEquivalent3ph start = th_new_;
    if (t_ramp1_ > t_ramp0_ && time() < t_ramp1_) {
        const double s = std::clamp((time() - t_ramp0_) / (t_ramp1_ - t_ramp0_), 0.0, 1.0);
        for (Eigen::Index k = 0; k < m; ++k) {
            const Complex a = th_old_.v_th(k);
            const Complex b = th_new_.v_th(k);
            const double dp = std::remainder(std::arg(b) - std::arg(a), 2.0 * kPi);
            start.v_th(k) = std::polar(std::abs(a) + s * (std::abs(b) - std::abs(a)), std::arg(a) + s * dp);
        }
    }
    th_old_ = start;
    th_new_ = th;
    t_ramp0_ = time();
    t_ramp1_ = std::max(t_reach, time());
    c_.update_rl(boundary_el_, th.z.real(), th.z.imag() / kOmega0);
}

void EmtEngine::initialize(double t0, const std::map<net::BusId, ThreePhasePhasor>& v, const TheveninEquivalent3ph* th,
                           const std::map<std::string, Complex>* machine_s, std::optional<double> motor_speed) {
    c_.set_sample(std::llround(t0 / dt()));
    if (has_boundary_el_) {
        if (!th) throw std::invalid_argument("EMT initialization needs the boundary equivalent");
        th_old_ = *th;
        th_new_ = *th;
        t_ramp0_ = t_ramp1_ = time();
        c_.update_rl(boundary_el_, th->z.real(), th->z.imag() / kOmega0);
        c_.rl(boundary_el_).e_phasor = th->v_th;
    }
    CVector up = CVector::Zero(c_.nodes());
    for (const auto& b : net_.buses()) {
        const auto it = v.find(b.id);
        if (it == v.end()) throw std::invalid_argument("EMT initialization: no voltage for bus " + std::to_string(b.id));
        for (int k = 0; k < 3; ++k) up(node(b.id, k)) = it->second[static_cast<std::size_t>(k)];
    }
    for (std::size_t i = 0; i < machines_.size(); ++i) {
        auto& cm = machines_[i];
        if (!machine_s || !machine_s->contains(cm.id))
            throw std::invalid_argument("EMT initialization: no terminal power for machine " + cm.id);
        const auto& md = *std::find_if(net_.machines().begin(), net_.machines().end(),
                                       [&](const auto& m) { return m.id == cm.id; });
        const Complex vt = v.at(md.bus)[0];
        const Complex s = machine_s->at(cm.id);
        const Complex it = std::conj(s / vt);
        const Complex e = vt + Complex{md.ra, md.xdp} * it;
        cm.e_mag = std::abs(e);
        cm.delta = std::arg(e);
        cm.omega = 1.0;
        cm.pm = std::real(e * std::conj(it));
        CVector ep(3);
        for (int k = 0; k < 3; ++k) ep(k) = std::polar(cm.e_mag, cm.delta - 2.0 * kPi * k / 3.0);
        c_.rl(cm.element).e_phasor = ep;
    }
    c_.initialize_from_phasors(up, motor_speed);
    recorded_ = 0;
    events_.clear();
    record();
}

void EmtEngine::add_fault(const FaultSpec& f) {
    if (!net_.has_bus(f.bus)) throw std::invalid_argument("fault " + f.id + " is not on the EMT side");
    ConductanceElement g;
    g.id = f.id;
    for (int k = 0; k < 3; ++k) g.ports.push_back({{node(f.bus, k), 1.0}});
    g.g = fault_conductance(f, net_.bus(f.bus).base_kv);
    g.on = false;
    const auto idx = c_.add_conductance(std::move(g));
    faults_.push_back({idx, std::llround(f.t_on / dt()), std::llround(f.t_off / dt())});
}

void EmtEngine::add_signal(const EventSignal& s) { pending_signals_.push_back(s); }

void EmtEngine::run_until(double t) {
    const long target = std::llround(t / dt());
    while (c_.sample() < target) {
        const long next = c_.sample() + 1;
        for (const auto& f : faults_) c_.set_switch(f.element, next >= f.k_on && next < f.k_off);
        const auto stalled = c_.step();
        const double tn = time();
        for (const auto& id : stalled) events_.push_back({tn, SignalKind::motor_stall, id, 1.0});
        for (auto it = pending_signals_.begin(); it != pending_signals_.end();) {
            if (std::llround(it->t_emt / dt()) <= next) {
                events_.push_back(*it);
                it = pending_signals_.erase(it);
            } else {
                ++it;
            }
        }
        for (auto& cm : machines_) {
            const auto& e = c_.rl(cm.element);
            const double pe = -(2.0 / 3.0) * e.e_now.dot(e.i);
            const double acc = (cm.pm - pe - cm.d * (cm.omega - 1.0)) / (2.0 * cm.h);
            cm.omega += dt() * acc;
            cm.delta += dt() * kOmega0 * (cm.omega - 1.0);
        }
        record();
        if (hook_) hook_(*this);
    }
}

std::vector<EventSignal> EmtEngine::take_events() {
    auto out = std::move(events_);
    events_.clear();
    std::sort(out.begin(), out.end());
    return out;
}

void EmtEngine::record() {
    const auto col = static_cast<Eigen::Index>(c_.sample() % cap_);
    ring_u_.col(col) = c_.u();
    if (has_boundary_el_) ring_i_.col(col) = c_.rl(boundary_el_).i;
    ++recorded_;
}

namespace {

boundary::WaveformBuffer window(const RMatrix& ring, Eigen::Index row0, long last, long have, int n, int cap, double dt) {
    boundary::WaveformBuffer buf;
    const long take = std::min<long>(n, have);
    buf.ready = have >= n;
    for (long s = last - take + 1; s <= last; ++s) {
        buf.t.push_back(static_cast<double>(s) * dt);
        const auto col = static_cast<Eigen::Index>(s % cap);
        for (int k = 0; k < 3; ++k) buf.x[static_cast<std::size_t>(k)].push_back(ring(row0 + k, col));
    }
    return buf;
}

} // namespace

boundary::WaveformBuffer EmtEngine::boundary_current(std::size_t port) const {
    return window(ring_i_, static_cast<Eigen::Index>(3 * port), c_.sample(), recorded_, spc_, cap_, dt());
}

boundary::WaveformBuffer EmtEngine::bus_voltage(net::BusId bus) const {
    return window(ring_u_, node(bus, 0), c_.sample(), recorded_, spc_, cap_, dt());
}

std::vector<ThreePhasePhasor> EmtEngine::boundary_current_phasors() const {
    std::vector<ThreePhasePhasor> out;
    for (std::size_t p = 0; p < ports_.size(); ++p) out.push_back(boundary::extract_phasors(boundary_current(p), kF0));
    return out;
}

ThreePhasePhasor EmtEngine::bus_voltage_phasor(net::BusId bus) const {
    return boundary::extract_phasors(bus_voltage(bus), kF0);
}

RVector EmtEngine::port_currents() const {
    if (!has_boundary_el_) return RVector();
    return c_.rl(boundary_el_).i;
}

std::vector<MotorSnapshot> EmtEngine::motors() const {
    std::vector<MotorSnapshot> out;
    for (const auto& m : c_.motors()) out.push_back({m.id, m.status, m.omega});
    return out;
}

} // namespace hybridsim::emt
