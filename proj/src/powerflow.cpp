#include "hybridsim/powerflow.hpp"
#include "hybridsim/acmotor.hpp"
#include "hybridsim/ybus.hpp"

#include <cmath>
#include <queue>

namespace hybridsim::phasor {

namespace {

enum class Kind { pq, pv, slack };

Eigen::Matrix3cd load_block(const net::LoadData& l) {
    Eigen::Matrix3cd y = Eigen::Matrix3cd::Zero();
    for (int k = 0; k < 3; ++k)
        if (l.phases & (1u << k)) y(k, k) = Complex{l.p, -l.q};
    return y;
}

} // namespace

PowerFlowResult solve_power_flow(const net::NetworkModel& net, double tol, int max_iter) {
    const auto n = static_cast<Eigen::Index>(net.size());
    net::AdmittanceAssembler asmb(net.size(), net::Representation::positive_sequence);
    asmb.add_network(net);
    for (const auto& l : net.loads()) {
        const auto k = net.bus_index(l.bus);
        asmb.add_phase(k, k, load_block(l));
    }
    const CMatrix y = CMatrix(asmb.build());

    std::vector<Kind> kind(net.size(), Kind::pq);
    RVector p_sched = RVector::Zero(n);
    RVector v_set = RVector::Ones(n);
    int n_slack = 0;
    for (const auto& m : net.machines()) {
        const auto k = net.bus_index(m.bus);
        if (m.slack) {
            kind[k] = Kind::slack;
            ++n_slack;
        } else if (kind[k] != Kind::slack) {
            kind[k] = Kind::pv;
        }
        if (!m.slack) p_sched(static_cast<Eigen::Index>(k)) += m.p_set;
        v_set(static_cast<Eigen::Index>(k)) = m.v_set;
    }
    if (n_slack != 1) throw SimulationError("power flow needs exactly one slack machine");

    std::vector<AcMotorPerf> motors;
    for (const auto& m : net.motors()) motors.emplace_back(m, make_curve(m));

    // Flat start, with angles carried across phase-shifting transformers.
    RVector ang = RVector::Zero(n);
    {
        std::vector<bool> seen(net.size(), false);
        std::queue<std::size_t> q;
        for (std::size_t k = 0; k < net.size(); ++k)
            if (kind[k] == Kind::slack) {
                seen[k] = true;
                q.push(k);
            }
        while (!q.empty()) {
            const auto k = q.front();
            q.pop();
            for (const auto& br : net.branches()) {
                if (!br.closed() || br.is_virtual_breaker) continue;
                const auto f = net.bus_index(br.from);
                const auto t = net.bus_index(br.to);
                const double sh = br.shift_deg * kPi / 180.0;
                if (f == k && !seen[t]) {
                    ang(static_cast<Eigen::Index>(t)) = ang(static_cast<Eigen::Index>(f)) + sh;
                    seen[t] = true;
                    q.push(t);
                } else if (t == k && !seen[f]) {
                    ang(static_cast<Eigen::Index>(f)) = ang(static_cast<Eigen::Index>(t)) - sh;
                    seen[f] = true;
                    q.push(f);
                }
            }
        }
    }
    CVector v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = std::polar(kind[k] == Kind::pq ? 1.0 : v_set(k), ang(k));

    // Unknowns: angle of every non-slack bus, magnitude of every PQ bus.
    std::vector<Eigen::Index> ang_idx, mag_idx;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (kind[k] != Kind::slack) ang_idx.push_back(k);
        if (kind[k] == Kind::pq) mag_idx.push_back(k);
    }
    const auto na = static_cast<Eigen::Index>(ang_idx.size());
    const auto nm = static_cast<Eigen::Index>(mag_idx.size());

    auto specified = [&](const CVector& vv) {
        CVector s = CVector::Zero(n);
        for (Eigen::Index k = 0; k < n; ++k) s(k) = p_sched(k);
        for (const auto& m : motors) {
            const auto k = static_cast<Eigen::Index>(net.bus_index(m.data().bus));
            s(k) -= m.power(std::abs(vv(k))) / 3.0;
        }
        return s;
    };
    auto mismatch = [&](const CVector& vv) {
        const CVector s_calc = vv.cwiseProduct((y * vv).conjugate());
        const CVector ds = specified(vv) - s_calc;
        RVector f(na + nm);
        for (Eigen::Index r = 0; r < na; ++r) f(r) = ds(ang_idx[r]).real();
        for (Eigen::Index r = 0; r < nm; ++r) f(na + r) = ds(mag_idx[r]).imag();
        return f;
    };

    PowerFlowResult out;
    RVector f = mismatch(v);
    for (int it = 0; it <= max_iter; ++it) {
        out.iterations = it;
        out.mismatch = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
        if (out.mismatch < tol) break;
        if (it == max_iter)
            throw ConvergenceError("power flow did not converge in " + std::to_string(max_iter) + " iterations",
                                   out.mismatch);
        // Numerical Jacobian: the motor curves make analytic terms awkward and
        // the systems here are small.
        RMatrix jac(na + nm, na + nm);
        const double h = 1e-7;
        for (Eigen::Index c = 0; c < na + nm; ++c) {
            CVector vp = v;
            if (c < na) vp(ang_idx[c]) *= std::polar(1.0, h);
            else vp(mag_idx[c - na]) *= (1.0 + h / std::abs(v(mag_idx[c - na])));
            jac.col(c) = (mismatch(vp) - f) / h;
        }
        const RVector dx = jac.fullPivLu().solve(-f);
        auto apply = [&](double scale) {
            CVector vn = v;
            for (Eigen::Index r = 0; r < na; ++r) vn(ang_idx[r]) *= std::polar(1.0, scale * dx(r));
            for (Eigen::Index r = 0; r < nm; ++r) {
                const auto k = mag_idx[r];
                vn(k) = std::polar(std::abs(v(k)) + scale * dx(na + r), std::arg(vn(k)));
            }
            return vn;
        };
        // Backtrack when the full step increases the mismatch.
        double scale = 1.0;
        CVector vn = apply(scale);
        RVector fn = mismatch(vn);
        while (fn.cwiseAbs().maxCoeff() > out.mismatch && scale > 1.0 / 64.0) {
            scale *= 0.5;
            vn = apply(scale);
            fn = mismatch(vn);
        }
        v = vn;
        f = fn;
    }

    out.v = v;
    const CVector s_calc = v.cwiseProduct((y * v).conjugate());
    const CVector s_spec = specified(v);
    // Net injection at a generator bus is the machine output minus local
    // draws; split it among the bus's machines (slack takes the remainder).
    for (const auto& m : net.machines()) {
        const auto k = static_cast<Eigen::Index>(net.bus_index(m.bus));
        Complex local_draw = s_spec(k) - p_sched(k);   // motor draws (negative)
        Complex total = s_calc(k) - local_draw;
        double p_others = 0.0;
        int count = 0;
        for (const auto& o : net.machines())
            if (o.bus == m.bus) {
                ++count;
                if (&o != &m && !o.slack) p_others += o.p_set;
            }
        const double p = m.slack ? total.real() - p_others : m.p_set;
        out.machine_s[m.id] = Complex{p, total.imag() / count};
    }
    return out;
}

} // namespace hybridsim::phasor
