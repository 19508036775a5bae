// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "hybridsim/boundary.hpp"
#include "hybridsim/controller.hpp"
#include "hybridsim/coordinator.hpp"
#include "hybridsim/emt.hpp"
#include "hybridsim/phasor.hpp"
#include "hybridsim/report.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

using namespace hybridsim;

namespace {

int failures = 0;

void verdict(int n, bool ok, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

Complex part(const SequencePhasor& x, int k) { return k == 0 ? x.s0 : (k == 1 ? x.s1 : x.s2); }

Complex rnd(std::mt19937& g, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return {u(g), u(g)};
}

// ---- 1 ----
void algebra() {
    std::mt19937 g(1);
    double rt = 0.0, term = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const ThreePhasePhasor p{rnd(g, -2, 2), rnd(g, -2, 2), rnd(g, -2, 2)};
        const auto b = seq_to_phase(phase_to_seq(p));
        for (std::size_t i = 0; i < 3; ++i) rt = std::max(rt, std::abs(b[i] - p[i]));
    }
    for (int k = 0; k < 1000; ++k) {
        const Eigen::Index n = 3 * (1 + k % 3);
        CMatrix b(n, n), yl(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                b(i, j) = rnd(g, -0.3, 0.3);
                yl(i, j) = rnd(g, -0.5, 0.5);
            }
        TheveninEquivalent3ph th;
        for (Eigen::Index p = 0; p < n / 3; ++p) th.buses.push_back(static_cast<net::BusId>(p + 1));
        th.z = Complex{0.0, 1.0} * (b * b.adjoint()) + 0.05 * CMatrix::Identity(n, n);
        th.v_th = CVector(n);
        for (Eigen::Index i = 0; i < n; ++i) th.v_th(i) = rnd(g, -1, 1);
        yl = yl * yl.adjoint() + CMatrix::Identity(n, n) * Complex{0.2, -0.1};
        const auto nt = boundary::thevenin_to_norton(th);
        const CVector v1 = (CMatrix::Identity(n, n) + th.z * yl).partialPivLu().solve(th.v_th);
        const CVector v2 = (nt.y + yl).partialPivLu().solve(nt.i_n);
        term = std::max(term, (v1 - v2).cwiseAbs().maxCoeff());
    }
    verdict(1, rt < 1e-12 && term < 1e-10, fmt::format("round trip {:.2e}, terminal {:.2e}", rt, term));
}

// ---- 2 ----
/// Random subsystems of lines and shunts joined by link branches. The
/// reference is a monolithic modified-nodal solve with the link currents as
/// extra unknowns.
void mate() {
    std::mt19937 g(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int nb = 3 + static_cast<int>(u(g) * 10.0);
        const int nl = 1 + static_cast<int>(u(g) * 3.0);
        const int np = nb >= 3 && u(g) < 0.5 ? 3 : 2;
        std::vector<net::NetworkModel> parts(static_cast<std::size_t>(np));
        std::vector<int> owner;
        for (int b = 0; b < nb; ++b) {
            const int p = b < np ? b : static_cast<int>(u(g) * np);
            owner.push_back(p);
            net::Bus bus;
            bus.id = b + 1;
            bus.shunt1 = {0.3 + u(g), 0.2 * u(g) - 0.1};
            bus.shunt0 = {0.2 + u(g), 0.1 * u(g)};
            parts[static_cast<std::size_t>(p)].add_bus(bus);
        }
        for (int p = 0; p < np; ++p) {
            const auto& bs = parts[static_cast<std::size_t>(p)].buses();
            for (std::size_t k = 1; k < bs.size(); ++k) {
                net::Branch br;
                br.id = fmt::format("B{}", bs[k].id);
                br.from = bs[k].id;
                br.to = bs[static_cast<std::size_t>(u(g) * static_cast<double>(k))].id;
                br.z1 = {0.005 + 0.05 * u(g), 0.02 + 0.3 * u(g)};
                br.z0 = 3.0 * br.z1;
                parts[static_cast<std::size_t>(p)].add_branch(br);
            }
        }
        std::vector<std::unique_ptr<phasor::Subsystem>> subs;
        std::vector<phasor::Subsystem*> ptr;
        for (int p = 0; p < np; ++p) {
            subs.push_back(std::make_unique<phasor::Subsystem>(fmt::format("s{}", p), parts[static_cast<std::size_t>(p)],
                                                               net::Representation::three_sequence));
            ptr.push_back(subs.back().get());
        }
        std::vector<SequencePhasor> inj(static_cast<std::size_t>(nb));
        for (int b = 0; b < nb; ++b) {
            inj[static_cast<std::size_t>(b)] = {rnd(g, -0.1, 0.1), rnd(g, -1, 1), rnd(g, -0.2, 0.2)};
            subs[static_cast<std::size_t>(owner[static_cast<std::size_t>(b)])]->set_injection(b + 1, inj[static_cast<std::size_t>(b)]);
        }
        std::vector<phasor::Link> links;
        for (int l = 0; l < nl; ++l) {
            const int a = static_cast<int>(u(g) * nb);
            int b = static_cast<int>(u(g) * nb);
            if (owner[static_cast<std::size_t>(a)] == owner[static_cast<std::size_t>(b)]) {
                for (b = 0; b < nb && owner[static_cast<std::size_t>(b)] == owner[static_cast<std::size_t>(a)]; ++b) {}
            }
            const Complex z = u(g) < 0.3 ? Complex{} : Complex{0.01, 0.05 + 0.2 * u(g)};
            links.push_back({fmt::format("K{}", l), static_cast<std::size_t>(owner[static_cast<std::size_t>(a)]), a + 1,
                             static_cast<std::size_t>(owner[static_cast<std::size_t>(b)]), b + 1, z, true});
        }
        bool dup = false;
        for (std::size_t i = 0; i < links.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (std::minmax(links[i].bus_p, links[i].bus_q) == std::minmax(links[j].bus_p, links[j].bus_q)) dup = true;
        if (dup) {
            --trial;
            continue;
        }
        phasor::mate_solve(ptr, links);

        // Reference: sequence networks are decoupled, so solve each one in MNA form.
        for (int s = 0; s < 3; ++s) {
            const Eigen::Index n = nb, m = static_cast<Eigen::Index>(links.size());
            CMatrix a = CMatrix::Zero(n + m, n + m);
            CVector rhs = CVector::Zero(n + m);
            for (int p = 0; p < np; ++p) {
                for (const auto& bus : parts[static_cast<std::size_t>(p)].buses())
                    a(bus.id - 1, bus.id - 1) += s == 0 ? bus.shunt0 : bus.shunt1;
                for (const auto& br : parts[static_cast<std::size_t>(p)].branches()) {
                    const Complex y = 1.0 / (s == 0 ? br.z0 : br.z1);
                    a(br.from - 1, br.from - 1) += y;
                    a(br.to - 1, br.to - 1) += y;
                    a(br.from - 1, br.to - 1) -= y;
                    a(br.to - 1, br.from - 1) -= y;
                }
            }
            for (int b = 0; b < nb; ++b) rhs(b) = part(inj[static_cast<std::size_t>(b)], s);
            for (Eigen::Index l = 0; l < m; ++l) {
                const auto& k = links[static_cast<std::size_t>(l)];
                a(k.bus_p - 1, n + l) += 1.0;
                a(k.bus_q - 1, n + l) -= 1.0;
                a(n + l, k.bus_p - 1) += 1.0;
                a(n + l, k.bus_q - 1) -= 1.0;
                a(n + l, n + l) -= k.z;
            }
            const CVector x = a.fullPivLu().solve(rhs);
            for (int b = 0; b < nb; ++b) {
                const auto v = subs[static_cast<std::size_t>(owner[static_cast<std::size_t>(b)])]->sequence_voltage(b + 1);
                worst = std::max(worst, std::abs(part(v, s) - x(b)));
            }
        }
    }
    verdict(2, worst < 1e-10, fmt::format("max |V_mate - V_ref| {:.2e} over 20 networks", worst));
}

// ---- 3 ----
double rl_error(double dt) {
    emt::Circuit c(1, dt);
    emt::RlElement e;
    e.id = "rl";
    e.ports = {{{0, 1.0}}};
    e.r = RMatrix::Constant(1, 1, 1.0);
    e.l = RMatrix::Constant(1, 1, 0.01);
    e.source = [](double, RVector& v) { v(0) = -1.0; };
    c.add_rl(e);
    c.add_conductance({"short", {{{0, 1.0}}}, RMatrix::Constant(1, 1, 1e12), true});
    const long n = std::lround(0.03 / dt);
    for (long k = 0; k < n; ++k) c.step();
    const double exact = 1.0 - std::exp(-3.0);
    return std::abs(c.rl(0).i(0) - exact) / exact;
}

void emt_accuracy() {
    const double e20 = rl_error(20e-6);
    const double ratio = rl_error(1e-4) / rl_error(5e-5);
    emt::Circuit c(1, 20e-6);
    emt::RlElement l;
    l.id = "l";
    l.ports = {{{0, 1.0}}};
    l.r = RMatrix::Constant(1, 1, 0.0);
    l.l = RMatrix::Constant(1, 1, 1e-3);
    c.add_rl(l);
    emt::CapElement cap;
    cap.id = "c";
    cap.ports = {{{0, 1.0}}};
    cap.c = RMatrix::Constant(1, 1, 1e-3);
    c.add_cap(cap);
    c.u()(0) = 1.0;
    c.prime();
    const double w0 = c.stored_energy();
    const long n = std::lround(10.0 * 2.0 * kPi * 1e-3 / 20e-6);
    for (long k = 0; k < n; ++k) c.step();
    const double drift = std::abs(c.stored_energy() - w0) / w0;
    verdict(3, e20 < 1e-3 && std::abs(ratio - 4.0) < 0.4 && drift < 1e-4,
            fmt::format("RL error {:.2e}, halving ratio {:.3f}, LC drift {:.2e}", e20, ratio, drift));
}

// ---- 4 ----
void extraction() {
    const double dt = 20e-6;
    const int n = boundary::samples_per_cycle(60.0, dt);
    auto grid = [&](double t_end) {
        std::vector<double> t;
        for (int k = 0; k < n; ++k) t.push_back(t_end - (n - 1 - k) * dt);
        return t;
    };
    const Complex x = std::polar(1.3, 0.7);
    const auto t = grid(0.61234);
    std::vector<double> y, yd;
    const double t_clear = 0.57;
    const auto td = grid(t_clear + 1.0 / 60.0);
    for (double s : t) y.push_back(std::real(x * std::polar(1.0, 2.0 * kPi * 60.0 * s)));
    for (double s : td)
        yd.push_back(std::real(x * std::polar(1.0, 2.0 * kPi * 60.0 * s)) + 0.8 * std::abs(x) * std::exp(-(s - t_clear) / 0.026));
    const double e_pure = std::abs(boundary::extract_phasor(t, y, 60.0) - x);
    const double e_dc = std::abs(boundary::extract_phasor(td, yd, 60.0) - x) / std::abs(x);
    verdict(4, e_pure < 1e-6 && e_dc < 0.02, fmt::format("pure tone {:.2e}, decaying offset {:.2f}%", e_pure, 100.0 * e_dc));
}

// ---- 5 ----
bool synthetic_counter() {
    const SwitchConfig cfg;
    ControllerState s;
    double t = 0.8;
    auto push = [&](double dv) {
        t += 0.005;
        s = controller_update(s, cfg, 0.005, dv, 0.0, t, 0.57);
        return s.decision;
    };
    for (int k = 0; k < 6; ++k)
        if (push(0.004)) return false;
    if (push(0.006) || s.counter != 0) return false;
    for (int k = 0; k < 6; ++k)
        if (push(0.004)) return false;
    return push(0.004);
}

bool hold_window_ok(const SimulationResult& r, double t_clear, const SwitchConfig& cfg, double dt) {
    if (!r.t_switch) return true;
    if (*r.t_switch + 1e-9 < t_clear + cfg.t_delay) return false;
    const int h = hold_steps(cfg, dt);
    std::vector<double> dv;
    for (const auto& c : r.controller)
        if (c.t <= *r.t_switch + 1e-9) dv.push_back(c.max_dv);
    if (static_cast<int>(dv.size()) < h) return false;
    for (std::size_t k = dv.size() - static_cast<std::size_t>(h); k < dv.size(); ++k)
        if (!(dv[k] < cfg.eps_dv)) return false;
    return true;
}

double max_dev(const SimulationResult& a, const SimulationResult& b, const std::string& col, double t_from) {
    const auto t = a.column("time_s");
    const auto x = a.column(col), y = b.column(col);
    double d = 0.0;
    for (std::size_t k = 0; k < std::min(x.size(), y.size()); ++k)
        if (t[k] >= t_from - 1e-12) d = std::max(d, std::abs(x[k] - y[k]));
    return d;
}

SimulationResult run(const CaseData& c, RunMode mode, TransportKind tr = TransportKind::inproc) {
    RunOptions o;
    o.mode = mode;
    o.transport = tr;
    return run_simulation(c, o);
}

std::string stalled(const std::map<std::string, bool>& m) {
    std::string s;
    for (const auto& [id, st] : m)
        if (st) s += (s.empty() ? "" : ",") + id;
    return s.empty() ? "none" : s;
}

} // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    algebra();
    mate();
    emt_accuracy();
    extraction();

    const CaseData c = load_case(std::string(HYBRIDSIM_CASE_DIR) + "/case9.hyb");
    const double t_clear = c.faults.front().t_off;
    const double dt = c.config.dt_ts;

    const auto sw = run(c, RunMode::hybrid_switch);
    const auto ns = run(c, RunMode::hybrid_no_switch);
    CaseData c_off = c;
    c_off.config.reconcile = false;
    const auto off = run(c_off, RunMode::hybrid_switch);
    const auto ts = run(c, RunMode::ts_only);
    const auto tcp = run(c, RunMode::hybrid_switch, TransportKind::tcp);

    {
        bool ok = synthetic_counter();
        for (const auto* r : {&sw, &ns, &off, &tcp}) ok = ok && hold_window_ok(*r, t_clear, c.config.sw, dt);
        verdict(5, ok, fmt::format("delay and hold window hold in every run, counter reset {}",
                                   synthetic_counter() ? "ok" : "broken"));
    }

    {
        const bool a = sw.t_switch && *sw.t_switch > 0.77 && *sw.t_switch < 2.0;
        double dv = 1e9, jump = 0.0, typical = 0.0;
        if (sw.t_switch) {
            dv = std::max(max_dev(sw, ns, "v1_5", *sw.t_switch), max_dev(sw, ns, "v1_7", *sw.t_switch));
            const auto t = sw.column("time_s");
            std::size_t ks = 0;
            while (ks < t.size() && t[ks] < *sw.t_switch - 1e-9) ++ks;
            for (const auto& m : c.net.machines()) {
                const auto w = sw.column("omega_" + m.id);
                if (ks + 1 < w.size()) jump = std::max(jump, std::abs(w[ks + 1] - w[ks]));
                if (ks >= 2) typical = std::max(typical, std::abs(w[ks - 1] - w[ks - 2]));
            }
        }
        verdict(6, a && dv < 0.01 && jump < 1e-4,
                fmt::format("switch at {:.3f} s, post-switch |dV1| bus 5/7 {:.2e} pu, speed step at switch {:.2e} pu "
                            "(previous step {:.2e}), run {:.1f} s",
                            sw.t_switch.value_or(-1.0), dv, jump, typical, sw.timing.total));
    }

    {
        const std::string ph = stalled(off.phasor_stalled), em = stalled(off.emt_stalled);
        std::map<std::string, bool> emt_as_phasor;
        for (const auto& [id, st] : off.emt_stalled) emt_as_phasor[c.emt_map.at(id)] = st;
        const bool differ = emt_as_phasor != off.phasor_stalled;
        verdict(7, differ && !off.t_switch,
                fmt::format("phasor stalled {{{}}}, EMT stalled {{{}}}, switch {}", ph, em, off.t_switch ? "yes" : "never"));
    }

    {
        const double ratio = sw.timing.total / ns.timing.total;
        verdict(8, ratio < 0.5, fmt::format("wall clock {:.2f} s vs {:.2f} s, ratio {:.3f} ({:.1f}% reduction)", sw.timing.total,
                                            ns.timing.total, ratio, 100.0 * (1.0 - ratio)));
    }

    {
        bool all_ts = !ts.phasor_stalled.empty();
        for (const auto& [id, st] : ts.phasor_stalled) all_ts = all_ts && st;
        bool all_hy = !sw.phasor_stalled.empty(), any_hy = false;
        for (const auto& [id, st] : sw.phasor_stalled) {
            all_hy = all_hy && st;
            any_hy = any_hy || st;
        }
        // the same difference through the comparison report
        auto table = [](const SimulationResult& r) {
            std::ostringstream out;
            report::write_timeseries(out, r);
            std::istringstream in(out.str());
            return report::read_csv(in);
        };
        const auto cmp = report::compare(table(ts), table(sw), {"v1_5"}, 1.0);
        verdict(9, all_ts && any_hy && !all_hy && !cmp.stall_notes.empty(),
                fmt::format("ts_only stalled {{{}}}, hybrid_switch stalled {{{}}}, {} stall notes", stalled(ts.phasor_stalled),
                            stalled(sw.phasor_stalled), cmp.stall_notes.size()));
    }

    {
        bool same_events = tcp.events.size() == sw.events.size();
        for (std::size_t k = 0; same_events && k < sw.events.size(); ++k) {
            const auto &a = sw.events[k], &b = tcp.events[k];
            same_events = a.signal.t_emt == b.signal.t_emt && a.signal.target == b.signal.target &&
                          a.signal.kind == b.signal.kind && a.t_delivered == b.t_delivered && a.applied == b.applied;
        }
        double dv = 0.0;
        if (tcp.rows.size() == sw.rows.size())
            for (const auto& col : sw.columns)
                if (col.rfind("v", 0) == 0) dv = std::max(dv, max_dev(sw, tcp, col, 0.0));
        const bool ok = same_events && tcp.rows.size() == sw.rows.size() && dv < 1e-12 && tcp.t_switch == sw.t_switch;
        verdict(10, ok, fmt::format("{} events identical: {}, max voltage difference {:.2e}", sw.events.size(),
                                    same_events ? "yes" : "no", dv));
    }

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
