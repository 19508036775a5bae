#include "hybridsim/coordinator.hpp"

#include "hybridsim/boundary.hpp"
#include "hybridsim/emt_engine.hpp"
#include "hybridsim/phasor.hpp"
#include "hybridsim/powerflow.hpp"
#include "hybridsim/split.hpp"
#include "hybridsim/transport.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>

namespace hybridsim {

std::string to_string(RunMode m) {
    switch (m) {
    case RunMode::ts_only: return "ts_only";
    case RunMode::hybrid_no_switch: return "hybrid_no_switch";
    case RunMode::hybrid_switch: return "hybrid_switch";
    case RunMode::emt_only: return "emt_only";
    }
    return "?";
}

RunMode parse_run_mode(const std::string& s) {
    for (auto m : {RunMode::ts_only, RunMode::hybrid_no_switch, RunMode::hybrid_switch, RunMode::emt_only})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown run mode '" + s + "'");
}

std::size_t SimulationResult::column_index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::out_of_range("no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> SimulationResult::column(const std::string& name) const {
    const auto k = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double max_abs_diff(const ThreePhasePhasor& a, const ThreePhasePhasor& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < 3; ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

class Runner {
public:
    Runner(const CaseData& c, const RunOptions& opt) : c_(c), opt_(opt), cfg_(c.config) {
        res_.mode = opt.mode;
        dt_ = cfg_.dt_ts;
        n_steps_ = std::llround(cfg_.t_end / dt_);
    }

    SimulationResult run() {
        const auto t_start = Clock::now();
        pf_ = phasor::solve_power_flow(c_.net);
        for (std::size_t k = 0; k < c_.net.size(); ++k) v1_[c_.net.buses()[k].id] = pf_.v(static_cast<Eigen::Index>(k));
        note("power flow converged in " + std::to_string(pf_.iterations) + " iterations");
        switch (opt_.mode) {
        case RunMode::ts_only: run_ts_only(); break;
        case RunMode::emt_only: run_emt_only(); break;
        case RunMode::hybrid_no_switch:
        case RunMode::hybrid_switch: run_hybrid(); break;
        }
        res_.timing.total = seconds_since(t_start);
        return std::move(res_);
    }

private:
    double t_of(long k) const { return static_cast<double>(k) * dt_; }
    long k_of(double t) const { return std::llround(t / dt_); }

    void note(const std::string& s) {
        spdlog::info("{}", s);
        res_.log.push_back(s);
    }

    // ---- output layout ---------------------------------------------------

    void make_columns() {
        res_.columns = {"time_s"};
        for (const auto& b : c_.net.buses()) {
            const auto id = std::to_string(b.id);
            for (const char* q : {"v1_", "ang1_", "va_", "vb_", "vc_"}) res_.columns.push_back(q + id);
        }
        for (const auto& m : c_.net.machines()) {
            res_.columns.push_back("delta_" + m.id);
            res_.columns.push_back("omega_" + m.id);
        }
        for (const auto& m : c_.net.motors()) res_.columns.push_back("status_" + m.id);
        if (has_dual_status())
            for (const auto& m : c_.net.motors()) res_.columns.push_back("emt_status_" + m.id);
        res_.columns.push_back("stage");
    }

    struct BusView {
        ThreePhasePhasor abc;
        SequencePhasor seq;
    };

    BusView bus_view(net::BusId id) const {
        if (opt_.mode == RunMode::emt_only) {
            ThreePhasePhasor v = init_abc_.at(id);
            const auto buf = engine_->bus_voltage(id);
            if (buf.ready) v = boundary::extract_phasors(buf, emt::kF0);
            return {v, phase_to_seq(v)};
        }
        for (const auto* s : subs_)
            if (s->net().has_bus(id)) return {s->phase_voltage(id), s->sequence_voltage(id)};
        throw std::logic_error("bus " + std::to_string(id) + " is in no subsystem");
    }

    const phasor::Machine* machine(const std::string& id) const {
        for (const auto* s : subs_)
            for (const auto& m : s->machines())
                if (m.data().id == id) return &m;
        return nullptr;
    }

    const phasor::AcMotorPerf* phasor_motor(const std::string& id) const {
        for (auto* s : subs_)
            if (const auto* m = const_cast<phasor::Subsystem*>(s)->find_motor(id)) return m;
        return nullptr;
    }

    void record(long k, int stage) {
        std::vector<double> row;
        row.reserve(res_.columns.size());
        row.push_back(t_of(k));
        for (const auto& b : c_.net.buses()) {
            const auto v = bus_view(b.id);
            row.push_back(std::abs(v.seq.s1));
            row.push_back(std::arg(v.seq.s1) * 180.0 / kPi);
            for (std::size_t p = 0; p < 3; ++p) row.push_back(std::abs(v.abc[p]));
        }
        for (const auto& md : c_.net.machines()) {
            if (opt_.mode == RunMode::emt_only) {
                const auto& ms = engine_->machines();
                const auto it = std::find_if(ms.begin(), ms.end(), [&](const auto& m) { return m.id == md.id; });
                row.push_back(it->delta);
                row.push_back(it->omega);
            } else {
                const auto* m = machine(md.id);
                row.push_back(m->state().delta);
                row.push_back(m->state().omega);
            }
        }
        for (const auto& md : c_.net.motors()) {
            double running = 1.0;
            if (opt_.mode == RunMode::emt_only) {
                running = emt_running(md);
            } else {
                const auto* m = phasor_motor(md.id);
                running = m->status() == phasor::MotorStatus::running ? 1.0 : 0.0;
            }
            row.push_back(running);
        }
        // last known EMT status; the EMT side is idle outside stage 2
        if (has_dual_status())
            for (const auto& md : c_.net.motors()) row.push_back(emt_running(md));
        row.push_back(stage);
        res_.rows.push_back(std::move(row));
    }

    bool has_dual_status() const { return opt_.mode == RunMode::hybrid_switch || opt_.mode == RunMode::hybrid_no_switch; }

    std::string emt_id(const net::MotorData& md) const { return md.emt_id.empty() ? md.id : md.emt_id; }

    bool has_emt_status(const net::MotorData& md) const { return emt_status_.contains(emt_id(md)); }

    double emt_running(const net::MotorData& md) const {
        const auto it = emt_status_.find(emt_id(md));
        return it == emt_status_.end() || !it->second ? 1.0 : 0.0;
    }

    void finish_status() {
        for (const auto& md : c_.net.motors()) {
            if (opt_.mode != RunMode::emt_only) {
                if (const auto* m = phasor_motor(md.id)) res_.phasor_stalled[md.id] = m->status() == phasor::MotorStatus::stalled;
            }
            if (has_emt_status(md)) res_.emt_stalled[emt_id(md)] = emt_status_.at(emt_id(md));
        }
    }

    // ---- faults on the phasor side ------------------------------------------

    /// Applies faults switching at grid point k to `sub`. True if anything changed.
    bool phasor_fault_events(long k, phasor::Subsystem& sub) {
        bool changed = false;
        for (const auto& f : c_.faults) {
            if (!sub.net().has_bus(f.bus)) continue;
            if (k_of(f.t_on) == k && !sub.has_fault(f.id)) {
                sub.apply_fault(f);
                note(fmt::format("t={:.4f} fault {} applied at bus {}", t_of(k), f.id, f.bus));
                changed = true;
            }
            if (k_of(f.t_off) == k && sub.has_fault(f.id)) {
                sub.clear_fault(f.id);
                note(fmt::format("t={:.4f} fault {} cleared", t_of(k), f.id));
                changed = true;
            }
        }
        return changed;
    }

    /// Most recent clearing time among faults started by t (t_hybrid_start if none).
    double t_clear_at(double t) const {
        double tc = cfg_.t_hybrid_start;
        for (const auto& f : c_.faults)
            if (f.t_on <= t + 1e-9) tc = std::max(tc, f.t_off);
        return tc;
    }

    phasor::SolveOptions solve_opts() const { return {}; }

    void step_group(phasor::PhasorGroup& g, long k) {
        g.step(dt_, cfg_.ts_tol, cfg_.ts_max_iter, solve_opts());
        g.post_step(t_of(k + 1), solve_opts());
    }

    // ---- modes ------------------------------------------------------------

    void run_ts_only() {
        make_columns();
        full_ = std::make_unique<phasor::Subsystem>("full", c_.net, net::Representation::positive_sequence);
        full_->initialize(v1_, pf_.machine_s);
        subs_ = {full_.get()};
        phasor::PhasorGroup g({full_.get()}, {});
        const auto t0 = Clock::now();
        g.network_solve(solve_opts());
        note("stage 1: positive-sequence phasor simulation of the whole network");
        for (long k = 0; k < n_steps_; ++k) {
            if (phasor_fault_events(k, *full_)) g.network_solve(solve_opts());
            if (k == 0) record(0, 1);
            motor_log(k);
            step_group(g, k);
            record(k + 1, 1);
        }
        motor_log(n_steps_);
        res_.timing.stage1 = seconds_since(t0);
        finish_status();
    }

    /// Logs autonomous phasor stalls as they appear.
    void motor_log(long k) {
        for (const auto* s : subs_)
            for (const auto& m : s->motors()) {
                const bool st = m.status() == phasor::MotorStatus::stalled;
                auto& seen = phasor_seen_[m.data().id];
                if (st && !seen) note(fmt::format("t={:.4f} phasor motor {} stalled", t_of(k), m.data().id));
                seen = st;
            }
    }

    void run_emt_only() {
        make_columns();
        engine_ = std::make_unique<emt::EmtEngine>(c_.net, std::vector<net::BusId>{}, cfg_.dt_emt);
        for (const auto& f : c_.faults) engine_->add_fault(f);
        for (const auto& s : c_.scripted) engine_->add_signal(s);
        attach_dump(*engine_);
        for (const auto& b : c_.net.buses()) init_abc_[b.id] = balanced(v1_.at(b.id));
        const auto t0 = Clock::now();
        engine_->initialize(0.0, init_abc_, nullptr, &pf_.machine_s);
        note("EMT simulation of the whole network");
        update_emt_status(engine_->motors());
        record(0, 2);
        for (long k = 0; k < n_steps_; ++k) {
            engine_->run_until(t_of(k + 1));
            for (const auto& e : engine_->take_events()) {
                res_.events.push_back({e, t_of(k + 1), {}, false});
                note(fmt::format("t={:.6f} EMT {} {}", e.t_emt, to_string(e.kind), e.target));
            }
            update_emt_status(engine_->motors());
            record(k + 1, 2);
        }
        res_.timing.stage2 = seconds_since(t0);
        finish_status();
    }

    void update_emt_status(const std::vector<emt::MotorSnapshot>& ms) {
        for (const auto& m : ms) emt_status_[m.id] = m.status == emt::MotorStatus::stalled;
    }

    void attach_dump(emt::EmtEngine& eng) {
        if (opt_.waveform_path.empty()) return;
        dump_ = std::make_shared<std::ofstream>(opt_.waveform_path);
        if (!*dump_) throw std::runtime_error("cannot write " + opt_.waveform_path);
        auto& out = *dump_;
        out << "time_s";
        for (auto b : eng.ports())
            for (char p : {'a', 'b', 'c'}) out << ",i" << p << "_" << b;
        std::vector<std::pair<std::string, int>> nodes;
        for (const auto& b : eng.net().buses())
            for (int p = 0; p < 3; ++p) {
                out << ",v" << "abc"[p] << "_" << b.id;
                nodes.push_back({"", eng.node(b.id, p)});
            }
        for (const auto& m : eng.circuit().motors()) out << ",speed_" << m.id;
        out << "\n";
        out.precision(9);
        auto file = dump_;
        eng.set_sample_hook([file, nodes](const emt::EmtEngine& e) {
            auto& o = *file;
            o << e.time();
            const RVector i = e.port_currents();
            for (Eigen::Index k = 0; k < i.size(); ++k) o << ',' << i(k);
            for (const auto& [name, n] : nodes) o << ',' << e.circuit().u()(n);
            for (const auto& m : e.circuit().motors()) o << ',' << m.omega;
            o << '\n';
        });
    }

    void run_hybrid() {
        make_columns();
        split_ = net::split_network(c_.net, c_.boundary);
        for (const auto& vb : split_.breakers) {
            ext_ports_.push_back(vb.boundary);
            det_ports_.push_back(vb.dummy);
            v1_[vb.dummy] = v1_.at(vb.boundary);
        }
        // Each boundary bus sits on one side; keep the external id on the external side.
        for (std::size_t p = 0; p < split_.breakers.size(); ++p)
            if (!split_.external.has_bus(ext_ports_[p])) std::swap(ext_ports_[p], det_ports_[p]);

        det_ = std::make_unique<phasor::Subsystem>("detailed", split_.detailed, net::Representation::three_phase);
        ext_ = std::make_unique<phasor::Subsystem>("external", split_.external, net::Representation::three_sequence);
        det_->initialize(v1_, pf_.machine_s);
        ext_->initialize(v1_, pf_.machine_s);
        subs_ = {ext_.get(), det_.get()};

        std::vector<phasor::Link> links;
        for (std::size_t p = 0; p < ext_ports_.size(); ++p)
            links.push_back({split_.breakers[p].id, 0, ext_ports_[p], 1, det_ports_[p], Complex{}, true});
        links_ = links;

        // Stage 1.
        auto t_stage = Clock::now();
        phasor::PhasorGroup mate({ext_.get(), det_.get()}, links);
        mate.network_solve(solve_opts());
        note("stage 1: phasor simulation, detailed and external systems linked through virtual breakers");
        const long k_h = k_of(cfg_.t_hybrid_start);
        long k = 0;
        record(0, 1);
        for (; k < k_h; ++k) {
            if (phasor_fault_events(k, *det_)) mate.network_solve(solve_opts());
            step_group(mate, k);
            record(k + 1, 1);
        }
        motor_log(k);
        res_.timing.stage1 = seconds_since(t_stage);

        // Stage 2.
        t_stage = Clock::now();
        auto chan = enter_stage2(k, mate);
        const bool switching = opt_.mode == RunMode::hybrid_switch && cfg_.switching;
        bool switched = false;
        for (; k < n_steps_; ++k) {
            interaction_step(k, *chan);
            record(k + 1, 2);
            if (switching && ctl_.decision) {
                switched = true;
                ++k;
                break;
            }
        }
        res_.timing.stage2 = seconds_since(t_stage);
        update_emt_status(last_frame_.motors);

        if (!switched) {
            finish_status();
            return;
        }

        // Stage 3.
        t_stage = Clock::now();
        chan->switch_notice(t_of(k));
        chan.reset();
        res_.t_switch = t_of(k);
        det_->clear_norton();
        ext_->clear_injections();
        det_->release_overrides();
        phasor::PhasorGroup mate3({ext_.get(), det_.get()}, links_);
        try {
            mate3.network_solve(solve_opts());
        } catch (const TopologyError& e) {
            throw SimulationError(fmt::format("stage 3 at t={:.4f}: admittance rebuild failed: {}", t_of(k), e.what()));
        }
        note(fmt::format("t={:.4f} stage 3: switched back to phasor simulation", t_of(k)));
        for (; k < n_steps_; ++k) {
            for (const auto& f : c_.faults)
                if (k_of(f.t_on) == k)
                    throw SimulationError(fmt::format(
                        "fault {} at t={:.4f} occurs after the switch to phasor simulation at t={:.4f}; "
                        "run with switching disabled or delay the switch past the last fault",
                        f.id, f.t_on, *res_.t_switch));
            phasor_fault_events(k, *det_);
            step_group(mate3, k);
            motor_log(k + 1);
            record(k + 1, 3);
        }
        res_.timing.stage3 = seconds_since(t_stage);
        finish_status();
    }

    std::vector<SequencePhasor> link_injection(const phasor::PhasorGroup& g) const {
        // Link current flows external -> detailed; the injection into the
        // external bus is its negative.
        std::vector<SequencePhasor> out;
        const auto& il = g.link_currents();
        for (std::size_t p = 0; p < links_.size(); ++p)
            out.push_back(seq_from_vector012(-il.segment<3>(static_cast<Eigen::Index>(3 * p))));
        return out;
    }

    TheveninEquivalent3ph external_thevenin(const std::vector<SequencePhasor>& i_inj) {
        ext_->refactor_if_needed();
        if (!z_valid_ || z_version_ != ext_->version()) {
            z_th_ = boundary::thevenin_impedance(*ext_, ext_ports_, zero_open_);
            z_version_ = ext_->version();
            z_valid_ = true;
        }
        auto th = boundary::thevenin_external(*ext_, ext_ports_, z_th_, zero_open_, i_inj);
        th.buses = det_ports_;
        if (zero_open_) {
            // No zero-sequence path: a large resistance keeps the EMT source branch regular.
            for (std::size_t p = 0; p < det_ports_.size(); ++p)
                th.z.block<3, 3>(static_cast<Eigen::Index>(3 * p), static_cast<Eigen::Index>(3 * p)).array() += 1e4 / 3.0;
        }
        return th;
    }

    std::unique_ptr<transport::EmtChannel> enter_stage2(long k, phasor::PhasorGroup& mate) {
        const double t = t_of(k);
        res_.t_stage2 = t;
        i_now_ = link_injection(mate);
        i_prev_ = i_now_;
        for (std::size_t p = 0; p < ext_ports_.size(); ++p) ext_->set_injection(ext_ports_[p], i_now_[p]);
        const auto th = external_thevenin(i_now_);
        det_->set_norton(boundary::thevenin_to_norton(th));
        ext_group_ = phasor::PhasorGroup({ext_.get()}, {});
        det_group_ = phasor::PhasorGroup({det_.get()}, {});
        ext_group_.network_solve(solve_opts());
        det_group_.network_solve(solve_opts());

        auto engine = std::make_unique<emt::EmtEngine>(split_.detailed, det_ports_, cfg_.dt_emt);
        for (const auto& f : c_.faults)
            if (split_.detailed.has_bus(f.bus)) engine->add_fault(f);
        for (const auto& s : c_.scripted) engine->add_signal(s);
        attach_dump(*engine);
        auto chan = opt_.transport == TransportKind::tcp ? transport::make_tcp_channel(std::move(engine))
                                                         : transport::make_inproc_channel(std::move(engine));
        transport::EmtInit init;
        init.t0 = t;
        init.warmup = cfg_.warmup;
        for (const auto& b : split_.detailed.buses()) init.v[b.id] = det_->phase_voltage(b.id);
        init.th = th;
        init.motor_speed = opt_.warmup_motor_speed;
        last_frame_ = chan->initialize(init);

        double resid = 0.0;
        for (std::size_t p = 0; p < det_ports_.size(); ++p) {
            resid = std::max(resid, max_abs_diff(last_frame_.i_port[p], seq_to_phase(i_now_[p])));
            resid = std::max(resid, max_abs_diff(last_frame_.v_port[p], det_->phase_voltage(det_ports_[p])));
        }
        res_.warmup_residual = resid;
        if (!(resid < cfg_.warmup_tol))
            throw SimulationError(fmt::format("stage 2 at t={:.4f}: EMT warm-up residual {:.4g} pu exceeds {:.4g} pu; "
                                              "the EMT start does not match the phasor snapshot",
                                              t, resid, cfg_.warmup_tol));
        note(fmt::format("t={:.4f} stage 2: hybrid simulation (warm-up residual {:.3e} pu)", t, resid));
        if (cfg_.reconcile)
            for (const auto& [emt, ph] : c_.emt_map)
                if (det_->find_motor(ph)) det_->apply_override(ph, SignalKind::motor_run);
        update_emt_status(last_frame_.motors);
        ctl_ = ControllerState{};
        ctl_.t_clear = t_clear_at(t);
        return chan;
    }

    void interaction_step(long k, transport::EmtChannel& chan) {
        const double t = t_of(k);
        // (1) injection frame for t, from the batch that ended at t.
        if (std::abs(last_frame_.t - t) > 0.5 * cfg_.dt_emt)
            throw std::logic_error(fmt::format("injection frame for t={} is not ready (frame at {})", t, last_frame_.t));
        i_now_.clear();
        for (const auto& i : last_frame_.i_port) i_now_.push_back(phase_to_seq(i));
        const auto frame = boundary::injections_to_sequence(ext_ports_, last_frame_.i_port, t);
        for (const auto& e : last_frame_.events) queue_.push_back(e);
        update_emt_status(last_frame_.motors);

        // (2) external system one step with the extrapolated injection.
        std::vector<SequencePhasor> i_pred;
        for (std::size_t p = 0; p < frame.i.size(); ++p) {
            SequencePhasor s;
            s.s1 = 2.0 * frame.i[p].s1 - i_prev_[p].s1;
            s.s2 = 2.0 * frame.i[p].s2 - i_prev_[p].s2;
            s.s0 = 2.0 * frame.i[p].s0 - i_prev_[p].s0;
            i_pred.push_back(s);
            ext_->set_injection(ext_ports_[p], s);
        }
        step_group(ext_group_, k);

        // (3) Thévenin at t+ΔT, (4) EMT batch in flight.
        const auto th = external_thevenin(i_pred);
        chan.start_batch(th, t_of(k + 1));

        // (5) Norton, (6) detailed phasor model with pending events.
        const auto norton = boundary::thevenin_to_norton(th);
        bool changed = phasor_fault_events(k, *det_);
        std::sort(queue_.begin(), queue_.end());
        for (const auto& e : queue_) {
            EventRecord rec{e, t, {}, false};
            if (cfg_.reconcile) {
                const auto it = c_.emt_map.find(e.target);
                if (it == c_.emt_map.end())
                    throw SimulationError("event for EMT element '" + e.target + "' has no phasor mapping");
                rec.phasor_target = it->second;
                if (e.kind == SignalKind::motor_stall || e.kind == SignalKind::motor_run) {
                    if (!det_->find_motor(it->second))
                        throw SimulationError("mapped phasor target '" + it->second + "' is not a motor of the detailed system");
                    if (det_->apply_override(it->second, e.kind)) changed = true;
                    rec.applied = true;
                }
            }
            note(fmt::format("t={:.6f} EMT {} {} delivered at t={:.4f}{}", e.t_emt, to_string(e.kind), e.target, t,
                             rec.applied ? " -> " + rec.phasor_target : ""));
            res_.events.push_back(std::move(rec));
        }
        queue_.clear();
        if (changed) det_group_.network_solve(solve_opts());
        det_->set_norton(norton);
        step_group(det_group_, k);
        motor_log(k + 1);

        // Join the EMT batch, then (7) the controller.
        last_frame_ = chan.finish_batch();
        i_prev_ = frame.i;

        std::vector<ThreePhasePhasor> v_de;
        std::vector<SequencePhasor> v_ex;
        for (std::size_t p = 0; p < det_ports_.size(); ++p) {
            v_de.push_back(det_->phase_voltage(det_ports_[p]));
            v_ex.push_back(ext_->sequence_voltage(ext_ports_[p]));
        }
        const double t1 = t_of(k + 1);
        ctl_ = controller_step(ctl_, cfg_.sw, dt_, v_de, v_ex, t1, t_clear_at(t1));
        res_.controller.push_back({t1, ctl_.phase, ctl_.last_dv, ctl_.last_rate, ctl_.counter, ctl_.decision});
    }

    const CaseData& c_;
    RunOptions opt_;
    RunConfig cfg_;
    SimulationResult res_;
    double dt_ = 0.005;
    long n_steps_ = 0;

    phasor::PowerFlowResult pf_;
    std::map<net::BusId, Complex> v1_;
    std::map<net::BusId, ThreePhasePhasor> init_abc_;

    std::unique_ptr<phasor::Subsystem> full_;
    std::unique_ptr<phasor::Subsystem> det_;
    std::unique_ptr<phasor::Subsystem> ext_;
    std::vector<phasor::Subsystem*> subs_;
    net::SplitResult split_;
    std::vector<net::BusId> ext_ports_;
    std::vector<net::BusId> det_ports_;
    std::vector<phasor::Link> links_;
    phasor::PhasorGroup ext_group_;
    phasor::PhasorGroup det_group_;

    std::unique_ptr<emt::EmtEngine> engine_;
    std::shared_ptr<std::ofstream> dump_;

    CMatrix z_th_;
    bool zero_open_ = false;
    bool z_valid_ = false;
    unsigned z_version_ = 0;

    std::vector<SequencePhasor> i_now_;
    std::vector<SequencePhasor> i_prev_;
    transport::EmtFrame last_frame_;
    std::vector<EventSignal> queue_;
    ControllerState ctl_;
    std::map<std::string, bool> emt_status_;
    std::map<std::string, bool> phasor_seen_;
};

} // namespace

SimulationResult run_simulation(const CaseData& c, const RunOptions& opt) {
    Runner r(c, opt);
    return r.run();
}

} // namespace hybridsim
