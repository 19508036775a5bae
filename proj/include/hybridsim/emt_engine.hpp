#pragma once

#include "hybridsim/boundary.hpp"
#include "hybridsim/emt.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hybridsim::emt {

/// Classical machine (constant E' behind transient reactance) used when the
/// EMT side holds generators, e.g. in the all-EMT reference run.
struct ClassicalMachine {
    std::string id;
    std::size_t element = 0;   // RL element index
    double e_mag = 0.0;
    double delta = 0.0;        // rad, relative to the 60 Hz reference
    double omega = 1.0;
    double pm = 0.0;
    double h = 3.0;
    double d = 0.0;
};

struct MotorSnapshot {
    std::string id;
    MotorStatus status = MotorStatus::running;
    double omega = 0.0;
};

/// Detailed network realized as an EMT circuit. Boundary ports are buses of
/// the network (dummy copies of the boundary buses) fed from the external
/// system through a coupled RL Thévenin branch whose source ramps linearly
/// in magnitude and angle between successive targets.
class EmtEngine {
public:
    EmtEngine(const net::NetworkModel& net, std::vector<net::BusId> ports, double dt);
    EmtEngine(const EmtEngine&) = delete;
    EmtEngine& operator=(const EmtEngine&) = delete;

    const net::NetworkModel& net() const { return net_; }
    const std::vector<net::BusId>& ports() const { return ports_; }
    Circuit& circuit() { return c_; }
    const Circuit& circuit() const { return c_; }
    double dt() const { return c_.dt(); }
    double time() const { return c_.time(); }
    long sample() const { return c_.sample(); }
    int node(net::BusId bus, int phase) const;

    /// Energizes the circuit at time t0 from bus phasors (keyed by bus id).
    /// `th` gives the boundary sources (required when there are ports);
    /// `machine_s` the machine terminal powers (required with machines).
    void initialize(double t0, const std::map<net::BusId, ThreePhasePhasor>& v, const TheveninEquivalent3ph* th,
                    const std::map<std::string, Complex>* machine_s = nullptr,
                    std::optional<double> motor_speed = std::nullopt);

    /// New boundary target reached at t_reach, ramping from the present one.
    void set_boundary(const TheveninEquivalent3ph& th, double t_reach);
    const TheveninEquivalent3ph& boundary() const { return th_new_; }

    void add_fault(const FaultSpec& f);
    void add_signal(const EventSignal& s);

    /// Advances to the sample nearest t.
    void run_until(double t);
    std::vector<EventSignal> take_events();

    /// Last cycle of samples, ready once a full cycle has been recorded.
    boundary::WaveformBuffer boundary_current(std::size_t port) const;
    boundary::WaveformBuffer bus_voltage(net::BusId bus) const;
    std::vector<ThreePhasePhasor> boundary_current_phasors() const;
    ThreePhasePhasor bus_voltage_phasor(net::BusId bus) const;

    std::vector<MotorSnapshot> motors() const;
    /// Present boundary branch currents, detailed -> external.
    RVector port_currents() const;
    const std::vector<ClassicalMachine>& machines() const { return machines_; }

    /// Called after every accepted sample.
    void set_sample_hook(std::function<void(const EmtEngine&)> hook) { hook_ = std::move(hook); }

    int samples_per_cycle() const { return spc_; }

private:
    void build();
    void record();
    void source_at(double t, std::size_t port, RVector& e) const;

    net::NetworkModel net_;
    std::vector<net::BusId> ports_;
    Circuit c_;
    std::size_t boundary_el_ = 0;
    bool has_boundary_el_ = false;
    TheveninEquivalent3ph th_old_;
    TheveninEquivalent3ph th_new_;
    double t_ramp0_ = 0.0;
    double t_ramp1_ = 0.0;

    std::vector<ClassicalMachine> machines_;

    struct ScheduledFault {
        std::size_t element;
        long k_on;
        long k_off;
    };
    std::vector<ScheduledFault> faults_;
    std::vector<EventSignal> pending_signals_;
    std::vector<EventSignal> events_;

    int spc_ = 0;
    int cap_ = 0;
    long recorded_ = 0;   // samples written into the rings
    RMatrix ring_u_;
    RMatrix ring_i_;
    std::function<void(const EmtEngine&)> hook_;
};

} // namespace hybridsim::emt
