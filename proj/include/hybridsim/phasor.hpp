#pragma once

#include "hybridsim/acmotor.hpp"
#include "hybridsim/case.hpp"
#include "hybridsim/equivalents.hpp"
#include "hybridsim/machine.hpp"
#include "hybridsim/ybus.hpp"

#include <Eigen/SparseLU>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hybridsim::phasor {

/// One phasor subsystem: its network in a chosen representation, dynamic
/// devices, and the factorized admittance matrix (with any Norton
/// augmentation and fault shunts folded in).
class Subsystem {
public:
    Subsystem(std::string name, net::NetworkModel net, net::Representation rep);

    /// Sets bus voltages from a positive-sequence solution (indexed by bus id)
    /// and initializes machines from their terminal power.
    void initialize(const std::map<net::BusId, Complex>& v1, const std::map<std::string, Complex>& machine_s);

    const std::string& name() const { return name_; }
    const net::NetworkModel& net() const { return net_; }
    net::Representation rep() const { return rep_; }
    std::size_t dimension() const { return net_.size() * static_cast<std::size_t>(net::width(rep_)); }

    // Topology and augmentation. Each marks the matrix for refactorization.
    void apply_fault(const FaultSpec& f);
    void clear_fault(const std::string& id);
    bool has_fault(const std::string& id) const;
    void set_norton(const NortonEquivalent3ph& n);
    void clear_norton();
    bool has_norton() const { return norton_.has_value(); }
    /// Fixed current injected at a bus (sequence coordinates).
    void set_injection(net::BusId bus, const SequencePhasor& i);
    void clear_injections() { fixed_inj_.clear(); }

    // Motors.
    std::vector<AcMotorPerf>& motors() { return motors_; }
    const std::vector<AcMotorPerf>& motors() const { return motors_; }
    AcMotorPerf* find_motor(const std::string& id);
    /// Returns true when a status changed (matrix then needs a rebuild).
    bool apply_override(const std::string& motor_id, SignalKind kind);
    void release_overrides();
    /// Moves running motors' matrix admittance to the present operating point.
    bool relinearize_motors(double rel_tol);
    /// Autonomous triggers at an accepted time point. True if anything stalled.
    bool update_motor_triggers(double t);

    std::vector<Machine>& machines() { return machines_; }
    const std::vector<Machine>& machines() const { return machines_; }

    // Numerics.
    void refactor_if_needed();
    void mark_dirty() { dirty_ = true; }
    unsigned version() const { return version_; }
    /// Bus indices whose zero-sequence island has no ground path (pinned).
    const std::vector<std::size_t>& floating_zero_buses() const { return floating_; }
    const CSparse& y() const { return y_; }
    CVector solve(const CVector& rhs) const;
    /// Source side of I(x,V) = Y·V at the present device states.
    CVector injections(const CVector& v) const;

    CVector& v() { return v_; }
    const CVector& v() const { return v_; }
    ThreePhasePhasor phase_voltage(net::BusId bus) const { return net::phase_at(rep_, v_, net_.bus_index(bus)); }
    SequencePhasor sequence_voltage(net::BusId bus) const { return net::sequence_at(rep_, v_, net_.bus_index(bus)); }
    Complex motor_voltage(const AcMotorPerf& m) const;
    Complex motor_current(const AcMotorPerf& m) const;

    /// Sequence Thévenin impedances (z0, z1, z2) of this subsystem at a bus,
    /// used for the positive-sequence fault equivalent.
    Eigen::Vector3cd sequence_thevenin(net::BusId bus) const;

private:
    CSparse assemble(net::Representation rep, bool with_faults, bool with_norton) const;
    Eigen::Matrix3cd fault_block(const FaultSpec& f) const;

    std::string name_;
    net::NetworkModel net_;
    net::Representation rep_;
    std::vector<Machine> machines_;
    std::vector<std::size_t> machine_bus_;
    std::vector<AcMotorPerf> motors_;
    std::vector<std::size_t> motor_bus_;
    std::vector<FaultSpec> faults_;
    std::optional<NortonEquivalent3ph> norton_;
    std::map<std::size_t, SequencePhasor> fixed_inj_;

    CSparse y_;
    Eigen::SparseLU<CSparse> lu_;
    std::vector<std::size_t> floating_;
    bool dirty_ = true;
    mutable bool pinning_ = false;
    unsigned version_ = 0;
    CVector v_;
};

/// Link branch (virtual breaker) between bus `bus_p` of subsystem `sub_p`
/// and bus `bus_q` of subsystem `sub_q`. Link current flows p -> q.
struct Link {
    std::string id;
    std::size_t sub_p = 0;
    net::BusId bus_p = 0;
    std::size_t sub_q = 0;
    net::BusId bus_q = 0;
    Complex z{};
    bool closed = true;
};

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 60;
};

/// Subsystems solved together, reconciled through link branches.
class PhasorGroup {
public:
    PhasorGroup() = default;
    PhasorGroup(std::vector<Subsystem*> subs, std::vector<Link> links) : subs_(std::move(subs)), links_(std::move(links)) {}

    std::vector<Subsystem*>& subsystems() { return subs_; }
    std::vector<Link>& links() { return links_; }
    const std::vector<Link>& links() const { return links_; }

    /// Link currents in link coordinates (012, or s1 only when every
    /// subsystem is positive sequence); `width()` entries per link.
    const CVector& link_currents() const { return i_link_; }
    int width() const;

    /// Fixed-point network solution at the present states. Returns the final
    /// residual; throws ConvergenceError when the cap is hit.
    double network_solve(const SolveOptions& opt = {});

    /// Advances machine states from t to t+dt with the partitioned implicit
    /// trapezoidal rule. Leaves the network solved at t+dt.
    void step(double dt, double state_tol = 1e-8, int max_iter = 20, const SolveOptions& opt = {});

    /// Runs motor triggers at time t; re-solves the network if anything changed.
    bool post_step(double t, const SolveOptions& opt = {});

private:
    void refresh_links();
    void add_link_injection(std::size_t k, CVector& inj, const CVector& il) const;
    void link_voltage_drop(std::size_t k, const CVector& v, CVector& drop) const;

    std::vector<Subsystem*> subs_;
    std::vector<Link> links_;
    std::vector<unsigned> seen_versions_;
    std::vector<CMatrix> we_;        // Y_k⁻¹·E_k per subsystem
    Eigen::PartialPivLU<CMatrix> link_lu_;
    CVector i_link_;
};

/// Solves a set of subsystems with fixed link topology once, via MATE.
/// Convenience wrapper used by tests.
void mate_solve(std::vector<Subsystem*> subs, std::vector<Link> links, const SolveOptions& opt = {});

} // namespace hybridsim::phasor
