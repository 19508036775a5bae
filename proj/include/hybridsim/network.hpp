#pragma once

#include "hybridsim/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hybridsim::net {

using BusId = int;

enum class BusKind { load, generator, boundary, dummy };
enum class BranchStatus { closed, open };
enum class Phase : std::uint8_t { a = 0, b = 1, c = 2 };

/// How zero-sequence current crosses a branch. Lines are `through`; a
/// delta winding blocks it on its own side (`ground_to` = delta on the from
/// side, grounded wye on the to side).
enum class ZeroSequence { through, open, ground_from, ground_to };

std::string to_string(BusKind k);
std::string to_string(ZeroSequence z);
char phase_letter(Phase p);

struct Bus {
    BusId id = 0;
    double base_kv = 1.0;
    BusKind kind = BusKind::load;
    std::string area;   // subsystem the bus belongs to
    Complex shunt1{};   // positive/negative sequence shunt admittance (pu)
    Complex shunt0{};   // zero sequence shunt admittance (pu)
};

struct Branch {
    std::string id;
    BusId from = 0;
    BusId to = 0;
    Complex z1{};
    Complex z2{};
    Complex z0{};
    double b1 = 0.0;
    double b0 = 0.0;
    double tap = 1.0;
    double shift_deg = 0.0;   // positive: to-side voltage leads from-side (positive sequence)
    ZeroSequence zero = ZeroSequence::through;
    BranchStatus status = BranchStatus::closed;
    bool is_virtual_breaker = false;
    bool is_transformer = false;

    bool closed() const { return status == BranchStatus::closed; }
};

/// Two-axis machine data on system base, with a first-order exciter.
struct MachineData {
    std::string id;
    BusId bus = 0;
    bool slack = false;
    double p_set = 0.0;   // pu, ignored for the slack machine
    double v_set = 1.0;   // pu terminal voltage set point
    double h = 3.0;       // inertia constant (s)
    double d = 0.0;       // damping (pu torque / pu speed)
    double ra = 0.0;
    double xd = 1.0;
    double xdp = 0.2;
    double xq = 1.0;
    double xqp = 0.2;
    double td0p = 5.0;
    double tq0p = 0.5;    // <= 0 makes E'd algebraic
    double x2 = 0.2;      // negative-sequence reactance
    double ka = 20.0;
    double ta = 0.2;
    double efd_min = -10.0;
    double efd_max = 10.0;
};

/// Constant-impedance load given as the draw at 1 pu voltage. Per-phase
/// values use the per-phase base, so a balanced load has the same numbers as
/// its positive-sequence equivalent.
struct LoadData {
    std::string id;
    BusId bus = 0;
    double p = 0.0;
    double q = 0.0;
    std::uint8_t phases = 0b111;   // bit k set -> phase k connected
};

/// Single-phase induction motor parameters in the motor's own per-unit base.
struct SpimParams {
    double rs = 0.03;
    double xls = 0.06;
    double xm = 2.0;
    double rr = 0.04;
    double xlr = 0.06;
    double h = 0.05;             // inertia constant (s)
    double rated_speed = 0.975;  // pu speed at full load and 1 pu voltage
    double const_torque = 0.8;   // share of rated load torque that is speed independent
    double stall_speed = 0.5;    // pu
};

struct MotorData {
    std::string id;       // phasor-model id
    std::string emt_id;   // EMT element id
    BusId bus = 0;
    Phase phase = Phase::a;
    double p0 = 0.0;      // per-phase pu active draw at 1 pu voltage
    SpimParams spim;
    double v_stall = 0.55;
    double t_stall = 2.0 / 60.0;
    double v_zlow = 0.4;  // running curve reverts to constant impedance below this
};

class NetworkModel {
public:
    void add_bus(Bus b);
    void add_branch(Branch br);
    void add_machine(MachineData m);
    void add_load(LoadData l);
    void add_motor(MotorData m);

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const std::vector<MachineData>& machines() const { return machines_; }
    const std::vector<LoadData>& loads() const { return loads_; }
    const std::vector<MotorData>& motors() const { return motors_; }

    std::vector<Branch>& mutable_branches() { return branches_; }

    bool has_bus(BusId id) const { return index_.contains(id); }
    std::size_t bus_index(BusId id) const;
    const Bus& bus(BusId id) const { return buses_[bus_index(id)]; }
    std::size_t size() const { return buses_.size(); }

    const MotorData* find_motor(const std::string& id) const;
    const MotorData* find_motor_by_emt_id(const std::string& emt_id) const;

private:
    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    std::vector<MachineData> machines_;
    std::vector<LoadData> loads_;
    std::vector<MotorData> motors_;
    std::map<BusId, std::size_t> index_;
};

} // namespace hybridsim::net
