#include "hybridsim/phasor.hpp"

#include <algorithm>
#include <cmath>

namespace hybridsim::phasor {

namespace {

Eigen::Matrix3cd single_phase(int k, Complex y) {
    Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
    m(k, k) = y;
    return m;
}


} // namespace

Subsystem::Subsystem(std::string name, net::NetworkModel net, net::Representation rep)
    : name_(std::move(name)), net_(std::move(net)), rep_(rep) {
    for (const auto& m : net_.motors()) {
        motors_.emplace_back(m, make_curve(m));
        motor_bus_.push_back(net_.bus_index(m.bus));
    }
    v_ = CVector::Zero(static_cast<Eigen::Index>(dimension()));
}

void Subsystem::initialize(const std::map<net::BusId, Complex>& v1, const std::map<std::string, Complex>& machine_s) {
    for (std::size_t k = 0; k < net_.size(); ++k) {
        const auto it = v1.find(net_.buses()[k].id);
        if (it == v1.end()) throw SimulationError(name_ + ": no initial voltage for bus " + std::to_string(net_.buses()[k].id));
        net::set_bus_voltage(rep_, v_, k, balanced(it->second));
    }
    machines_.clear();
    machine_bus_.clear();
    for (const auto& md : net_.machines()) {
        const auto it = machine_s.find(md.id);
        if (it == machine_s.end()) throw SimulationError(name_ + ": no dispatch for machine " + md.id);
        const auto k = net_.bus_index(md.bus);
        machines_.emplace_back(md, v1.at(md.bus), it->second);
        machine_bus_.push_back(k);
    }
    dirty_ = true;
}

Eigen::Matrix3cd Subsystem::fault_block(const FaultSpec& f) const {
    return fault_conductance(f, net_.bus(f.bus).base_kv).cast<Complex>();
}

CSparse Subsystem::assemble(net::Representation rep, bool with_faults, bool with_norton) const {
    net::AdmittanceAssembler asmb(net_.size(), rep);
    asmb.add_network(net_);
    for (const auto& l : net_.loads()) {
        Eigen::Matrix3cd y = Eigen::Matrix3cd::Zero();
        for (int k = 0; k < 3; ++k)
            if (l.phases & (1u << k)) y(k, k) = Complex{l.p, -l.q};
        const auto b = net_.bus_index(l.bus);
        asmb.add_phase(b, b, y);
    }
    for (const auto& md : net_.machines()) {
        const auto b = net_.bus_index(md.bus);
        asmb.add_sequence(b, b, 0.0, 1.0 / Complex{md.ra, 0.5 * (md.xdp + md.xqp)}, 1.0 / Complex{md.ra, md.x2});
    }
    for (std::size_t k = 0; k < motors_.size(); ++k)
        asmb.add_phase(motor_bus_[k], motor_bus_[k],
                       single_phase(static_cast<int>(motors_[k].data().phase), motors_[k].linear_admittance()));
    if (with_faults) {
        for (const auto& f : faults_) {
            const auto b = net_.bus_index(f.bus);
            if (rep == net::Representation::positive_sequence) {
                const Eigen::Vector3cd z = sequence_thevenin(f.bus);
                const double r = std::max(ohms_to_pu(f.r_fault, net_.bus(f.bus).base_kv), kMinFaultR);
                Complex y1;
                switch (f.kind) {
                case FaultKind::slg: y1 = 1.0 / (z(2) + z(0) + 3.0 * r); break;
                case FaultKind::ll: y1 = 1.0 / (z(2) + r); break;
                case FaultKind::llg: y1 = 1.0 / z(2) + 1.0 / (z(0) + 3.0 * r); break;
                case FaultKind::three_phase: y1 = 1.0 / r; break;
                }
                asmb.add_sequence(b, b, 0.0, y1, 0.0);
            } else {
                asmb.add_phase(b, b, fault_block(f));
            }
        }
    }
    if (rep != net::Representation::positive_sequence && !pinning_) {
        // Pin zero-sequence islands that have no ground path so the matrix
        // stays regular; no zero-sequence current can enter them anyway.
        pinning_ = true;
        const CSparse y012 = assemble(net::Representation::three_sequence, with_faults, with_norton);
        pinning_ = false;
        for (auto b : net::floating_zero_sequence(y012)) asmb.add_sequence(b, b, 1.0, 0.0, 0.0);
    }
    if (with_norton && norton_) {
        const auto& n = *norton_;
        for (std::size_t p = 0; p < n.buses.size(); ++p)
            for (std::size_t q = 0; q < n.buses.size(); ++q)
                asmb.add_phase(net_.bus_index(n.buses[p]), net_.bus_index(n.buses[q]),
                               n.y.block<3, 3>(static_cast<Eigen::Index>(3 * p), static_cast<Eigen::Index>(3 * q)));
    }
    return asmb.build();
}

Eigen::Vector3cd Subsystem::sequence_thevenin(net::BusId bus) const {
    const CSparse y = assemble(net::Representation::three_sequence, false, true);
    Eigen::SparseLU<CSparse> lu;
    lu.compute(y);
    const auto b = static_cast<Eigen::Index>(net_.bus_index(bus));
    Eigen::Vector3cd z;
    for (int s = 0; s < 3; ++s) {
        z(s) = Complex{1e12, 0.0};
        if (lu.info() != Eigen::Success) continue;
        CVector e = CVector::Zero(y.rows());
        e(3 * b + s) = 1.0;
        const CVector col = lu.solve(e);
        if (lu.info() == Eigen::Success && col.allFinite()) z(s) = col(3 * b + s);
    }
    pinning_ = true;
    const auto floating = net::floating_zero_sequence(assemble(net::Representation::three_sequence, false, true));
    pinning_ = false;
    if (std::find(floating.begin(), floating.end(), static_cast<std::size_t>(b)) != floating.end()) z(0) = Complex{1e12, 0.0};
    return z;
}

void Subsystem::refactor_if_needed() {
    if (!dirty_) return;
    y_ = assemble(rep_, true, true);
    floating_.clear();
    if (rep_ != net::Representation::positive_sequence) {
        pinning_ = true;
        floating_ = net::floating_zero_sequence(assemble(net::Representation::three_sequence, true, true));
        pinning_ = false;
    }
    lu_.compute(y_);
    if (lu_.info() != Eigen::Success)
        throw TopologyError(name_ + ": admittance matrix is singular (isolated island without a source path)");
    dirty_ = false;
    ++version_;
}

CVector Subsystem::solve(const CVector& rhs) const {
    CVector x = lu_.solve(rhs);
    if (!x.allFinite()) throw TopologyError(name_ + ": network solution is not finite (isolated island?)");
    return x;
}

Complex Subsystem::motor_voltage(const AcMotorPerf& m) const {
    return net::phase_at(rep_, v_, net_.bus_index(m.data().bus))[static_cast<std::size_t>(m.data().phase)];
}

Complex Subsystem::motor_current(const AcMotorPerf& m) const {
    const Complex v = motor_voltage(m);
    const double mag = std::abs(v);
    if (mag < 1e-12) return {};
    return std::conj(m.power(mag) / v);
}

CVector Subsystem::injections(const CVector& v) const {
    CVector inj = CVector::Zero(v.size());
    for (std::size_t k = 0; k < machines_.size(); ++k) {
        const auto b = machine_bus_[k];
        const Complex v1 = net::sequence_at(rep_, v, b).s1;
        net::add_sequence_injection(rep_, inj, b, {machines_[k].norton_current(machines_[k].state(), v1), {}, {}});
    }
    for (std::size_t k = 0; k < motors_.size(); ++k) {
        const auto& m = motors_[k];
        const auto ph = static_cast<std::size_t>(m.data().phase);
        const Complex vp = net::phase_at(rep_, v, motor_bus_[k])[ph];
        const double mag = std::abs(vp);
        const Complex drawn = mag < 1e-12 ? Complex{} : std::conj(m.power(mag) / vp);
        ThreePhasePhasor i;
        i[ph] = m.linear_admittance() * vp - drawn;
        net::add_phase_injection(rep_, inj, motor_bus_[k], i);
    }
    if (norton_) {
        for (std::size_t p = 0; p < norton_->buses.size(); ++p)
            net::add_phase_injection(rep_, inj, net_.bus_index(norton_->buses[p]),
                                     phase_from_vector(norton_->i_n.segment<3>(static_cast<Eigen::Index>(3 * p))));
    }
    for (const auto& [b, i] : fixed_inj_) net::add_sequence_injection(rep_, inj, b, i);
    return inj;
}

void Subsystem::apply_fault(const FaultSpec& f) {
    if (!net_.has_bus(f.bus)) throw std::invalid_argument(name_ + ": fault " + f.id + " at unknown bus");
    if (has_fault(f.id)) throw std::invalid_argument(name_ + ": fault " + f.id + " already active");
    faults_.push_back(f);
    dirty_ = true;
}

void Subsystem::clear_fault(const std::string& id) {
    auto it = std::find_if(faults_.begin(), faults_.end(), [&](const FaultSpec& f) { return f.id == id; });
    if (it == faults_.end()) throw std::invalid_argument(name_ + ": fault " + id + " is not active");
    faults_.erase(it);
    dirty_ = true;
}

bool Subsystem::has_fault(const std::string& id) const {
    return std::any_of(faults_.begin(), faults_.end(), [&](const FaultSpec& f) { return f.id == id; });
}

void Subsystem::set_norton(const NortonEquivalent3ph& n) {
    for (auto b : n.buses)
        if (!net_.has_bus(b)) throw std::invalid_argument(name_ + ": Norton port at unknown bus " + std::to_string(b));
    const bool same_y = norton_ && norton_->buses == n.buses && norton_->y == n.y;
    norton_ = n;
    if (!same_y) dirty_ = true;
}

void Subsystem::clear_norton() {
    if (!norton_) return;
    norton_.reset();
    dirty_ = true;
}

void Subsystem::set_injection(net::BusId bus, const SequencePhasor& i) { fixed_inj_[net_.bus_index(bus)] = i; }

AcMotorPerf* Subsystem::find_motor(const std::string& id) {
    for (auto& m : motors_)
        if (m.data().id == id) return &m;
    return nullptr;
}

bool Subsystem::apply_override(const std::string& motor_id, SignalKind kind) {
    AcMotorPerf* m = find_motor(motor_id);
    if (!m) throw std::invalid_argument(name_ + ": no motor '" + motor_id + "' for override");
    const bool changed = m->apply_override(kind);
    if (changed) dirty_ = true;
    return changed;
}

void Subsystem::release_overrides() {
    for (auto& m : motors_) m.release_override();
}

bool Subsystem::relinearize_motors(double rel_tol) {
    bool changed = false;
    for (auto& m : motors_)
        if (m.relinearize(std::abs(motor_voltage(m)), rel_tol)) changed = true;
    if (changed) dirty_ = true;
    return changed;
}

bool Subsystem::update_motor_triggers(double t) {
    bool changed = false;
    for (auto& m : motors_)
        if (m.update_trigger(t, std::abs(motor_voltage(m)))) changed = true;
    if (changed) dirty_ = true;
    return changed;
}

} // namespace hybridsim::phasor
