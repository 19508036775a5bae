#include "hybridsim/network.hpp"

#include <algorithm>
#include <cmath>

namespace hybridsim::net {

std::string to_string(BusKind k) {
    switch (k) {
    case BusKind::load: return "load";
    case BusKind::generator: return "generator";
    case BusKind::boundary: return "boundary";
    case BusKind::dummy: return "dummy";
    }
    return "?";
}

std::string to_string(ZeroSequence z) {
    switch (z) {
    case ZeroSequence::through: return "through";
    case ZeroSequence::open: return "open";
    case ZeroSequence::ground_from: return "ground_from";
    case ZeroSequence::ground_to: return "ground_to";
    }
    return "?";
}

char phase_letter(Phase p) { return static_cast<char>('a' + static_cast<int>(p)); }

void NetworkModel::add_bus(Bus b) {
    if (!(b.base_kv > 0.0))
        throw std::invalid_argument("bus " + std::to_string(b.id) + ": base_kv must be positive");
    if (index_.contains(b.id))
        throw std::invalid_argument("duplicate bus id " + std::to_string(b.id));
    index_[b.id] = buses_.size();
    buses_.push_back(std::move(b));
}

void NetworkModel::add_branch(Branch br) {
    if (!has_bus(br.from) || !has_bus(br.to))
        throw std::invalid_argument("branch " + br.id + " references an unknown bus");
    if (br.closed() && !br.is_virtual_breaker && std::abs(br.z1) == 0.0)
        throw std::invalid_argument("branch " + br.id + ": closed branch needs nonzero impedance");
    if (!(br.tap > 0.0))
        throw std::invalid_argument("branch " + br.id + ": tap must be positive");
    branches_.push_back(std::move(br));
}

void NetworkModel::add_machine(MachineData m) {
    if (!has_bus(m.bus))
        throw std::invalid_argument("machine " + m.id + " references an unknown bus");
    if (!(m.h > 0.0))
        throw std::invalid_argument("machine " + m.id + ": H must be positive");
    machines_.push_back(std::move(m));
}

void NetworkModel::add_load(LoadData l) {
    if (!has_bus(l.bus))
        throw std::invalid_argument("load " + l.id + " references an unknown bus");
    loads_.push_back(std::move(l));
}

void NetworkModel::add_motor(MotorData m) {
    if (!has_bus(m.bus))
        throw std::invalid_argument("motor " + m.id + " references an unknown bus");
    if (find_motor(m.id) != nullptr)
        throw std::invalid_argument("duplicate motor id " + m.id);
    if (m.emt_id.empty()) m.emt_id = m.id;
    motors_.push_back(std::move(m));
}

std::size_t NetworkModel::bus_index(BusId id) const {
    auto it = index_.find(id);
    if (it == index_.end())
        throw std::out_of_range("unknown bus " + std::to_string(id));
    return it->second;
}

const MotorData* NetworkModel::find_motor(const std::string& id) const {
    auto it = std::find_if(motors_.begin(), motors_.end(), [&](const MotorData& m) { return m.id == id; });
    return it == motors_.end() ? nullptr : &*it;
}

const MotorData* NetworkModel::find_motor_by_emt_id(const std::string& emt_id) const {
    auto it = std::find_if(motors_.begin(), motors_.end(),
                           [&](const MotorData& m) { return m.emt_id == emt_id; });
    return it == motors_.end() ? nullptr : &*it;
}

} // namespace hybridsim::net
