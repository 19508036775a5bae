#include "hybridsim/split.hpp"

#include <algorithm>
#include <queue>
#include <set>

namespace hybridsim::net {

namespace {

bool is_detailed(const Bus& b) { return b.area == kDetailedArea; }

bool contains(const std::vector<BusId>& v, BusId id) { return std::find(v.begin(), v.end(), id) != v.end(); }

} // namespace

BusId dummy_bus_id(const NetworkModel& net, BusId boundary) {
    BusId max_id = 0;
    for (const auto& b : net.buses()) max_id = std::max(max_id, b.id);
    return (max_id / 1000 + 1) * 1000 + boundary;
}

std::vector<std::string> crossing_branches(const NetworkModel& net, const std::vector<BusId>& boundary) {
    std::vector<std::string> out;
    for (const auto& br : net.branches()) {
        if (contains(boundary, br.from) || contains(boundary, br.to)) continue;
        if (is_detailed(net.bus(br.from)) != is_detailed(net.bus(br.to))) out.push_back(br.id);
    }
    return out;
}

std::vector<BusId> disconnected_buses(const NetworkModel& net) {
    std::vector<BusId> out;
    if (net.size() == 0) return out;
    std::vector<std::vector<std::size_t>> adj(net.size());
    for (const auto& br : net.branches()) {
        if (!br.closed()) continue;
        const auto f = net.bus_index(br.from);
        const auto t = net.bus_index(br.to);
        adj[f].push_back(t);
        adj[t].push_back(f);
    }
    std::vector<bool> seen(net.size(), false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    while (!q.empty()) {
        const auto k = q.front();
        q.pop();
        for (auto n : adj[k])
            if (!seen[n]) {
                seen[n] = true;
                q.push(n);
            }
    }
    for (std::size_t k = 0; k < net.size(); ++k)
        if (!seen[k]) out.push_back(net.buses()[k].id);
    return out;
}

SplitResult split_network(const NetworkModel& net, const std::vector<BusId>& boundary) {
    if (boundary.empty()) throw std::invalid_argument("split_network: no boundary buses");
    for (BusId b : boundary)
        if (!net.has_bus(b)) throw std::invalid_argument("split_network: unknown boundary bus " + std::to_string(b));
    const auto crossing = crossing_branches(net, boundary);
    if (!crossing.empty()) {
        std::string msg = "boundary buses do not separate the network; crossing branches:";
        for (const auto& id : crossing) msg += " " + id;
        throw TopologyError(msg);
    }

    SplitResult out;
    auto side = [&](bool detailed) -> NetworkModel& { return detailed ? out.detailed : out.external; };

    for (const auto& b : net.buses()) side(is_detailed(b)).add_bus(b);
    for (BusId id : boundary) {
        const Bus& orig = net.bus(id);
        Bus dummy;
        dummy.id = dummy_bus_id(net, id);
        dummy.base_kv = orig.base_kv;
        dummy.kind = BusKind::dummy;
        dummy.area = is_detailed(orig) ? kExternalArea : kDetailedArea;
        side(!is_detailed(orig)).add_bus(dummy);
        out.breakers.push_back({"VB" + std::to_string(id), id, dummy.id, true});
    }

    auto dummy_of = [&](BusId id) { return dummy_bus_id(net, id); };
    for (auto br : net.branches()) {
        const bool fb = contains(boundary, br.from);
        const bool tb = contains(boundary, br.to);
        const bool fd = is_detailed(net.bus(br.from));
        const bool td = is_detailed(net.bus(br.to));
        bool detailed = fd;
        if (fb && !tb && fd != td) {
            br.from = dummy_of(br.from);
            detailed = td;
        } else if (tb && !fb && fd != td) {
            br.to = dummy_of(br.to);
            detailed = fd;
        } else if (fb && tb && fd != td) {
            // Both ends are boundary buses in different areas: keep the branch
            // on the from side and route its far end to the dummy.
            br.to = dummy_of(br.to);
        }
        side(detailed).add_branch(std::move(br));
    }
    for (const auto& m : net.machines()) side(is_detailed(net.bus(m.bus))).add_machine(m);
    for (const auto& l : net.loads()) side(is_detailed(net.bus(l.bus))).add_load(l);
    for (const auto& m : net.motors()) side(is_detailed(net.bus(m.bus))).add_motor(m);

    for (const NetworkModel* sub : {&out.detailed, &out.external}) {
        const auto lost = disconnected_buses(*sub);
        if (!lost.empty()) {
            std::string msg = "split leaves a subsystem internally disconnected at bus";
            for (auto id : lost) msg += " " + std::to_string(id);
            throw TopologyError(msg);
        }
    }
    return out;
}

} // namespace hybridsim::net
