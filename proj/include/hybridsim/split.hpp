#pragma once

#include "hybridsim/network.hpp"

#include <string>
#include <vector>

namespace hybridsim::net {

inline const std::string kDetailedArea = "detailed";
inline const std::string kExternalArea = "external";

/// Zero-impedance link between a boundary bus and its dummy copy.
struct VirtualBreaker {
    std::string id;
    BusId boundary = 0;
    BusId dummy = 0;
    bool closed = true;
};

struct SplitResult {
    NetworkModel detailed;
    NetworkModel external;
    std::vector<VirtualBreaker> breakers;
};

/// Dummy id: the next multiple of 1000 above the largest bus id, plus the
/// boundary id (bus 5 of a 12-bus case becomes 1005).
BusId dummy_bus_id(const NetworkModel& net, BusId boundary);

/// Splits `net` by bus area. Each boundary bus keeps its own area; a dummy
/// copy is created on the other side and every branch from the boundary bus
/// into that side is re-homed to the dummy.
SplitResult split_network(const NetworkModel& net, const std::vector<BusId>& boundary);

/// Branches joining the two areas other than through a boundary bus.
std::vector<std::string> crossing_branches(const NetworkModel& net, const std::vector<BusId>& boundary);

/// Buses not reachable from the first bus over closed branches.
std::vector<BusId> disconnected_buses(const NetworkModel& net);

} // namespace hybridsim::net
