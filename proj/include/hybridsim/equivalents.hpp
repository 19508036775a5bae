#pragma once

#include "hybridsim/network.hpp"

#include <vector>

namespace hybridsim {

/// Multi-port three-phase Thévenin equivalent, abc coordinates. Port k owns
/// rows 3k..3k+2. When `zero_open` is set the network offers no zero-sequence
/// path at the ports and `z` carries a zero there.
struct TheveninEquivalent3ph {
    std::vector<net::BusId> buses;
    CVector v_th;
    CMatrix z;
    bool zero_open = false;
};

struct NortonEquivalent3ph {
    std::vector<net::BusId> buses;
    CVector i_n;
    CMatrix y;
};

} // namespace hybridsim
