#include "support.hpp"

#include "hybridsim/phasor.hpp"

#include <doctest.h>

#include <memory>
#include <set>

using namespace hybridsim;
using net::Representation;

namespace {

struct RandomSplit {
    std::vector<net::NetworkModel> parts;
    std::vector<Representation> reps;
    std::vector<std::map<net::BusId, SequencePhasor>> inj;
    std::vector<phasor::Link> links;
};

/// 2-3 grounded subsystems with lines, shunts, unbalanced loads and fixed
/// injections, joined by 1-3 link branches (some with zero impedance).
RandomSplit random_split(std::mt19937& g, int total_buses, int n_links) {
    std::uniform_int_distribution<int> nparts_d(2, std::min(3, total_buses));
    const int nparts = nparts_d(g);
    RandomSplit r;
    r.parts.resize(static_cast<std::size_t>(nparts));
    r.inj.resize(static_cast<std::size_t>(nparts));
    std::vector<int> sizes(static_cast<std::size_t>(nparts), 1);
    std::uniform_int_distribution<int> pick(0, nparts - 1);
    for (int k = nparts; k < total_buses; ++k) ++sizes[static_cast<std::size_t>(pick(g))];

    std::uniform_real_distribution<double> u(0.0, 1.0);
    net::BusId next = 1;
    for (std::size_t p = 0; p < r.parts.size(); ++p) {
        auto& m = r.parts[p];
        r.reps.push_back(u(g) < 0.5 ? Representation::three_phase : Representation::three_sequence);
        std::vector<net::BusId> ids;
        for (int k = 0; k < sizes[p]; ++k) {
            net::Bus b;
            b.id = next++;
            if (u(g) < 0.3) {
                b.shunt1 = {0.0, 0.1 * u(g)};
                b.shunt0 = {0.0, 0.05 * u(g)};
            }
            m.add_bus(b);
            ids.push_back(b.id);
            net::LoadData l;
            l.id = "LD" + std::to_string(b.id);
            l.bus = b.id;
            l.p = 0.2 + u(g);
            l.q = 0.5 * u(g) - 0.1;
            l.phases = static_cast<std::uint8_t>(u(g) < 0.3 ? 1 + static_cast<int>(u(g) * 6.99) : 7);
            if (l.phases != 7) {
                // keep every phase grounded through a balanced share
                net::LoadData base = l;
                base.id += "b";
                base.phases = 7;
                base.p = 0.1;
                base.q = 0.0;
                m.add_load(base);
            }
            m.add_load(l);
            if (u(g) < 0.6)
                r.inj[p][b.id] = {testing::rand_c(g, -1, 1), testing::rand_c(g, -0.2, 0.2), testing::rand_c(g, -0.1, 0.1)};
        }
        // random tree plus an occasional extra edge
        for (std::size_t k = 1; k < ids.size(); ++k) {
            std::uniform_int_distribution<std::size_t> to(0, k - 1);
            net::Branch br;
            br.id = "B" + std::to_string(ids[k]);
            br.from = ids[k];
            br.to = ids[to(g)];
            br.z1 = testing::rand_z(g);
            br.z0 = 3.0 * testing::rand_z(g);
            br.b1 = 0.05 * u(g);
            br.b0 = 0.03 * u(g);
            m.add_branch(br);
        }
        if (ids.size() > 2 && u(g) < 0.5) {
            net::Branch br;
            br.id = "X" + std::to_string(p);
            br.from = ids.front();
            br.to = ids.back();
            br.z1 = testing::rand_z(g);
            br.z0 = 2.0 * testing::rand_z(g);
            m.add_branch(br);
        }
    }
    std::set<std::pair<net::BusId, net::BusId>> used;
    for (int l = 0; l < n_links; ++l) {
        for (int attempt = 0; attempt < 50; ++attempt) {
            const auto pa = static_cast<std::size_t>(pick(g));
            auto pb = static_cast<std::size_t>(pick(g));
            if (pa == pb) pb = (pa + 1) % r.parts.size();
            const auto& ba = r.parts[pa].buses();
            const auto& bb = r.parts[pb].buses();
            const auto a = ba[static_cast<std::size_t>(u(g) * static_cast<double>(ba.size()))].id;
            const auto b = bb[static_cast<std::size_t>(u(g) * static_cast<double>(bb.size()))].id;
            if (!used.insert({std::min(a, b), std::max(a, b)}).second) continue;
            const Complex z = u(g) < 0.3 ? Complex{} : testing::rand_z(g);
            r.links.push_back({"K" + std::to_string(l), pa, a, pb, b, z, true});
            break;
        }
    }
    return r;
}

/// Monolithic modified-nodal solve of the whole thing in phase coordinates.
CVector monolithic(const RandomSplit& r) {
    net::NetworkModel all;
    for (const auto& m : r.parts) {
        for (const auto& b : m.buses()) all.add_bus(b);
        for (const auto& l : m.loads()) all.add_load(l);
    }
    for (const auto& m : r.parts)
        for (const auto& br : m.branches()) all.add_branch(br);
    const CMatrix y = testing::dense_abc(all);
    const auto nb = static_cast<Eigen::Index>(y.rows());
    const auto nl = static_cast<Eigen::Index>(3 * r.links.size());
    CMatrix a = CMatrix::Zero(nb + nl, nb + nl);
    CVector rhs = CVector::Zero(nb + nl);
    a.topLeftCorner(nb, nb) = y;
    const Eigen::Matrix3cd s = testing::synthesis();
    for (std::size_t p = 0; p < r.parts.size(); ++p)
        for (const auto& [bus, i] : r.inj[p])
            rhs.segment<3>(static_cast<Eigen::Index>(3 * all.bus_index(bus))) += s * Eigen::Vector3cd(i.s0, i.s1, i.s2);
    for (std::size_t l = 0; l < r.links.size(); ++l) {
        const auto& k = r.links[l];
        const auto ip = static_cast<Eigen::Index>(3 * all.bus_index(k.bus_p));
        const auto iq = static_cast<Eigen::Index>(3 * all.bus_index(k.bus_q));
        const auto il = nb + static_cast<Eigen::Index>(3 * l);
        for (Eigen::Index ph = 0; ph < 3; ++ph) {
            // link current leaves p and enters q
            a(ip + ph, il + ph) += 1.0;
            a(iq + ph, il + ph) -= 1.0;
            a(il + ph, ip + ph) += 1.0;
            a(il + ph, iq + ph) -= 1.0;
            a(il + ph, il + ph) -= k.z;
        }
    }
    return a.fullPivLu().solve(rhs).head(nb);
}

} // namespace

TEST_CASE("two one-bus subsystems joined by a reactance") {
    net::NetworkModel a, b;
    net::Bus x;
    x.id = 1;
    x.shunt1 = x.shunt0 = {1.0, 0.0};
    a.add_bus(x);
    x.id = 2;
    x.shunt1 = x.shunt0 = {0.5, -0.5};
    b.add_bus(x);
    phasor::Subsystem sa("a", a, Representation::positive_sequence), sb("b", b, Representation::positive_sequence);
    sa.set_injection(1, {Complex{1.0, 0.0}, {}, {}});
    phasor::mate_solve({&sa, &sb}, {{"K", 0, 1, 1, 2, {0.0, 0.1}, true}});
    // monolithic 2-bus: [[1 - 10j, 10j], [10j, 0.5 - 10.5j]]·V = [1, 0]
    Eigen::Matrix2cd y;
    y << Complex{1.0, -10.0}, Complex{0.0, 10.0}, Complex{0.0, 10.0}, Complex{0.5, -10.5};
    const Eigen::Vector2cd v = y.inverse() * Eigen::Vector2cd(1.0, 0.0);
    CHECK(std::abs(sa.sequence_voltage(1).s1 - v(0)) < 1e-12);
    CHECK(std::abs(sb.sequence_voltage(2).s1 - v(1)) < 1e-12);

    SUBCASE("open link decouples") {
        phasor::mate_solve({&sa, &sb}, {{"K", 0, 1, 1, 2, {0.0, 0.1}, false}});
        CHECK(std::abs(sa.sequence_voltage(1).s1 - Complex{1.0, 0.0}) < 1e-12);
        CHECK(std::abs(sb.sequence_voltage(2).s1) < 1e-14);
    }
}

TEST_CASE("mate matches the monolithic solve on random networks") {
    std::mt19937 g(2024);
    std::uniform_int_distribution<int> nb(3, 12), nl(1, 3);
    for (int trial = 0; trial < 20; ++trial) {
        CAPTURE(trial);
        const auto r = random_split(g, nb(g), nl(g));
        std::vector<std::unique_ptr<phasor::Subsystem>> subs;
        std::vector<phasor::Subsystem*> ptrs;
        for (std::size_t p = 0; p < r.parts.size(); ++p) {
            subs.push_back(std::make_unique<phasor::Subsystem>("s" + std::to_string(p), r.parts[p], r.reps[p]));
            for (const auto& [bus, i] : r.inj[p]) subs.back()->set_injection(bus, i);
            ptrs.push_back(subs.back().get());
        }
        phasor::mate_solve(ptrs, r.links);
        const CVector ref = monolithic(r);
        std::size_t offset = 0;
        double worst = 0.0;
        for (const auto& s : subs) {
            for (const auto& b : s->net().buses()) {
                const auto v = s->phase_voltage(b.id);
                for (std::size_t ph = 0; ph < 3; ++ph)
                    worst = std::max(worst, std::abs(v[ph] - ref(static_cast<Eigen::Index>(3 * offset + ph))));
                ++offset;
            }
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("duplicated zero-impedance link is rejected") {
    net::NetworkModel a, b;
    net::Bus x;
    x.id = 1;
    x.shunt1 = x.shunt0 = {1.0, 0.0};
    a.add_bus(x);
    x.id = 2;
    b.add_bus(x);
    phasor::Subsystem sa("a", a, Representation::three_sequence), sb("b", b, Representation::three_sequence);
    CHECK_THROWS_AS(phasor::mate_solve({&sa, &sb}, {{"K1", 0, 1, 1, 2, {}, true}, {"K2", 0, 1, 1, 2, {}, true}}),
                    SimulationError);
}
