#include "hybridsim/ybus.hpp"

#include <algorithm>
#include <cmath>

namespace hybridsim::net {

std::string to_string(Representation r) {
    switch (r) {
    case Representation::positive_sequence: return "positive_sequence";
    case Representation::three_sequence: return "three_sequence";
    case Representation::three_phase: return "three_phase";
    }
    return "?";
}

Representation parse_representation(const std::string& s) {
    if (s == "positive_sequence") return Representation::positive_sequence;
    if (s == "three_sequence") return Representation::three_sequence;
    if (s == "three_phase") return Representation::three_phase;
    throw std::invalid_argument("unknown representation '" + s + "'");
}

namespace {

// Two-port of a series admittance behind an off-nominal complex ratio on the
// from side: no-load V_to = V_from / t.
Eigen::Matrix2cd ratio_two_port(Complex y, Complex t, double b) {
    const Complex ysh{0.0, b / 2.0};
    Eigen::Matrix2cd m;
    m(0, 0) = (y + ysh) / std::norm(t);
    m(0, 1) = -y / std::conj(t);
    m(1, 0) = -y / t;
    m(1, 1) = y + ysh;
    return m;
}

} // namespace

SequenceTwoPort branch_two_port(const Branch& br) {
    SequenceTwoPort tp;
    if (!br.closed() || br.is_virtual_breaker) return tp;
    const double phi = br.shift_deg * kPi / 180.0;
    const Complex y1 = 1.0 / br.z1;
    const Complex y2 = 1.0 / (std::abs(br.z2) > 0.0 ? br.z2 : br.z1);
    tp.y1 = ratio_two_port(y1, std::polar(br.tap, -phi), br.b1);
    tp.y2 = ratio_two_port(y2, std::polar(br.tap, phi), br.b1);

    const Complex ysh0{0.0, br.b0 / 2.0};
    const Complex y0 = std::abs(br.z0) > 0.0 ? 1.0 / br.z0 : Complex{};
    switch (br.zero) {
    case ZeroSequence::through:
        if (std::abs(br.shift_deg) > 0.0)
            throw std::invalid_argument("branch " + br.id + ": phase-shifting branch cannot pass zero sequence");
        tp.y0 = ratio_two_port(y0, Complex{br.tap, 0.0}, br.b0);
        break;
    case ZeroSequence::open:
        tp.y0(0, 0) = ysh0;
        tp.y0(1, 1) = ysh0;
        break;
    case ZeroSequence::ground_from:
        tp.y0(0, 0) = y0 / (br.tap * br.tap) + ysh0;
        tp.y0(1, 1) = ysh0;
        break;
    case ZeroSequence::ground_to:
        tp.y0(0, 0) = ysh0;
        tp.y0(1, 1) = y0 + ysh0;
        break;
    }
    return tp;
}

AdmittanceAssembler::AdmittanceAssembler(std::size_t n_bus, Representation rep) : n_(n_bus), rep_(rep) {}

void AdmittanceAssembler::add_sequence(std::size_t i, std::size_t j, Complex y0, Complex y1, Complex y2) {
    if (rep_ == Representation::positive_sequence) {
        if (y1 != Complex{}) triplets_.emplace_back(static_cast<int>(i), static_cast<int>(j), y1);
        return;
    }
    Eigen::Matrix3cd d = Eigen::Matrix3cd::Zero();
    d(0, 0) = y0;
    d(1, 1) = y1;
    d(2, 2) = y2;
    add_basis_block(i, j, rep_ == Representation::three_phase ? sequence_block_to_phase(d) : d);
}

void AdmittanceAssembler::add_phase(std::size_t i, std::size_t j, const Eigen::Matrix3cd& y_abc) {
    add_basis_block(i, j, basis_block(rep_, y_abc));
}

void AdmittanceAssembler::add_basis_block(std::size_t i, std::size_t j, const Eigen::Matrix3cd& block) {
    const int w = width(rep_);
    if (w == 1) {
        if (block(0, 0) != Complex{}) triplets_.emplace_back(static_cast<int>(i), static_cast<int>(j), block(0, 0));
        return;
    }
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            if (block(r, c) != Complex{})
                triplets_.emplace_back(static_cast<int>(3 * i) + r, static_cast<int>(3 * j) + c, block(r, c));
}

void AdmittanceAssembler::add_network(const NetworkModel& net) {
    for (const auto& br : net.branches()) {
        if (!br.closed() || br.is_virtual_breaker) continue;
        const std::size_t f = net.bus_index(br.from);
        const std::size_t t = net.bus_index(br.to);
        const SequenceTwoPort tp = branch_two_port(br);
        const std::size_t idx[2] = {f, t};
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                add_sequence(idx[r], idx[c], tp.y0(r, c), tp.y1(r, c), tp.y2(r, c));
    }
    for (std::size_t k = 0; k < net.buses().size(); ++k) {
        const Bus& b = net.buses()[k];
        if (b.shunt1 != Complex{} || b.shunt0 != Complex{}) add_sequence(k, k, b.shunt0, b.shunt1, b.shunt1);
    }
}

CSparse AdmittanceAssembler::build() const {
    const auto dim = static_cast<Eigen::Index>(dimension());
    CSparse y(dim, dim);
    y.setFromTriplets(triplets_.begin(), triplets_.end());
    y.makeCompressed();
    return y;
}

CSparse build_ybus(const NetworkModel& net, Representation rep) {
    AdmittanceAssembler asmb(net.size(), rep);
    asmb.add_network(net);
    return asmb.build();
}

std::vector<std::size_t> floating_zero_sequence(const CSparse& y012) {
    const auto n = static_cast<std::size_t>(y012.rows() / 3);
    std::vector<std::vector<std::size_t>> adj(n);
    std::vector<Complex> row_sum(n, Complex{});
    double scale = 0.0;
    for (Eigen::Index c = 0; c < y012.outerSize(); ++c)
        for (CSparse::InnerIterator it(y012, c); it; ++it) {
            if (it.row() % 3 != 0 || it.col() % 3 != 0) continue;
            const auto i = static_cast<std::size_t>(it.row() / 3);
            const auto j = static_cast<std::size_t>(it.col() / 3);
            row_sum[i] += it.value();
            scale = std::max(scale, std::abs(it.value()));
            if (i != j && it.value() != Complex{}) adj[i].push_back(j);
        }
    std::vector<std::size_t> out;
    std::vector<int> island(n, -1);
    for (std::size_t s = 0; s < n; ++s) {
        if (island[s] >= 0) continue;
        std::vector<std::size_t> members{s};
        island[s] = static_cast<int>(s);
        Complex total{};
        for (std::size_t h = 0; h < members.size(); ++h) {
            total += row_sum[members[h]];
            for (auto nb : adj[members[h]])
                if (island[nb] < 0) {
                    island[nb] = static_cast<int>(s);
                    members.push_back(nb);
                }
        }
        if (std::abs(total) <= 1e-12 * std::max(scale, 1.0)) out.insert(out.end(), members.begin(), members.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Eigen::Matrix3cd basis_block(Representation rep, const Eigen::Matrix3cd& y_abc) {
    switch (rep) {
    case Representation::three_phase: return y_abc;
    case Representation::three_sequence: return phase_block_to_sequence(y_abc);
    case Representation::positive_sequence: {
        Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
        m(0, 0) = phase_block_to_sequence(y_abc)(1, 1);
        return m;
    }
    }
    return y_abc;
}

ThreePhasePhasor phase_at(Representation rep, const CVector& v, std::size_t bus) {
    switch (rep) {
    case Representation::positive_sequence: return balanced(v(static_cast<Eigen::Index>(bus)));
    case Representation::three_sequence:
        return phase_from_vector(fortescue_matrix() * v.segment<3>(static_cast<Eigen::Index>(3 * bus)));
    case Representation::three_phase: return phase_from_vector(v.segment<3>(static_cast<Eigen::Index>(3 * bus)));
    }
    return {};
}

SequencePhasor sequence_at(Representation rep, const CVector& v, std::size_t bus) {
    switch (rep) {
    case Representation::positive_sequence: return {v(static_cast<Eigen::Index>(bus)), {}, {}};
    case Representation::three_sequence: return seq_from_vector012(v.segment<3>(static_cast<Eigen::Index>(3 * bus)));
    case Representation::three_phase: return phase_to_seq(phase_at(rep, v, bus));
    }
    return {};
}

void add_phase_injection(Representation rep, CVector& inj, std::size_t bus, const ThreePhasePhasor& i_abc) {
    switch (rep) {
    case Representation::positive_sequence:
        inj(static_cast<Eigen::Index>(bus)) += phase_to_seq(i_abc).s1;
        break;
    case Representation::three_sequence:
        inj.segment<3>(static_cast<Eigen::Index>(3 * bus)) += fortescue_inverse() * to_vector(i_abc);
        break;
    case Representation::three_phase:
        inj.segment<3>(static_cast<Eigen::Index>(3 * bus)) += to_vector(i_abc);
        break;
    }
}

void add_sequence_injection(Representation rep, CVector& inj, std::size_t bus, const SequencePhasor& i_seq) {
    switch (rep) {
    case Representation::positive_sequence:
        inj(static_cast<Eigen::Index>(bus)) += i_seq.s1;
        break;
    case Representation::three_sequence:
        inj.segment<3>(static_cast<Eigen::Index>(3 * bus)) += to_vector012(i_seq);
        break;
    case Representation::three_phase:
        inj.segment<3>(static_cast<Eigen::Index>(3 * bus)) += to_vector(seq_to_phase(i_seq));
        break;
    }
}

void set_bus_voltage(Representation rep, CVector& v, std::size_t bus, const ThreePhasePhasor& v_abc) {
    switch (rep) {
    case Representation::positive_sequence:
        v(static_cast<Eigen::Index>(bus)) = phase_to_seq(v_abc).s1;
        break;
    case Representation::three_sequence:
        v.segment<3>(static_cast<Eigen::Index>(3 * bus)) = fortescue_inverse() * to_vector(v_abc);
        break;
    case Representation::three_phase:
        v.segment<3>(static_cast<Eigen::Index>(3 * bus)) = to_vector(v_abc);
        break;
    }
}

} // namespace hybridsim::net
