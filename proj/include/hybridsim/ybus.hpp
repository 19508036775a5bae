#pragma once

#include "hybridsim/fortescue.hpp"
#include "hybridsim/network.hpp"

#include <string>
#include <vector>

namespace hybridsim::net {

enum class Representation { positive_sequence, three_sequence, three_phase };

std::string to_string(Representation r);
Representation parse_representation(const std::string& s);

/// Unknowns per bus: 1 for positive sequence, 3 otherwise.
inline int width(Representation r) { return r == Representation::positive_sequence ? 1 : 3; }

/// Per-sequence 2×2 admittance blocks [[ff, ft], [tf, tt]] of one branch.
struct SequenceTwoPort {
    Eigen::Matrix2cd y0 = Eigen::Matrix2cd::Zero();
    Eigen::Matrix2cd y1 = Eigen::Matrix2cd::Zero();
    Eigen::Matrix2cd y2 = Eigen::Matrix2cd::Zero();
};

SequenceTwoPort branch_two_port(const Branch& br);

/// Collects bus-block contributions in any representation. Sequence data is
/// mapped with the Fortescue similarity; phase-domain blocks are mapped the
/// other way. A positive-sequence build keeps only the s1 entry.
class AdmittanceAssembler {
public:
    AdmittanceAssembler(std::size_t n_bus, Representation rep);

    void add_sequence(std::size_t i, std::size_t j, Complex y0, Complex y1, Complex y2);
    void add_phase(std::size_t i, std::size_t j, const Eigen::Matrix3cd& y_abc);
    void add_network(const NetworkModel& net);

    Representation representation() const { return rep_; }
    std::size_t dimension() const { return n_ * static_cast<std::size_t>(width(rep_)); }
    CSparse build() const;

private:
    void add_basis_block(std::size_t i, std::size_t j, const Eigen::Matrix3cd& block);

    std::size_t n_;
    Representation rep_;
    std::vector<Eigen::Triplet<Complex>> triplets_;
};

/// Network admittance matrix from branches and bus shunts only. Virtual
/// breakers and open branches are skipped.
CSparse build_ybus(const NetworkModel& net, Representation rep);

/// Buses of a three_sequence matrix whose zero-sequence island has no path
/// to ground. Their zero-sequence voltage is undetermined.
std::vector<std::size_t> floating_zero_sequence(const CSparse& y012);

// Conversions between a bus's slice of a solution vector and phasors.
Eigen::Matrix3cd basis_block(Representation rep, const Eigen::Matrix3cd& y_abc);
ThreePhasePhasor phase_at(Representation rep, const CVector& v, std::size_t bus);
SequencePhasor sequence_at(Representation rep, const CVector& v, std::size_t bus);
void add_phase_injection(Representation rep, CVector& inj, std::size_t bus, const ThreePhasePhasor& i_abc);
void add_sequence_injection(Representation rep, CVector& inj, std::size_t bus, const SequencePhasor& i_seq);
void set_bus_voltage(Representation rep, CVector& v, std::size_t bus, const ThreePhasePhasor& v_abc);

} // namespace hybridsim::net
