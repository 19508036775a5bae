#pragma once

#include "hybridsim/types.hpp"

#include <Eigen/Dense>

namespace hybridsim {

/// Symmetrical components, labelled the "120" way (positive, negative, zero).
struct SequencePhasor {
    Complex s1{};
    Complex s2{};
    Complex s0{};
};

struct ThreePhasePhasor {
    Complex a{};
    Complex b{};
    Complex c{};

    Complex operator[](std::size_t k) const { return k == 0 ? a : (k == 1 ? b : c); }
    Complex& operator[](std::size_t k) { return k == 0 ? a : (k == 1 ? b : c); }
};

/// Fortescue operator 1∠120°.
inline const Complex kAlpha = std::polar(1.0, 2.0 * kPi / 3.0);

// Internal vector ordering for sequence quantities is (s0, s1, s2). The
// synthesis matrix A maps that ordering to (a, b, c); A⁻¹ = (1/3)·Aᴴ.
const Eigen::Matrix3cd& fortescue_matrix();
const Eigen::Matrix3cd& fortescue_inverse();

ThreePhasePhasor seq_to_phase(const SequencePhasor& s);
SequencePhasor phase_to_seq(const ThreePhasePhasor& p);

inline Eigen::Vector3cd to_vector(const ThreePhasePhasor& p) { return {p.a, p.b, p.c}; }
inline Eigen::Vector3cd to_vector012(const SequencePhasor& s) { return {s.s0, s.s1, s.s2}; }
inline ThreePhasePhasor phase_from_vector(const Eigen::Vector3cd& v) { return {v(0), v(1), v(2)}; }
inline SequencePhasor seq_from_vector012(const Eigen::Vector3cd& v) { return {v(1), v(2), v(0)}; }

/// Balanced abc set whose positive sequence is `v1`.
inline ThreePhasePhasor balanced(Complex v1) { return seq_to_phase({v1, {}, {}}); }

/// Phase-domain image of a sequence-diagonal element: A·diag(y0,y1,y2)·A⁻¹.
Eigen::Matrix3cd sequence_to_phase_block(Complex y0, Complex y1, Complex y2);

/// Similarity transforms between abc and 012 coordinates for 3×3 blocks.
Eigen::Matrix3cd phase_block_to_sequence(const Eigen::Matrix3cd& y_abc);
Eigen::Matrix3cd sequence_block_to_phase(const Eigen::Matrix3cd& y_012);

} // namespace hybridsim
