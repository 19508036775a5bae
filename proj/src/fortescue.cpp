#include "hybridsim/fortescue.hpp"

namespace hybridsim {

const Eigen::Matrix3cd& fortescue_matrix() {
    static const Eigen::Matrix3cd a = [] {
        const Complex one{1.0, 0.0};
        const Complex a1 = kAlpha;
        const Complex a2 = kAlpha * kAlpha;
        Eigen::Matrix3cd m;
        m << one, one, one,
             one, a2, a1,
             one, a1, a2;
        return m;
    }();
    return a;
}

const Eigen::Matrix3cd& fortescue_inverse() {
    static const Eigen::Matrix3cd inv = fortescue_matrix().adjoint() / 3.0;
    return inv;
}

ThreePhasePhasor seq_to_phase(const SequencePhasor& s) {
    return phase_from_vector(fortescue_matrix() * to_vector012(s));
}

SequencePhasor phase_to_seq(const ThreePhasePhasor& p) {
    return seq_from_vector012(fortescue_inverse() * to_vector(p));
}

Eigen::Matrix3cd sequence_to_phase_block(Complex y0, Complex y1, Complex y2) {
    Eigen::Matrix3cd d = Eigen::Matrix3cd::Zero();
    d(0, 0) = y0;
    d(1, 1) = y1;
    d(2, 2) = y2;
    return sequence_block_to_phase(d);
}

Eigen::Matrix3cd phase_block_to_sequence(const Eigen::Matrix3cd& y_abc) {
    return fortescue_inverse() * y_abc * fortescue_matrix();
}

Eigen::Matrix3cd sequence_block_to_phase(const Eigen::Matrix3cd& y_012) {
    return fortescue_matrix() * y_012 * fortescue_inverse();
}

} // namespace hybridsim
