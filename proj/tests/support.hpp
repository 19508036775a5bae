#pragma once

#include "hybridsim/case.hpp"
#include "hybridsim/fortescue.hpp"
#include "hybridsim/network.hpp"

#include <random>
#include <string>

namespace testing {

using hybridsim::CMatrix;
using hybridsim::Complex;
using hybridsim::CVector;

inline std::string case_path(const std::string& name) { return std::string(HYBRIDSIM_CASE_DIR) + "/" + name; }
inline std::string data_path(const std::string& name) { return std::string(HYBRIDSIM_TEST_DATA) + "/" + name; }

inline hybridsim::CaseData case9() { return hybridsim::load_case(case_path("case9.hyb")); }

// Fortescue synthesis written out directly, columns (s0, s1, s2).
inline Eigen::Matrix3cd synthesis() {
    const Complex a = std::polar(1.0, 2.0 * hybridsim::kPi / 3.0);
    Eigen::Matrix3cd m;
    m << 1.0, 1.0, 1.0, 1.0, a * a, a, 1.0, a, a * a;
    return m;
}

inline Eigen::Matrix3cd seq_diag_abc(Complex x0, Complex x1, Complex x2) {
    const Eigen::Matrix3cd a = synthesis();
    return a * Eigen::Vector3cd(x0, x1, x2).asDiagonal() * a.inverse();
}

inline Complex rand_c(std::mt19937& g, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return {u(g), u(g)};
}

/// Random passive impedance with a positive real part.
inline Complex rand_z(std::mt19937& g) {
    std::uniform_real_distribution<double> r(0.005, 0.05), x(0.02, 0.3);
    return {r(g), x(g)};
}

/// Dense abc nodal matrix of lines, shunts and loads. Only elements that
/// behave the same in every representation are used by the random tests.
inline CMatrix dense_abc(const hybridsim::net::NetworkModel& net) {
    const auto n = static_cast<Eigen::Index>(3 * net.size());
    CMatrix y = CMatrix::Zero(n, n);
    auto blk = [&](std::size_t i, std::size_t j) {
        return y.block<3, 3>(static_cast<Eigen::Index>(3 * i), static_cast<Eigen::Index>(3 * j));
    };
    for (const auto& br : net.branches()) {
        if (!br.closed()) continue;
        const Eigen::Matrix3cd ys = seq_diag_abc(br.z0, br.z1, br.z2 == Complex{} ? br.z1 : br.z2).inverse();
        const Eigen::Matrix3cd yc = seq_diag_abc({0.0, br.b0 / 2.0}, {0.0, br.b1 / 2.0}, {0.0, br.b1 / 2.0});
        const auto f = net.bus_index(br.from), t = net.bus_index(br.to);
        blk(f, f) += ys + yc;
        blk(t, t) += ys + yc;
        blk(f, t) -= ys;
        blk(t, f) -= ys;
    }
    for (std::size_t k = 0; k < net.size(); ++k) {
        const auto& b = net.buses()[k];
        blk(k, k) += seq_diag_abc(b.shunt0, b.shunt1, b.shunt1);
    }
    for (const auto& l : net.loads()) {
        const auto k = net.bus_index(l.bus);
        for (int p = 0; p < 3; ++p)
            if (l.phases & (1u << p)) blk(k, k)(p, p) += Complex{l.p, -l.q};
    }
    return y;
}

} // namespace testing
