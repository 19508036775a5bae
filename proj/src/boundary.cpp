#include "hybridsim/boundary.hpp"

#include <algorithm>
#include <cmath>

namespace hybridsim::boundary {

int samples_per_cycle(double f0, double dt) { return static_cast<int>(std::lround(1.0 / (f0 * dt))); }

Complex extract_phasor(const std::vector<double>& t, const std::vector<double>& x, double f0) {
    if (t.size() != x.size() || t.size() < 4) throw std::invalid_argument("extract_phasor: bad window");
    const double w = 2.0 * kPi * f0;
    // Least squares for x_k = a·cos(w t_k) - b·sin(w t_k) + c0 + c1·τ_k, X = a + jb.
    // The offset and trend soak up a decaying DC component.
    const double tm = 0.5 * (t.front() + t.back());
    const double span = std::max(t.back() - t.front(), 1e-12);
    Eigen::Matrix4d n = Eigen::Matrix4d::Zero();
    Eigen::Vector4d r = Eigen::Vector4d::Zero();
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!std::isfinite(x[k])) throw std::invalid_argument("extract_phasor: non-finite sample");
        const Eigen::Vector4d row(std::cos(w * t[k]), -std::sin(w * t[k]), 1.0, (t[k] - tm) / span);
        n.noalias() += row * row.transpose();
        r.noalias() += x[k] * row;
    }
    const Eigen::Vector4d c = n.ldlt().solve(r);
    return {c(0), c(1)};
}

ThreePhasePhasor extract_phasors(const WaveformBuffer& buf, double f0) {
    if (!buf.ready) throw std::invalid_argument("extract_phasors: waveform buffer not ready");
    ThreePhasePhasor out;
    for (std::size_t k = 0; k < 3; ++k) out[k] = extract_phasor(buf.t, buf.x[k], f0);
    return out;
}

SequenceInjectionFrame injections_to_sequence(const std::vector<net::BusId>& buses,
                                              const std::vector<ThreePhasePhasor>& i_abc, double t) {
    if (buses.size() != i_abc.size()) throw std::invalid_argument("injections_to_sequence: size mismatch");
    SequenceInjectionFrame f;
    f.t = t;
    f.buses = buses;
    for (const auto& i : i_abc) f.i.push_back(phase_to_seq(i));
    f.ready = true;
    return f;
}

namespace {

CMatrix block_fortescue(std::size_t m, bool inverse) {
    CMatrix t = CMatrix::Zero(static_cast<Eigen::Index>(3 * m), static_cast<Eigen::Index>(3 * m));
    for (std::size_t p = 0; p < m; ++p)
        t.block<3, 3>(static_cast<Eigen::Index>(3 * p), static_cast<Eigen::Index>(3 * p)) =
            inverse ? fortescue_inverse() : fortescue_matrix();
    return t;
}

} // namespace

CMatrix thevenin_impedance(phasor::Subsystem& ext, const std::vector<net::BusId>& buses, bool& zero_open) {
    if (ext.rep() == net::Representation::positive_sequence)
        throw std::invalid_argument("three-phase Thévenin needs a three_sequence or three_phase subsystem");
    ext.refactor_if_needed();
    const auto m = buses.size();
    const auto dim = static_cast<Eigen::Index>(ext.dimension());
    CMatrix z(static_cast<Eigen::Index>(3 * m), static_cast<Eigen::Index>(3 * m));
    for (std::size_t q = 0; q < m; ++q) {
        const auto bq = static_cast<Eigen::Index>(ext.net().bus_index(buses[q]));
        for (int s = 0; s < 3; ++s) {
            CVector e = CVector::Zero(dim);
            e(3 * bq + s) = 1.0;
            const CVector col = ext.solve(e);
            for (std::size_t p = 0; p < m; ++p) {
                const auto bp = static_cast<Eigen::Index>(ext.net().bus_index(buses[p]));
                z.block<3, 1>(static_cast<Eigen::Index>(3 * p), static_cast<Eigen::Index>(3 * q) + s) = col.segment<3>(3 * bp);
            }
        }
    }
    zero_open = false;
    const auto& floating = ext.floating_zero_buses();
    for (auto b : buses)
        if (std::find(floating.begin(), floating.end(), ext.net().bus_index(b)) != floating.end()) zero_open = true;

    if (ext.rep() == net::Representation::three_sequence) {
        if (zero_open)
            for (std::size_t p = 0; p < m; ++p) {
                z.row(static_cast<Eigen::Index>(3 * p)).setZero();
                z.col(static_cast<Eigen::Index>(3 * p)).setZero();
            }
        return block_fortescue(m, false) * z * block_fortescue(m, true);
    }
    if (zero_open) {
        CMatrix z012 = block_fortescue(m, true) * z * block_fortescue(m, false);
        for (std::size_t p = 0; p < m; ++p) {
            z012.row(static_cast<Eigen::Index>(3 * p)).setZero();
            z012.col(static_cast<Eigen::Index>(3 * p)).setZero();
        }
        return block_fortescue(m, false) * z012 * block_fortescue(m, true);
    }
    return z;
}

TheveninEquivalent3ph thevenin_external(const phasor::Subsystem& ext, const std::vector<net::BusId>& buses,
                                        const CMatrix& z, bool zero_open, const std::vector<SequencePhasor>& i_inj) {
    const auto m = buses.size();
    if (i_inj.size() != m) throw std::invalid_argument("thevenin_external: injection size mismatch");
    TheveninEquivalent3ph th;
    th.buses = buses;
    th.z = z;
    th.zero_open = zero_open;
    CVector v(static_cast<Eigen::Index>(3 * m));
    CVector i(static_cast<Eigen::Index>(3 * m));
    for (std::size_t p = 0; p < m; ++p) {
        v.segment<3>(static_cast<Eigen::Index>(3 * p)) = to_vector(ext.phase_voltage(buses[p]));
        i.segment<3>(static_cast<Eigen::Index>(3 * p)) = to_vector(seq_to_phase(i_inj[p]));
    }
    th.v_th = v - z * i;
    return th;
}

NortonEquivalent3ph thevenin_to_norton(const TheveninEquivalent3ph& th) {
    const auto m = th.buses.size();
    const auto n = static_cast<Eigen::Index>(3 * m);
    if (th.z.rows() != n || th.v_th.size() != n) throw std::invalid_argument("thevenin_to_norton: size mismatch");
    NortonEquivalent3ph out;
    out.buses = th.buses;
    if (!th.zero_open) {
        Eigen::FullPivLU<CMatrix> lu(th.z);
        if (!lu.isInvertible()) {
            // Name the first port whose own block is singular.
            for (std::size_t p = 0; p < m; ++p) {
                Eigen::FullPivLU<CMatrix> blk(th.z.block<3, 3>(static_cast<Eigen::Index>(3 * p), static_cast<Eigen::Index>(3 * p)));
                if (!blk.isInvertible())
                    throw SimulationError("Thévenin impedance of port at bus " + std::to_string(th.buses[p]) + " is singular");
            }
            throw SimulationError("multi-port Thévenin impedance is singular");
        }
        out.y = lu.inverse();
    } else {
        // Keep only the positive/negative rows of each port and invert there.
        const CMatrix z012 = block_fortescue(m, true) * th.z * block_fortescue(m, false);
        std::vector<Eigen::Index> keep;
        for (std::size_t p = 0; p < m; ++p) {
            keep.push_back(static_cast<Eigen::Index>(3 * p + 1));
            keep.push_back(static_cast<Eigen::Index>(3 * p + 2));
        }
        const auto nk = static_cast<Eigen::Index>(keep.size());
        CMatrix zr(nk, nk);
        for (Eigen::Index a = 0; a < nk; ++a)
            for (Eigen::Index b = 0; b < nk; ++b) zr(a, b) = z012(keep[a], keep[b]);
        Eigen::FullPivLU<CMatrix> lu(zr);
        if (!lu.isInvertible()) throw SimulationError("reduced Thévenin impedance is singular");
        const CMatrix yr = lu.inverse();
        CMatrix y012 = CMatrix::Zero(n, n);
        for (Eigen::Index a = 0; a < nk; ++a)
            for (Eigen::Index b = 0; b < nk; ++b) y012(keep[a], keep[b]) = yr(a, b);
        out.y = block_fortescue(m, false) * y012 * block_fortescue(m, true);
    }
    out.i_n = out.y * th.v_th;
    return out;
}

TheveninEquivalent3ph norton_to_thevenin(const NortonEquivalent3ph& n) {
    Eigen::FullPivLU<CMatrix> lu(n.y);
    if (!lu.isInvertible()) throw SimulationError("Norton admittance is singular");
    TheveninEquivalent3ph th;
    th.buses = n.buses;
    th.z = lu.inverse();
    th.v_th = th.z * n.i_n;
    return th;
}

} // namespace hybridsim::boundary
