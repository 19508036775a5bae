#include "hybridsim/phasor.hpp"

#include <algorithm>
#include <cmath>

namespace hybridsim::phasor {

namespace {

// Link-coordinate current (012, or s1 alone) to a subsystem's bus slice.
void map_in(net::Representation rep, int w, const Complex* c, double sign, CVector& inj, std::size_t bus) {
    const auto b = static_cast<Eigen::Index>(bus);
    if (w == 1) {
        inj(b) += sign * c[0];
        return;
    }
    const Eigen::Vector3cd v(c[0], c[1], c[2]);
    if (rep == net::Representation::three_phase) inj.segment<3>(3 * b) += sign * (fortescue_matrix() * v);
    else inj.segment<3>(3 * b) += sign * v;
}

void map_out(net::Representation rep, int w, const CVector& v, std::size_t bus, double sign, Complex* out) {
    const auto b = static_cast<Eigen::Index>(bus);
    if (w == 1) {
        out[0] += sign * v(b);
        return;
    }
    Eigen::Vector3cd s = v.segment<3>(3 * b);
    if (rep == net::Representation::three_phase) s = fortescue_inverse() * s;
    for (int k = 0; k < 3; ++k) out[k] += sign * s(k);
}

} // namespace

int PhasorGroup::width() const {
    bool any_pos = false;
    bool any_full = false;
    for (const auto* s : subs_) {
        if (s->rep() == net::Representation::positive_sequence) any_pos = true;
        else any_full = true;
    }
    if (any_pos && any_full && !links_.empty())
        throw SimulationError("a positive-sequence subsystem cannot be linked to a three-sequence or three-phase one");
    return any_full ? 3 : 1;
}

void PhasorGroup::add_link_injection(std::size_t k, CVector& inj, const CVector& il) const {
    const int w = width();
    for (std::size_t l = 0; l < links_.size(); ++l) {
        const Link& lk = links_[l];
        if (!lk.closed) continue;
        const Complex* c = il.data() + static_cast<Eigen::Index>(l) * w;
        if (lk.sub_p == k) map_in(subs_[k]->rep(), w, c, -1.0, inj, subs_[k]->net().bus_index(lk.bus_p));
        if (lk.sub_q == k) map_in(subs_[k]->rep(), w, c, +1.0, inj, subs_[k]->net().bus_index(lk.bus_q));
    }
}

void PhasorGroup::link_voltage_drop(std::size_t k, const CVector& v, CVector& drop) const {
    const int w = width();
    for (std::size_t l = 0; l < links_.size(); ++l) {
        const Link& lk = links_[l];
        if (!lk.closed) continue;
        Complex* out = drop.data() + static_cast<Eigen::Index>(l) * w;
        if (lk.sub_p == k) map_out(subs_[k]->rep(), w, v, subs_[k]->net().bus_index(lk.bus_p), +1.0, out);
        if (lk.sub_q == k) map_out(subs_[k]->rep(), w, v, subs_[k]->net().bus_index(lk.bus_q), -1.0, out);
    }
}

void PhasorGroup::refresh_links() {
    bool changed = seen_versions_.size() != subs_.size();
    for (std::size_t k = 0; k < subs_.size(); ++k) {
        subs_[k]->refactor_if_needed();
        if (!changed && seen_versions_[k] != subs_[k]->version()) changed = true;
    }
    const int w = width();
    const auto m = static_cast<Eigen::Index>(links_.size()) * w;
    if (i_link_.size() != m) {
        i_link_ = CVector::Zero(m);
        changed = true;
    }
    if (!changed) return;
    seen_versions_.resize(subs_.size());
    for (std::size_t k = 0; k < subs_.size(); ++k) seen_versions_[k] = subs_[k]->version();
    if (m == 0) return;

    we_.assign(subs_.size(), CMatrix());
    CMatrix zports = CMatrix::Zero(m, m);
    for (std::size_t k = 0; k < subs_.size(); ++k) {
        const auto dim = static_cast<Eigen::Index>(subs_[k]->dimension());
        CMatrix e = CMatrix::Zero(dim, m);
        for (Eigen::Index c = 0; c < m; ++c) {
            CVector unit = CVector::Zero(m);
            unit(c) = 1.0;
            CVector col = CVector::Zero(dim);
            add_link_injection(k, col, unit);
            e.col(c) = col;
        }
        we_[k] = CMatrix::Zero(dim, m);
        for (Eigen::Index c = 0; c < m; ++c)
            if (e.col(c).cwiseAbs().maxCoeff() > 0.0) we_[k].col(c) = subs_[k]->solve(e.col(c));
        for (Eigen::Index c = 0; c < m; ++c) {
            CVector drop = CVector::Zero(m);
            link_voltage_drop(k, we_[k].col(c), drop);
            zports.col(c) -= drop;
        }
    }
    CMatrix mat = zports;
    for (std::size_t l = 0; l < links_.size(); ++l) {
        for (int s = 0; s < w; ++s) {
            const auto r = static_cast<Eigen::Index>(l) * w + s;
            if (!links_[l].closed) {
                mat.row(r).setZero();
                mat.col(r).setZero();
                mat(r, r) = 1.0;
            } else {
                mat(r, r) += links_[l].z;
            }
        }
    }
    Eigen::FullPivLU<CMatrix> check(mat);
    check.setThreshold(1e-10);
    if (!check.isInvertible()) throw TopologyError("link impedance matrix is singular (duplicated or redundant links)");
    link_lu_.compute(mat);
}

double PhasorGroup::network_solve(const SolveOptions& opt) {
    refresh_links();
    const int w = width();
    const auto m = static_cast<Eigen::Index>(links_.size()) * w;
    for (std::size_t l = 0; l < links_.size(); ++l)
        if (!links_[l].closed) i_link_.segment(static_cast<Eigen::Index>(l) * w, w).setZero();

    std::vector<CVector> inj(subs_.size());
    double residual = 0.0;
    for (int it = 0;; ++it) {
        residual = 0.0;
        CVector drop = CVector::Zero(m);
        for (std::size_t k = 0; k < subs_.size(); ++k) {
            inj[k] = subs_[k]->injections(subs_[k]->v());
            CVector total = inj[k];
            add_link_injection(k, total, i_link_);
            const CVector r = subs_[k]->y() * subs_[k]->v() - total;
            if (r.size()) residual = std::max(residual, r.cwiseAbs().maxCoeff());
            link_voltage_drop(k, subs_[k]->v(), drop);
        }
        for (std::size_t l = 0; l < links_.size(); ++l) {
            if (!links_[l].closed) continue;
            for (int s = 0; s < w; ++s) {
                const auto r = static_cast<Eigen::Index>(l) * w + s;
                residual = std::max(residual, std::abs(drop(r) - links_[l].z * i_link_(r)));
            }
        }
        if (!std::isfinite(residual)) throw ConvergenceError("network solution diverged", residual);
        if (residual < opt.tol) return residual;
        if (it > 0 && it % 3 == 0) {
            // Slow contraction comes from motors far from their linearization point.
            bool moved = false;
            for (auto* s : subs_)
                if (s->relinearize_motors(0.02)) moved = true;
            if (moved) {
                refresh_links();
                for (std::size_t k = 0; k < subs_.size(); ++k) inj[k] = subs_[k]->injections(subs_[k]->v());
            }
        }
        if (it >= opt.max_iter)
            throw ConvergenceError("network solution did not converge in " + std::to_string(opt.max_iter) + " iterations",
                                   residual);

        std::vector<CVector> voc(subs_.size());
        for (std::size_t k = 0; k < subs_.size(); ++k) voc[k] = subs_[k]->solve(inj[k]);
        if (m > 0) {
            CVector rhs = CVector::Zero(m);
            for (std::size_t k = 0; k < subs_.size(); ++k) link_voltage_drop(k, voc[k], rhs);
            for (std::size_t l = 0; l < links_.size(); ++l)
                if (!links_[l].closed) rhs.segment(static_cast<Eigen::Index>(l) * w, w).setZero();
            i_link_ = link_lu_.solve(rhs);
            for (std::size_t k = 0; k < subs_.size(); ++k) subs_[k]->v() = voc[k] + we_[k] * i_link_;
        } else {
            for (std::size_t k = 0; k < subs_.size(); ++k) subs_[k]->v() = voc[k];
        }
    }
}

void PhasorGroup::step(double dt, double state_tol, int max_iter, const SolveOptions& opt) {
    using Vec5 = Eigen::Matrix<double, 5, 1>;
    struct Entry {
        Subsystem* sub;
        Machine* mach;
        std::size_t bus;
        Vec5 x0;
        Vec5 f0;
    };
    std::vector<Entry> entries;
    for (auto* s : subs_) {
        for (auto& m : s->machines()) {
            const auto b = s->net().bus_index(m.data().bus);
            const Complex v1 = net::sequence_at(s->rep(), s->v(), b).s1;
            entries.push_back({s, &m, b, Machine::pack(m.state()), m.derivatives(m.state(), v1)});
        }
    }
    auto clamp_exciter = [](Machine& m) {
        auto& x = m.state();
        x.efd = std::clamp(x.efd, m.data().efd_min, m.data().efd_max);
    };
    auto terminal = [](const Entry& e) { return net::sequence_at(e.sub->rep(), e.sub->v(), e.bus).s1; };

    for (auto& e : entries) {
        Machine::unpack(e.x0 + dt * e.f0, e.mach->state());
        clamp_exciter(*e.mach);
    }
    network_solve(opt);

    double dx = 0.0;
    double dv = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        dx = 0.0;
        for (auto& e : entries) {
            const Vec5 f = e.mach->derivatives(e.mach->state(), terminal(e));
            const Vec5 xn = e.x0 + 0.5 * dt * (e.f0 + f);
            dx = std::max(dx, (xn - Machine::pack(e.mach->state())).cwiseAbs().maxCoeff());
            Machine::unpack(xn, e.mach->state());
            clamp_exciter(*e.mach);
        }
        std::vector<CVector> before;
        for (auto* s : subs_) before.push_back(s->v());
        network_solve(opt);
        dv = 0.0;
        for (std::size_t k = 0; k < subs_.size(); ++k)
            if (before[k].size()) dv = std::max(dv, (subs_[k]->v() - before[k]).cwiseAbs().maxCoeff());
        if (dx < state_tol && dv < state_tol) return;
    }
    throw ConvergenceError("state/network iteration did not converge in " + std::to_string(max_iter) + " iterations",
                           std::max(dx, dv));
}

bool PhasorGroup::post_step(double t, const SolveOptions& opt) {
    bool changed = false;
    for (auto* s : subs_)
        if (s->update_motor_triggers(t)) changed = true;
    if (changed) network_solve(opt);
    return changed;
}

void mate_solve(std::vector<Subsystem*> subs, std::vector<Link> links, const SolveOptions& opt) {
    PhasorGroup g(std::move(subs), std::move(links));
    g.network_solve(opt);
}

} // namespace hybridsim::phasor
