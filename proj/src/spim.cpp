#include "hybridsim/spim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hybridsim::motor {

SpimPhasors spim_phasors(const net::SpimParams& p, Complex v, double omega) {
    const double xs = p.xls + p.xm;
    const double xr = p.xlr + p.xm;
    const Complex j{0.0, 1.0};
    Eigen::Matrix3cd m;
    m << p.rs + j * xs, j * p.xm, 0.0,
         j * p.xm, p.rr + j * xr, omega * xr,
         -omega * p.xm, -omega * xr, p.rr + j * xr;
    const Eigen::Vector3cd x = m.partialPivLu().solve(Eigen::Vector3cd(v, 0.0, 0.0));
    SpimPhasors out;
    out.is = x(0);
    out.idr = x(1);
    out.iqr = x(2);
    out.te = -p.xm * std::real(out.is * std::conj(out.iqr));
    out.s = v * std::conj(out.is);
    return out;
}

Complex locked_rotor_impedance(const net::SpimParams& p) {
    const Complex j{0.0, 1.0};
    const Complex zr = p.rr + j * (p.xlr + p.xm);
    return p.rs + j * (p.xls + p.xm) + p.xm * p.xm / zr;
}

SpimLoad spim_load(const net::SpimParams& p) {
    const double t_rated = spim_phasors(p, 1.0, p.rated_speed).te;
    SpimLoad l;
    l.c = p.const_torque * t_rated;
    l.k = (1.0 - p.const_torque) * t_rated / (p.rated_speed * p.rated_speed);
    return l;
}

std::optional<double> spim_equilibrium_speed(const net::SpimParams& p, const SpimLoad& load, double v) {
    auto excess = [&](double w) { return spim_phasors(p, v, w).te - load.torque(w); };
    // Walk down from synchronous speed to the first crossing; that is the
    // stable operating point.
    double hi = 1.0;
    double f_hi = excess(hi);
    for (double w = 1.0 - 0.0025; w > 0.0; w -= 0.0025) {
        const double f = excess(w);
        if (f > 0.0 && f_hi <= 0.0) {
            double lo = w;
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (excess(mid) > 0.0) lo = mid;
                else hi = mid;
            }
            return 0.5 * (lo + hi);
        }
        hi = w;
        f_hi = f;
    }
    return std::nullopt;
}

double spim_scale(const net::MotorData& m) {
    const auto per = spim_periodic(m.spim, spim_load(m.spim), 1.0);
    if (!per) throw std::invalid_argument("motor " + m.id + " cannot run at nominal voltage");
    return m.p0 / per->s.real();
}

std::optional<SpimPeriodic> spim_periodic(const net::SpimParams& p, const SpimLoad& load, double vmag, double dt,
                                          double end_phase) {
    constexpr double w0 = 2.0 * kPi * 60.0;
    const auto start = spim_equilibrium_speed(p, load, vmag);
    if (!start) return std::nullopt;
    const long per_cycle = std::lround(1.0 / (60.0 * dt));
    const long n = 40 * per_cycle;
    // Align the supply so the last sample lands on end_phase.
    const double ph0 = end_phase - w0 * static_cast<double>(n) * dt;
    auto v_at = [&](long k) { return vmag * std::cos(w0 * static_cast<double>(k) * dt + ph0); };

    double omega = *start;
    const auto ph = spim_phasors(p, std::polar(vmag, ph0), omega);
    Eigen::Vector3d x(ph.is.real(), ph.idr.real(), ph.iqr.real());
    double te = -2.0 * p.xm * x(0) * x(2);

    const double xs = p.xls + p.xm;
    const double xr = p.xlr + p.xm;
    Eigen::Matrix3d lm;
    lm << xs, p.xm, 0.0, p.xm, xr, 0.0, 0.0, 0.0, xr;
    const Eigen::Matrix3d two_m = (2.0 / (dt * w0)) * lm;
    const double a = 2.0 * p.h / dt;

    double w_sum = 0.0;
    double sc = 0.0, ss = 0.0;   // fundamental of i_s over the last cycle
    for (long k = 0; k < n; ++k) {
        Eigen::Matrix3d kk;
        kk << p.rs, 0.0, 0.0, 0.0, p.rr, omega * xr, -omega * p.xm, -omega * xr, p.rr;
        const Eigen::Vector3d rhs = (two_m - kk) * x + Eigen::Vector3d(v_at(k) + v_at(k + 1), 0.0, 0.0);
        x = (two_m + kk).partialPivLu().solve(rhs);
        const double te1 = -2.0 * p.xm * x(0) * x(2);
        const double r = a * omega + 0.5 * (te + te1) - load.c - 0.5 * load.k * omega * omega;
        double w1 = r / a;
        if (load.k > 0.0) {
            const double disc = a * a + 2.0 * load.k * r;
            w1 = disc > 0.0 ? (-a + std::sqrt(disc)) / load.k : 0.0;
        }
        omega = std::clamp(w1, 0.0, 1.2);
        te = te1;
        if (omega < p.stall_speed) return std::nullopt;
        if (k >= n - per_cycle) {
            const double th = w0 * static_cast<double>(k + 1) * dt + ph0;
            w_sum += omega;
            sc += x(0) * std::cos(th);
            ss += x(0) * std::sin(th);
        }
    }
    SpimPeriodic out;
    out.omega_mean = w_sum / static_cast<double>(per_cycle);
    // Current phasor relative to the supply angle; S = V·conj(I) with V real.
    const Complex i_rel{2.0 * sc / static_cast<double>(per_cycle), -2.0 * ss / static_cast<double>(per_cycle)};
    out.s = vmag * std::conj(i_rel);
    out.x_end = x;
    out.omega_end = omega;
    out.te_end = te;
    return out;
}

} // namespace hybridsim::motor
