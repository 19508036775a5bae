#include "hybridsim/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hybridsim {

namespace {

constexpr double kF0 = 60.0;
constexpr std::size_t kHistory = 64;

void push(std::vector<double>& h, double x) {
    h.push_back(x);
    if (h.size() > kHistory) h.erase(h.begin());
}

} // namespace

std::string to_string(ControllerPhase p) {
    switch (p) {
    case ControllerPhase::waiting_delay: return "waiting_delay";
    case ControllerPhase::watching_rate: return "watching_rate";
    case ControllerPhase::watching_dv: return "watching_dv";
    }
    return "?";
}

int hold_steps(const SwitchConfig& cfg, double dt_ts) {
    return static_cast<int>(std::ceil(cfg.hold_cycles / (kF0 * dt_ts) - 1e-9));
}

ControllerState controller_update(const ControllerState& cs, const SwitchConfig& cfg, double dt_ts, double max_dv,
                                  double rate, double t, double t_clear) {
    ControllerState s = cs;
    if (t_clear != s.t_clear) {
        s.t_clear = t_clear;
        s.phase = ControllerPhase::waiting_delay;
        s.counter = 0;
        s.decision = false;
    }
    s.last_dv = max_dv;
    s.last_rate = rate;
    push(s.dv_history, max_dv);
    push(s.rate_history, rate);
    if (s.decision) return s;

    if (s.phase == ControllerPhase::waiting_delay) {
        if (t + 1e-9 < s.t_clear + cfg.t_delay) return s;
        s.phase = ControllerPhase::watching_rate;
    }
    if (s.phase == ControllerPhase::watching_rate) {
        if (!(rate < cfg.eps_rate)) return s;
        s.phase = ControllerPhase::watching_dv;
    }
    if (max_dv < cfg.eps_dv) ++s.counter;
    else s.counter = 0;
    if (s.counter >= hold_steps(cfg, dt_ts)) s.decision = true;
    return s;
}

ControllerState controller_step(const ControllerState& cs, const SwitchConfig& cfg, double dt_ts,
                                const std::vector<ThreePhasePhasor>& v_de, const std::vector<SequencePhasor>& v_ex,
                                double t, double t_clear) {
    if (v_de.size() != v_ex.size()) throw std::invalid_argument("controller_step: boundary size mismatch");
    double max_dv = 0.0;
    std::vector<double> mags;
    for (std::size_t p = 0; p < v_de.size(); ++p) {
        const auto ex = seq_to_phase(v_ex[p]);
        for (std::size_t k = 0; k < 3; ++k) {
            max_dv = std::max(max_dv, std::abs(v_de[p][k] - ex[k]));
            mags.push_back(std::abs(v_de[p][k]));
            mags.push_back(std::abs(ex[k]));
        }
    }
    double rate = 0.0;
    if (cs.v_prev.size() == mags.size())
        for (std::size_t k = 0; k < mags.size(); ++k) rate = std::max(rate, std::abs(mags[k] - cs.v_prev[k]));
    else
        rate = std::numeric_limits<double>::infinity();
    ControllerState s = controller_update(cs, cfg, dt_ts, max_dv, rate, t, t_clear);
    s.v_prev = std::move(mags);
    return s;
}

} // namespace hybridsim
