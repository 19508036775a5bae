#pragma once

#include "hybridsim/case.hpp"
#include "hybridsim/equivalents.hpp"
#include "hybridsim/network.hpp"
#include "hybridsim/spim.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hybridsim::emt {

inline constexpr double kF0 = 60.0;
inline constexpr double kOmega0 = 2.0 * kPi * kF0;

/// Port p of a multiport is the weighted node combination Σ coef·u[node].
/// Node -1 is ground and never appears.
using PortMap = std::vector<std::vector<std::pair<int, double>>>;

/// Coupled R-L multiport with optional series source:
///   Nᵀu - e = R·i + L·di/dt,  node currents leaving = N·i.
struct RlElement {
    std::string id;
    PortMap ports;
    RMatrix r;
    RMatrix l;
    std::function<void(double, RVector&)> source;   // fills e(t); empty = no source
    CVector e_phasor;                                // source phasor used for initialization

    // Companion state.
    RMatrix g;      // (R + 2L/dt)⁻¹
    RMatrix kh;     // 2L/dt - R
    RVector i;      // current at the last accepted sample
    RVector w;      // Nᵀu - e at the last accepted sample
    RVector hist;   // history term for the sample being solved
    RVector e_now;
};

/// Capacitor multiport: node currents leaving = N·C·dw/dt with w = Nᵀu.
struct CapElement {
    std::string id;
    PortMap ports;
    RMatrix c;
    RMatrix g;
    RVector i;
    RVector w;
    RVector hist;
};

/// Static conductance multiport (loads, fault paths). `on` = in circuit.
struct ConductanceElement {
    std::string id;
    PortMap ports;
    RMatrix g;
    bool on = true;
};

enum class MotorStatus { running, stalled };

/// Single-phase induction motor between a node and ground, stationary-frame
/// model in its own per-unit, scaled into the network by `scale`.
struct MotorElement {
    std::string id;
    int node = -1;
    net::SpimParams p;
    motor::SpimLoad load;
    double scale = 1.0;
    double wb = kOmega0;

    Eigen::Vector3d x = Eigen::Vector3d::Zero();   // i_s, i_dr, i_qr
    double omega = 1.0;
    double te = 0.0;
    double v_prev = 0.0;
    MotorStatus status = MotorStatus::running;
    long below_count = 0;
    long stall_samples = 0;   // samples below stall speed needed to latch

    // Per-step discretization.
    Eigen::Vector3d x_pre = Eigen::Vector3d::Zero();
    Eigen::Vector3d gvec = Eigen::Vector3d::Zero();
    double g_node = 0.0;
};

/// Fixed-step nodal trapezoidal solver. Time is the integer sample index k,
/// t = k·dt.
class Circuit {
public:
    Circuit(int n_nodes, double dt);

    int nodes() const { return n_; }
    double dt() const { return dt_; }
    long sample() const { return k_; }
    double time() const { return static_cast<double>(k_) * dt_; }
    void set_sample(long k) { k_ = k; }

    std::size_t add_rl(RlElement e);
    std::size_t add_cap(CapElement e);
    std::size_t add_conductance(ConductanceElement e);
    std::size_t add_motor(MotorElement m);

    RlElement& rl(std::size_t k) { return rl_[k]; }
    const RlElement& rl(std::size_t k) const { return rl_[k]; }
    CapElement& cap(std::size_t k) { return cap_[k]; }
    ConductanceElement& conductance(std::size_t k) { return g_el_[k]; }
    std::vector<MotorElement>& motors() { return motors_; }
    const std::vector<MotorElement>& motors() const { return motors_; }
    std::vector<RlElement>& rls() { return rl_; }
    const std::vector<RlElement>& rls() const { return rl_; }
    std::vector<CapElement>& caps() { return cap_; }

    /// Replaces R and L of an RL element, keeping its current.
    void update_rl(std::size_t k, const RMatrix& r, const RMatrix& l);

    /// Switches a conductance element; the matrix is refactorized lazily.
    void set_switch(std::size_t k, bool on);

    const RVector& u() const { return u_; }
    RVector& u() { return u_; }

    /// Takes port voltages of every element from the present node voltages
    /// (and sources at the present time). Runs automatically before the first
    /// step unless the state was set by initialize_from_phasors.
    void prime();

    /// Advances one sample. Returns ids of motors that latched a stall.
    std::vector<std::string> step();

    /// Consistent initial state from node phasors at the present sample:
    /// element currents follow from sinusoidal steady state.
    /// `motor_speed` forces the initial rotor speed instead of equilibrium.
    void initialize_from_phasors(const CVector& u_phasor, std::optional<double> motor_speed = std::nullopt);

    /// Total energy in inductive and capacitive elements.
    double stored_energy() const;

private:
    void factorize();
    static RVector port_voltage(const PortMap& ports, const RVector& u);
    static void add_port_current(const PortMap& ports, const RVector& i, RVector& b, double sign);
    static void stamp(const PortMap& ports, const RMatrix& g, RMatrix& y);

    int n_;
    double dt_;
    long k_ = 0;
    std::vector<RlElement> rl_;
    std::vector<CapElement> cap_;
    std::vector<ConductanceElement> g_el_;
    std::vector<MotorElement> motors_;

    bool dirty_ = true;
    bool primed_ = false;
    Eigen::PartialPivLU<RMatrix> lu_;
    RMatrix wz_;    // G0⁻¹·U for the motor nodes
    RMatrix uwz_;   // Uᵀ·G0⁻¹·U
    RVector u_;
};

} // namespace hybridsim::emt
