#include "support.hpp"

#include "hybridsim/acmotor.hpp"
#include "hybridsim/spim.hpp"

#include <doctest.h>

using namespace hybridsim;
using doctest::Approx;

namespace {

net::MotorData motor_c() {
    net::MotorData m;
    m.id = "AC_C";
    m.emt_id = "ac_c";
    m.bus = 12;
    m.phase = net::Phase::c;
    m.p0 = 0.625;
    return m;
}

} // namespace

TEST_CASE("stationary-frame motor agrees with the revolving-field circuit") {
    const net::SpimParams p;
    // tests/oracles/derive.py, forward/backward field equivalent circuit
    const auto r = motor::spim_phasors(p, 1.0, 0.95);
    CHECK(r.te == Approx(1.628766053003124).epsilon(1e-12));
    CHECK(r.s.real() == Approx(1.881478413845957).epsilon(1e-12));
    CHECK(r.s.imag() == Approx(1.2580069968994172).epsilon(1e-12));
}

TEST_CASE("equilibrium speed solves the torque balance") {
    const net::SpimParams p;
    const auto load = motor::spim_load(p);
    const auto w1 = motor::spim_equilibrium_speed(p, load, 1.0);
    const auto w9 = motor::spim_equilibrium_speed(p, load, 0.9);
    REQUIRE(w1);
    REQUIRE(w9);
    CHECK(*w1 == Approx(0.975).epsilon(1e-10));
    CHECK(*w9 == Approx(0.968144592317815).epsilon(1e-10));
    CHECK(motor::spim_phasors(p, 0.9, *w9).te == Approx(load.torque(*w9)).epsilon(1e-9));
    // below the breakdown voltage there is no running point
    CHECK_FALSE(motor::spim_equilibrium_speed(p, load, 0.3));
}

TEST_CASE("locked-rotor current is about five times running current") {
    const net::SpimParams p;
    const double ratio = std::abs(1.0 / motor::locked_rotor_impedance(p)) / std::abs(motor::spim_phasors(p, 1.0, 0.975).s);
    CHECK(ratio == Approx(5.133902).epsilon(1e-6));
}

TEST_CASE("periodic solution of a light rotor stays near the phasor equilibrium") {
    net::SpimParams p;
    p.h = 0.03;
    const auto load = motor::spim_load(p);
    const auto per = motor::spim_periodic(p, load, 1.0);
    REQUIRE(per);
    // double-frequency torque ripple shifts the mean speed slightly
    CHECK(std::abs(per->omega_mean - 0.975) < 0.005);
    CHECK(per->omega_end != doctest::Approx(per->omega_mean).epsilon(1e-9));
    const auto ph = motor::spim_phasors(p, 1.0, 0.975).s;
    CHECK(std::abs(per->s - ph) < 0.05 * std::abs(ph));
    CHECK_FALSE(motor::spim_periodic(p, load, 0.3));
}

TEST_CASE("running and stalled performance curves") {
    const auto md = motor_c();
    const phasor::AcMotorPerf m(md, phasor::make_curve(md));
    const auto s1 = phasor::acmotor_pq(m, 1.0);
    CHECK(s1.real() == Approx(m.curve().p0).epsilon(1e-14));
    CHECK(s1.imag() == Approx(m.curve().q0).epsilon(1e-12));
    CHECK(m.curve().p0 == 0.625);
    CHECK(m.curve().q0 > 0.0);

    phasor::AcMotorPerf st(md, phasor::make_curve(md));
    REQUIRE(st.apply_override(SignalKind::motor_stall));
    const auto ss = phasor::acmotor_pq(st, 1.0);
    const Complex expect = std::conj(st.curve().y_stall);
    CHECK(std::abs(ss - expect) < 1e-14);
    CHECK(ss.imag() > 3.0 * m.curve().q0);
    CHECK(std::abs(phasor::acmotor_pq(st, 0.5) - 0.25 * ss) < 1e-14);
}

TEST_CASE("overrides") {
    const auto md = motor_c();
    phasor::AcMotorPerf m(md, phasor::make_curve(md));
    SUBCASE("run on a running motor is a no-op") {
        CHECK_FALSE(m.apply_override(SignalKind::motor_run));
        CHECK(m.status() == phasor::MotorStatus::running);
        CHECK(m.override_active());
    }
    SUBCASE("override disables the autonomous trigger") {
        m.apply_override(SignalKind::motor_run);
        for (int k = 0; k < 20; ++k) CHECK_FALSE(m.update_trigger(0.005 * k, 0.1));
        CHECK(m.status() == phasor::MotorStatus::running);
    }
    SUBCASE("later signal wins") {
        std::vector<EventSignal> sig = {{0.601, SignalKind::motor_run, "ac_c", 0.0}, {0.6, SignalKind::motor_stall, "ac_c", 0.0}};
        std::sort(sig.begin(), sig.end());
        for (const auto& s : sig) m.apply_override(s.kind);
        CHECK(m.status() == phasor::MotorStatus::running);
        std::reverse(sig.begin(), sig.end());
        std::sort(sig.begin(), sig.end());
        CHECK(sig.front().kind == SignalKind::motor_stall);
    }
    SUBCASE("unsupported signal kind") { CHECK_THROWS_AS(m.apply_override(SignalKind::breaker), std::invalid_argument); }
}

TEST_CASE("autonomous stall needs the sag to persist") {
    const auto md = motor_c();
    phasor::AcMotorPerf m(md, phasor::make_curve(md));
    CHECK_FALSE(m.update_trigger(0.500, 0.4));
    CHECK_FALSE(m.update_trigger(0.505, 0.4));
    CHECK_FALSE(m.update_trigger(0.510, 0.9));   // recovered, timer resets
    CHECK_FALSE(m.update_trigger(0.515, 0.4));
    CHECK_FALSE(m.update_trigger(0.530, 0.4));
    CHECK(m.update_trigger(0.515 + md.t_stall, 0.4));
    CHECK(m.status() == phasor::MotorStatus::stalled);
    // latched: no further transitions
    CHECK_FALSE(m.update_trigger(0.6, 1.0));
    CHECK(m.status() == phasor::MotorStatus::stalled);
}
