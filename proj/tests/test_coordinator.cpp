#include "support.hpp"

#include "hybridsim/coordinator.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace hybridsim;

namespace {

SimulationResult run(CaseData c, RunMode mode, double t_end) {
    c.config.t_end = t_end;
    RunOptions o;
    o.mode = mode;
    return run_simulation(c, o);
}

double max_diff(const SimulationResult& a, const SimulationResult& b, const std::string& col, double t_from = 0.0) {
    const auto t = a.column("time_s");
    const auto x = a.column(col), y = b.column(col);
    REQUIRE(x.size() == y.size());
    double d = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
        if (t[k] >= t_from) d = std::max(d, std::abs(x[k] - y[k]));
    return d;
}

/// Shared 1.2 s runs of the fault case; the switch lands near 0.8 s.
const SimulationResult& switched() {
    static const SimulationResult r = run(testing::case9(), RunMode::hybrid_switch, 1.2);
    return r;
}

} // namespace

TEST_CASE("without events the hybrid boundary tracks the phasor run") {
    auto c = testing::case9();
    c.faults.clear();
    const auto ts = run(c, RunMode::ts_only, 0.8);
    const auto hy = run(c, RunMode::hybrid_no_switch, 0.8);
    for (const char* q : {"v1_5", "v1_7", "v1_4"}) {
        CAPTURE(q);
        CHECK(max_diff(ts, hy, q) < 0.002);
    }
    CHECK(max_diff(ts, hy, "omega_G2") < 1e-4);
}

TEST_CASE("a bad warm-up aborts stage 2") {
    auto c = testing::case9();
    c.config.t_end = 0.5;
    RunOptions o;
    o.mode = RunMode::hybrid_no_switch;
    o.warmup_motor_speed = 0.5;
    CHECK_THROWS_WITH_AS(run_simulation(c, o), doctest::Contains("warm-up residual"), SimulationError);
}

TEST_CASE("stages only move forward") {
    const auto& r = switched();
    const auto st = r.column("stage");
    for (std::size_t k = 1; k < st.size(); ++k) REQUIRE(st[k] >= st[k - 1]);
    CHECK(st.front() == 1.0);
    CHECK(st.back() == 3.0);
    REQUIRE(r.t_stage2);
    REQUIRE(r.t_switch);
    CHECK(*r.t_stage2 == doctest::Approx(0.3));
    CHECK(*r.t_switch >= 0.57 + 0.2 - 1e-9);
}

TEST_CASE("at the switch the hold window was within tolerance") {
    const auto& r = switched();
    REQUIRE(r.t_switch);
    std::vector<const ControllerTrace*> before;
    for (const auto& c : r.controller)
        if (c.t <= *r.t_switch + 1e-9) before.push_back(&c);
    REQUIRE(before.size() >= 7);
    CHECK(before.back()->decision);
    for (std::size_t k = before.size() - 7; k < before.size(); ++k) CHECK(before[k]->max_dv < 0.005);
    for (const auto& c : r.controller)
        if (c.t < 0.77 - 1e-9) CHECK_FALSE(c.decision);
}

TEST_CASE("runs are deterministic") {
    const auto a = run(testing::case9(), RunMode::hybrid_switch, 1.0);
    const auto b = run(testing::case9(), RunMode::hybrid_switch, 1.0);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) REQUIRE(a.rows[k] == b.rows[k]);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t k = 0; k < a.events.size(); ++k) CHECK(a.events[k].signal.t_emt == b.events[k].signal.t_emt);
}

TEST_CASE("each EMT signal is delivered exactly once, one step later at most") {
    const auto& r = switched();
    std::set<std::pair<double, std::string>> seen;
    const double dt = testing::case9().config.dt_ts;
    for (const auto& e : r.events) {
        CHECK(seen.insert({e.signal.t_emt, e.signal.target}).second);
        CHECK(e.t_delivered >= e.signal.t_emt - 1e-12);
        CHECK(e.t_delivered - e.signal.t_emt <= dt + 1e-9);
        CHECK(e.applied);
    }
    CHECK_FALSE(r.events.empty());
}

TEST_CASE("a fault after the switch is refused") {
    auto c = testing::case9();
    auto f = c.faults.front();
    f.id = "F10b";
    f.t_on = 1.5;
    f.t_off = 1.55;
    c.faults.push_back(f);
    CHECK_THROWS_WITH_AS(run(c, RunMode::hybrid_switch, 2.0), doctest::Contains("after the switch"), SimulationError);
}

TEST_CASE("hybrid_no_switch never leaves stage 2") {
    const auto r = run(testing::case9(), RunMode::hybrid_no_switch, 1.2);
    CHECK_FALSE(r.t_switch);
    const auto t = r.column("time_s");
    const auto st = r.column("stage");
    for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k] > 0.3 + 1e-9) REQUIRE(st[k] == 2.0);
}

TEST_CASE("250 EMT samples per interaction step") {
    const auto path = (std::filesystem::temp_directory_path() / "hybridsim_wave_test.csv").string();
    auto c = testing::case9();
    c.faults.clear();
    c.config.t_end = 0.35;
    RunOptions o;
    o.mode = RunMode::hybrid_no_switch;
    o.waveform_path = path;
    run_simulation(c, o);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::size_t in_step = 0;
    while (std::getline(in, line)) {
        const double t = std::stod(line.substr(0, line.find(',')));
        if (t > 0.3 + 1e-9 && t <= 0.305 + 1e-9) ++in_step;
    }
    CHECK(in_step == 250);
    std::filesystem::remove(path);
}
