#include "support.hpp"

#include "hybridsim/report.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace hybridsim;

TEST_CASE("case9 loads and validates") {
    const auto c = testing::case9();
    CHECK(c.name == "case9");
    CHECK(c.net.size() == 12);
    CHECK(c.boundary == std::vector<net::BusId>{5});
    CHECK(c.emt_map.size() == 3);
    REQUIRE(c.faults.size() == 1);
    CHECK(c.faults[0].kind == FaultKind::slg);
    CHECK(c.faults[0].t_on == 0.5);
    CHECK(c.faults[0].t_off == 0.57);
    CHECK(c.config.dt_emt == 20e-6);
    CHECK(validate_case(c).empty());
}

TEST_CASE("malformed input names the line") {
    std::ifstream f(testing::data_path("malformed.hyb"));
    REQUIRE(f);
    try {
        parse_case(f);
        FAIL("no ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 8);
    }
    std::istringstream bad("[buses]\nbus id=1\n[nonsense]\n");
    CHECK_THROWS_AS(parse_case(bad), ParseError);
}

TEST_CASE("unmapped motor is a mapping gap") {
    auto c = testing::case9();
    c.emt_map.erase("ac_b");
    const auto p = validate_case(c);
    REQUIRE(p.size() == 1);
    CHECK(p[0].find("mapping gap") != std::string::npos);
    CHECK(p[0].find("ac_b") != std::string::npos);
}

TEST_CASE("external fault is rejected for hybrid runs") {
    auto c = testing::case9();
    c.faults[0].bus = 7;
    const auto p = validate_case(c);
    REQUIRE_FALSE(p.empty());
    CHECK(p[0].find("external") != std::string::npos);
}

TEST_CASE("step ratio must be integral") {
    auto c = testing::case9();
    c.config.dt_emt = 3e-5;
    CHECK_FALSE(validate_case(c).empty());
}

namespace {

report::Table table(const std::string& csv) {
    std::istringstream in(csv);
    return report::read_csv(in);
}

} // namespace

TEST_CASE("compare is symmetric and zero against itself") {
    const auto a = table("time_s,v1_5,status_AC_A,stage\n0,1.0,1,1\n0.005,0.98,1,2\n0.01,0.95,0,2\n");
    const auto b = table("time_s,v1_5,status_AC_A,stage\n0,1.0,1,1\n0.005,0.985,1,2\n0.01,0.951,1,2\n");
    const auto self = report::compare(a, a, {}, 0.01);
    CHECK(self.pass);
    for (const auto& d : self.diffs) CHECK(d.max_abs == 0.0);
    CHECK(self.stall_notes.empty());

    const auto ab = report::compare(a, b, {"v1_5"}, 0.01);
    const auto ba = report::compare(b, a, {"v1_5"}, 0.01);
    REQUIRE(ab.diffs.size() == 1);
    CHECK(ab.diffs[0].max_abs == doctest::Approx(0.005));
    CHECK(ab.diffs[0].max_abs == ba.diffs[0].max_abs);
    CHECK(ab.diffs[0].mean_abs == ba.diffs[0].mean_abs);
    CHECK(ab.pass);
    CHECK(ab.stall_notes.size() == 1);
    CHECK_FALSE(report::compare(a, b, {"v1_5"}, 0.001).pass);
    // t_from skips the early rows
    CHECK(report::compare(a, b, {"v1_5"}, 0.01, 0.008).diffs[0].max_abs == doctest::Approx(0.001));
}
