#include "support.hpp"

#include "hybridsim/split.hpp"
#include "hybridsim/transport.hpp"

#include <doctest.h>

#include <cstring>

using namespace hybridsim;
using namespace hybridsim::transport;

TEST_CASE("message encode and decode") {
    const Message m{MessageKind::thevenin_update, {1.5, -0.0, 1e-300, 3.141592653589793}};
    const auto bytes = encode(m);
    CHECK(bytes.size() == 4 + 8 + 8 * m.payload.size());
    Message out;
    CHECK(decode(bytes.data(), bytes.size(), out) == bytes.size());
    CHECK(out.kind == m.kind);
    REQUIRE(out.payload.size() == m.payload.size());
    for (std::size_t k = 0; k < m.payload.size(); ++k)
        CHECK(std::memcmp(&out.payload[k], &m.payload[k], sizeof(double)) == 0);

    SUBCASE("incomplete input consumes nothing") {
        for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{12}, bytes.size() - 1})
            CHECK(decode(bytes.data(), n, out) == 0);
    }
    SUBCASE("two messages back to back") {
        auto two = bytes;
        const auto b2 = encode({MessageKind::shutdown, {}});
        two.insert(two.end(), b2.begin(), b2.end());
        const auto used = decode(two.data(), two.size(), out);
        CHECK(used == bytes.size());
        CHECK(decode(two.data() + used, two.size() - used, out) == b2.size());
        CHECK(out.kind == MessageKind::shutdown);
        CHECK(out.payload.empty());
    }
}

TEST_CASE("init payload round trip") {
    EmtInit in;
    in.t0 = 0.3;
    in.warmup = 0.1;
    in.v[1005] = balanced(std::polar(0.98, -0.1));
    in.v[12] = {Complex{0.9, 0.1}, Complex{-0.4, -0.8}, Complex{-0.5, 0.7}};
    in.th.buses = {1005};
    in.th.z = testing::seq_diag_abc({0.01, 0.2}, {0.002, 0.05}, {0.002, 0.05});
    in.th.v_th = to_vector(balanced(1.0));
    in.th.zero_open = true;
    in.motor_speed = 0.93;
    const auto out = unpack_init(pack_init(in));
    CHECK(out.t0 == in.t0);
    CHECK(out.warmup == in.warmup);
    REQUIRE(out.v.size() == 2);
    for (std::size_t p = 0; p < 3; ++p) CHECK(out.v.at(12)[p] == in.v.at(12)[p]);
    CHECK(out.th.buses == in.th.buses);
    CHECK(out.th.z == in.th.z);
    CHECK(out.th.v_th == in.th.v_th);
    CHECK(out.th.zero_open);
    REQUIRE(out.motor_speed);
    CHECK(*out.motor_speed == 0.93);
    in.motor_speed.reset();
    CHECK_FALSE(unpack_init(pack_init(in)).motor_speed);
}

TEST_CASE("frame payload round trip") {
    EmtFrame f;
    f.t = 0.605;
    f.i_port = {{Complex{0.1, 0.2}, Complex{0.3, 0.4}, Complex{0.5, 0.6}}};
    f.v_port = {balanced(Complex{0.97, -0.05})};
    f.motors = {{"ac_a", emt::MotorStatus::running, 0.96}, {"ac_c", emt::MotorStatus::stalled, 0.1}};
    const auto g = unpack_frame(pack_frame(f));
    CHECK(g.t == f.t);
    REQUIRE(g.i_port.size() == 1);
    REQUIRE(g.v_port.size() == 1);
    for (std::size_t p = 0; p < 3; ++p) {
        CHECK(g.i_port[0][p] == f.i_port[0][p]);
        CHECK(g.v_port[0][p] == f.v_port[0][p]);
    }
    REQUIRE(g.motors.size() == 2);
    CHECK(g.motors[1].id == "ac_c");
    CHECK(g.motors[1].status == emt::MotorStatus::stalled);
    CHECK(g.motors[0].omega == 0.96);
}

namespace {

std::unique_ptr<EmtChannel> make_channel(bool tcp, const CaseData& c, const net::SplitResult& sp) {
    auto eng = std::make_unique<emt::EmtEngine>(sp.detailed, std::vector<net::BusId>{sp.breakers.front().dummy},
                                                c.config.dt_emt);
    for (const auto& f : c.faults) eng->add_fault(f);
    return tcp ? make_tcp_channel(std::move(eng)) : make_inproc_channel(std::move(eng));
}

} // namespace

TEST_CASE("loopback and in-process channels agree") {
    const auto c = testing::case9();
    const auto sp = net::split_network(c.net, c.boundary);
    EmtInit init;
    init.t0 = 0.45;
    init.warmup = 0.05;
    for (const auto& b : sp.detailed.buses()) init.v[b.id] = balanced(std::polar(0.97, -0.05));
    init.th.buses = {sp.breakers.front().dummy};
    init.th.z = testing::seq_diag_abc({0.001, 0.05}, {0.001, 0.05}, {0.001, 0.05});
    init.th.v_th = to_vector(balanced(1.0));

    std::vector<EmtFrame> frames[2];
    for (int tcp = 0; tcp < 2; ++tcp) {
        auto ch = make_channel(tcp == 1, c, sp);
        frames[tcp].push_back(ch->initialize(init));
        for (int k = 1; k <= 30; ++k) {
            ch->start_batch(init.th, init.t0 + 0.005 * k);
            frames[tcp].push_back(ch->finish_batch());
        }
        ch->switch_notice(init.t0 + 0.15);
    }
    REQUIRE(frames[0].size() == frames[1].size());
    std::size_t events = 0;
    for (std::size_t k = 0; k < frames[0].size(); ++k) {
        const auto &a = frames[0][k], &b = frames[1][k];
        CHECK(a.t == b.t);
        for (std::size_t p = 0; p < 3; ++p) CHECK(a.i_port[0][p] == b.i_port[0][p]);
        REQUIRE(a.events.size() == b.events.size());
        for (std::size_t e = 0; e < a.events.size(); ++e) {
            CHECK(a.events[e].t_emt == b.events[e].t_emt);
            CHECK(a.events[e].target == b.events[e].target);
        }
        events += a.events.size();
    }
    MESSAGE("events seen through the fault: " << events);
}
