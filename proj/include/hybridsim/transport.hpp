#pragma once

#include "hybridsim/emt_engine.hpp"

#include <cstdint>
#include <future>
#include <memory>
#include <optional>
#include <thread>
#include <vector>

namespace hybridsim::transport {

enum class MessageKind : std::uint32_t {
    handshake = 1,
    injection_frame = 2,
    thevenin_update = 3,
    event_signal = 4,
    switch_notice = 5,
    shutdown = 6,
};

/// Wire format: u32 kind, u64 count, then count little-endian f64 values.
struct Message {
    MessageKind kind = MessageKind::handshake;
    std::vector<double> payload;
};

std::vector<std::uint8_t> encode(const Message& m);
/// Decodes one message; returns the bytes consumed, 0 when incomplete.
std::size_t decode(const std::uint8_t* data, std::size_t size, Message& out);

/// What the coordinator sends to start the EMT side.
struct EmtInit {
    double t0 = 0.0;        // snapshot time; warm-up runs over [t0 - warmup, t0]
    double warmup = 0.1;
    std::map<net::BusId, ThreePhasePhasor> v;
    TheveninEquivalent3ph th;
    std::optional<double> motor_speed;
};

/// What comes back at each interaction boundary.
struct EmtFrame {
    double t = 0.0;
    std::vector<ThreePhasePhasor> i_port;   // detailed -> external, abc
    std::vector<ThreePhasePhasor> v_port;
    std::vector<EventSignal> events;
    std::vector<emt::MotorSnapshot> motors;
};

/// Coordinator-side handle on the EMT engine. One batch is in flight at a time.
class EmtChannel {
public:
    virtual ~EmtChannel() = default;
    virtual EmtFrame initialize(const EmtInit& init) = 0;
    virtual void start_batch(const TheveninEquivalent3ph& th, double t_reach) = 0;
    virtual EmtFrame finish_batch() = 0;
    virtual void switch_notice(double t) = 0;
};

std::unique_ptr<EmtChannel> make_inproc_channel(std::unique_ptr<emt::EmtEngine> engine);
/// The engine runs on its own thread behind a loopback TCP socket.
std::unique_ptr<EmtChannel> make_tcp_channel(std::unique_ptr<emt::EmtEngine> engine);

// Payload packing, exposed for tests.
std::vector<double> pack_init(const EmtInit& init);
EmtInit unpack_init(const std::vector<double>& p);
std::vector<double> pack_frame(const EmtFrame& f);
EmtFrame unpack_frame(const std::vector<double>& p);

} // namespace hybridsim::transport
