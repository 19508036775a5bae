#include "hybridsim/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <stdexcept>

namespace hybridsim::transport {

static_assert(std::endian::native == std::endian::little, "wire format assumes a little-endian host");

std::vector<std::uint8_t> encode(const Message& m) {
    const std::uint32_t kind = static_cast<std::uint32_t>(m.kind);
    const std::uint64_t n = m.payload.size();
    std::vector<std::uint8_t> out(12 + 8 * n);
    std::memcpy(out.data(), &kind, 4);
    std::memcpy(out.data() + 4, &n, 8);
    if (n) std::memcpy(out.data() + 12, m.payload.data(), 8 * n);
    return out;
}

std::size_t decode(const std::uint8_t* data, std::size_t size, Message& out) {
    if (size < 12) return 0;
    std::uint32_t kind = 0;
    std::uint64_t n = 0;
    std::memcpy(&kind, data, 4);
    std::memcpy(&n, data + 4, 8);
    if (kind < 1 || kind > 6) throw std::runtime_error("transport: unknown message kind " + std::to_string(kind));
    if (size < 12 + 8 * n) return 0;
    out.kind = static_cast<MessageKind>(kind);
    out.payload.resize(n);
    if (n) std::memcpy(out.payload.data(), data + 12, 8 * n);
    return 12 + 8 * n;
}

namespace {

struct Writer {
    std::vector<double> p;
    void num(double x) { p.push_back(x); }
    void cpx(Complex c) {
        p.push_back(c.real());
        p.push_back(c.imag());
    }
    void str(const std::string& s) {
        num(static_cast<double>(s.size()));
        for (char c : s) num(static_cast<double>(static_cast<unsigned char>(c)));
    }
    void ph3(const ThreePhasePhasor& x) {
        for (std::size_t k = 0; k < 3; ++k) cpx(x[k]);
    }
};

struct Reader {
    const std::vector<double>& p;
    std::size_t at = 0;
    double num() {
        if (at >= p.size()) throw std::runtime_error("transport: truncated payload");
        return p[at++];
    }
    std::size_t count() { return static_cast<std::size_t>(num()); }
    Complex cpx() {
        const double re = num();
        return {re, num()};
    }
    std::string str() {
        const auto n = count();
        std::string s;
        for (std::size_t k = 0; k < n; ++k) s.push_back(static_cast<char>(static_cast<unsigned char>(num())));
        return s;
    }
    ThreePhasePhasor ph3() {
        ThreePhasePhasor x;
        for (std::size_t k = 0; k < 3; ++k) x[k] = cpx();
        return x;
    }
};

void write_th(Writer& w, const TheveninEquivalent3ph& th) {
    w.num(static_cast<double>(th.buses.size()));
    for (auto b : th.buses) w.num(b);
    w.num(th.zero_open ? 1.0 : 0.0);
    for (Eigen::Index k = 0; k < th.v_th.size(); ++k) w.cpx(th.v_th(k));
    for (Eigen::Index r = 0; r < th.z.rows(); ++r)
        for (Eigen::Index c = 0; c < th.z.cols(); ++c) w.cpx(th.z(r, c));
}

TheveninEquivalent3ph read_th(Reader& r) {
    TheveninEquivalent3ph th;
    const auto m = r.count();
    for (std::size_t k = 0; k < m; ++k) th.buses.push_back(static_cast<net::BusId>(r.num()));
    th.zero_open = r.num() != 0.0;
    const auto n = static_cast<Eigen::Index>(3 * m);
    th.v_th.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) th.v_th(k) = r.cpx();
    th.z.resize(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) th.z(a, b) = r.cpx();
    return th;
}

void write_event(Writer& w, const EventSignal& e) {
    w.num(e.t_emt);
    w.num(static_cast<double>(e.kind));
    w.str(e.target);
    w.num(e.value);
}

EventSignal read_event(Reader& r) {
    EventSignal e;
    e.t_emt = r.num();
    e.kind = static_cast<SignalKind>(static_cast<int>(r.num()));
    e.target = r.str();
    e.value = r.num();
    return e;
}

} // namespace

std::vector<double> pack_init(const EmtInit& init) {
    Writer w;
    w.num(init.t0);
    w.num(init.warmup);
    w.num(static_cast<double>(init.v.size()));
    for (const auto& [bus, v] : init.v) {
        w.num(bus);
        w.ph3(v);
    }
    write_th(w, init.th);
    w.num(init.motor_speed ? 1.0 : 0.0);
    w.num(init.motor_speed.value_or(0.0));
    return w.p;
}

EmtInit unpack_init(const std::vector<double>& p) {
    Reader r{p};
    EmtInit init;
    init.t0 = r.num();
    init.warmup = r.num();
    const auto n = r.count();
    for (std::size_t k = 0; k < n; ++k) {
        const auto bus = static_cast<net::BusId>(r.num());
        init.v[bus] = r.ph3();
    }
    init.th = read_th(r);
    const bool has = r.num() != 0.0;
    const double speed = r.num();
    if (has) init.motor_speed = speed;
    return init;
}

std::vector<double> pack_frame(const EmtFrame& f) {
    Writer w;
    w.num(f.t);
    w.num(static_cast<double>(f.i_port.size()));
    for (const auto& x : f.i_port) w.ph3(x);
    for (const auto& x : f.v_port) w.ph3(x);
    w.num(static_cast<double>(f.motors.size()));
    for (const auto& m : f.motors) {
        w.str(m.id);
        w.num(m.status == emt::MotorStatus::stalled ? 1.0 : 0.0);
        w.num(m.omega);
    }
    return w.p;
}

EmtFrame unpack_frame(const std::vector<double>& p) {
    Reader r{p};
    EmtFrame f;
    f.t = r.num();
    const auto n = r.count();
    for (std::size_t k = 0; k < n; ++k) f.i_port.push_back(r.ph3());
    for (std::size_t k = 0; k < n; ++k) f.v_port.push_back(r.ph3());
    const auto nm = r.count();
    for (std::size_t k = 0; k < nm; ++k) {
        emt::MotorSnapshot m;
        m.id = r.str();
        m.status = r.num() != 0.0 ? emt::MotorStatus::stalled : emt::MotorStatus::running;
        m.omega = r.num();
        f.motors.push_back(std::move(m));
    }
    return f;
}

namespace {

/// Shared EMT-side behaviour for both transports.
struct EmtSide {
    std::unique_ptr<emt::EmtEngine> eng;

    EmtFrame frame() {
        EmtFrame f;
        f.t = eng->time();
        f.i_port = eng->boundary_current_phasors();
        for (auto b : eng->ports()) f.v_port.push_back(eng->bus_voltage_phasor(b));
        f.events = eng->take_events();
        f.motors = eng->motors();
        return f;
    }

    EmtFrame initialize(const EmtInit& init) {
        eng->initialize(init.t0 - init.warmup, init.v, &init.th, nullptr, init.motor_speed);
        eng->run_until(init.t0);
        EmtFrame f = frame();
        // Nothing seen during warm-up is honored.
        f.events.clear();
        return f;
    }

    EmtFrame batch(const TheveninEquivalent3ph& th, double t_reach) {
        eng->set_boundary(th, t_reach);
        eng->run_until(t_reach);
        return frame();
    }
};

class InprocChannel final : public EmtChannel {
public:
    explicit InprocChannel(std::unique_ptr<emt::EmtEngine> e) { side_.eng = std::move(e); }

    EmtFrame initialize(const EmtInit& init) override { return side_.initialize(init); }

    void start_batch(const TheveninEquivalent3ph& th, double t_reach) override {
        if (pending_.valid()) throw std::logic_error("EMT batch already in flight");
        pending_ = std::async(std::launch::async, [this, th, t_reach] { return side_.batch(th, t_reach); });
    }

    EmtFrame finish_batch() override {
        if (!pending_.valid()) throw std::logic_error("no EMT batch in flight");
        return pending_.get();
    }

    void switch_notice(double) override {
        if (pending_.valid()) pending_.get();
    }

private:
    EmtSide side_;
    std::future<EmtFrame> pending_;
};

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Socket& operator=(Socket&& o) noexcept {
        std::swap(fd_, o.fd_);
        return *this;
    }
    ~Socket() {
        if (fd_ >= 0) ::close(fd_);
    }
    int fd() const { return fd_; }

    void send(const Message& m) const {
        const auto bytes = encode(m);
        std::size_t off = 0;
        while (off < bytes.size()) {
            const auto n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
            if (n <= 0) throw std::runtime_error("transport: send failed");
            off += static_cast<std::size_t>(n);
        }
    }

    Message recv() {
        for (;;) {
            Message m;
            const auto used = decode(buf_.data(), buf_.size(), m);
            if (used) {
                buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(used));
                return m;
            }
            std::uint8_t tmp[65536];
            const auto n = ::recv(fd_, tmp, sizeof tmp, 0);
            if (n <= 0) throw std::runtime_error("transport: connection closed");
            buf_.insert(buf_.end(), tmp, tmp + n);
        }
    }

private:
    int fd_ = -1;
    std::vector<std::uint8_t> buf_;
};

void no_delay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

class TcpChannel final : public EmtChannel {
public:
    explicit TcpChannel(std::unique_ptr<emt::EmtEngine> e) {
        Socket listener(::socket(AF_INET, SOCK_STREAM, 0));
        if (listener.fd() < 0) throw std::runtime_error("transport: socket() failed");
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = 0;
        if (::bind(listener.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listener.fd(), 1) != 0)
            throw std::runtime_error("transport: cannot listen on loopback");
        socklen_t len = sizeof addr;
        ::getsockname(listener.fd(), reinterpret_cast<sockaddr*>(&addr), &len);

        Socket client(::socket(AF_INET, SOCK_STREAM, 0));
        if (::connect(client.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
            throw std::runtime_error("transport: cannot connect to loopback");
        Socket server(::accept(listener.fd(), nullptr, nullptr));
        if (server.fd() < 0) throw std::runtime_error("transport: accept failed");
        no_delay(client.fd());
        no_delay(server.fd());
        sock_ = std::move(client);

        auto side = std::make_shared<EmtSide>();
        side->eng = std::move(e);
        server_ = std::thread([side, s = std::make_shared<Socket>(std::move(server))] { serve(*side, *s); });
    }

    ~TcpChannel() override {
        try {
            sock_.send({MessageKind::shutdown, {}});
        } catch (...) {
        }
        if (server_.joinable()) server_.join();
    }

    EmtFrame initialize(const EmtInit& init) override {
        sock_.send({MessageKind::handshake, pack_init(init)});
        return receive_frame();
    }

    void start_batch(const TheveninEquivalent3ph& th, double t_reach) override {
        Writer w;
        w.num(t_reach);
        write_th(w, th);
        sock_.send({MessageKind::thevenin_update, w.p});
    }

    EmtFrame finish_batch() override { return receive_frame(); }

    void switch_notice(double t) override { sock_.send({MessageKind::switch_notice, {t}}); }

private:
    EmtFrame receive_frame() {
        std::vector<EventSignal> events;
        for (;;) {
            Message m = sock_.recv();
            if (m.kind == MessageKind::event_signal) {
                Reader r{m.payload};
                events.push_back(read_event(r));
            } else if (m.kind == MessageKind::injection_frame) {
                EmtFrame f = unpack_frame(m.payload);
                f.events = std::move(events);
                return f;
            } else if (m.kind == MessageKind::shutdown) {
                // The EMT side failed; the payload carries the message text.
                Reader r{m.payload};
                throw SimulationError("EMT side: " + r.str());
            } else {
                throw std::runtime_error("transport: unexpected message from EMT side");
            }
        }
    }

    static void reply(Socket& s, const EmtFrame& f) {
        for (const auto& e : f.events) {
            Writer w;
            write_event(w, e);
            s.send({MessageKind::event_signal, w.p});
        }
        s.send({MessageKind::injection_frame, pack_frame(f)});
    }

    static void serve(EmtSide& side, Socket& s) {
        try {
            for (;;) {
                Message m = s.recv();
                try {
                    switch (m.kind) {
                    case MessageKind::handshake: reply(s, side.initialize(unpack_init(m.payload))); break;
                    case MessageKind::thevenin_update: {
                        Reader r{m.payload};
                        const double t_reach = r.num();
                        reply(s, side.batch(read_th(r), t_reach));
                        break;
                    }
                    case MessageKind::switch_notice: break;
                    case MessageKind::shutdown: return;
                    default: throw std::runtime_error("unexpected message on EMT side");
                    }
                } catch (const std::exception& ex) {
                    Writer w;
                    w.str(ex.what());
                    s.send({MessageKind::shutdown, w.p});
                }
            }
        } catch (...) {
            // Connection gone; nothing left to serve.
        }
    }

    Socket sock_;
    std::thread server_;
};

} // namespace

std::unique_ptr<EmtChannel> make_inproc_channel(std::unique_ptr<emt::EmtEngine> engine) {
    return std::make_unique<InprocChannel>(std::move(engine));
}

std::unique_ptr<EmtChannel> make_tcp_channel(std::unique_ptr<emt::EmtEngine> engine) {
    return std::make_unique<TcpChannel>(std::move(engine));
}

} // namespace hybridsim::transport
