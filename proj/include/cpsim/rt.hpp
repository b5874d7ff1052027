// SPDX-License-Identifier: Apache-2.0
#pragma once

// Real-time split of the DC microgrid: the plant (network + droop, 1 ms) and
// the secondary controller run as separate processes and exchange framed
// samples over two one-way TCP relays.
//
//   plant      --"vref"-->   controller
//   plant      <--"delta"--  controller
//
// Each process owns one publisher (a listening socket accepting a single
// subscriber) and one subscriber (a receive thread feeding a latest-value
// mailbox). The simulation thread never blocks on the network: publishes use
// non-blocking sends, reads take whatever the mailbox holds.

#include "cpsim/config.hpp"
#include "cpsim/csv.hpp"
#include "cpsim/relay.hpp"
#include "cpsim/scenarios.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <mutex>
#include <optional>
#include <thread>

namespace cpsim::rt {

class ConnectionError : public Error {
public:
    using Error::Error;
};

inline std::uint64_t monotonic_ns() {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
            .count());
}

/// System-clock nanoseconds at monotonic zero.
inline std::int64_t wall_epoch_ns() {
    const auto sys = std::chrono::duration_cast<std::chrono::nanoseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    return static_cast<std::int64_t>(sys) - static_cast<std::int64_t>(monotonic_ns());
}

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    std::string str() const { return host + ":" + std::to_string(port); }
};

inline Endpoint parse_endpoint(const std::string& text, const std::string& field = "endpoint") {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw ValidationError(field, "expected host:port, got '" + text + "'");
    }
    const auto port_text = text.substr(colon + 1);
    unsigned long port = 0;
    try {
        std::size_t used = 0;
        port = std::stoul(port_text, &used);
        if (used != port_text.size()) {
            throw std::invalid_argument("trailing");
        }
    } catch (const std::logic_error&) {
        throw ValidationError(field, "bad port in '" + text + "'");
    }
    if (port > 65535) {
        throw ValidationError(field, "port out of range in '" + text + "'");
    }
    return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

namespace detail {

/// Owning file descriptor.
class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Fd& operator=(Fd&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    ~Fd() { reset(); }

    int get() const noexcept { return fd_; }
    explicit operator bool() const noexcept { return fd_ >= 0; }
    int release() noexcept { return std::exchange(fd_, -1); }
    void reset() noexcept {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
};

inline sockaddr_in resolve(const Endpoint& ep) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (const int rc = ::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res); rc != 0 || !res) {
        throw ConnectionError("cannot resolve '" + ep.host + "': " + ::gai_strerror(rc));
    }
    sockaddr_in addr{};
    std::memcpy(&addr, res->ai_addr, sizeof addr);
    ::freeaddrinfo(res);
    addr.sin_port = htons(ep.port);
    return addr;
}

inline std::string errno_text() { return std::strerror(errno); }

inline void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

} // namespace detail

/// Bind and listen; port 0 picks an ephemeral port.
inline int listen_on(const Endpoint& ep) {
    detail::Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!fd) {
        throw ConnectionError("socket: " + detail::errno_text());
    }
    int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const auto addr = detail::resolve(ep);
    if (::bind(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
        throw ConnectionError("cannot bind " + ep.str() + ": " + detail::errno_text());
    }
    if (::listen(fd.get(), 1) != 0) {
        throw ConnectionError("cannot listen on " + ep.str() + ": " + detail::errno_text());
    }
    return fd.release();
}

inline std::uint16_t local_port(int fd) {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
}

/// One topic, one subscriber. Frames that cannot be sent right away are
/// queued whole and flushed before the next one.
class Publisher {
public:
    Publisher(std::string topic, const Endpoint& bind) : Publisher(std::move(topic), listen_on(bind)) {}

    /// Adopt an already listening socket.
    Publisher(std::string topic, int listen_fd) : topic_(std::move(topic)), listen_(listen_fd) {}

    std::uint16_t port() const { return local_port(listen_.get()); }
    const std::string& topic() const noexcept { return topic_; }
    bool connected() const noexcept { return static_cast<bool>(peer_); }
    std::uint64_t dropped() const noexcept { return dropped_; }
    std::uint64_t next_seq() const noexcept { return seq_; }

    /// Accept a pending subscriber, waiting at most `timeout` seconds.
    bool accept(double timeout) {
        if (peer_) {
            return true;
        }
        pollfd p{listen_.get(), POLLIN, 0};
        const int ms = static_cast<int>(std::max(0.0, timeout) * 1e3);
        if (::poll(&p, 1, ms) <= 0) {
            return false;
        }
        detail::Fd fd(::accept4(listen_.get(), nullptr, nullptr, SOCK_CLOEXEC | SOCK_NONBLOCK));
        if (!fd) {
            return false;
        }
        detail::set_nodelay(fd.get());
        peer_ = std::move(fd);
        pending_.clear();
        return true;
    }

    /// Send one sample; returns the message as stamped. Without a subscriber
    /// the message is counted as dropped.
    RelayMessage publish(double sim_time, std::vector<double> values) {
        RelayMessage m{topic_, seq_++, sim_time, monotonic_ns(), std::move(values)};
        if (!peer_) {
            accept(0.0);
        }
        if (!peer_) {
            ++dropped_;
            return m;
        }
        const auto frame = encode(m);
        pending_.insert(pending_.end(), frame.begin(), frame.end());
        flush();
        return m;
    }

    void close() {
        peer_.reset();
        listen_.reset();
    }

private:
    void flush() {
        while (!pending_.empty()) {
            const auto n = ::send(peer_.get(), pending_.data(), pending_.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
            if (n > 0) {
                pending_.erase(pending_.begin(), pending_.begin() + n);
                continue;
            }
            if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
                if (pending_.size() > (1u << 20)) {
                    // subscriber stopped reading; give it up
                    peer_.reset();
                    pending_.clear();
                }
                return;
            }
            peer_.reset();
            pending_.clear();
            ++dropped_;
            return;
        }
    }

    std::string topic_;
    detail::Fd listen_;
    detail::Fd peer_;
    std::vector<std::uint8_t> pending_;
    std::uint64_t seq_ = 0;
    std::uint64_t dropped_ = 0;
};

/// Hold-last subscriber: a receive thread decodes frames into a one-slot
/// mailbox; `latest()` copies the slot without waiting on the network.
class Subscriber {
public:
    struct Sample {
        std::vector<double> values;
        double sim_time = 0.0;
        std::uint64_t seq = 0;
        bool received = false; ///< false until the first message arrives
        bool stale = false;    ///< no message (or a closed connection) for longer than the timeout
    };

    Subscriber(std::string topic, Endpoint peer, std::vector<double> initial, double stale_timeout)
        : topic_(std::move(topic)), peer_(std::move(peer)), stale_ns_(static_cast<std::uint64_t>(stale_timeout * 1e9)) {
        slot_.values = std::move(initial);
    }

    Subscriber(const Subscriber&) = delete;
    Subscriber& operator=(const Subscriber&) = delete;
    ~Subscriber() { stop(); }

    /// One connection attempt; starts the receive thread on success.
    bool try_connect() {
        if (running_) {
            return true;
        }
        detail::Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
        if (!fd) {
            throw ConnectionError("socket: " + detail::errno_text());
        }
        const auto addr = detail::resolve(peer_);
        if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
            return false;
        }
        detail::set_nodelay(fd.get());
        sock_ = std::move(fd);
        running_ = true;
        thread_ = std::thread([this] { receive_loop(); });
        return true;
    }

    /// Retry until connected or `timeout` seconds have passed.
    bool connect(double timeout) {
        const auto deadline = monotonic_ns() + static_cast<std::uint64_t>(timeout * 1e9);
        while (!try_connect()) {
            if (monotonic_ns() >= deadline) {
                return false;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        return true;
    }

    Sample latest() const {
        std::lock_guard lock(mu_);
        Sample s = slot_;
        const auto now = monotonic_ns();
        if (closed_) {
            s.stale = now - closed_at_ > stale_ns_;
        } else if (slot_.received) {
            s.stale = now - last_rx_ > stale_ns_;
        }
        return s;
    }

    /// Block (outside the simulation loop) until the first message or timeout.
    bool wait_first(double timeout) const {
        const auto deadline = monotonic_ns() + static_cast<std::uint64_t>(timeout * 1e9);
        while (monotonic_ns() < deadline) {
            {
                std::lock_guard lock(mu_);
                if (slot_.received || closed_) {
                    return slot_.received;
                }
            }
            std::this_thread::sleep_for(std::chrono::microseconds(200));
        }
        return false;
    }

    bool connected() const noexcept { return running_; }
    bool closed() const {
        std::lock_guard lock(mu_);
        return closed_;
    }
    std::uint64_t received_count() const noexcept { return received_; }
    std::uint64_t seq_gaps() const noexcept { return gaps_; }

    void stop() {
        if (sock_) {
            ::shutdown(sock_.get(), SHUT_RDWR);
        }
        if (thread_.joinable()) {
            thread_.join();
        }
        sock_.reset();
    }

private:
    void receive_loop() {
        std::vector<std::uint8_t> buf;
        std::uint8_t chunk[4096];
        while (true) {
            const auto n = ::recv(sock_.get(), chunk, sizeof chunk, 0);
            if (n <= 0) {
                if (n < 0 && errno == EINTR) {
                    continue;
                }
                break;
            }
            buf.insert(buf.end(), chunk, chunk + n);
            std::size_t pos = 0;
            while (buf.size() - pos >= kFrameHeader) {
                const auto len = frame_length({buf.data() + pos, buf.size() - pos});
                if (len < kFrameHeader) {
                    std::fprintf(stderr, "relay %s: bad frame length %u, closing\n", topic_.c_str(), len);
                    mark_closed();
                    return;
                }
                if (buf.size() - pos < len) {
                    break;
                }
                try {
                    deliver(decode({buf.data() + pos, len}));
                } catch (const MalformedFrame& ex) {
                    std::fprintf(stderr, "relay %s: %s\n", topic_.c_str(), ex.what());
                }
                pos += len;
            }
            buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(pos));
        }
        mark_closed();
    }

    void deliver(RelayMessage&& m) {
        if (m.topic != topic_) {
            return;
        }
        std::lock_guard lock(mu_);
        if (slot_.received && m.seq <= slot_.seq) {
            return; // never hand out an older sample
        }
        if (slot_.received && m.seq != slot_.seq + 1) {
            gaps_ += m.seq - slot_.seq - 1;
        }
        slot_.values = std::move(m.values);
        slot_.sim_time = m.sim_time;
        slot_.seq = m.seq;
        slot_.received = true;
        last_rx_ = monotonic_ns();
        ++received_;
    }

    void mark_closed() {
        std::lock_guard lock(mu_);
        closed_ = true;
        closed_at_ = monotonic_ns();
    }

    std::string topic_;
    Endpoint peer_;
    std::uint64_t stale_ns_;
    detail::Fd sock_;
    std::thread thread_;
    std::atomic<bool> running_{false};
    mutable std::mutex mu_;
    Sample slot_;
    std::uint64_t last_rx_ = 0;
    bool closed_ = false;
    std::uint64_t closed_at_ = 0;
    std::atomic<std::uint64_t> received_{0};
    std::atomic<std::uint64_t> gaps_{0};
};

/// Releases the caller no earlier than `step` after the previous release:
/// sleep until `spin_window` before the deadline, then spin. A caller that
/// arrives after the deadline is released at once and the miss is counted.
class Pacer {
public:
    Pacer(double step, double spin_window)
        : step_ns_(static_cast<std::uint64_t>(std::llround(step * 1e9))),
          spin_ns_(static_cast<std::uint64_t>(std::llround(spin_window * 1e9))) {
        if (step_ns_ == 0) {
            throw ModelError("pacing step must be positive");
        }
    }

    /// Returns true when the deadline had already passed (DeadlineMiss).
    bool wait() {
        if (!started_) {
            started_ = true;
            last_ = monotonic_ns();
            return false;
        }
        const auto target = last_ + step_ns_;
        auto now = monotonic_ns();
        if (now > target) {
            ++misses_;
            last_ = now;
            return true;
        }
        if (target - now > spin_ns_) {
            const auto wake = std::chrono::steady_clock::time_point(
                std::chrono::nanoseconds(static_cast<std::int64_t>(target - spin_ns_)));
            std::this_thread::sleep_until(wake);
        }
        while ((now = monotonic_ns()) < target) {
        }
        last_ = now;
        return false;
    }

    std::uint64_t misses() const noexcept { return misses_; }
    std::uint64_t last_release_ns() const noexcept { return last_; }

private:
    std::uint64_t step_ns_;
    std::uint64_t spin_ns_;
    std::uint64_t last_ = 0;
    bool started_ = false;
    std::uint64_t misses_ = 0;
};

/// Publish after pacing; logs the publish timestamp.
inline bool paced_publish(Publisher& pub, Pacer& pacer, IntervalLog& log, double sim_time,
                          std::vector<double> values) {
    const bool missed = pacer.wait();
    const auto m = pub.publish(sim_time, std::move(values));
    log.add(m.topic, m.seq, m.wall_ns);
    return missed;
}

// --- plant and controller roles ------------------------------------------------------------

inline constexpr const char* kVrefTopic = "vref";
inline constexpr const char* kDeltaTopic = "delta";

struct RoleReport {
    WaveformSet waves;
    IntervalLog log;
    std::uint64_t deadline_misses = 0;
    std::uint64_t stale_reads = 0;
    std::uint64_t seq_gaps = 0;
    bool peer_connected = false;

    nlohmann::json summary() const {
        return {{"deadline_misses", deadline_misses},
                {"stale_reads", stale_reads},
                {"seq_gaps", seq_gaps},
                {"peer_connected", peer_connected},
                {"publishes", log.entries.size()}};
    }
};

namespace detail {

/// Wait until the subscriber is connected and our publisher has a peer.
inline bool rendezvous(Publisher& pub, Subscriber& sub, double timeout) {
    const auto deadline = monotonic_ns() + static_cast<std::uint64_t>(timeout * 1e9);
    while (true) {
        sub.try_connect();
        pub.accept(0.01);
        if (sub.connected() && pub.connected()) {
            return true;
        }
        if (monotonic_ns() >= deadline) {
            return false;
        }
        if (!sub.connected()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
    }
}

} // namespace detail

/// Plant side: network, droop and recorder in one dataflow cluster at `dt`,
/// with the secondary correction arriving through the subscriber (hold-last)
/// and the droop output published once per step, paced to wall time.
/// Without a controller the plant runs open loop (delta = 0).
inline RoleReport run_rt_plant(const ScenarioConfig& cfg, Publisher& pub, Subscriber& sub) {
    require_scenario(cfg, ScenarioId::Dc);
    const auto& p = cfg.dc.plant;
    const auto& rt = cfg.realtime;
    RoleReport rep;
    rep.log.wall_epoch_ns = wall_epoch_ns();
    rep.peer_connected = detail::rendezvous(pub, sub, rt.connect_timeout);
    if (!rep.peer_connected) {
        std::fprintf(stderr, "rt-plant: controller not reachable within %.3g s; running open loop\n",
                     rt.connect_timeout);
    }

    auto block = std::make_shared<ElnBlock>(eln::System(build_dc_network(p), cfg.dt, cfg.integrator));
    tdf::Cluster cluster(cfg.dt);

    tdf::ModuleSpec relay_in{"relay_in", {}, {{"delta"}}, {}};
    relay_in.process = [&sub, &rep](tdf::Activation& act) {
        const auto s = sub.latest();
        rep.stale_reads += s.stale ? 1 : 0;
        act.write(0, s.values.empty() ? 0.0 : s.values.front());
    };
    const auto in_id = cluster.add(relay_in);
    const auto droop_id = cluster.add(make_droop_module(p));
    const auto eln_id = cluster.add(make_eln_module("plant", block));

    Pacer pacer(cfg.dt, rt.spin_window);
    tdf::ModuleSpec relay_out{"relay_out", {{"vref"}}, {}, {}};
    relay_out.process = [&](tdf::Activation& act) {
        paced_publish(pub, pacer, rep.log, act.time(), {act.read(0)});
    };
    const auto out_id = cluster.add(relay_out);

    auto rec = std::make_shared<WaveformSet>();
    const auto rec_id = cluster.add(make_recorder("recorder", dc_columns(), cfg.record_stride, cfg.dt, rec));

    cluster.connect(in_id, "delta", droop_id, "delta");
    cluster.connect(droop_id, "vref", eln_id, "v0");
    cluster.connect(eln_id, "i", droop_id, "i");
    cluster.connect(droop_id, "vref_now", out_id, "vref");
    cluster.connect(droop_id, "vref", rec_id, "V0");
    cluster.connect(droop_id, "vref_now", rec_id, "Vref");
    cluster.connect(in_id, "delta", rec_id, "delta");
    cluster.connect(eln_id, "i", rec_id, "i");
    cluster.connect(eln_id, "V", rec_id, "V");

    tdf::Simulator sim(std::move(cluster));
    run_samples(sim, step_count(cfg.duration, cfg.dt) + 1, cfg.dt, *rec, cfg.record_stride);
    pub.close();
    rep.deadline_misses = pacer.misses();
    rep.seq_gaps = sub.seq_gaps();
    sub.stop();
    rep.waves = *rec;
    return rep;
}

inline std::vector<std::string> controller_columns() { return {"delta", "vref_seen"}; }

/// Controller side: every secondary period, read the newest Vref and publish
/// the updated correction. Starts on the plant's first sample and stops when
/// the plant closes its relay (or after the configured duration).
inline RoleReport run_rt_controller(const ScenarioConfig& cfg, Publisher& pub, Subscriber& sub) {
    require_scenario(cfg, ScenarioId::Dc);
    const auto& d = cfg.dc;
    const auto& rt = cfg.realtime;
    RoleReport rep;
    rep.log.wall_epoch_ns = wall_epoch_ns();
    rep.peer_connected = detail::rendezvous(pub, sub, rt.connect_timeout);
    if (!rep.peer_connected) {
        throw ConnectionError("rt-controller: plant not reachable within " + std::to_string(rt.connect_timeout) +
                              " s");
    }
    if (!sub.wait_first(rt.connect_timeout)) {
        throw ConnectionError("rt-controller: no sample from the plant within " + std::to_string(rt.connect_timeout) +
                              " s");
    }

    SecondaryController sec{0.0, d.plant.vn, d.plant.ks, d.secondary_period, d.secondary_start_delay,
                            d.secondary_enabled};
    Pacer pacer(d.secondary_period, rt.spin_window);
    WaveformSet w;
    for (const auto& c : controller_columns()) {
        w.traces.push_back({c, 0.0, d.secondary_period, {}});
    }
    const auto steps = step_count(cfg.duration, d.secondary_period);
    for (std::uint64_t k = 0; k <= steps; ++k) {
        pacer.wait(); // the first call only starts the clock
        const auto s = sub.latest();
        if (sub.closed()) {
            break;
        }
        rep.stale_reads += s.stale ? 1 : 0;
        const double t = static_cast<double>(k) * d.secondary_period;
        const double vref = s.values.empty() ? d.plant.vn : s.values.front();
        const double delta = sec.update(t, vref);
        const auto m = pub.publish(t, {delta});
        rep.log.add(m.topic, m.seq, m.wall_ns);
        w.traces[0].samples.push_back(delta);
        w.traces[1].samples.push_back(vref);
    }
    pub.close();
    rep.deadline_misses = pacer.misses();
    rep.seq_gaps = sub.seq_gaps();
    sub.stop();
    rep.waves = std::move(w);
    return rep;
}

// --- two-process run ------------------------------------------------------------------

struct SplitRunResult {
    WaveformSet plant;      ///< same columns as run_dc
    WaveformSet controller; ///< delta, vref_seen at the secondary period
    IntervalLog plant_log;  ///< "vref" publishes
    IntervalLog controller_log;
    nlohmann::json plant_summary;
    nlohmann::json controller_summary;
};

struct SplitOptions {
    bool start_controller = true; ///< false leaves the plant without a peer
};

namespace detail {

template <class F>
pid_t spawn(const char* role, F&& body) {
    std::fflush(nullptr);
    const pid_t pid = ::fork();
    if (pid < 0) {
        throw ConnectionError(std::string("fork failed for ") + role + ": " + errno_text());
    }
    if (pid == 0) {
        int code = 0;
        try {
            body();
        } catch (const std::exception& ex) {
            std::fprintf(stderr, "%s: %s\n", role, ex.what());
            code = 2;
        }
        std::fflush(nullptr);
        ::_exit(code);
    }
    return pid;
}

inline void reap(pid_t pid, const char* role) {
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        throw SimulationAbort(role, 0.0, "process failed (status " + std::to_string(status) + ")");
    }
}

inline void write_summary(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

inline nlohmann::json read_summary(const std::filesystem::path& path) {
    std::ifstream in(path);
    return nlohmann::json::parse(in);
}

} // namespace detail

/// Fork the plant and the controller, let them run against each other over
/// loopback TCP, and collect their outputs from `out_dir`:
///   dc.csv, controller.csv, intervals_plant.csv, intervals_controller.csv,
///   plant.json, controller.json
/// Listening sockets are bound here, before forking, so both sides find their
/// peer immediately; port 0 in an endpoint picks a free port.
inline SplitRunResult run_split_dc(const ScenarioConfig& cfg, const std::filesystem::path& out_dir,
                                   SplitOptions opt = {}) {
    require_scenario(cfg, ScenarioId::Dc);
    std::filesystem::create_directories(out_dir);
    const auto plant_ep = parse_endpoint(cfg.realtime.plant_endpoint, "realtime.plant_endpoint");
    const auto ctrl_ep = parse_endpoint(cfg.realtime.controller_endpoint, "realtime.controller_endpoint");
    detail::Fd plant_listen(listen_on(plant_ep));
    detail::Fd ctrl_listen(listen_on(ctrl_ep));
    const Endpoint plant_at{plant_ep.host, local_port(plant_listen.get())};
    const Endpoint ctrl_at{ctrl_ep.host, local_port(ctrl_listen.get())};

    const pid_t plant = detail::spawn("rt-plant", [&] {
        ctrl_listen.reset();
        Publisher pub(kVrefTopic, plant_listen.release());
        Subscriber sub(kDeltaTopic, ctrl_at, {0.0}, cfg.realtime.stale_timeout);
        const auto rep = run_rt_plant(cfg, pub, sub);
        write_waveforms(rep.waves, out_dir / "dc.csv");
        write_interval_log(rep.log, out_dir / "intervals_plant.csv");
        detail::write_summary(rep.summary(), out_dir / "plant.json");
    });
    std::optional<pid_t> controller;
    if (opt.start_controller) {
        controller = detail::spawn("rt-controller", [&] {
            plant_listen.reset();
            Publisher pub(kDeltaTopic, ctrl_listen.release());
            Subscriber sub(kVrefTopic, plant_at, {cfg.dc.plant.vn}, cfg.realtime.stale_timeout);
            const auto rep = run_rt_controller(cfg, pub, sub);
            write_waveforms(rep.waves, out_dir / "controller.csv");
            write_interval_log(rep.log, out_dir / "intervals_controller.csv");
            detail::write_summary(rep.summary(), out_dir / "controller.json");
        });
    }
    plant_listen.reset();
    ctrl_listen.reset();

    detail::reap(plant, "rt-plant");
    if (controller) {
        detail::reap(*controller, "rt-controller");
    }

    SplitRunResult res;
    res.plant = read_waveforms(out_dir / "dc.csv");
    res.plant_log = read_interval_log(out_dir / "intervals_plant.csv");
    res.plant_summary = detail::read_summary(out_dir / "plant.json");
    if (controller) {
        res.controller = read_waveforms(out_dir / "controller.csv");
        res.controller_log = read_interval_log(out_dir / "intervals_controller.csv");
        res.controller_summary = detail::read_summary(out_dir / "controller.json");
    }
    return res;
}

} // namespace cpsim::rt
