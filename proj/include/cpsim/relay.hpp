// SPDX-License-Identifier: Apache-2.0
#pragma once

// Relay wire format and publish-interval bookkeeping.
//
// Frame, all integers big-endian:
//   u32 total length (including these 4 bytes)
//   u8  topic length, topic bytes
//   u64 seq, f64 sim_time, u64 wall_ns
//   u16 count, count x f64

#include "cpsim/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace cpsim {

struct RelayMessage {
    std::string topic;
    std::uint64_t seq = 0;
    double sim_time = 0.0;
    std::uint64_t wall_ns = 0;
    std::vector<double> values;

    friend bool operator==(const RelayMessage& a, const RelayMessage& b) {
        if (a.topic != b.topic || a.seq != b.seq || a.wall_ns != b.wall_ns || a.values.size() != b.values.size()) {
            return false;
        }
        // bit patterns, so NaN payloads and signed zeros count too
        auto bits = [](double v) { return std::bit_cast<std::uint64_t>(v); };
        if (bits(a.sim_time) != bits(b.sim_time)) {
            return false;
        }
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            if (bits(a.values[i]) != bits(b.values[i])) {
                return false;
            }
        }
        return true;
    }
};

inline constexpr std::size_t kFrameHeader = 4;
inline constexpr std::size_t kMaxTopic = 255;
inline constexpr std::size_t kMaxValues = 65535;

namespace detail {

inline void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

inline std::uint64_t get_be(const std::uint8_t* p, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        v = (v << 8) | p[i];
    }
    return v;
}

} // namespace detail

inline std::size_t encoded_size(const RelayMessage& m) {
    return 4 + 1 + m.topic.size() + 8 + 8 + 8 + 2 + 8 * m.values.size();
}

inline std::vector<std::uint8_t> encode(const RelayMessage& m) {
    if (m.topic.size() > kMaxTopic) {
        throw ModelError("relay topic longer than 255 bytes");
    }
    if (m.values.size() > kMaxValues) {
        throw ModelError("relay message carries more than 65535 values");
    }
    std::vector<std::uint8_t> out;
    out.reserve(encoded_size(m));
    detail::put_be(out, encoded_size(m), 4);
    out.push_back(static_cast<std::uint8_t>(m.topic.size()));
    out.insert(out.end(), m.topic.begin(), m.topic.end());
    detail::put_be(out, m.seq, 8);
    detail::put_be(out, std::bit_cast<std::uint64_t>(m.sim_time), 8);
    detail::put_be(out, m.wall_ns, 8);
    detail::put_be(out, m.values.size(), 2);
    for (double v : m.values) {
        detail::put_be(out, std::bit_cast<std::uint64_t>(v), 8);
    }
    return out;
}

/// Length announced by a frame's first four bytes.
inline std::uint32_t frame_length(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFrameHeader) {
        throw MalformedFrame("frame shorter than its length prefix");
    }
    return static_cast<std::uint32_t>(detail::get_be(bytes.data(), 4));
}

inline RelayMessage decode(std::span<const std::uint8_t> bytes) {
    const std::size_t total = frame_length(bytes);
    if (total != bytes.size()) {
        throw MalformedFrame("length prefix says " + std::to_string(total) + " bytes, got " +
                             std::to_string(bytes.size()));
    }
    std::size_t pos = 4;
    auto need = [&](std::size_t n, const char* what) {
        if (bytes.size() - pos < n) {
            throw MalformedFrame(std::string("truncated ") + what);
        }
    };
    need(1, "topic length");
    const std::size_t tlen = bytes[pos++];
    need(tlen, "topic");
    RelayMessage m;
    m.topic.assign(reinterpret_cast<const char*>(bytes.data() + pos), tlen);
    pos += tlen;
    need(26, "header");
    m.seq = detail::get_be(bytes.data() + pos, 8);
    m.sim_time = std::bit_cast<double>(detail::get_be(bytes.data() + pos + 8, 8));
    m.wall_ns = detail::get_be(bytes.data() + pos + 16, 8);
    const std::size_t count = detail::get_be(bytes.data() + pos + 24, 2);
    pos += 26;
    if (bytes.size() - pos != 8 * count) {
        throw MalformedFrame("value count " + std::to_string(count) + " does not match " +
                             std::to_string(bytes.size() - pos) + " payload bytes");
    }
    m.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        m.values[i] = std::bit_cast<double>(detail::get_be(bytes.data() + pos + 8 * i, 8));
    }
    return m;
}

// --- interval logs ---------------------------------------------------------------------

struct IntervalEntry {
    std::string topic;
    std::uint64_t seq = 0;
    std::uint64_t wall_ns = 0;
};

struct IntervalLog {
    std::vector<IntervalEntry> entries;
    std::int64_t wall_epoch_ns = 0; ///< system clock at monotonic zero, for correlating logs

    void add(const std::string& topic, std::uint64_t seq, std::uint64_t wall_ns) {
        entries.push_back({topic, seq, wall_ns});
    }

    /// Timestamps of one topic in log order.
    std::vector<std::uint64_t> timestamps(const std::string& topic) const {
        std::vector<std::uint64_t> t;
        for (const auto& e : entries) {
            if (e.topic == topic) {
                t.push_back(e.wall_ns);
            }
        }
        return t;
    }
};

inline void write_interval_log(const IntervalLog& log, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write interval log '" + path.string() + "'");
    }
    out << "# wall_epoch_ns=" << log.wall_epoch_ns << '\n' << "topic,seq,wall_ns\n";
    for (const auto& e : log.entries) {
        out << e.topic << ',' << e.seq << ',' << e.wall_ns << '\n';
    }
}

inline IntervalLog read_interval_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read interval log '" + path.string() + "'");
    }
    IntervalLog log;
    std::string line;
    int lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            constexpr std::string_view key = "# wall_epoch_ns=";
            if (line.rfind(key, 0) == 0) {
                log.wall_epoch_ns = std::stoll(line.substr(key.size()));
            }
            continue;
        }
        if (!header) {
            if (line != "topic,seq,wall_ns") {
                throw Error(path.string() + ":" + std::to_string(lineno) + ": expected header topic,seq,wall_ns");
            }
            header = true;
            continue;
        }
        const auto a = line.find(',');
        const auto b = a == std::string::npos ? a : line.find(',', a + 1);
        if (b == std::string::npos) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": expected three columns");
        }
        try {
            log.add(line.substr(0, a), std::stoull(line.substr(a + 1, b - a - 1)), std::stoull(line.substr(b + 1)));
        } catch (const std::logic_error&) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": bad number");
        }
    }
    return log;
}

struct IntervalStats {
    std::size_t count = 0; ///< number of intervals
    double median = 0.0;   ///< s
    double mean = 0.0;
    double stddev = 0.0; ///< sample standard deviation (n - 1)
    double min = 0.0;
    double max = 0.0;
    double bin_width = 0.0;
    std::vector<std::size_t> histogram; ///< bin k covers [k, k+1) * bin_width

    double fraction_above(double limit, const std::vector<double>& intervals) const {
        if (intervals.empty()) {
            return 0.0;
        }
        const auto n = std::count_if(intervals.begin(), intervals.end(), [&](double d) { return d > limit; });
        return static_cast<double>(n) / static_cast<double>(intervals.size());
    }
};

/// Successive differences in seconds.
inline std::vector<double> intervals_of(const std::vector<std::uint64_t>& stamps_ns) {
    std::vector<double> d;
    for (std::size_t i = 1; i < stamps_ns.size(); ++i) {
        d.push_back(static_cast<double>(static_cast<std::int64_t>(stamps_ns[i] - stamps_ns[i - 1])) * 1e-9);
    }
    return d;
}

inline IntervalStats interval_stats(const std::vector<std::uint64_t>& stamps_ns, double bin_width = 50e-6) {
    if (stamps_ns.size() < 2) {
        throw InsufficientData("interval statistics need at least two timestamps, got " +
                               std::to_string(stamps_ns.size()));
    }
    if (!(bin_width > 0.0)) {
        throw ModelError("histogram bin width must be positive");
    }
    const auto d = intervals_of(stamps_ns);
    IntervalStats s;
    s.count = d.size();
    s.bin_width = bin_width;
    auto sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    s.min = sorted.front();
    s.max = sorted.back();
    double sum = 0.0;
    for (double x : d) {
        sum += x;
    }
    s.mean = sum / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double x : d) {
            ss += (x - s.mean) * (x - s.mean);
        }
        s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
    }
    const auto bins = static_cast<std::size_t>(std::max(0.0, std::floor(s.max / bin_width))) + 1;
    s.histogram.assign(bins, 0);
    for (double x : d) {
        const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(x / bin_width)));
        ++s.histogram[std::min(k, bins - 1)];
    }
    return s;
}

inline IntervalStats interval_stats(const IntervalLog& log, const std::string& topic, double bin_width = 50e-6) {
    return interval_stats(log.timestamps(topic), bin_width);
}

} // namespace cpsim
