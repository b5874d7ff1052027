// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cpsim/analysis.hpp"
#include "cpsim/error.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef CPSIM_VERSION
#define CPSIM_VERSION "0.0.0"
#endif

namespace cpsim {

class IoError : public Error {
public:
    using Error::Error;
};

/// One CSV per set: `time,<name>...`, time with 9 significant digits and
/// values in scientific notation with 9 significant digits. All traces must
/// share start, period and length.
inline void write_waveforms(const WaveformSet& ws, const std::filesystem::path& path) {
    std::size_t rows = 0;
    double start = 0.0, period = 0.0;
    if (!ws.traces.empty()) {
        const auto& ref = ws.traces.front();
        rows = ref.size();
        start = ref.start;
        period = ref.period;
        for (const auto& w : ws.traces) {
            if (w.size() != rows || w.start != start || w.period != period) {
                throw ModelError("waveform '" + w.name + "' does not share the time axis of '" + ref.name + "'");
            }
        }
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    std::string line = "time";
    for (const auto& w : ws.traces) {
        line += ',';
        line += w.name;
    }
    line += '\n';
    std::fputs(line.c_str(), f);
    char buf[40];
    for (std::size_t k = 0; k < rows; ++k) {
        line.clear();
        std::snprintf(buf, sizeof buf, "%.9g", start + static_cast<double>(k) * period);
        line += buf;
        for (const auto& w : ws.traces) {
            std::snprintf(buf, sizeof buf, ",%.8e", w.samples[k]);
            line += buf;
        }
        line += '\n';
        std::fputs(line.c_str(), f);
    }
    if (std::fclose(f) != 0) {
        throw IoError("error while writing '" + path.string() + "'");
    }
}

/// Read a file written by write_waveforms. Start and period are recovered
/// from the time column.
inline WaveformSet read_waveforms(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read '" + path.string() + "'");
    }
    std::string header;
    if (!std::getline(in, header)) {
        throw IoError("'" + path.string() + "' is empty");
    }
    std::vector<std::string> names;
    {
        std::stringstream ss(header);
        std::string cell;
        std::getline(ss, cell, ',');
        if (cell != "time") {
            throw IoError("'" + path.string() + "': first column must be time");
        }
        while (std::getline(ss, cell, ',')) {
            names.push_back(cell);
        }
    }
    WaveformSet ws;
    for (auto& n : names) {
        ws.traces.push_back({n, 0.0, 0.0, {}});
    }
    std::vector<double> times;
    std::string row;
    int lineno = 1;
    while (std::getline(in, row)) {
        ++lineno;
        if (row.empty()) {
            continue;
        }
        const char* p = row.c_str();
        char* end = nullptr;
        times.push_back(std::strtod(p, &end));
        for (auto& w : ws.traces) {
            if (*end != ',') {
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": too few columns");
            }
            p = end + 1;
            w.samples.push_back(std::strtod(p, &end));
            if (end == p) {
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number");
            }
        }
    }
    const double start = times.empty() ? 0.0 : times.front();
    const double period =
        times.size() > 1 ? (times.back() - times.front()) / static_cast<double>(times.size() - 1) : 0.0;
    for (auto& w : ws.traces) {
        w.start = start;
        w.period = period;
    }
    return ws;
}

/// Run manifest, written before any waveform file.
struct RunManifest {
    nlohmann::json config;
    std::string scenario;
    double dt = 0.0;
    double duration = 0.0;
    std::vector<std::string> files;
    std::string started;
    std::string version = CPSIM_VERSION;
};

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json j{{"scenario", m.scenario},  {"dt", m.dt},           {"duration", m.duration},
                     {"files", m.files},        {"started", m.started}, {"version", m.version},
                     {"config", m.config}};
    std::ofstream out(dir / "manifest.json");
    if (!out) {
        throw IoError("cannot write manifest in '" + dir.string() + "'");
    }
    out << j.dump(2) << '\n';
}

} // namespace cpsim
