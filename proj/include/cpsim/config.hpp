// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scenario configuration: a JSON document with a fixed schema. Every key is
// optional except "scenario"; unknown keys are rejected. Times accept either
// a number of seconds or a string with a unit suffix (ns, us, ms, s).

#include "cpsim/control.hpp"
#include "cpsim/eln.hpp"
#include "cpsim/error.hpp"
#include "cpsim/power.hpp"
#include "cpsim/units.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace cpsim {

enum class ScenarioId { Emt, Gfl, Dc };

inline std::string to_string(ScenarioId id) {
    switch (id) {
    case ScenarioId::Emt:
        return "emt";
    case ScenarioId::Gfl:
        return "gfl";
    case ScenarioId::Dc:
        return "dc";
    }
    return "?";
}

struct EmtConfig {
    eln::EmtCircuitParams circuit;
    double amplitude = 1.0;  ///< V
    double frequency = 60.0; ///< Hz
    double phase = 0.0;      ///< rad; the source is amplitude*cos(2*pi*f*t + phase) from t = 0
};

struct GflConfig {
    power::GridSourceParams grid;
    power::LineParams line;
    double load_ohms = 1000.0; ///< per phase, wye
    power::SnubberParams snubber;
    double control_rate = 1000.0; ///< Hz, outer power loop and LPF
    double pll_kp = 50.0;
    double pll_ki = 900.0;
    double power_kp = 1e-4; ///< A per W (or var) of error
    double power_ki = 5e-2;
    double lpf_b0 = 0.0609;
    double lpf_a1 = 0.9391;
    double vsd_floor = 1.0;
    double lock_ratio = 0.01;
    control::PowerSetpoint setpoint{control::StepProfile({{1.0, 1e6}, {4.0, 5e5}, {7.0, 8e5}}),
                                    control::StepProfile({{2.5, 3e5}, {5.5, -2e5}, {8.5, 1e5}})};
};

enum class DcMode { InProcess, Split };

struct DcConfig {
    control::DcMicrogridParams plant;
    double secondary_period = 0.1;
    bool secondary_enabled = true;
    double secondary_start_delay = 0.0;
    DcMode mode = DcMode::InProcess;
};

struct RealtimeConfig {
    std::string plant_endpoint = "127.0.0.1:5555";      ///< plant publishes Vref here
    std::string controller_endpoint = "127.0.0.1:5556"; ///< controller publishes delta here
    double stale_timeout = 0.5;
    double connect_timeout = 5.0;
    /// Busy-wait this long before each deadline. The default covers a whole
    /// 1 ms plant step: on virtual machines an idle vCPU can take over 1 ms to
    /// wake, so sleeping through most of the step shows up as late publishes.
    double spin_window = 1e-3;
};

struct ScenarioConfig {
    ScenarioId scenario = ScenarioId::Dc;
    double dt = 1e-3;
    double duration = 10.0;
    std::string output = "out";
    eln::Integrator integrator = eln::Integrator::Trapezoidal;
    std::size_t record_stride = 1;
    EmtConfig emt;
    GflConfig gfl;
    DcConfig dc;
    RealtimeConfig realtime;
};

inline ScenarioConfig default_config(ScenarioId id) {
    ScenarioConfig c;
    c.scenario = id;
    switch (id) {
    case ScenarioId::Emt:
        c.dt = 50e-6;
        c.duration = 10e-3;
        break;
    case ScenarioId::Gfl:
        c.dt = 50e-6;
        c.duration = 10.0;
        break;
    case ScenarioId::Dc:
        c.dt = 1e-3;
        c.duration = 10.0;
        break;
    }
    return c;
}

/// Number of whole `step`s in `span`, rejecting non-integer ratios.
inline std::size_t integer_ratio(double span, double step, const std::string& field) {
    const double r = span / step;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-6 * n) {
        throw ValidationError(field, "must be a whole multiple of the step (ratio " + std::to_string(r) + ")");
    }
    return static_cast<std::size_t>(n);
}

inline void validate(const ScenarioConfig& c) {
    auto pos = [](double v, const char* field) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ValidationError(field, "must be positive");
        }
    };
    pos(c.dt, "dt");
    pos(c.duration, "duration");
    if (c.duration < c.dt) {
        throw ValidationError("duration", "must be at least one step");
    }
    if (c.record_stride < 1) {
        throw ValidationError("record_stride", "must be >= 1");
    }
    switch (c.scenario) {
    case ScenarioId::Emt:
        pos(c.emt.circuit.r, "emt.R");
        pos(c.emt.circuit.c1, "emt.C1");
        pos(c.emt.circuit.c2, "emt.C2");
        pos(c.emt.circuit.l, "emt.L");
        if (!std::isfinite(c.emt.amplitude)) {
            throw ValidationError("emt.stimulus.amplitude", "must be finite");
        }
        if (!(c.emt.frequency >= 0.0)) {
            throw ValidationError("emt.stimulus.frequency", "must be non-negative");
        }
        break;
    case ScenarioId::Gfl: {
        const auto& g = c.gfl;
        pos(g.grid.vll_rms, "gfl.grid.vll_rms");
        pos(g.grid.frequency, "gfl.grid.frequency");
        pos(g.line.r_series, "gfl.line.r_series");
        pos(g.line.l_series, "gfl.line.l_series");
        pos(g.line.r_shunt, "gfl.line.r_shunt");
        pos(g.line.c_shunt, "gfl.line.c_shunt");
        pos(g.load_ohms, "gfl.load_ohms");
        pos(g.snubber.r_parasitic, "gfl.snubber.r_parasitic");
        pos(g.snubber.c_snubber, "gfl.snubber.c_snubber");
        pos(g.control_rate, "gfl.control_rate");
        pos(g.vsd_floor, "gfl.vsd_floor");
        pos(g.lock_ratio, "gfl.lock_ratio");
        if (!(std::abs(g.lpf_a1) < 1.0)) {
            throw ValidationError("gfl.lpf.a1", "pole must lie inside the unit circle");
        }
        integer_ratio(1.0 / g.control_rate, c.dt, "gfl.control_rate");
        break;
    }
    case ScenarioId::Dc:
        pos(c.dc.plant.l, "dc.L");
        pos(c.dc.plant.c, "dc.C");
        pos(c.dc.plant.r_load, "dc.R_load");
        pos(c.dc.plant.vn, "dc.Vn");
        if (!(c.dc.plant.k >= 0.0)) {
            throw ValidationError("dc.k", "must be non-negative");
        }
        if (!(c.dc.plant.ks >= 0.0)) {
            throw ValidationError("dc.ks", "must be non-negative");
        }
        pos(c.dc.secondary_period, "dc.secondary_period");
        integer_ratio(c.dc.secondary_period, c.dt, "dc.secondary_period");
        if (!(c.dc.secondary_start_delay >= 0.0)) {
            throw ValidationError("dc.secondary_start_delay", "must be non-negative");
        }
        break;
    }
}

namespace detail {

using nlohmann::json;

class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) {
            throw ValidationError(path_.empty() ? "<root>" : path_, "expected an object");
        }
    }

    void allow(std::initializer_list<std::string_view> keys) const {
        for (const auto& [k, v] : obj_.items()) {
            bool ok = false;
            for (auto allowed : keys) {
                ok = ok || k == allowed;
            }
            if (!ok) {
                throw ValidationError(field(k), "unknown key");
            }
        }
    }

    bool has(std::string_view key) const { return obj_.contains(std::string(key)); }

    void number(std::string_view key, double& out) const {
        if (!has(key)) {
            return;
        }
        const auto& v = obj_.at(std::string(key));
        if (!v.is_number()) {
            throw ValidationError(field(key), "expected a number");
        }
        out = v.get<double>();
    }

    void time(std::string_view key, double& out) const {
        if (!has(key)) {
            return;
        }
        out = as_time(obj_.at(std::string(key)), field(key));
    }

    void boolean(std::string_view key, bool& out) const {
        if (!has(key)) {
            return;
        }
        const auto& v = obj_.at(std::string(key));
        if (!v.is_boolean()) {
            throw ValidationError(field(key), "expected true or false");
        }
        out = v.get<bool>();
    }

    void string(std::string_view key, std::string& out) const {
        if (!has(key)) {
            return;
        }
        const auto& v = obj_.at(std::string(key));
        if (!v.is_string()) {
            throw ValidationError(field(key), "expected a string");
        }
        out = v.get<std::string>();
    }

    Reader child(std::string_view key) const { return Reader(obj_.at(std::string(key)), field(key)); }
    const json& raw(std::string_view key) const { return obj_.at(std::string(key)); }
    std::string field(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

    static double as_time(const json& v, const std::string& field) {
        if (v.is_number()) {
            return v.get<double>();
        }
        if (v.is_string()) {
            if (auto t = parse_duration(v.get<std::string>())) {
                return *t;
            }
            throw ValidationError(field, "cannot parse time '" + v.get<std::string>() + "'");
        }
        throw ValidationError(field, "expected seconds or a string like \"50us\"");
    }

private:
    const json& obj_;
    std::string path_;
};

inline control::StepProfile read_profile(const json& v, const std::string& field) {
    if (!v.is_array()) {
        throw ValidationError(field, "expected a list of [time, value] pairs");
    }
    std::vector<control::StepProfile::Step> steps;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& pair = v[i];
        const auto f = field + "[" + std::to_string(i) + "]";
        if (!pair.is_array() || pair.size() != 2 || !pair[1].is_number()) {
            throw ValidationError(f, "expected [time, value]");
        }
        steps.push_back({Reader::as_time(pair[0], f), pair[1].get<double>()});
    }
    try {
        return control::StepProfile(std::move(steps));
    } catch (const ModelError& ex) {
        throw ValidationError(field, ex.what());
    }
}

inline int line_of(std::string_view text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        line += text[i] == '\n' ? 1 : 0;
    }
    return line;
}

} // namespace detail

/// Parse and validate a scenario configuration from JSON text.
inline ScenarioConfig parse_config_text(std::string_view text) {
    using detail::json;
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& ex) {
        const int line = detail::line_of(text, ex.byte > 0 ? ex.byte - 1 : 0);
        throw ParseError("config line " + std::to_string(line) + ": " + ex.what(), line, "");
    }
    const detail::Reader root(doc, "");
    root.allow({"scenario", "dt", "duration", "output", "integrator", "record_stride", "emt", "gfl", "dc", "realtime"});
    if (!root.has("scenario")) {
        throw ValidationError("scenario", "required");
    }
    std::string id;
    root.string("scenario", id);
    ScenarioConfig c;
    if (id == "emt") {
        c = default_config(ScenarioId::Emt);
    } else if (id == "gfl") {
        c = default_config(ScenarioId::Gfl);
    } else if (id == "dc") {
        c = default_config(ScenarioId::Dc);
    } else {
        throw ValidationError("scenario", "unknown scenario '" + id + "' (expected emt, gfl or dc)");
    }
    root.time("dt", c.dt);
    root.time("duration", c.duration);
    root.string("output", c.output);
    if (root.has("integrator")) {
        std::string rule;
        root.string("integrator", rule);
        if (rule == "trapezoidal") {
            c.integrator = eln::Integrator::Trapezoidal;
        } else if (rule == "backward_euler") {
            c.integrator = eln::Integrator::BackwardEuler;
        } else {
            throw ValidationError("integrator", "expected trapezoidal or backward_euler");
        }
    }
    if (root.has("record_stride")) {
        const auto& v = root.raw("record_stride");
        if (!v.is_number_integer() || v.get<long long>() < 1) {
            throw ValidationError("record_stride", "expected a positive integer");
        }
        c.record_stride = v.get<std::size_t>();
    }

    if (root.has("emt")) {
        const auto r = root.child("emt");
        r.allow({"R", "C1", "C2", "L", "stimulus"});
        r.number("R", c.emt.circuit.r);
        r.number("C1", c.emt.circuit.c1);
        r.number("C2", c.emt.circuit.c2);
        r.number("L", c.emt.circuit.l);
        if (r.has("stimulus")) {
            const auto s = r.child("stimulus");
            s.allow({"amplitude", "frequency", "phase"});
            s.number("amplitude", c.emt.amplitude);
            s.number("frequency", c.emt.frequency);
            s.number("phase", c.emt.phase);
        }
    }

    if (root.has("gfl")) {
        const auto r = root.child("gfl");
        auto& g = c.gfl;
        r.allow({"grid", "line", "load_ohms", "snubber", "control_rate", "pll", "power_pi", "lpf", "vsd_floor",
                 "lock_ratio", "p_ref", "q_ref"});
        if (r.has("grid")) {
            const auto s = r.child("grid");
            s.allow({"vll_rms", "frequency", "phase"});
            s.number("vll_rms", g.grid.vll_rms);
            s.number("frequency", g.grid.frequency);
            s.number("phase", g.grid.phase);
        }
        if (r.has("line")) {
            const auto s = r.child("line");
            s.allow({"r_series", "l_series", "r_shunt", "c_shunt"});
            s.number("r_series", g.line.r_series);
            s.number("l_series", g.line.l_series);
            s.number("r_shunt", g.line.r_shunt);
            s.number("c_shunt", g.line.c_shunt);
        }
        r.number("load_ohms", g.load_ohms);
        if (r.has("snubber")) {
            const auto s = r.child("snubber");
            s.allow({"r_parasitic", "c_snubber"});
            s.number("r_parasitic", g.snubber.r_parasitic);
            s.number("c_snubber", g.snubber.c_snubber);
        }
        r.number("control_rate", g.control_rate);
        if (r.has("pll")) {
            const auto s = r.child("pll");
            s.allow({"kp", "ki"});
            s.number("kp", g.pll_kp);
            s.number("ki", g.pll_ki);
        }
        if (r.has("power_pi")) {
            const auto s = r.child("power_pi");
            s.allow({"kp", "ki"});
            s.number("kp", g.power_kp);
            s.number("ki", g.power_ki);
        }
        if (r.has("lpf")) {
            const auto s = r.child("lpf");
            s.allow({"b0", "a1"});
            s.number("b0", g.lpf_b0);
            s.number("a1", g.lpf_a1);
        }
        r.number("vsd_floor", g.vsd_floor);
        r.number("lock_ratio", g.lock_ratio);
        if (r.has("p_ref")) {
            g.setpoint.p_ref = detail::read_profile(r.raw("p_ref"), "gfl.p_ref");
        }
        if (r.has("q_ref")) {
            g.setpoint.q_ref = detail::read_profile(r.raw("q_ref"), "gfl.q_ref");
        }
    }

    if (root.has("dc")) {
        const auto r = root.child("dc");
        auto& d = c.dc;
        r.allow({"L", "C", "R_load", "k", "ks", "Vn", "secondary_period", "secondary_enabled",
                 "secondary_start_delay", "mode"});
        r.number("L", d.plant.l);
        r.number("C", d.plant.c);
        r.number("R_load", d.plant.r_load);
        r.number("k", d.plant.k);
        r.number("ks", d.plant.ks);
        r.number("Vn", d.plant.vn);
        r.time("secondary_period", d.secondary_period);
        r.boolean("secondary_enabled", d.secondary_enabled);
        r.time("secondary_start_delay", d.secondary_start_delay);
        if (r.has("mode")) {
            std::string mode;
            r.string("mode", mode);
            if (mode == "inprocess") {
                d.mode = DcMode::InProcess;
            } else if (mode == "split") {
                d.mode = DcMode::Split;
            } else {
                throw ValidationError("dc.mode", "expected inprocess or split");
            }
        }
    }

    if (root.has("realtime")) {
        const auto r = root.child("realtime");
        auto& rt = c.realtime;
        r.allow({"plant_endpoint", "controller_endpoint", "stale_timeout", "connect_timeout", "spin_window"});
        r.string("plant_endpoint", rt.plant_endpoint);
        r.string("controller_endpoint", rt.controller_endpoint);
        r.time("stale_timeout", rt.stale_timeout);
        r.time("connect_timeout", rt.connect_timeout);
        r.time("spin_window", rt.spin_window);
    }

    validate(c);
    return c;
}

inline ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot read config file '" + path + "'", 0, "");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

inline nlohmann::json profile_to_json(const control::StepProfile& p) {
    auto arr = nlohmann::json::array();
    for (const auto& s : p.steps()) {
        arr.push_back({s.time, s.value});
    }
    return arr;
}

/// Full configuration (defaults applied) as JSON; parses back to the same values.
inline nlohmann::json to_json(const ScenarioConfig& c) {
    nlohmann::json j;
    j["scenario"] = to_string(c.scenario);
    j["dt"] = c.dt;
    j["duration"] = c.duration;
    j["output"] = c.output;
    j["integrator"] = c.integrator == eln::Integrator::Trapezoidal ? "trapezoidal" : "backward_euler";
    j["record_stride"] = c.record_stride;
    switch (c.scenario) {
    case ScenarioId::Emt:
        j["emt"] = {{"R", c.emt.circuit.r},
                    {"C1", c.emt.circuit.c1},
                    {"C2", c.emt.circuit.c2},
                    {"L", c.emt.circuit.l},
                    {"stimulus", {{"amplitude", c.emt.amplitude}, {"frequency", c.emt.frequency}, {"phase", c.emt.phase}}}};
        break;
    case ScenarioId::Gfl: {
        const auto& g = c.gfl;
        j["gfl"] = {{"grid", {{"vll_rms", g.grid.vll_rms}, {"frequency", g.grid.frequency}, {"phase", g.grid.phase}}},
                    {"line",
                     {{"r_series", g.line.r_series},
                      {"l_series", g.line.l_series},
                      {"r_shunt", g.line.r_shunt},
                      {"c_shunt", g.line.c_shunt}}},
                    {"load_ohms", g.load_ohms},
                    {"snubber", {{"r_parasitic", g.snubber.r_parasitic}, {"c_snubber", g.snubber.c_snubber}}},
                    {"control_rate", g.control_rate},
                    {"pll", {{"kp", g.pll_kp}, {"ki", g.pll_ki}}},
                    {"power_pi", {{"kp", g.power_kp}, {"ki", g.power_ki}}},
                    {"lpf", {{"b0", g.lpf_b0}, {"a1", g.lpf_a1}}},
                    {"vsd_floor", g.vsd_floor},
                    {"lock_ratio", g.lock_ratio},
                    {"p_ref", profile_to_json(g.setpoint.p_ref)},
                    {"q_ref", profile_to_json(g.setpoint.q_ref)}};
        break;
    }
    case ScenarioId::Dc:
        j["dc"] = {{"L", c.dc.plant.l},
                   {"C", c.dc.plant.c},
                   {"R_load", c.dc.plant.r_load},
                   {"k", c.dc.plant.k},
                   {"ks", c.dc.plant.ks},
                   {"Vn", c.dc.plant.vn},
                   {"secondary_period", c.dc.secondary_period},
                   {"secondary_enabled", c.dc.secondary_enabled},
                   {"secondary_start_delay", c.dc.secondary_start_delay},
                   {"mode", c.dc.mode == DcMode::InProcess ? "inprocess" : "split"}};
        j["realtime"] = {{"plant_endpoint", c.realtime.plant_endpoint},
                         {"controller_endpoint", c.realtime.controller_endpoint},
                         {"stale_timeout", c.realtime.stale_timeout},
                         {"connect_timeout", c.realtime.connect_timeout},
                         {"spin_window", c.realtime.spin_window}};
        break;
    }
    return j;
}

} // namespace cpsim
