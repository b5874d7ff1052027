// SPDX-License-Identifier: Apache-2.0
#pragma once

// Three-phase building blocks assembled from network primitives.

#include "cpsim/eln.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>

namespace cpsim::power {

struct ThreePhaseFrame {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double time = 0.0;
};

using NodeTriple = std::array<eln::NodeId, 3>;

inline constexpr std::array<const char*, 3> phase_names{"a", "b", "c"};
inline constexpr double two_thirds_pi = 2.0 * std::numbers::pi / 3.0;

struct GridSourceParams {
    double vll_rms = 480.0;  ///< line-to-line RMS voltage
    double frequency = 60.0; ///< Hz
    double phase = 0.0;      ///< rad, added to all three phases
};

struct LineParams {
    double r_series = 0.01;  ///< ohm
    double l_series = 1e-4;  ///< H
    double r_shunt = 0.15;   ///< ohm, receiving end to ground
    double c_shunt = 80e-6;  ///< F, receiving end to ground
};

struct SnubberParams {
    double r_parasitic = 10e3; ///< ohm
    double c_snubber = 10e-6;  ///< F
};

/// Phase peak voltage of a balanced source given its line-to-line RMS value.
inline double peak_phase_voltage(const GridSourceParams& p) {
    return p.vll_rms * std::numbers::sqrt2 / std::numbers::sqrt3;
}

inline void validate(const GridSourceParams& p) {
    if (!(p.vll_rms > 0.0) || !(p.frequency > 0.0)) {
        throw ModelError("grid source needs positive voltage and frequency");
    }
}

inline void validate(const LineParams& p) {
    if (!(p.r_series > 0 && p.l_series > 0 && p.r_shunt > 0 && p.c_shunt > 0)) {
        throw ModelError("line parameters must be positive");
    }
}

inline void validate(const SnubberParams& p) {
    if (!(p.r_parasitic > 0 && p.c_snubber > 0)) {
        throw ModelError("snubber parameters must be positive");
    }
}

inline ThreePhaseFrame grid_source_sample(const GridSourceParams& p, double t) {
    const double vpk = peak_phase_voltage(p);
    const double wt = 2.0 * std::numbers::pi * p.frequency * t + p.phase;
    return {vpk * std::cos(wt), vpk * std::cos(wt - two_thirds_pi), vpk * std::cos(wt + two_thirds_pi), t};
}

inline NodeTriple add_nodes(eln::Netlist& net, const std::string& prefix) {
    NodeTriple n;
    for (std::size_t k = 0; k < 3; ++k) {
        n[k] = net.add_node(prefix + "_" + phase_names[k]);
    }
    return n;
}

/// Ideal wye-connected grounded three-phase source.
inline NodeTriple add_grid_source(eln::Netlist& net, const GridSourceParams& p, const std::string& prefix) {
    validate(p);
    const auto nodes = add_nodes(net, prefix);
    for (std::size_t k = 0; k < 3; ++k) {
        net.add_voltage_source(prefix + "_v" + phase_names[k], nodes[k], eln::ground, [p, k](double t) {
            const auto f = grid_source_sample(p, t);
            return k == 0 ? f.a : (k == 1 ? f.b : f.c);
        });
    }
    return nodes;
}

struct LineFragment {
    NodeTriple input;
    NodeTriple output;
};

/// Per phase: series R then L from `input` to a new receiving node, with shunt
/// R and C from the receiving node to ground.
inline LineFragment add_transmission_line(eln::Netlist& net, const LineParams& p, const std::string& prefix,
                                          const NodeTriple& input) {
    validate(p);
    LineFragment f{input, add_nodes(net, prefix + "_out")};
    const auto mid = add_nodes(net, prefix + "_mid");
    for (std::size_t k = 0; k < 3; ++k) {
        const std::string ph = phase_names[k];
        net.add_resistor(prefix + "_rs_" + ph, input[k], mid[k], p.r_series);
        net.add_inductor(prefix + "_ls_" + ph, mid[k], f.output[k], p.l_series);
        net.add_resistor(prefix + "_rsh_" + ph, f.output[k], eln::ground, p.r_shunt);
        net.add_capacitor(prefix + "_csh_" + ph, f.output[k], eln::ground, p.c_shunt);
    }
    return f;
}

/// Wye-connected, solidly grounded resistive load, `ohms` per phase.
inline void add_resistive_load(eln::Netlist& net, double ohms, const std::string& prefix, const NodeTriple& at) {
    for (std::size_t k = 0; k < 3; ++k) {
        net.add_resistor(prefix + "_" + phase_names[k], at[k], eln::ground, ohms);
    }
}

struct InjectorFragment {
    NodeTriple terminal;
    std::array<eln::InputId, 3> inputs; ///< commanded current per phase, into `terminal`
};

/// Per phase: controlled current source injecting into `terminal`, in
/// parallel with a parasitic resistance and a snubber capacitance to ground.
inline InjectorFragment add_controlled_injector(eln::Netlist& net, const SnubberParams& s, const std::string& prefix,
                                                const NodeTriple& terminal) {
    validate(s);
    InjectorFragment f{terminal, {}};
    for (std::size_t k = 0; k < 3; ++k) {
        const std::string ph = phase_names[k];
        f.inputs[k] = net.add_controlled_current_source(prefix + "_i" + ph, eln::ground, terminal[k]);
        net.add_resistor(prefix + "_rp_" + ph, terminal[k], eln::ground, s.r_parasitic);
        net.add_capacitor(prefix + "_cs_" + ph, terminal[k], eln::ground, s.c_snubber);
    }
    return f;
}

struct ViMeasurement {
    NodeTriple from;
    NodeTriple to;
    std::array<eln::SinkId, 3> voltage; ///< phase-to-ground at `from`
    std::array<eln::SinkId, 3> current; ///< series current from -> to
};

/// Voltmeter (phase to ground at `from`) and series ammeter (from -> to) per phase.
inline ViMeasurement add_vi_measurement(eln::Netlist& net, const std::string& prefix, const NodeTriple& from,
                                        const NodeTriple& to) {
    ViMeasurement m{from, to, {}, {}};
    for (std::size_t k = 0; k < 3; ++k) {
        const std::string ph = phase_names[k];
        m.voltage[k] = net.add_voltage_sink(prefix + "_v" + ph, from[k], eln::ground);
        m.current[k] = net.add_current_sink(prefix + "_i" + ph, from[k], to[k]);
    }
    return m;
}

/// Same, creating fresh `to` nodes where the measured path continues.
inline ViMeasurement add_vi_measurement(eln::Netlist& net, const std::string& prefix, const NodeTriple& from) {
    return add_vi_measurement(net, prefix, from, add_nodes(net, prefix + "_to"));
}

struct ViReading {
    ThreePhaseFrame v;
    ThreePhaseFrame i;
};

inline ViReading vi_measurement(const ViMeasurement& m, std::span<const double> sinks, double t) {
    return {{sinks[m.voltage[0].index], sinks[m.voltage[1].index], sinks[m.voltage[2].index], t},
            {sinks[m.current[0].index], sinks[m.current[1].index], sinks[m.current[2].index], t}};
}

} // namespace cpsim::power
