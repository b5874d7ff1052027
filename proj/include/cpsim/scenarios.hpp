// SPDX-License-Identifier: Apache-2.0
#pragma once

// The three packaged experiments, each built as one dataflow cluster around
// an electrical network:
//   emt  stimulus -> network -> recorder
//   gfl  setpoint, network, fast loop (PLL, transforms) at the plant rate,
//        power loop (filter, PI, feedforward) at the control rate
//   dc   droop at the plant rate, secondary at its own slower period

#include "cpsim/analysis.hpp"
#include "cpsim/config.hpp"
#include "cpsim/control.hpp"
#include "cpsim/eln.hpp"
#include "cpsim/eln_tdf.hpp"
#include "cpsim/power.hpp"
#include "cpsim/tdf.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace cpsim {

/// Rate-1 sink module storing every `stride`-th sample of each input.
inline tdf::ModuleSpec make_recorder(std::string name, const std::vector<std::string>& columns, std::size_t stride,
                                     double dt, std::shared_ptr<WaveformSet> out) {
    tdf::ModuleSpec spec;
    spec.name = std::move(name);
    out->traces.clear();
    for (const auto& c : columns) {
        spec.inputs.push_back({c});
        out->traces.push_back({c, 0.0, dt * static_cast<double>(stride), {}});
    }
    spec.process = [out, stride](tdf::Activation& act) {
        if (act.index() % stride != 0) {
            return;
        }
        for (std::size_t i = 0; i < out->traces.size(); ++i) {
            out->traces[i].samples.push_back(act.read(i));
        }
    };
    return spec;
}

/// Plant steps needed to cover [0, duration] at `dt`.
inline std::uint64_t step_count(double duration, double dt) {
    return static_cast<std::uint64_t>(std::floor(duration / dt + 1e-9));
}

inline void require_scenario(const ScenarioConfig& cfg, ScenarioId id) {
    if (cfg.scenario != id) {
        throw ValidationError("scenario", "expected '" + to_string(id) + "', got '" + to_string(cfg.scenario) + "'");
    }
    validate(cfg);
}

/// Run hyperperiods until `samples` plant samples exist, then trim the recording.
inline void run_samples(tdf::Simulator& sim, std::uint64_t samples, double dt, WaveformSet& rec,
                        std::size_t stride) {
    const auto per_hp = static_cast<std::uint64_t>(std::llround(sim.schedule().hyperperiod / dt));
    const auto hps = (samples + per_hp - 1) / per_hp;
    for (std::uint64_t h = 0; h < hps; ++h) {
        sim.step_hyperperiod();
    }
    const auto keep = (samples + stride - 1) / stride;
    for (auto& w : rec.traces) {
        if (w.samples.size() > keep) {
            w.samples.resize(keep);
        }
    }
}

// --- open-loop EMT circuit -----------------------------------------------------------

inline double emt_stimulus(const EmtConfig& e, double t) {
    return e.amplitude * std::cos(2.0 * std::numbers::pi * e.frequency * t + e.phase);
}

/// Traces: v_C1 (voltage across the first capacitor bank) and input.
inline WaveformSet run_emt(const ScenarioConfig& cfg) {
    require_scenario(cfg, ScenarioId::Emt);
    const auto circuit = eln::build_emt_circuit(cfg.emt.circuit);
    auto block = std::make_shared<ElnBlock>(eln::System(circuit.netlist, cfg.dt, cfg.integrator));

    tdf::Cluster cluster(cfg.dt);
    tdf::ModuleSpec stim{"stimulus", {}, {{"v"}}, {}};
    stim.process = [e = cfg.emt](tdf::Activation& act) { act.write(0, emt_stimulus(e, act.time())); };
    const auto s = cluster.add(stim);
    const auto n = cluster.add(make_eln_module("circuit", block));
    auto rec = std::make_shared<WaveformSet>();
    const auto r = cluster.add(make_recorder("recorder", {"v_C1", "input"}, cfg.record_stride, cfg.dt, rec));
    cluster.connect(s, "v", n, "vin");
    cluster.connect(n, "vC1", r, "v_C1");
    cluster.connect(s, "v", r, "input");

    tdf::Simulator sim(std::move(cluster));
    run_samples(sim, step_count(cfg.duration, cfg.dt) + 1, cfg.dt, *rec, cfg.record_stride);
    return *rec;
}

// --- grid-following inverter microgrid -----------------------------------------------

struct GflNetwork {
    eln::Netlist netlist;
    power::ViMeasurement grid; ///< at the grid source, current towards the line
    power::ViMeasurement pcc;  ///< at the inverter terminal, current towards the bus
    power::InjectorFragment injector;
};

/// grid source -> VI -> line -> bus (load) <- VI <- inverter terminal (injector)
inline GflNetwork build_gfl_network(const GflConfig& g) {
    GflNetwork n;
    auto& net = n.netlist;
    const auto src = power::add_grid_source(net, g.grid, "grid");
    n.grid = power::add_vi_measurement(net, "g", src);
    const auto line = power::add_transmission_line(net, g.line, "line", n.grid.to);
    power::add_resistive_load(net, g.load_ohms, "load", line.output);
    const auto term = power::add_nodes(net, "term");
    n.injector = power::add_controlled_injector(net, g.snubber, "inv", term);
    n.pcc = power::add_vi_measurement(net, "pcc", term, line.output);
    return n;
}

inline std::vector<std::string> gfl_columns() {
    return {"P", "Q", "P_ref", "Q_ref", "V_g_a", "V_g_b", "V_g_c", "I_g_a", "I_g_b", "I_g_c"};
}

/// Traces: P, Q (instantaneous power delivered at the inverter terminal),
/// P_ref, Q_ref, and grid-side voltages V_g_* and currents I_g_*.
inline WaveformSet run_gfl(const ScenarioConfig& cfg) {
    require_scenario(cfg, ScenarioId::Gfl);
    const auto& g = cfg.gfl;
    const auto ratio = integer_ratio(1.0 / g.control_rate, cfg.dt, "gfl.control_rate");
    const int r = static_cast<int>(ratio);
    const double ctrl_dt = cfg.dt * static_cast<double>(ratio);

    auto net = build_gfl_network(g);
    auto block = std::make_shared<ElnBlock>(eln::System(net.netlist, cfg.dt, cfg.integrator));

    tdf::Cluster cluster(cfg.dt);

    tdf::ModuleSpec setpoint{"setpoint", {}, {{"p_ref"}, {"q_ref"}}, {}};
    setpoint.process = [sp = g.setpoint](tdf::Activation& act) {
        const auto v = control::setpoint_sample(sp, act.time());
        act.write(0, v.p);
        act.write(1, v.q);
    };
    const auto sp_id = cluster.add(setpoint);
    const auto eln_id = cluster.add(make_eln_module("network", block));

    // Fast loop: PLL and transforms every plant step; the current command is
    // applied one sample later, so it is rotated with the advanced angle.
    struct FastState {
        control::PllState pll;
        bool locked = false;
    };
    auto fs = std::make_shared<FastState>();
    fs->pll = control::make_pll(g.grid.frequency, g.pll_kp, g.pll_ki, cfg.dt);
    tdf::ModuleSpec fast{"gfl_fast",
                         {{"va"}, {"vb"}, {"vc"}, {"ia"}, {"ib"}, {"ic"}, {"id_ref"}, {"iq_ref"}},
                         {{"cmd_a", 1, 1}, {"cmd_b", 1, 1}, {"cmd_c", 1, 1}, {"P"}, {"Q"}, {"p_dq"}, {"q_dq"}, {"vsd"},
                          {"locked"}},
                         {}};
    fast.process = [fs, lock_ratio = g.lock_ratio](tdf::Activation& act) {
        const power::ThreePhaseFrame v{act.read(0), act.read(1), act.read(2), act.time()};
        const power::ThreePhaseFrame i{act.read(3), act.read(4), act.read(5), act.time()};
        const auto vdq = control::pll_step(fs->pll, v);
        const auto idq = control::abc_to_dq0(i, vdq.theta);
        const auto pq = control::dq_power(vdq, idq);
        const auto inst = control::instantaneous_pq(v, i);
        fs->locked = fs->locked || control::pll_locked(fs->pll, lock_ratio);
        const auto cmd = control::dq0_to_abc({act.read(6), act.read(7), 0.0, 0.0}, fs->pll.theta);
        act.write(0, cmd.a);
        act.write(1, cmd.b);
        act.write(2, cmd.c);
        act.write(3, inst.p);
        act.write(4, inst.q);
        act.write(5, pq.p);
        act.write(6, pq.q);
        act.write(7, vdq.d);
        act.write(8, fs->locked ? 1.0 : 0.0);
    };
    const auto fast_id = cluster.add(fast);

    struct PowerState {
        control::LpfState lpf_p, lpf_q;
        control::PiState pi_p, pi_q;
        control::CurrentRefs ff;
    };
    auto ps = std::make_shared<PowerState>();
    ps->lpf_p = {g.lpf_b0, g.lpf_a1, g.control_rate};
    ps->lpf_q = ps->lpf_p;
    control::validate(ps->lpf_p);
    ps->pi_p = {g.power_kp, g.power_ki, ctrl_dt};
    ps->pi_q = ps->pi_p;
    tdf::ModuleSpec slow{"gfl_power",
                         {{"p_dq", r}, {"q_dq", r}, {"vsd", r}, {"locked", r}, {"p_ref", r}, {"q_ref", r}},
                         {{"id_ref", r, r}, {"iq_ref", r, r}},
                         {}};
    slow.process = [ps, floor = g.vsd_floor](tdf::Activation& act) {
        const double p = control::lpf_step(ps->lpf_p, act.latest(0));
        const double q = control::lpf_step(ps->lpf_q, act.latest(1));
        const double pr = act.latest(4), qr = act.latest(5);
        if (act.latest(3) < 0.5) {
            // no synchronisation yet: inject nothing, keep the integrators at rest
            act.hold(0, 0.0);
            act.hold(1, 0.0);
            return;
        }
        try {
            ps->ff = control::current_refs(pr, qr, act.latest(2), floor);
        } catch (const VsdTooSmall&) {
            // keep the previous feedforward
        }
        act.hold(0, ps->ff.id + control::pi_step(ps->pi_p, pr - p));
        act.hold(1, ps->ff.iq - control::pi_step(ps->pi_q, qr - q));
    };
    const auto slow_id = cluster.add(slow);

    auto rec = std::make_shared<WaveformSet>();
    const auto rec_id = cluster.add(make_recorder("recorder", gfl_columns(), cfg.record_stride, cfg.dt, rec));

    const char* ph[3] = {"a", "b", "c"};
    for (int k = 0; k < 3; ++k) {
        const std::string p = ph[k];
        cluster.connect(eln_id, "pcc_v" + p, fast_id, "v" + p);
        cluster.connect(eln_id, "pcc_i" + p, fast_id, "i" + p);
        cluster.connect(fast_id, "cmd_" + p, eln_id, "inv_i" + p);
        cluster.connect(eln_id, "g_v" + p, rec_id, "V_g_" + p);
        cluster.connect(eln_id, "g_i" + p, rec_id, "I_g_" + p);
    }
    for (const char* port : {"p_dq", "q_dq", "vsd", "locked"}) {
        cluster.connect(fast_id, port, slow_id, port);
    }
    cluster.connect(sp_id, "p_ref", slow_id, "p_ref");
    cluster.connect(sp_id, "q_ref", slow_id, "q_ref");
    cluster.connect(slow_id, "id_ref", fast_id, "id_ref");
    cluster.connect(slow_id, "iq_ref", fast_id, "iq_ref");
    cluster.connect(fast_id, "P", rec_id, "P");
    cluster.connect(fast_id, "Q", rec_id, "Q");
    cluster.connect(sp_id, "p_ref", rec_id, "P_ref");
    cluster.connect(sp_id, "q_ref", rec_id, "Q_ref");

    tdf::Simulator sim(std::move(cluster));
    run_samples(sim, step_count(cfg.duration, cfg.dt) + 1, cfg.dt, *rec, cfg.record_stride);
    return *rec;
}

// --- droop-controlled DC microgrid ---------------------------------------------------

/// Converter (ideal source at Vref) -> ammeter -> L -> bus with C and R_load.
inline eln::Netlist build_dc_network(const control::DcMicrogridParams& p) {
    control::validate(p);
    eln::Netlist net;
    const auto src = net.add_node("src");
    const auto mid = net.add_node("mid");
    const auto bus = net.add_node("bus");
    net.add_controlled_voltage_source("v0", src, eln::ground);
    net.add_current_sink("i", src, mid);
    net.add_inductor("L", mid, bus, p.l);
    net.add_capacitor("C", bus, eln::ground, p.c);
    net.add_resistor("R_load", bus, eln::ground, p.r_load);
    net.add_voltage_sink("V", bus, eln::ground);
    return net;
}

inline std::vector<std::string> dc_columns() { return {"V0", "Vref", "delta", "i", "V"}; }

/// Secondary correction as seen by the controller at time `t`.
struct SecondaryController {
    double delta = 0.0;
    double vn = 200.0;
    double ks = 0.75;
    double period = 0.1;
    double start_delay = 0.0;
    bool enabled = true;

    double update(double t, double vref) {
        if (enabled && t >= start_delay - 1e-9 * period) {
            delta = control::secondary_step(delta, vref, vn, ks, period);
        }
        return delta;
    }
};

/// Droop law at the plant rate. The one-sample delay on "vref" breaks the loop
/// through the network; "vref_now" is the undelayed copy for observers.
inline tdf::ModuleSpec make_droop_module(const control::DcMicrogridParams& p) {
    tdf::ModuleSpec droop{"droop", {{"i"}, {"delta"}}, {{"vref", 1, 1, p.vn}, {"vref_now"}}, {}};
    droop.process = [p](tdf::Activation& act) {
        const double v = control::droop(p.vn + act.read(1), p.k, act.read(0));
        act.write(0, v);
        act.write(1, v);
    };
    return droop;
}

/// Traces: V0 (converter output as applied), Vref (droop output), delta, i, V.
inline WaveformSet run_dc(const ScenarioConfig& cfg) {
    require_scenario(cfg, ScenarioId::Dc);
    const auto& d = cfg.dc;
    const auto& p = d.plant;
    const int r = static_cast<int>(integer_ratio(d.secondary_period, cfg.dt, "dc.secondary_period"));

    auto block = std::make_shared<ElnBlock>(eln::System(build_dc_network(p), cfg.dt, cfg.integrator));
    tdf::Cluster cluster(cfg.dt);

    const auto droop_id = cluster.add(make_droop_module(p));
    const auto eln_id = cluster.add(make_eln_module("plant", block));

    auto sec = std::make_shared<SecondaryController>(
        SecondaryController{0.0, p.vn, p.ks, d.secondary_period, d.secondary_start_delay, d.secondary_enabled});
    tdf::ModuleSpec secondary{"secondary", {{"vref", r}}, {{"delta", r, r, 0.0}}, {}};
    secondary.process = [sec](tdf::Activation& act) { act.hold(0, sec->update(act.time(), act.latest(0))); };
    const auto sec_id = cluster.add(secondary);

    auto rec = std::make_shared<WaveformSet>();
    const auto rec_id = cluster.add(make_recorder("recorder", dc_columns(), cfg.record_stride, cfg.dt, rec));

    cluster.connect(droop_id, "vref", eln_id, "v0");
    cluster.connect(eln_id, "i", droop_id, "i");
    cluster.connect(sec_id, "delta", droop_id, "delta");
    cluster.connect(droop_id, "vref_now", sec_id, "vref");
    cluster.connect(droop_id, "vref", rec_id, "V0");
    cluster.connect(droop_id, "vref_now", rec_id, "Vref");
    cluster.connect(sec_id, "delta", rec_id, "delta");
    cluster.connect(eln_id, "i", rec_id, "i");
    cluster.connect(eln_id, "V", rec_id, "V");

    tdf::Simulator sim(std::move(cluster));
    run_samples(sim, step_count(cfg.duration, cfg.dt) + 1, cfg.dt, *rec, cfg.record_stride);
    return *rec;
}

/// Droop-only equilibrium of the bus voltage: Vn * R / (R + k).
inline double dc_droop_fixed_point(const control::DcMicrogridParams& p) { return p.vn * p.r_load / (p.r_load + p.k); }

inline WaveformSet run_inprocess(const ScenarioConfig& cfg) {
    switch (cfg.scenario) {
    case ScenarioId::Emt:
        return run_emt(cfg);
    case ScenarioId::Gfl:
        return run_gfl(cfg);
    case ScenarioId::Dc:
        return run_dc(cfg);
    }
    throw ModelError("unknown scenario");
}

} // namespace cpsim
