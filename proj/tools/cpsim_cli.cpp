// SPDX-License-Identifier: Apache-2.0
// cpsim command-line entry point.
//
//   cpsim run --config <file> [--out <dir>] [--dt <t>] [--duration <t>]
//   cpsim sweep-dt --config <file> --steps 20ns,50us,5ms [--out <dir>]
//   cpsim rt-plant --config <file> [--bind host:port] [--connect host:port] [--out <dir>]
//   cpsim rt-controller --config <file> [--bind host:port] [--connect host:port] [--out <dir>]
//   cpsim stats --log <csv> [--topic <name>] [--bin <t>]
//
// Exit status: 0 ok, 1 usage or configuration error, 2 runtime failure.

#include "cpsim/cpsim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace cpsim;

struct UsageError : Error {
    using Error::Error;
};

double time_arg(const std::string& text, const std::string& flag) {
    if (auto t = parse_duration(text)) {
        return *t;
    }
    throw ValidationError(flag, "cannot parse time '" + text + "'");
}

std::vector<double> step_list(const std::string& text) {
    std::vector<double> steps;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        steps.push_back(time_arg(item, "--steps"));
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    return steps;
}

struct Overrides {
    std::string config;
    std::string out;
    std::string dt;
    std::string duration;
};

ScenarioConfig load(const Overrides& o) {
    auto cfg = parse_config(o.config);
    if (!o.out.empty()) {
        cfg.output = o.out;
    }
    if (!o.dt.empty()) {
        cfg.dt = time_arg(o.dt, "dt");
    }
    if (!o.duration.empty()) {
        cfg.duration = time_arg(o.duration, "duration");
    }
    validate(cfg);
    return cfg;
}

RunManifest manifest_for(const ScenarioConfig& cfg, std::vector<std::string> files) {
    return {to_json(cfg), to_string(cfg.scenario), cfg.dt, cfg.duration, std::move(files), utc_timestamp()};
}

std::string dominant_label(const std::optional<double>& w) {
    if (!w) {
        return "none";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *w);
    return buf;
}

/// The trace a sweep summarises: the capacitor voltage for the EMT circuit,
/// otherwise the first recorded column.
std::string sweep_trace(const ScenarioConfig& cfg, const WaveformSet& ws) {
    if (cfg.scenario == ScenarioId::Emt) {
        return "v_C1";
    }
    return ws.traces.empty() ? "" : ws.traces.front().name;
}

int cmd_run(const Overrides& o) {
    const auto cfg = load(o);
    const std::filesystem::path dir = cfg.output;
    const auto csv = to_string(cfg.scenario) + ".csv";
    if (cfg.scenario == ScenarioId::Dc && cfg.dc.mode == DcMode::Split) {
        write_manifest(manifest_for(cfg, {csv, "controller.csv", "intervals_plant.csv", "intervals_controller.csv"}),
                       dir);
        const auto res = rt::run_split_dc(cfg, dir);
        const auto s = interval_stats(res.plant_log, rt::kVrefTopic);
        std::printf("split run: %zu plant publishes, mean interval %.5f ms, median %.5f ms, std %.5f ms\n",
                    s.count + 1, s.mean * 1e3, s.median * 1e3, s.stddev * 1e3);
        std::printf("wrote %s\n", (dir / csv).c_str());
        return 0;
    }
    write_manifest(manifest_for(cfg, {csv}), dir);
    const auto ws = run_inprocess(cfg);
    write_waveforms(ws, dir / csv);
    std::printf("wrote %s (%zu samples x %zu traces)\n", (dir / csv).c_str(),
                ws.traces.empty() ? 0 : ws.traces.front().size(), ws.traces.size());
    return 0;
}

int cmd_sweep(const Overrides& o, const std::string& steps_text) {
    const auto base = load(o);
    const auto steps = step_list(steps_text);
    const std::filesystem::path dir = base.output;
    std::vector<std::string> files;
    std::vector<ScenarioConfig> cfgs;
    for (double dt : steps) {
        auto cfg = base;
        cfg.dt = dt;
        validate(cfg);
        cfgs.push_back(cfg);
        files.push_back(to_string(cfg.scenario) + "_" + duration_label(dt) + ".csv");
    }
    files.push_back("sweep.csv");
    write_manifest(manifest_for(base, files), dir);

    std::ofstream summary(dir / "sweep.csv");
    summary << "dt,label,samples,trace,dominant_rad_s\n";
    std::printf("%-10s %10s  %-8s %s\n", "dt", "samples", "trace", "dominant (rad/s)");
    for (std::size_t k = 0; k < cfgs.size(); ++k) {
        const auto& cfg = cfgs[k];
        const auto ws = run_inprocess(cfg);
        write_waveforms(ws, dir / files[k]);
        const auto name = sweep_trace(cfg, ws);
        std::optional<double> w;
        std::size_t n = 0;
        if (!name.empty()) {
            const auto& tr = ws.at(name);
            n = tr.size();
            w = dominant_frequency(tr, 0.0, cfg.duration);
        }
        const auto label = duration_label(cfg.dt);
        std::printf("%-10s %10zu  %-8s %s\n", label.c_str(), n, name.c_str(), dominant_label(w).c_str());
        summary << cfg.dt << ',' << label << ',' << n << ',' << name << ',' << dominant_label(w) << '\n';
    }
    return 0;
}

struct RtArgs {
    Overrides o;
    std::string bind;
    std::string connect;
};

int cmd_rt(const RtArgs& a, bool plant) {
    auto cfg = load(a.o);
    if (cfg.scenario != ScenarioId::Dc) {
        throw ValidationError("scenario", "real-time roles need the dc scenario");
    }
    const auto& rt_cfg = cfg.realtime;
    // the plant publishes at its own endpoint and listens to the controller's, and vice versa
    const auto bind = rt::parse_endpoint(
        !a.bind.empty() ? a.bind : (plant ? rt_cfg.plant_endpoint : rt_cfg.controller_endpoint), "--bind");
    const auto peer = rt::parse_endpoint(
        !a.connect.empty() ? a.connect : (plant ? rt_cfg.controller_endpoint : rt_cfg.plant_endpoint), "--connect");
    const std::filesystem::path dir = cfg.output;
    const std::string role = plant ? "plant" : "controller";
    const std::string csv = plant ? "dc.csv" : "controller.csv";
    write_manifest(manifest_for(cfg, {csv, "intervals_" + role + ".csv", role + ".json"}), dir);

    rt::Publisher pub(plant ? rt::kVrefTopic : rt::kDeltaTopic, bind);
    rt::Subscriber sub(plant ? rt::kDeltaTopic : rt::kVrefTopic, peer, {plant ? 0.0 : cfg.dc.plant.vn},
                       rt_cfg.stale_timeout);
    std::printf("rt-%s: publishing on %s, subscribing to %s\n", role.c_str(), bind.str().c_str(),
                peer.str().c_str());
    std::fflush(stdout);
    const auto rep = plant ? rt::run_rt_plant(cfg, pub, sub) : rt::run_rt_controller(cfg, pub, sub);
    write_waveforms(rep.waves, dir / csv);
    write_interval_log(rep.log, dir / ("intervals_" + role + ".csv"));
    std::ofstream(dir / (role + ".json")) << rep.summary().dump(2) << '\n';
    std::printf("rt-%s: %zu publishes, %llu deadline misses, %llu stale reads\n", role.c_str(),
                rep.log.entries.size(), static_cast<unsigned long long>(rep.deadline_misses),
                static_cast<unsigned long long>(rep.stale_reads));
    return 0;
}

int cmd_stats(const std::string& path, std::string topic, const std::string& bin_text) {
    const auto log = read_interval_log(path);
    if (topic.empty()) {
        if (log.entries.empty()) {
            throw InsufficientData("log '" + path + "' has no entries");
        }
        topic = log.entries.front().topic;
    }
    const double bin = time_arg(bin_text, "--bin");
    const auto stamps = log.timestamps(topic);
    const auto s = interval_stats(stamps, bin);
    const auto d = intervals_of(stamps);
    std::printf("topic      %s\n", topic.c_str());
    std::printf("intervals  %zu\n", s.count);
    std::printf("median     %.5f ms\n", s.median * 1e3);
    std::printf("mean       %.5f ms\n", s.mean * 1e3);
    std::printf("std        %.5f ms\n", s.stddev * 1e3);
    std::printf("min/max    %.5f / %.5f ms\n", s.min * 1e3, s.max * 1e3);
    std::printf("> 2x med   %.3f %%\n", 100.0 * s.fraction_above(2.0 * s.median, d));
    std::printf("reference  median 1.01259 ms, mean 1.01728 ms, std 0.08753 ms (RT-patched kernel)\n");
    std::printf("histogram (bin %.0f us)\n", bin * 1e6);
    for (std::size_t k = 0; k < s.histogram.size(); ++k) {
        if (s.histogram[k] != 0) {
            std::printf("  [%8.3f, %8.3f) ms  %zu\n", k * bin * 1e3, (k + 1) * bin * 1e3, s.histogram[k]);
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cpsim: cyber-physical microgrid co-simulation"};
    app.set_version_flag("--version", std::string(CPSIM_VERSION));
    app.require_subcommand(1);

    Overrides run_o;
    auto* run = app.add_subcommand("run", "Run one scenario and write waveforms");
    run->add_option("--config", run_o.config, "Scenario config (JSON)")->required();
    run->add_option("--out", run_o.out, "Output directory (overrides config)");
    run->add_option("--dt", run_o.dt, "Plant step, e.g. 50us");
    run->add_option("--duration", run_o.duration, "Simulated time, e.g. 10s");

    Overrides sweep_o;
    std::string steps;
    auto* sweep = app.add_subcommand("sweep-dt", "Rerun a scenario at several plant steps");
    sweep->add_option("--config", sweep_o.config, "Scenario config (JSON)")->required();
    sweep->add_option("--steps", steps, "Comma-separated steps, e.g. 20ns,50us,5ms")->required();
    sweep->add_option("--out", sweep_o.out, "Output directory (overrides config)");
    sweep->add_option("--duration", sweep_o.duration, "Simulated time");

    RtArgs plant_a, ctrl_a;
    auto* plant = app.add_subcommand("rt-plant", "Real-time plant process (network + droop)");
    auto* ctrl = app.add_subcommand("rt-controller", "Real-time secondary controller process");
    for (auto [sub, a] : {std::pair{plant, &plant_a}, std::pair{ctrl, &ctrl_a}}) {
        sub->add_option("--config", a->o.config, "DC scenario config (JSON)")->required();
        sub->add_option("--bind", a->bind, "host:port to publish on");
        sub->add_option("--connect", a->connect, "host:port of the peer's publisher");
        sub->add_option("--out", a->o.out, "Output directory");
        sub->add_option("--duration", a->o.duration, "Simulated time");
    }

    std::string log_path, topic, bin = "50us";
    auto* stats = app.add_subcommand("stats", "Publish-interval statistics of an interval log");
    stats->add_option("--log", log_path, "Interval log CSV (topic,seq,wall_ns)")->required();
    stats->add_option("--topic", topic, "Topic to analyse (default: first in the log)");
    stats->add_option("--bin", bin, "Histogram bin width");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*run) {
            return cmd_run(run_o);
        }
        if (*sweep) {
            return cmd_sweep(sweep_o, steps);
        }
        if (*plant) {
            return cmd_rt(plant_a, true);
        }
        if (*ctrl) {
            return cmd_rt(ctrl_a, false);
        }
        if (*stats) {
            return cmd_stats(log_path, topic, bin);
        }
    } catch (const ParseError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
