// SPDX-License-Identifier: Apache-2.0
#pragma once

// Timed dataflow kernel: modules exchange double-valued sample streams through
// rate/delay-annotated ports. A cluster is compiled once into a static
// schedule (one hyperperiod) and then replayed without any dynamic scheduling.
//
// Multirate convention: a slow module driving a fast one writes `rate` samples
// per activation (Activation::hold repeats one value, i.e. zero-order hold); a
// slow module reading a fast stream sees `rate` samples and usually takes the
// newest one (Activation::latest).

#include "cpsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cpsim::tdf {

struct PortSpec {
    std::string name;
    int rate = 1;         ///< samples consumed/produced per activation
    int delay = 0;        ///< initial samples present before the first activation
    double initial = 0.0; ///< value of those initial samples
};

using ModuleId = std::size_t;

struct PortRef {
    ModuleId module;
    std::size_t port;
};

class Activation;
using ProcessFn = std::function<void(Activation&)>;

struct ModuleSpec {
    std::string name;
    std::vector<PortSpec> inputs;
    std::vector<PortSpec> outputs;
    ProcessFn process;
};

struct Connection {
    PortRef from; ///< output port
    PortRef to;   ///< input port
};

class Cluster {
public:
    /// `base_step` is the activation period of the most frequently activated module.
    explicit Cluster(double base_step) : base_step_(base_step) {
        if (!(base_step > 0.0)) {
            throw ModelError("cluster base_step must be positive");
        }
    }

    ModuleId add(ModuleSpec spec) {
        for (const auto* ports : {&spec.inputs, &spec.outputs}) {
            for (const auto& p : *ports) {
                if (p.rate < 1) {
                    throw ModelError(spec.name + "." + p.name + ": rate must be >= 1");
                }
                if (p.delay < 0) {
                    throw ModelError(spec.name + "." + p.name + ": delay must be >= 0");
                }
            }
        }
        modules_.push_back(std::move(spec));
        return modules_.size() - 1;
    }

    void connect(PortRef from, PortRef to) {
        check_port(from, false);
        check_port(to, true);
        connections_.push_back({from, to});
    }

    PortRef out(ModuleId m, std::string_view port) const { return {m, find(m, port, false)}; }
    PortRef in(ModuleId m, std::string_view port) const { return {m, find(m, port, true)}; }

    void connect(ModuleId src, std::string_view out_port, ModuleId dst, std::string_view in_port) {
        connect(out(src, out_port), in(dst, in_port));
    }

    double base_step() const noexcept { return base_step_; }
    const std::vector<ModuleSpec>& modules() const noexcept { return modules_; }
    const std::vector<Connection>& connections() const noexcept { return connections_; }

private:
    void check_port(PortRef r, bool input) const {
        if (r.module >= modules_.size()) {
            throw ModelError("connection references unknown module");
        }
        const auto& ports = input ? modules_[r.module].inputs : modules_[r.module].outputs;
        if (r.port >= ports.size()) {
            throw ModelError(modules_[r.module].name + ": port index out of range");
        }
    }

    std::size_t find(ModuleId m, std::string_view port, bool input) const {
        if (m >= modules_.size()) {
            throw ModelError("unknown module id");
        }
        const auto& ports = input ? modules_[m].inputs : modules_[m].outputs;
        for (std::size_t i = 0; i < ports.size(); ++i) {
            if (ports[i].name == port) {
                return i;
            }
        }
        throw ModelError(modules_[m].name + ": no " + (input ? "input" : "output") + " port '" +
                         std::string(port) + "'");
    }

    double base_step_;
    std::vector<ModuleSpec> modules_;
    std::vector<Connection> connections_;
};

struct Schedule {
    std::vector<ModuleId> sequence;          ///< activation order within one hyperperiod
    std::vector<std::uint64_t> repetitions;  ///< activations per hyperperiod, per module
    std::vector<double> timesteps;           ///< activation period, per module
    double hyperperiod = 0.0;
};

namespace detail {

struct Ratio {
    std::int64_t num = 0;
    std::int64_t den = 1;
};

inline Ratio reduce(std::int64_t num, std::int64_t den) {
    const auto g = std::gcd(num, den);
    return {num / g, den / g};
}

/// Number of initial samples on an edge: delays declared on either end add up.
inline int edge_delay(const Cluster& c, const Connection& e) {
    return c.modules()[e.from.module].outputs[e.from.port].delay +
           c.modules()[e.to.module].inputs[e.to.port].delay;
}

inline double edge_initial(const Cluster& c, const Connection& e) {
    const auto& dst = c.modules()[e.to.module].inputs[e.to.port];
    return dst.delay > 0 ? dst.initial : c.modules()[e.from.module].outputs[e.from.port].initial;
}

inline void validate_drivers(const Cluster& c) {
    const auto& mods = c.modules();
    for (ModuleId m = 0; m < mods.size(); ++m) {
        for (std::size_t p = 0; p < mods[m].inputs.size(); ++p) {
            int drivers = 0;
            for (const auto& e : c.connections()) {
                drivers += (e.to.module == m && e.to.port == p) ? 1 : 0;
            }
            if (drivers != 1) {
                throw ModelError(mods[m].name + "." + mods[m].inputs[p].name + " has " +
                                 std::to_string(drivers) + " drivers, expected exactly 1");
            }
        }
    }
}

/// Smallest positive integer solution of the balance equations, per connected component.
inline std::vector<std::uint64_t> repetition_vector(const Cluster& c) {
    const auto n = c.modules().size();
    std::vector<Ratio> q(n);
    std::vector<bool> seen(n, false);
    std::vector<std::uint64_t> reps(n, 0);

    for (ModuleId root = 0; root < n; ++root) {
        if (seen[root]) {
            continue;
        }
        std::vector<ModuleId> component{root};
        seen[root] = true;
        q[root] = {1, 1};
        for (std::size_t head = 0; head < component.size(); ++head) {
            const auto m = component[head];
            for (const auto& e : c.connections()) {
                const bool fwd = e.from.module == m;
                const bool bwd = e.to.module == m;
                if (!fwd && !bwd) {
                    continue;
                }
                const std::int64_t r_out = c.modules()[e.from.module].outputs[e.from.port].rate;
                const std::int64_t r_in = c.modules()[e.to.module].inputs[e.to.port].rate;
                // q_from * r_out == q_to * r_in
                Ratio expect;
                ModuleId other;
                if (fwd) {
                    other = e.to.module;
                    expect = reduce(q[m].num * r_out, q[m].den * r_in);
                } else {
                    other = e.from.module;
                    expect = reduce(q[m].num * r_in, q[m].den * r_out);
                }
                if (!seen[other]) {
                    seen[other] = true;
                    q[other] = expect;
                    component.push_back(other);
                } else if (q[other].num != expect.num || q[other].den != expect.den) {
                    throw RateInconsistency("rates around " + c.modules()[e.from.module].name +
                                            " -> " + c.modules()[e.to.module].name +
                                            " admit no balanced schedule");
                }
            }
        }
        std::int64_t lcm_den = 1;
        for (auto m : component) {
            lcm_den = std::lcm(lcm_den, q[m].den);
        }
        std::int64_t gcd_num = 0;
        for (auto m : component) {
            gcd_num = std::gcd(gcd_num, q[m].num * (lcm_den / q[m].den));
        }
        for (auto m : component) {
            reps[m] = static_cast<std::uint64_t>(q[m].num * (lcm_den / q[m].den) / gcd_num);
        }
    }
    return reps;
}

} // namespace detail

/// Compile a cluster into a static schedule. Among ready modules the first
/// one in declaration order fires, so the result depends only on the cluster.
inline Schedule build_schedule(const Cluster& c) {
    const auto& mods = c.modules();
    if (mods.empty()) {
        throw ModelError("cluster has no modules");
    }
    detail::validate_drivers(c);

    Schedule s;
    s.repetitions = detail::repetition_vector(c);

    std::vector<std::int64_t> tokens;
    tokens.reserve(c.connections().size());
    for (const auto& e : c.connections()) {
        tokens.push_back(detail::edge_delay(c, e));
    }

    auto remaining = s.repetitions;
    std::uint64_t total = std::accumulate(remaining.begin(), remaining.end(), std::uint64_t{0});
    s.sequence.reserve(total);

    auto ready = [&](ModuleId m) {
        if (remaining[m] == 0) {
            return false;
        }
        for (std::size_t k = 0; k < c.connections().size(); ++k) {
            const auto& e = c.connections()[k];
            if (e.to.module == m && tokens[k] < mods[m].inputs[e.to.port].rate) {
                return false;
            }
        }
        return true;
    };

    while (total > 0) {
        ModuleId pick = mods.size();
        for (ModuleId m = 0; m < mods.size(); ++m) {
            if (ready(m)) {
                pick = m;
                break;
            }
        }
        if (pick == mods.size()) {
            std::string blocked;
            for (ModuleId m = 0; m < mods.size(); ++m) {
                if (remaining[m] > 0) {
                    blocked += (blocked.empty() ? "" : ", ") + mods[m].name;
                }
            }
            throw AlgebraicLoop("feedback cycle without sufficient port delay among: " + blocked);
        }
        for (std::size_t k = 0; k < c.connections().size(); ++k) {
            const auto& e = c.connections()[k];
            if (e.to.module == pick) {
                tokens[k] -= mods[pick].inputs[e.to.port].rate;
            }
            if (e.from.module == pick) {
                tokens[k] += mods[pick].outputs[e.from.port].rate;
            }
        }
        s.sequence.push_back(pick);
        --remaining[pick];
        --total;
    }

    const auto max_rep = *std::max_element(s.repetitions.begin(), s.repetitions.end());
    s.hyperperiod = c.base_step() * static_cast<double>(max_rep);
    s.timesteps.resize(mods.size());
    for (ModuleId m = 0; m < mods.size(); ++m) {
        s.timesteps[m] = s.hyperperiod / static_cast<double>(s.repetitions[m]);
    }
    return s;
}

/// View handed to a processing function for one activation.
class Activation {
public:
    std::span<const double> in(std::size_t port) const { return inputs_[port]; }
    std::span<double> out(std::size_t port) { return outputs_[port]; }

    /// Newest sample on an input port (take-most-recent for fast -> slow).
    double latest(std::size_t port) const { return inputs_[port].back(); }
    /// First (and for rate-1 ports only) sample on an input port.
    double read(std::size_t port) const { return inputs_[port].front(); }
    /// Write every sample of an output port (zero-order hold for slow -> fast).
    void hold(std::size_t port, double value) {
        for (auto& v : outputs_[port]) {
            v = value;
        }
    }
    void write(std::size_t port, double value) { hold(port, value); }

    double time() const noexcept { return time_; }
    double timestep() const noexcept { return timestep_; }
    std::uint64_t index() const noexcept { return index_; }

private:
    friend class Simulator;
    std::vector<std::span<const double>> inputs_;
    std::vector<std::span<double>> outputs_;
    double time_ = 0.0;
    double timestep_ = 0.0;
    std::uint64_t index_ = 0;
};

/// Executes a cluster by replaying its static schedule.
class Simulator {
public:
    explicit Simulator(Cluster cluster) : Simulator(cluster, build_schedule(cluster)) {}

    Simulator(Cluster cluster, Schedule schedule)
        : cluster_(std::move(cluster)), schedule_(std::move(schedule)) {
        const auto& mods = cluster_.modules();
        if (schedule_.repetitions.size() != mods.size()) {
            throw ModelError("schedule does not belong to this cluster");
        }
        for (const auto& e : cluster_.connections()) {
            buffers_.emplace_back(static_cast<std::size_t>(detail::edge_delay(cluster_, e)),
                                  detail::edge_initial(cluster_, e));
        }
        state_.resize(mods.size());
        for (ModuleId m = 0; m < mods.size(); ++m) {
            auto& st = state_[m];
            for (const auto& p : mods[m].inputs) {
                st.in_scratch.emplace_back(static_cast<std::size_t>(p.rate), 0.0);
            }
            for (const auto& p : mods[m].outputs) {
                st.out_scratch.emplace_back(static_cast<std::size_t>(p.rate), p.initial);
            }
        }
        for (std::size_t k = 0; k < cluster_.connections().size(); ++k) {
            const auto& e = cluster_.connections()[k];
            state_[e.to.module].in_edges.push_back({e.to.port, k});
            state_[e.from.module].out_edges.push_back({e.from.port, k});
        }
        for (auto& st : state_) {
            for (auto& v : st.in_scratch) {
                st.act.inputs_.emplace_back(v.data(), v.size());
            }
            for (auto& v : st.out_scratch) {
                st.act.outputs_.emplace_back(v.data(), v.size());
            }
        }
    }

    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    void step_hyperperiod() {
        for (auto m : schedule_.sequence) {
            fire(m);
        }
        ++hyperperiods_;
    }

    /// Run whole hyperperiods until at least `duration` seconds of simulated time elapsed.
    void run_for(double duration) {
        const auto n = static_cast<std::uint64_t>(std::ceil(duration / schedule_.hyperperiod - 1e-9));
        for (std::uint64_t i = 0; i < n; ++i) {
            step_hyperperiod();
        }
    }

    double time() const noexcept { return static_cast<double>(hyperperiods_) * schedule_.hyperperiod; }
    std::uint64_t hyperperiods() const noexcept { return hyperperiods_; }
    const Schedule& schedule() const noexcept { return schedule_; }
    const Cluster& cluster() const noexcept { return cluster_; }

    /// Samples currently queued on each connection (same order as Cluster::connections()).
    std::vector<std::size_t> occupancy() const {
        std::vector<std::size_t> occ;
        occ.reserve(buffers_.size());
        for (const auto& b : buffers_) {
            occ.push_back(b.size());
        }
        return occ;
    }

private:
    struct EdgeBinding {
        std::size_t port;
        std::size_t edge;
    };

    struct ModuleState {
        std::vector<std::vector<double>> in_scratch;
        std::vector<std::vector<double>> out_scratch;
        std::vector<EdgeBinding> in_edges;
        std::vector<EdgeBinding> out_edges;
        Activation act;
        std::uint64_t activations = 0;
    };

    void fire(ModuleId m) {
        auto& st = state_[m];
        for (const auto& b : st.in_edges) {
            auto& buf = buffers_[b.edge];
            auto& dst = st.in_scratch[b.port];
            std::copy_n(buf.begin(), dst.size(), dst.begin());
            buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(dst.size()));
        }
        const auto step = schedule_.timesteps[m];
        st.act.index_ = st.activations;
        st.act.timestep_ = step;
        st.act.time_ = static_cast<double>(st.activations) * step;

        const auto& spec = cluster_.modules()[m];
        if (spec.process) {
            try {
                spec.process(st.act);
            } catch (const SimulationAbort&) {
                throw;
            } catch (const std::exception& ex) {
                throw SimulationAbort(spec.name, st.act.time_, ex.what());
            }
        }
        for (const auto& b : st.out_edges) {
            const auto& src = st.out_scratch[b.port];
            buffers_[b.edge].insert(buffers_[b.edge].end(), src.begin(), src.end());
        }
        ++st.activations;
    }

    Cluster cluster_;
    Schedule schedule_;
    std::vector<std::deque<double>> buffers_;
    std::vector<ModuleState> state_;
    std::uint64_t hyperperiods_ = 0;
};

} // namespace cpsim::tdf
