// SPDX-License-Identifier: Apache-2.0
#pragma once

// Electrical linear network solver. Elements are stamped by modified nodal
// analysis; capacitors and inductors use fixed-step companion models
// (trapezoidal by default, backward Euler on request) so the system matrix is
// factorized once per (netlist, dt).

#include "cpsim/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cpsim::eln {

struct NodeId {
    int index = 0;
    friend bool operator==(NodeId, NodeId) = default;
};

inline constexpr NodeId ground{0};

enum class ElementKind {
    Resistor,
    Capacitor,
    Inductor,
    VoltageSource,
    CurrentSource,
    ControlledVoltageSource,
    ControlledCurrentSource,
    VoltageSink,
    CurrentSink,
};

/// Time function driving an independent source.
using SourceFn = std::function<double(double)>;

/// Two-terminal element between `p` and `n`. Currents are counted from `p`
/// through the element to `n`; a current source of value I therefore pulls I
/// out of `p` and pushes it into `n`. Voltage sources enforce v(p) - v(n).
struct Element {
    ElementKind kind;
    std::string name;
    NodeId p;
    NodeId n;
    double value = 0.0;   ///< ohms, farads or henries
    double initial = 0.0; ///< capacitor voltage / inductor current at t0
    SourceFn source;      ///< independent sources only
    std::size_t slot = 0; ///< index among inputs / sinks / capacitors / inductors
};

struct InputId {
    std::size_t index;
};

struct SinkId {
    std::size_t index;
};

class Netlist {
public:
    Netlist() { node_names_.emplace_back("gnd"); }

    NodeId add_node(std::string name) {
        for (const auto& n : node_names_) {
            if (n == name) {
                throw ModelError("duplicate node '" + name + "'");
            }
        }
        node_names_.push_back(std::move(name));
        return NodeId{static_cast<int>(node_names_.size() - 1)};
    }

    NodeId node(std::string_view name) const {
        for (std::size_t i = 0; i < node_names_.size(); ++i) {
            if (node_names_[i] == name) {
                return NodeId{static_cast<int>(i)};
            }
        }
        throw ModelError("unknown node '" + std::string(name) + "'");
    }

    std::size_t add_resistor(std::string name, NodeId p, NodeId n, double ohms) {
        positive(name, ohms);
        return push({ElementKind::Resistor, std::move(name), p, n, ohms});
    }

    std::size_t add_capacitor(std::string name, NodeId p, NodeId n, double farads, double v0 = 0.0) {
        positive(name, farads);
        return push({ElementKind::Capacitor, std::move(name), p, n, farads, v0});
    }

    std::size_t add_inductor(std::string name, NodeId p, NodeId n, double henries, double i0 = 0.0) {
        positive(name, henries);
        return push({ElementKind::Inductor, std::move(name), p, n, henries, i0});
    }

    std::size_t add_voltage_source(std::string name, NodeId p, NodeId n, SourceFn v) {
        return push({ElementKind::VoltageSource, std::move(name), p, n, 0.0, 0.0, std::move(v)});
    }

    std::size_t add_voltage_source(std::string name, NodeId p, NodeId n, double v) {
        return add_voltage_source(std::move(name), p, n, [v](double) { return v; });
    }

    std::size_t add_current_source(std::string name, NodeId p, NodeId n, SourceFn i) {
        return push({ElementKind::CurrentSource, std::move(name), p, n, 0.0, 0.0, std::move(i)});
    }

    std::size_t add_current_source(std::string name, NodeId p, NodeId n, double i) {
        return add_current_source(std::move(name), p, n, [i](double) { return i; });
    }

    /// Voltage source whose value is supplied every step by the caller.
    InputId add_controlled_voltage_source(std::string name, NodeId p, NodeId n) {
        return {elements_[push({ElementKind::ControlledVoltageSource, std::move(name), p, n})].slot};
    }

    InputId add_controlled_current_source(std::string name, NodeId p, NodeId n) {
        return {elements_[push({ElementKind::ControlledCurrentSource, std::move(name), p, n})].slot};
    }

    /// Voltmeter reading v(p) - v(n); draws no current.
    SinkId add_voltage_sink(std::string name, NodeId p, NodeId n) {
        return {elements_[push({ElementKind::VoltageSink, std::move(name), p, n})].slot};
    }

    /// Ammeter in series between p and n, reading the current flowing p -> n.
    SinkId add_current_sink(std::string name, NodeId p, NodeId n) {
        return {elements_[push({ElementKind::CurrentSink, std::move(name), p, n})].slot};
    }

    const std::vector<Element>& elements() const noexcept { return elements_; }
    const std::vector<std::string>& node_names() const noexcept { return node_names_; }
    std::size_t node_count() const noexcept { return node_names_.size(); }
    std::size_t input_count() const noexcept { return inputs_; }
    std::size_t sink_count() const noexcept { return sinks_; }
    std::size_t capacitor_count() const noexcept { return capacitors_; }
    std::size_t inductor_count() const noexcept { return inductors_; }

    std::size_t count(ElementKind kind) const {
        return static_cast<std::size_t>(std::count_if(elements_.begin(), elements_.end(),
                                                      [kind](const Element& e) { return e.kind == kind; }));
    }

    const Element& element(std::string_view name) const {
        for (const auto& e : elements_) {
            if (e.name == name) {
                return e;
            }
        }
        throw ModelError("unknown element '" + std::string(name) + "'");
    }

    std::vector<std::string> input_names() const { return names_of(ElementKind::ControlledVoltageSource, ElementKind::ControlledCurrentSource, inputs_); }
    std::vector<std::string> sink_names() const { return names_of(ElementKind::VoltageSink, ElementKind::CurrentSink, sinks_); }

private:
    static void positive(const std::string& name, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ModelError(name + ": value must be positive and finite");
        }
    }

    std::size_t push(Element e) {
        const auto nodes = static_cast<int>(node_names_.size());
        if (e.p.index < 0 || e.p.index >= nodes || e.n.index < 0 || e.n.index >= nodes) {
            throw ModelError(e.name + ": terminal references an undeclared node");
        }
        for (const auto& other : elements_) {
            if (other.name == e.name) {
                throw ModelError("duplicate element '" + e.name + "'");
            }
        }
        switch (e.kind) {
        case ElementKind::Capacitor:
            e.slot = capacitors_++;
            break;
        case ElementKind::Inductor:
            e.slot = inductors_++;
            break;
        case ElementKind::ControlledVoltageSource:
        case ElementKind::ControlledCurrentSource:
            e.slot = inputs_++;
            break;
        case ElementKind::VoltageSink:
        case ElementKind::CurrentSink:
            e.slot = sinks_++;
            break;
        default:
            break;
        }
        elements_.push_back(std::move(e));
        return elements_.size() - 1;
    }

    std::vector<std::string> names_of(ElementKind a, ElementKind b, std::size_t n) const {
        std::vector<std::string> out(n);
        for (const auto& e : elements_) {
            if (e.kind == a || e.kind == b) {
                out[e.slot] = e.name;
            }
        }
        return out;
    }

    std::vector<std::string> node_names_;
    std::vector<Element> elements_;
    std::size_t inputs_ = 0;
    std::size_t sinks_ = 0;
    std::size_t capacitors_ = 0;
    std::size_t inductors_ = 0;
};

enum class Integrator { Trapezoidal, BackwardEuler };

struct ElnState {
    std::vector<double> node_voltages;  ///< indexed by NodeId, ground included (always 0)
    std::vector<double> branch_currents; ///< voltage sources and ammeters, in stamping order
    std::vector<double> capacitor_voltages;
    std::vector<double> capacitor_currents;
    std::vector<double> inductor_currents;
    std::vector<double> inductor_voltages;
    double time = 0.0;
    double dt = 0.0;
    bool initialized = false;
    bool consistent = false; ///< t0 derivative terms came from a consistent solve
};

/// A netlist assembled for a fixed step size.
class System {
public:
    System(Netlist netlist, double dt, Integrator method = Integrator::Trapezoidal)
        : net_(std::move(netlist)), dt_(dt), method_(method) {
        if (!(dt > 0.0) || !std::isfinite(dt)) {
            throw ModelError("time step must be positive");
        }
        check_dc_paths();
        index_branches();
        factor(method_, lu_main_);
        sinks_.assign(net_.sink_count(), 0.0);
    }

    const Netlist& netlist() const noexcept { return net_; }
    double dt() const noexcept { return dt_; }
    Integrator method() const noexcept { return method_; }
    std::size_t unknowns() const noexcept { return unknowns_; }

    ElnState initial_state(double t0 = 0.0) const {
        ElnState s;
        s.node_voltages.assign(net_.node_count(), 0.0);
        s.branch_currents.assign(branch_count_, 0.0);
        s.capacitor_voltages.assign(net_.capacitor_count(), 0.0);
        s.capacitor_currents.assign(net_.capacitor_count(), 0.0);
        s.inductor_currents.assign(net_.inductor_count(), 0.0);
        s.inductor_voltages.assign(net_.inductor_count(), 0.0);
        for (const auto& e : net_.elements()) {
            if (e.kind == ElementKind::Capacitor) {
                s.capacitor_voltages[e.slot] = e.initial;
            } else if (e.kind == ElementKind::Inductor) {
                s.inductor_currents[e.slot] = e.initial;
            }
        }
        s.time = t0;
        s.dt = dt_;
        return s;
    }

    /// Solve the network at s.time with capacitor voltages and inductor
    /// currents frozen, giving node voltages, capacitor currents and inductor
    /// voltages consistent with the sources at that instant. When that
    /// instantaneous network is singular (capacitor/voltage-source loops) the
    /// first step falls back to backward Euler instead.
    std::span<const double> initialize(ElnState& s, std::span<const double> inputs) {
        check_inputs(inputs);
        const auto n = static_cast<Eigen::Index>(unknowns_ + net_.capacitor_count());
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        const auto nv = static_cast<Eigen::Index>(net_.node_count() - 1);

        for (const auto& e : net_.elements()) {
            switch (e.kind) {
            case ElementKind::Resistor:
                stamp_g(a, e.p, e.n, 1.0 / e.value);
                break;
            case ElementKind::Capacitor: {
                const auto k = static_cast<Eigen::Index>(unknowns_ + e.slot);
                stamp_branch(a, e.p, e.n, k);
                rhs(k) = s.capacitor_voltages[e.slot];
                break;
            }
            case ElementKind::Inductor:
                stamp_i(rhs, e.p, e.n, s.inductor_currents[e.slot]);
                break;
            default:
                stamp_source(a, rhs, e, s.time, inputs);
                break;
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (lu.rank() < n) {
            s.consistent = false;
            s.initialized = true;
            ensure_startup();
            // Node voltages still need a value for the readings at t0.
            std::fill(s.node_voltages.begin(), s.node_voltages.end(), 0.0);
            return read_sinks(s);
        }
        const Eigen::VectorXd x = lu.solve(rhs);
        unpack_nodes(x, s);
        for (std::size_t k = 0; k < branch_count_; ++k) {
            s.branch_currents[k] = x(nv + static_cast<Eigen::Index>(k));
        }
        for (const auto& e : net_.elements()) {
            if (e.kind == ElementKind::Capacitor) {
                s.capacitor_currents[e.slot] = x(static_cast<Eigen::Index>(unknowns_ + e.slot));
            } else if (e.kind == ElementKind::Inductor) {
                s.inductor_voltages[e.slot] = vdiff(s, e);
            }
        }
        s.consistent = true;
        s.initialized = true;
        check_finite(x, s.time);
        return read_sinks(s);
    }

    /// Advance one step to s.time + dt. `inputs` are the controlled source
    /// values at the new time. Returns the sink readings at the new time.
    std::span<const double> step(ElnState& s, std::span<const double> inputs) {
        check_inputs(inputs);
        if (s.node_voltages.size() != net_.node_count() ||
            s.capacitor_voltages.size() != net_.capacitor_count() ||
            s.inductor_currents.size() != net_.inductor_count()) {
            throw ModelError("state dimensions do not match the assembled netlist");
        }
        Integrator rule = method_;
        if (!s.initialized) {
            // Derivative terms unknown: take one backward Euler step.
            rule = Integrator::BackwardEuler;
        } else if (!s.consistent && method_ == Integrator::Trapezoidal) {
            rule = Integrator::BackwardEuler;
        }
        if (rule != method_) {
            ensure_startup();
        }
        const auto& lu = (rule == method_) ? lu_main_ : *lu_startup_;
        const double t = s.time + dt_;

        rhs_.setZero(static_cast<Eigen::Index>(unknowns_));
        for (const auto& e : net_.elements()) {
            switch (e.kind) {
            case ElementKind::Resistor:
            case ElementKind::VoltageSink:
                break;
            case ElementKind::Capacitor: {
                const double g = cap_g(e, rule);
                double j = g * s.capacitor_voltages[e.slot];
                if (rule == Integrator::Trapezoidal) {
                    j += s.capacitor_currents[e.slot];
                }
                stamp_i(rhs_, e.p, e.n, -j);
                break;
            }
            case ElementKind::Inductor: {
                const double g = ind_g(e, rule);
                double k = s.inductor_currents[e.slot];
                if (rule == Integrator::Trapezoidal) {
                    k += g * s.inductor_voltages[e.slot];
                }
                stamp_i(rhs_, e.p, e.n, k);
                break;
            }
            default:
                stamp_source_rhs(rhs_, e, t, inputs);
                break;
            }
        }
        x_ = lu.solve(rhs_);
        check_finite(x_, t);

        unpack_nodes(x_, s);
        const auto nv = static_cast<Eigen::Index>(net_.node_count() - 1);
        for (std::size_t k = 0; k < branch_count_; ++k) {
            s.branch_currents[k] = x_(nv + static_cast<Eigen::Index>(k));
        }
        for (const auto& e : net_.elements()) {
            if (e.kind == ElementKind::Capacitor) {
                const double g = cap_g(e, rule);
                const double v = vdiff(s, e);
                double i = g * (v - s.capacitor_voltages[e.slot]);
                if (rule == Integrator::Trapezoidal) {
                    i -= s.capacitor_currents[e.slot];
                }
                s.capacitor_voltages[e.slot] = v;
                s.capacitor_currents[e.slot] = i;
            } else if (e.kind == ElementKind::Inductor) {
                const double g = ind_g(e, rule);
                const double v = vdiff(s, e);
                double i = s.inductor_currents[e.slot] + g * v;
                if (rule == Integrator::Trapezoidal) {
                    i += g * s.inductor_voltages[e.slot];
                }
                s.inductor_currents[e.slot] = i;
                s.inductor_voltages[e.slot] = v;
            }
        }
        s.time = t;
        s.initialized = true;
        s.consistent = true;
        return read_sinks(s);
    }

    /// Current through element `index` (p -> n) in state `s`; `inputs` are the
    /// controlled values that produced `s`.
    double element_current(const ElnState& s, std::size_t index, std::span<const double> inputs) const {
        const auto& e = net_.elements().at(index);
        switch (e.kind) {
        case ElementKind::Resistor:
            return vdiff(s, e) / e.value;
        case ElementKind::Capacitor:
            return s.capacitor_currents[e.slot];
        case ElementKind::Inductor:
            return s.inductor_currents[e.slot];
        case ElementKind::CurrentSource:
            return e.source(s.time);
        case ElementKind::ControlledCurrentSource:
            return inputs[e.slot];
        case ElementKind::VoltageSink:
            return 0.0;
        default:
            return s.branch_currents[branch_of_[index]];
        }
    }

private:
    static double vdiff(const ElnState& s, const Element& e) {
        return s.node_voltages[static_cast<std::size_t>(e.p.index)] -
               s.node_voltages[static_cast<std::size_t>(e.n.index)];
    }

    double cap_g(const Element& e, Integrator rule) const {
        return (rule == Integrator::Trapezoidal ? 2.0 : 1.0) * e.value / dt_;
    }

    double ind_g(const Element& e, Integrator rule) const {
        return dt_ / ((rule == Integrator::Trapezoidal ? 2.0 : 1.0) * e.value);
    }

    static Eigen::Index row(NodeId n) { return n.index - 1; }

    static void stamp_g(Eigen::MatrixXd& a, NodeId p, NodeId n, double g) {
        if (p.index > 0) {
            a(row(p), row(p)) += g;
        }
        if (n.index > 0) {
            a(row(n), row(n)) += g;
        }
        if (p.index > 0 && n.index > 0) {
            a(row(p), row(n)) -= g;
            a(row(n), row(p)) -= g;
        }
    }

    static void stamp_branch(Eigen::MatrixXd& a, NodeId p, NodeId n, Eigen::Index k) {
        if (p.index > 0) {
            a(row(p), k) += 1.0;
            a(k, row(p)) += 1.0;
        }
        if (n.index > 0) {
            a(row(n), k) -= 1.0;
            a(k, row(n)) -= 1.0;
        }
    }

    /// Element current `i` flowing p -> n leaves node p.
    static void stamp_i(Eigen::VectorXd& rhs, NodeId p, NodeId n, double i) {
        if (p.index > 0) {
            rhs(row(p)) -= i;
        }
        if (n.index > 0) {
            rhs(row(n)) += i;
        }
    }

    void stamp_source(Eigen::MatrixXd& a, Eigen::VectorXd& rhs, const Element& e, double t,
                      std::span<const double> inputs) const {
        switch (e.kind) {
        case ElementKind::VoltageSource:
        case ElementKind::ControlledVoltageSource:
        case ElementKind::CurrentSink: {
            const auto k = static_cast<Eigen::Index>(net_.node_count() - 1 + branch_of_[index_of(e)]);
            stamp_branch(a, e.p, e.n, k);
            break;
        }
        default:
            break;
        }
        stamp_source_rhs(rhs, e, t, inputs);
    }

    void stamp_source_rhs(Eigen::VectorXd& rhs, const Element& e, double t, std::span<const double> inputs) const {
        switch (e.kind) {
        case ElementKind::VoltageSource:
            rhs(branch_row(e)) = e.source(t);
            break;
        case ElementKind::ControlledVoltageSource:
            rhs(branch_row(e)) = inputs[e.slot];
            break;
        case ElementKind::CurrentSink:
            rhs(branch_row(e)) = 0.0;
            break;
        case ElementKind::CurrentSource:
            stamp_i(rhs, e.p, e.n, e.source(t));
            break;
        case ElementKind::ControlledCurrentSource:
            stamp_i(rhs, e.p, e.n, inputs[e.slot]);
            break;
        default:
            break;
        }
    }

    Eigen::Index branch_row(const Element& e) const {
        return static_cast<Eigen::Index>(net_.node_count() - 1 + branch_of_[index_of(e)]);
    }

    std::size_t index_of(const Element& e) const {
        return static_cast<std::size_t>(&e - net_.elements().data());
    }

    void index_branches() {
        branch_of_.assign(net_.elements().size(), 0);
        branch_count_ = 0;
        for (std::size_t i = 0; i < net_.elements().size(); ++i) {
            const auto k = net_.elements()[i].kind;
            if (k == ElementKind::VoltageSource || k == ElementKind::ControlledVoltageSource ||
                k == ElementKind::CurrentSink) {
                branch_of_[i] = branch_count_++;
            }
        }
        unknowns_ = net_.node_count() - 1 + branch_count_;
        if (unknowns_ == 0) {
            throw ModelError("netlist has no unknowns");
        }
    }

    /// Every node needs a conductive path to ground through R, L, voltage
    /// sources or ammeters; otherwise its DC level is undetermined.
    void check_dc_paths() const {
        std::vector<std::size_t> parent(net_.node_count());
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        auto find = [&](std::size_t x) {
            while (parent[x] != x) {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            return x;
        };
        for (const auto& e : net_.elements()) {
            switch (e.kind) {
            case ElementKind::Resistor:
            case ElementKind::Inductor:
            case ElementKind::VoltageSource:
            case ElementKind::ControlledVoltageSource:
            case ElementKind::CurrentSink:
                parent[find(static_cast<std::size_t>(e.p.index))] = find(static_cast<std::size_t>(e.n.index));
                break;
            default:
                break;
            }
        }
        for (std::size_t i = 1; i < net_.node_count(); ++i) {
            if (find(i) != find(0)) {
                throw SingularSystem("node '" + net_.node_names()[i] + "' has no DC path to ground");
            }
        }
    }

    void factor(Integrator rule, Eigen::PartialPivLU<Eigen::MatrixXd>& out) const {
        const auto n = static_cast<Eigen::Index>(unknowns_);
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd scratch = Eigen::VectorXd::Zero(n);
        for (const auto& e : net_.elements()) {
            switch (e.kind) {
            case ElementKind::Resistor:
                stamp_g(a, e.p, e.n, 1.0 / e.value);
                break;
            case ElementKind::Capacitor:
                stamp_g(a, e.p, e.n, cap_g(e, rule));
                break;
            case ElementKind::Inductor:
                stamp_g(a, e.p, e.n, ind_g(e, rule));
                break;
            case ElementKind::VoltageSource:
            case ElementKind::ControlledVoltageSource:
            case ElementKind::CurrentSink:
                stamp_branch(a, e.p, e.n, branch_row(e));
                break;
            default:
                break;
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> check(a);
        if (check.rank() < n) {
            throw SingularSystem("MNA matrix is singular (rank " + std::to_string(check.rank()) + " of " +
                                 std::to_string(n) + ")");
        }
        out.compute(a);
    }

    void ensure_startup() {
        if (!lu_startup_) {
            lu_startup_.emplace();
            factor(Integrator::BackwardEuler, *lu_startup_);
        }
    }

    void unpack_nodes(const Eigen::VectorXd& x, ElnState& s) const {
        s.node_voltages[0] = 0.0;
        for (std::size_t i = 1; i < net_.node_count(); ++i) {
            s.node_voltages[i] = x(static_cast<Eigen::Index>(i - 1));
        }
    }

    std::span<const double> read_sinks(const ElnState& s) {
        for (std::size_t i = 0; i < net_.elements().size(); ++i) {
            const auto& e = net_.elements()[i];
            if (e.kind == ElementKind::VoltageSink) {
                sinks_[e.slot] = vdiff(s, e);
            } else if (e.kind == ElementKind::CurrentSink) {
                sinks_[e.slot] = s.branch_currents[branch_of_[i]];
            }
        }
        return sinks_;
    }

    void check_inputs(std::span<const double> inputs) const {
        if (inputs.size() != net_.input_count()) {
            throw ModelError("expected " + std::to_string(net_.input_count()) + " controlled inputs, got " +
                             std::to_string(inputs.size()));
        }
    }

    static void check_finite(const Eigen::VectorXd& x, double t) {
        if (!x.allFinite()) {
            throw SimulationAbort("eln", t, "non-finite network solution");
        }
    }

    Netlist net_;
    double dt_;
    Integrator method_;
    std::vector<std::size_t> branch_of_;
    std::size_t branch_count_ = 0;
    std::size_t unknowns_ = 0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_main_;
    std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_startup_;
    Eigen::VectorXd rhs_;
    Eigen::VectorXd x_;
    std::vector<double> sinks_;
};

// --- the open-loop EMT test circuit -------------------------------------------------

struct EmtCircuitParams {
    double r = 0.0981;    ///< ohm, series resistance between the capacitor banks
    double c1 = 5.12e-6;  ///< F
    double c2 = 10.24e-6; ///< F
    double l = 2.2e-3;    ///< H
};

struct TimeConstants {
    double tau;    ///< s, charge transfer between the banks
    double omega0; ///< rad/s, natural frequency of L with both banks
    double period; ///< s
};

inline TimeConstants compute_time_constants(const EmtCircuitParams& p) {
    if (!(p.r > 0 && p.c1 > 0 && p.c2 > 0 && p.l > 0)) {
        throw ModelError("EMT circuit parameters must be positive");
    }
    const double tau = p.r * (p.c1 * p.c2) / (p.c1 + p.c2);
    const double w0 = 1.0 / std::sqrt(p.l * (p.c1 + p.c2));
    return {tau, w0, 2.0 * std::numbers::pi / w0};
}

struct EmtCircuit {
    Netlist netlist;
    InputId source;  ///< driven voltage at the IN port
    SinkId v_c1;     ///< voltmeter across C1 (OUT port)
};

/// IN -- L -- (C1 to ground) -- R -- (C2 to ground); the voltmeter sits across C1.
inline EmtCircuit build_emt_circuit(const EmtCircuitParams& p) {
    compute_time_constants(p);
    EmtCircuit c;
    auto& n = c.netlist;
    const auto in = n.add_node("in");
    const auto bank1 = n.add_node("bank1");
    const auto bank2 = n.add_node("bank2");
    c.source = n.add_controlled_voltage_source("vin", in, ground);
    n.add_inductor("L", in, bank1, p.l);
    n.add_capacitor("C1", bank1, ground, p.c1);
    n.add_resistor("R", bank1, bank2, p.r);
    n.add_capacitor("C2", bank2, ground, p.c2);
    c.v_c1 = n.add_voltage_sink("vC1", bank1, ground);
    return c;
}

} // namespace cpsim::eln
