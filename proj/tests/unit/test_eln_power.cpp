#include <catch_amalgamated.hpp>

#include "cpsim/control.hpp"
#include "cpsim/eln.hpp"
#include "cpsim/power.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace cpsim;
using namespace cpsim::eln;
using Catch::Approx;

namespace {

const std::vector<double> no_inputs;

// Sum of p->n currents leaving every non-ground node.
std::vector<double> kcl_residuals(const System& sys, const ElnState& s, std::span<const double> inputs) {
    const auto& net = sys.netlist();
    std::vector<double> r(net.node_count(), 0.0);
    for (std::size_t k = 0; k < net.elements().size(); ++k) {
        const auto& e = net.elements()[k];
        const double i = sys.element_current(s, k, inputs);
        r[static_cast<std::size_t>(e.p.index)] += i;
        r[static_cast<std::size_t>(e.n.index)] -= i;
    }
    r.erase(r.begin());
    return r;
}

std::vector<double> run_emt_trace(double dt, double t_end, Integrator rule = Integrator::Trapezoidal) {
    auto c = build_emt_circuit({});
    System sys(c.netlist, dt, rule);
    auto s = sys.initial_state();
    auto stim = [](double t) { return std::cos(2.0 * std::numbers::pi * 60.0 * t); };
    std::vector<double> u{stim(0.0)};
    std::vector<double> out{sys.initialize(s, u)[c.v_c1.index]};
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    for (std::size_t k = 1; k <= n; ++k) {
        u[0] = stim(static_cast<double>(k) * dt);
        out.push_back(sys.step(s, u)[c.v_c1.index]);
    }
    return out;
}

} // namespace

TEST_CASE("resistive divider", "[eln]") {
    Netlist net;
    const auto top = net.add_node("top");
    const auto mid = net.add_node("mid");
    net.add_voltage_source("V", top, ground, 10.0);
    net.add_resistor("R1", top, mid, 1e3);
    net.add_resistor("R2", mid, ground, 1e3);
    const auto probe = net.add_voltage_sink("vm", mid, ground);
    System sys(net, 1e-6);
    auto s = sys.initial_state();
    CHECK(sys.initialize(s, no_inputs)[probe.index] == Approx(5.0).epsilon(1e-14));
    CHECK(sys.step(s, no_inputs)[probe.index] == Approx(5.0).epsilon(1e-14));
}

TEST_CASE("randomised resistive networks match a hand-built nodal solve", "[eln][property]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ohm(1.0, 1e4);
    std::uniform_real_distribution<double> amp(-5.0, 5.0);
    for (int trial = 0; trial < 20; ++trial) {
        // ladder: source -> n1 -> n2 -> n3, each node with a shunt to ground
        const double rs[3] = {ohm(rng), ohm(rng), ohm(rng)};
        const double rg[3] = {ohm(rng), ohm(rng), ohm(rng)};
        const double v = amp(rng);
        Netlist net;
        const auto src = net.add_node("src");
        NodeId n[3] = {net.add_node("n1"), net.add_node("n2"), net.add_node("n3")};
        net.add_voltage_source("V", src, ground, v);
        NodeId prev = src;
        for (int k = 0; k < 3; ++k) {
            net.add_resistor("rs" + std::to_string(k), prev, n[k], rs[k]);
            net.add_resistor("rg" + std::to_string(k), n[k], ground, rg[k]);
            prev = n[k];
        }
        System sys(net, 1.0);
        auto s = sys.initial_state();
        sys.step(s, no_inputs);

        // Oracle: backward ladder reduction.
        double zin[3]; // impedance to ground seen at node k
        zin[2] = rg[2];
        zin[1] = rg[1] * (rs[2] + zin[2]) / (rg[1] + rs[2] + zin[2]);
        zin[0] = rg[0] * (rs[1] + zin[1]) / (rg[0] + rs[1] + zin[1]);
        const double v1 = v * zin[0] / (rs[0] + zin[0]);
        const double v2 = v1 * zin[1] / (rs[1] + zin[1]);
        const double v3 = v2 * zin[2] / (rs[2] + zin[2]);
        CHECK(s.node_voltages[1] == Approx(v).margin(1e-12));
        CHECK(s.node_voltages[2] == Approx(v1).epsilon(1e-10));
        CHECK(s.node_voltages[3] == Approx(v2).epsilon(1e-10));
        CHECK(s.node_voltages[4] == Approx(v3).epsilon(1e-10));
    }
}

TEST_CASE("capacitor-only node has no DC path", "[eln]") {
    Netlist net;
    const auto a = net.add_node("a");
    const auto b = net.add_node("b");
    net.add_voltage_source("V", a, ground, 1.0);
    net.add_resistor("R", a, ground, 1e3);
    net.add_capacitor("C", a, b, 1e-6);
    CHECK_THROWS_AS(System(net, 1e-6), SingularSystem);
}

TEST_CASE("netlist validation", "[eln]") {
    Netlist net;
    const auto a = net.add_node("a");
    CHECK_THROWS_AS(net.add_resistor("R", a, ground, 0.0), ModelError);
    CHECK_THROWS_AS(net.add_capacitor("C", a, ground, -1.0), ModelError);
    CHECK_THROWS_AS(net.add_inductor("L", a, NodeId{7}, 1.0), ModelError);
    CHECK_THROWS_AS(net.add_node("a"), ModelError);
    CHECK(net.capacitor_count() == 0);
    CHECK(net.inductor_count() == 0);
    net.add_resistor("R", a, ground, 1.0);
    CHECK_THROWS_AS(net.add_resistor("R", a, ground, 1.0), ModelError);
    CHECK_THROWS_AS(System(net, 0.0), ModelError);
}

TEST_CASE("RC charging follows 1 - exp(-t/RC)", "[eln]") {
    Netlist net;
    const auto in = net.add_node("in");
    const auto out = net.add_node("out");
    net.add_voltage_source("V", in, ground, 1.0);
    net.add_resistor("R", in, out, 1e3);
    net.add_capacitor("C", out, ground, 1e-6);
    const auto vm = net.add_voltage_sink("vc", out, ground);
    System sys(net, 1e-6);
    auto s = sys.initial_state();
    sys.initialize(s, no_inputs);
    double v = 0.0;
    for (int k = 0; k < 1000; ++k) {
        v = sys.step(s, no_inputs)[vm.index];
    }
    CHECK(s.time == Approx(1e-3));
    CHECK(v == Approx(1.0 - std::exp(-1.0)).margin(1e-3));
}

TEST_CASE("lossless LC conserves energy with the trapezoidal rule", "[eln]") {
    const double l = 1e-3, c = 1e-6;
    Netlist net;
    const auto a = net.add_node("a");
    net.add_capacitor("C", a, ground, c, 1.0);
    net.add_inductor("L", a, ground, l);
    System sys(net, 1e-6);
    auto s = sys.initial_state();
    sys.initialize(s, no_inputs);
    const double e0 = 0.5 * c;
    double worst = 0.0, peak = 0.0;
    for (int k = 0; k < 10000; ++k) {
        sys.step(s, no_inputs);
        const double v = s.capacitor_voltages[0], i = s.inductor_currents[0];
        worst = std::max(worst, std::abs(0.5 * c * v * v + 0.5 * l * i * i - e0) / e0);
        peak = std::max(peak, std::abs(v));
    }
    CHECK(worst < 1e-3);
    CHECK(peak == Approx(1.0).epsilon(1e-3));
}

TEST_CASE("backward Euler damps the same LC", "[eln]") {
    Netlist net;
    const auto a = net.add_node("a");
    net.add_capacitor("C", a, ground, 1e-6, 1.0);
    net.add_inductor("L", a, ground, 1e-3);
    System sys(net, 1e-6, Integrator::BackwardEuler);
    auto s = sys.initial_state();
    sys.initialize(s, no_inputs);
    for (int k = 0; k < 10000; ++k) {
        sys.step(s, no_inputs);
    }
    const double e = 0.5e-6 * s.capacitor_voltages[0] * s.capacitor_voltages[0] +
                     0.5e-3 * s.inductor_currents[0] * s.inductor_currents[0];
    CHECK(e < 0.5 * 0.5e-6);
}

TEST_CASE("KCL holds at every node of a mixed network", "[eln][property]") {
    Netlist ok;
    const auto a2 = ok.add_node("a");
    const auto b2 = ok.add_node("b");
    const auto c2 = ok.add_node("c");
    const auto d2 = ok.add_node("d");
    const auto e2 = ok.add_node("e");
    ok.add_voltage_source("V", a2, ground, [](double t) { return 10.0 * std::sin(2e3 * t); });
    ok.add_resistor("R1", a2, b2, 3.3);
    ok.add_inductor("L1", b2, c2, 2e-3);
    ok.add_capacitor("C1", c2, ground, 4.7e-6);
    ok.add_resistor("R2", c2, d2, 12.0);
    ok.add_capacitor("C2", d2, ground, 1e-6);
    ok.add_current_source("I1", ground, d2, [](double t) { return 0.2 * std::cos(5e3 * t); });
    ok.add_controlled_current_source("Iu", d2, b2);
    ok.add_controlled_voltage_source("Vu", e2, ground);
    ok.add_resistor("R3", e2, b2, 50.0);
    ok.add_current_sink("am", b2, ground);
    ok.add_resistor("R4", d2, ground, 1e3);
    ok.add_voltage_sink("vm", d2, b2);

    System sys(ok, 5e-6);
    auto s = sys.initial_state();
    std::vector<double> in{0.0, 0.0};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> drive(-1.0, 1.0);
    sys.initialize(s, in);
    for (int k = 0; k < 2000; ++k) {
        in = {0.5 * drive(rng), 5.0 * drive(rng)};
        sys.step(s, in);
        double scale = 0.0;
        for (std::size_t j = 0; j < ok.elements().size(); ++j) {
            scale = std::max(scale, std::abs(sys.element_current(s, j, in)));
        }
        for (double r : kcl_residuals(sys, s, in)) {
            REQUIRE(std::abs(r) < 1e-9 * scale);
        }
    }
}

TEST_CASE("EMT circuit topology and time constants", "[eln]") {
    const auto c = build_emt_circuit({});
    CHECK(c.netlist.capacitor_count() == 2);
    CHECK(c.netlist.inductor_count() == 1);
    CHECK(c.netlist.input_count() == 1);
    CHECK(c.netlist.sink_count() == 1);
    System sys(c.netlist, 50e-6);
    CHECK(sys.unknowns() == 4); // three nodes + source branch

    const auto tc = compute_time_constants({});
    CHECK(tc.omega0 == Approx(5440.0).epsilon(0.005));
    CHECK(tc.period == Approx(1.15e-3).epsilon(0.01));
    CHECK(tc.tau == Approx(3.35e-7).epsilon(0.02));
    const auto r01 = compute_time_constants({0.1, 5.12e-6, 10.24e-6, 2.2e-3});
    CHECK(r01.tau == Approx(3.41e-7).epsilon(0.005));
    const auto sym = compute_time_constants({1.0, 4e-6, 4e-6, 1e-3});
    CHECK(sym.tau == Approx(2e-6).epsilon(1e-12));
    CHECK_THROWS_AS(compute_time_constants({0.0, 1e-6, 1e-6, 1e-3}), ModelError);
}

TEST_CASE("EMT waveform converges under refinement", "[eln][property]") {
    const double t_end = 4e-3;
    const double h = 4e-6;
    const auto ref = run_emt_trace(h / 16.0, t_end);
    auto max_dev = [&](double dt) {
        const auto tr = run_emt_trace(dt, t_end);
        const auto stride = static_cast<std::size_t>(std::llround(dt / (h / 16.0)));
        double worst = 0.0;
        for (std::size_t k = 0; k < tr.size(); ++k) {
            worst = std::max(worst, std::abs(tr[k] - ref[k * stride]));
        }
        return worst;
    };
    const double e1 = max_dev(2.0 * h);
    const double e2 = max_dev(h);
    INFO("coarse " << e1 << " fine " << e2);
    CHECK(e1 / e2 >= 2.0);
}

TEST_CASE("consistent start of the EMT circuit", "[eln]") {
    // At t0 both banks are empty, so the voltmeter must read exactly 0.
    const auto tr = run_emt_trace(50e-6, 1e-3);
    CHECK(tr.front() == 0.0);
    for (double v : tr) {
        REQUIRE(std::isfinite(v));
    }
}

// --- three-phase components ----------------------------------------------------------

using namespace cpsim::power;

TEST_CASE("grid source samples", "[power]") {
    const GridSourceParams p;
    const double vpk = 480.0 * std::sqrt(2.0) / std::sqrt(3.0);
    const auto f0 = grid_source_sample(p, 0.0);
    CHECK(f0.a == Approx(391.92).margin(0.01));
    CHECK(f0.b == Approx(-0.5 * vpk).epsilon(1e-12));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> t(0.0, 10.0);
    for (int k = 0; k < 200; ++k) {
        const auto f = grid_source_sample(p, t(rng));
        REQUIRE(std::abs(f.a + f.b + f.c) < 1e-9 * vpk);
    }
    const auto f1 = grid_source_sample(p, 1.0 / 60.0);
    CHECK(std::abs(f1.a - f0.a) < 1e-9);
    CHECK(std::abs(f1.b - f0.b) < 1e-9);
    CHECK(std::abs(f1.c - f0.c) < 1e-9);
    CHECK_THROWS_AS(validate(GridSourceParams{-1.0}), ModelError);
}

TEST_CASE("transmission line fragment", "[power]") {
    Netlist net;
    const auto in = add_nodes(net, "src");
    const auto line = add_transmission_line(net, LineParams{}, "line", in);
    CHECK(net.count(ElementKind::Resistor) == 6);
    CHECK(net.count(ElementKind::Inductor) == 3);
    CHECK(net.count(ElementKind::Capacitor) == 3);
    CHECK(net.element("line_rs_a").value == 0.01);
    CHECK(net.element("line_ls_b").value == 1e-4);
    CHECK(net.element("line_rsh_c").value == 0.15);
    CHECK(net.element("line_csh_a").value == 80e-6);
    CHECK(line.output[0].index != in[0].index);
    CHECK_THROWS_AS(add_transmission_line(net, LineParams{0.0, 1, 1, 1}, "bad", in), ModelError);
}

TEST_CASE("line at DC reduces to the shunt divider", "[power]") {
    Netlist net;
    const auto in = add_nodes(net, "src");
    for (std::size_t k = 0; k < 3; ++k) {
        net.add_voltage_source(std::string("v") + phase_names[k], in[k], ground, 1.0);
    }
    const auto line = add_transmission_line(net, LineParams{}, "line", in);
    const auto vm = net.add_voltage_sink("vo", line.output[1], ground);
    System sys(net, 1e-5);
    auto s = sys.initial_state();
    sys.initialize(s, no_inputs);
    double v = 0.0;
    for (int k = 0; k < 20000; ++k) {
        v = sys.step(s, no_inputs)[vm.index];
    }
    CHECK(v == Approx(0.15 / (0.15 + 0.01)).epsilon(1e-9));
}

TEST_CASE("vanishing line passes the input through", "[power]") {
    Netlist net;
    const GridSourceParams gp;
    const auto src = add_grid_source(net, gp, "grid");
    const auto line = add_transmission_line(net, LineParams{1e-9, 1e-12, 1e6, 1e-15}, "line", src);
    const auto m = add_vi_measurement(net, "out", line.output);
    add_resistive_load(net, 1e3, "load", m.to);
    // L/R of the vanished line is ~1e-15 s; the trapezoidal rule would ring on it.
    System sys(net, 50e-6, Integrator::BackwardEuler);
    auto s = sys.initial_state();
    sys.initialize(s, no_inputs);
    double worst = 0.0;
    for (int k = 0; k < 2000; ++k) {
        const auto r = vi_measurement(m, sys.step(s, no_inputs), s.time);
        const auto g = grid_source_sample(gp, s.time);
        worst = std::max({worst, std::abs(r.v.a - g.a), std::abs(r.v.b - g.b), std::abs(r.v.c - g.c)});
    }
    CHECK(worst < 1e-6 * peak_phase_voltage(gp));
}

TEST_CASE("injector with zero command is a passive R||C", "[power]") {
    Netlist net;
    const auto feed = add_nodes(net, "feed");
    const auto bus = add_nodes(net, "bus");
    for (std::size_t k = 0; k < 3; ++k) {
        net.add_voltage_source(std::string("v") + phase_names[k], feed[k], ground, 2.0);
        net.add_resistor(std::string("rf") + phase_names[k], feed[k], bus[k], 1.0);
    }
    const auto inj = add_controlled_injector(net, SnubberParams{}, "inv", bus);
    CHECK(net.count(ElementKind::ControlledCurrentSource) == 3);
    CHECK(net.element("inv_rp_a").value == 1e4);
    CHECK(net.element("inv_cs_c").value == 10e-6);
    System sys(net, 1e-6);
    auto s = sys.initial_state();
    const std::vector<double> zero(3, 0.0);
    sys.initialize(s, zero);
    // charging through 1 ohm into 10 uF: tau = 10 us
    std::vector<double> v;
    for (int k = 0; k < 200; ++k) {
        sys.step(s, zero);
        v.push_back(s.node_voltages[static_cast<std::size_t>(bus[0].index)]);
    }
    const double r_th = 1.0 * 1e4 / (1.0 + 1e4);
    const double v_inf = 2.0 * 1e4 / (1.0 + 1e4);
    CHECK(v[9] == Approx(v_inf * (1.0 - std::exp(-10e-6 / (r_th * 10e-6)))).epsilon(1e-3));
    CHECK(v.back() == Approx(v_inf).epsilon(1e-6));
    CHECK(inj.inputs[0].index == 0);
}

TEST_CASE("injected DC current ends up in the load", "[power]") {
    Netlist net;
    const auto term = add_nodes(net, "term");
    const auto inj = add_controlled_injector(net, SnubberParams{}, "inv", term);
    const auto m = add_vi_measurement(net, "meas", term);
    add_resistive_load(net, 10.0, "load", m.to);
    System sys(net, 1e-5);
    auto s = sys.initial_state();
    const std::vector<double> cmd{1.0, -0.5, -0.5};
    sys.initialize(s, cmd);
    ViReading r;
    for (int k = 0; k < 2000; ++k) {
        r = vi_measurement(m, sys.step(s, cmd), s.time);
    }
    const double share = 1e4 / (1e4 + 10.0);
    CHECK(r.i.a == Approx(1.0 * share).epsilon(1e-9));
    CHECK(r.i.b == Approx(-0.5 * share).epsilon(1e-9));
    CHECK(r.v.a == Approx(10.0 * share).epsilon(1e-9));
    CHECK(inj.inputs[2].index == 2);
}

TEST_CASE("VI measurement of a source into a resistive load", "[power]") {
    Netlist net;
    const GridSourceParams gp;
    const auto src = add_grid_source(net, gp, "grid");
    const auto m = add_vi_measurement(net, "meas", src);
    add_resistive_load(net, 1000.0, "load", m.to);
    const double dt = 1.0 / (60.0 * 400.0);
    System sys(net, dt);
    auto s = sys.initial_state();
    sys.initialize(s, no_inputs);
    double ipk = 0.0, pmin = 1e300, pmax = -1e300, qmax = 0.0, vdev = 0.0;
    for (int k = 0; k < 800; ++k) {
        const auto r = vi_measurement(m, sys.step(s, no_inputs), s.time);
        const auto g = grid_source_sample(gp, s.time);
        vdev = std::max({vdev, std::abs(r.v.a - g.a), std::abs(r.v.b - g.b), std::abs(r.v.c - g.c)});
        ipk = std::max(ipk, std::abs(r.i.a));
        const auto pq = control::instantaneous_pq(r.v, r.i);
        pmin = std::min(pmin, pq.p);
        pmax = std::max(pmax, pq.p);
        qmax = std::max(qmax, std::abs(pq.q));
    }
    CHECK(vdev == 0.0);
    CHECK(ipk == Approx(0.3919).margin(1e-4));
    const double p_expect = 1.5 * 391.9183588453085 * 391.9183588453085 / 1000.0;
    CHECK(pmin == Approx(p_expect).epsilon(1e-3));
    CHECK((pmax - pmin) < 1e-3 * p_expect);
    CHECK(qmax < 1e-3 * p_expect);
}

TEST_CASE("power balance across the line", "[power][property]") {
    Netlist net;
    const GridSourceParams gp;
    const LineParams lp;
    const auto src = add_grid_source(net, gp, "grid");
    const auto m = add_vi_measurement(net, "meas", src);
    const auto line = add_transmission_line(net, lp, "line", m.to);
    add_resistive_load(net, 1000.0, "load", line.output);
    std::array<SinkId, 3> vo;
    for (std::size_t k = 0; k < 3; ++k) {
        vo[k] = net.add_voltage_sink(std::string("recv_v") + phase_names[k], line.output[k], ground);
    }
    const double dt = 1.0 / (60.0 * 400.0);
    System sys(net, dt);
    auto s = sys.initial_state();
    sys.initialize(s, no_inputs);
    for (int k = 0; k < 400 * 30; ++k) {
        sys.step(s, no_inputs);
    }
    double p_src = 0.0, p_loss = 0.0;
    for (int k = 0; k < 400; ++k) {
        const auto sinks = sys.step(s, no_inputs);
        const auto in = vi_measurement(m, sinks, s.time);
        p_src += control::instantaneous_pq(in.v, in.i).p;
        const double vr[3] = {sinks[vo[0].index], sinks[vo[1].index], sinks[vo[2].index]};
        const double il[3] = {in.i.a, in.i.b, in.i.c};
        for (int ph = 0; ph < 3; ++ph) {
            p_loss += il[ph] * il[ph] * lp.r_series + vr[ph] * vr[ph] / lp.r_shunt + vr[ph] * vr[ph] / 1000.0;
        }
    }
    CHECK(p_loss / 400.0 == Approx(p_src / 400.0).epsilon(5e-3));
}
