#include <catch_amalgamated.hpp>

#include "cpsim/tdf.hpp"

#include <random>
#include <vector>

using namespace cpsim;
using namespace cpsim::tdf;

namespace {

ModuleSpec source(std::string name, int rate, std::vector<double>* sink = nullptr) {
    ModuleSpec m{std::move(name), {}, {{"out", rate}}, {}};
    m.process = [sink](Activation& a) {
        auto out = a.out(0);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = static_cast<double>(a.index() * out.size() + i + 1);
            if (sink) {
                sink->push_back(out[i]);
            }
        }
    };
    return m;
}

ModuleSpec consumer(std::string name, int rate, std::vector<double>* seen) {
    ModuleSpec m{std::move(name), {{"in", rate}}, {}, {}};
    m.process = [seen](Activation& a) {
        for (double v : a.in(0)) {
            seen->push_back(v);
        }
    };
    return m;
}

} // namespace

TEST_CASE("single module schedule", "[tdf]") {
    Cluster c(1e-3);
    const auto a = c.add({"A", {}, {}, {}});
    const auto s = build_schedule(c);
    REQUIRE(s.sequence == std::vector<ModuleId>{a});
    CHECK(s.hyperperiod == Catch::Approx(1e-3));
    CHECK(s.repetitions[a] == 1);
}

TEST_CASE("1:2 rate chain fires producer twice", "[tdf]") {
    Cluster c(1e-3);
    std::vector<double> seen;
    const auto a = c.add(source("A", 1));
    const auto b = c.add(consumer("B", 2, &seen));
    c.connect(a, "out", b, "in");
    const auto s = build_schedule(c);
    REQUIRE(s.sequence == std::vector<ModuleId>{a, a, b});
    CHECK(s.timesteps[a] == Catch::Approx(1e-3));
    CHECK(s.timesteps[b] == Catch::Approx(2e-3));

    Simulator sim(c);
    sim.step_hyperperiod();
    sim.step_hyperperiod();
    CHECK(seen == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("zero-delay cycle is an algebraic loop", "[tdf]") {
    Cluster c(1e-3);
    const auto a = c.add({"A", {{"in"}}, {{"out"}}, {}});
    const auto b = c.add({"B", {{"in"}}, {{"out"}}, {}});
    c.connect(a, "out", b, "in");
    c.connect(b, "out", a, "in");
    CHECK_THROWS_AS(build_schedule(c), AlgebraicLoop);

    Cluster ok(1e-3);
    const auto a2 = ok.add({"A", {{"in"}}, {{"out", 1, 1}}, {}});
    const auto b2 = ok.add({"B", {{"in"}}, {{"out"}}, {}});
    ok.connect(a2, "out", b2, "in");
    ok.connect(b2, "out", a2, "in");
    CHECK_NOTHROW(build_schedule(ok));
}

TEST_CASE("unbalanced rates", "[tdf]") {
    // A -> B at 1:1 and A -> B again at 2:1 cannot both balance.
    Cluster c(1e-3);
    const auto a = c.add({"A", {}, {{"x", 1}, {"y", 2}}, {}});
    const auto b = c.add({"B", {{"x", 1}, {"y", 1}}, {}, {}});
    c.connect(a, "x", b, "x");
    c.connect(a, "y", b, "y");
    CHECK_THROWS_AS(build_schedule(c), RateInconsistency);
}

TEST_CASE("input drivers must be unique", "[tdf]") {
    Cluster c(1e-3);
    const auto a = c.add(source("A", 1));
    const auto b = c.add({"B", {{"in"}}, {}, {}});
    (void)a;
    (void)b;
    CHECK_THROWS_AS(build_schedule(c), ModelError);
    c.connect(a, "out", b, "in");
    c.connect(a, "out", b, "in");
    CHECK_THROWS_AS(build_schedule(c), ModelError);
}

TEST_CASE("delay-1 self feedback shifts by one", "[tdf]") {
    Cluster c(1e-3);
    std::vector<double> fed;
    const std::vector<double> input{1, 2, 3};
    ModuleSpec m{"pass", {{"fb"}}, {{"out", 1, 1}}, {}};
    m.process = [&](Activation& a) {
        fed.push_back(a.read(0));
        a.write(0, input[a.index()]);
    };
    const auto id = c.add(m);
    c.connect(id, "out", id, "fb");
    Simulator sim(c);
    for (int k = 0; k < 3; ++k) {
        sim.step_hyperperiod();
    }
    CHECK(fed == std::vector<double>{0, 1, 2});
}

TEST_CASE("declared initial value fills the delay", "[tdf]") {
    Cluster c(1e-3);
    std::vector<double> seen;
    const auto a = c.add(source("A", 1));
    const auto b = c.add(consumer("B", 1, &seen));
    c.connect(a, "out", b, "in");
    auto& in = const_cast<PortSpec&>(c.modules()[b].inputs[0]);
    in.delay = 2;
    in.initial = -7.5;
    Simulator sim(c);
    sim.run_for(4e-3);
    CHECK(seen == std::vector<double>{-7.5, -7.5, 1, 2});
}

TEST_CASE("delay property: output is input shifted by d", "[tdf][property]") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> val(-1e3, 1e3);
    std::uniform_int_distribution<int> dly(0, 9);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = dly(rng);
        std::vector<double> u(40);
        for (auto& x : u) {
            x = val(rng);
        }
        Cluster c(1.0);
        std::vector<double> y;
        ModuleSpec src{"src", {}, {{"out", 1, d, 0.0}}, {}};
        src.process = [&](Activation& a) { a.write(0, u[a.index()]); };
        const auto s = c.add(src);
        const auto k = c.add(consumer("sink", 1, &y));
        c.connect(s, "out", k, "in");
        Simulator sim(c);
        for (std::size_t n = 0; n < u.size(); ++n) {
            sim.step_hyperperiod();
        }
        REQUIRE(y.size() == u.size());
        for (std::size_t n = 0; n < u.size(); ++n) {
            const double expect = n < static_cast<std::size_t>(d) ? 0.0 : u[n - static_cast<std::size_t>(d)];
            REQUIRE(y[n] == expect);
        }
    }
}

TEST_CASE("balance property: occupancy returns to initial delays", "[tdf][property]") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> rate(1, 6);
    std::uniform_int_distribution<int> dly(0, 4);
    for (int trial = 0; trial < 100; ++trial) {
        // chain of four modules with random rates plus a delayed back edge
        Cluster c(1e-3);
        std::vector<ModuleId> ids;
        for (int m = 0; m < 4; ++m) {
            ModuleSpec spec{"m" + std::to_string(m), {}, {}, {}};
            if (m > 0) {
                spec.inputs.push_back({"in", rate(rng), dly(rng)});
            }
            if (m < 3) {
                spec.outputs.push_back({"out", rate(rng), 0});
            }
            ids.push_back(c.add(spec));
        }
        for (int m = 0; m < 3; ++m) {
            c.connect(ids[m], "out", ids[m + 1], "in");
        }
        Schedule s;
        try {
            s = build_schedule(c);
        } catch (const AlgebraicLoop&) {
            continue;
        }
        Simulator sim(c, s);
        const auto before = sim.occupancy();
        for (int h = 0; h < 3; ++h) {
            sim.step_hyperperiod();
            REQUIRE(sim.occupancy() == before);
        }
        // balance equations: reps[src] * r_out == reps[dst] * r_in
        for (const auto& e : c.connections()) {
            const auto r_out = static_cast<std::uint64_t>(c.modules()[e.from.module].outputs[e.from.port].rate);
            const auto r_in = static_cast<std::uint64_t>(c.modules()[e.to.module].inputs[e.to.port].rate);
            REQUIRE(s.repetitions[e.from.module] * r_out == s.repetitions[e.to.module] * r_in);
        }
    }
}

TEST_CASE("schedule is deterministic and outputs are bitwise repeatable", "[tdf]") {
    auto run = [] {
        Cluster c(1e-3);
        std::vector<double> seen;
        const auto a = c.add(source("A", 3));
        const auto b = c.add(consumer("B", 2, &seen));
        c.connect(a, "out", b, "in");
        Simulator sim(c);
        sim.run_for(0.05);
        return std::make_pair(sim.schedule().sequence, seen);
    };
    const auto r1 = run();
    const auto r2 = run();
    CHECK(r1.first == r2.first);
    CHECK(r1.second == r2.second);
}

TEST_CASE("slow controller held over 20 fast plant steps", "[tdf]") {
    // controller every 1 ms, plant every 50 us
    Cluster c(50e-6);
    std::vector<double> plant_saw;
    ModuleSpec ctrl{"ctrl", {}, {{"u", 20}}, {}};
    ctrl.process = [](Activation& a) { a.hold(0, static_cast<double>(a.index() + 1)); };
    ModuleSpec plant{"plant", {{"u"}}, {}, {}};
    plant.process = [&](Activation& a) { plant_saw.push_back(a.read(0)); };
    const auto ci = c.add(ctrl);
    const auto pi = c.add(plant);
    c.connect(ci, "u", pi, "u");
    Simulator sim(c);
    CHECK(sim.schedule().repetitions[ci] == 1);
    CHECK(sim.schedule().repetitions[pi] == 20);
    CHECK(sim.schedule().timesteps[ci] == Catch::Approx(1e-3));
    sim.run_for(3e-3);
    REQUIRE(plant_saw.size() == 60);
    for (std::size_t k = 0; k < plant_saw.size(); ++k) {
        CHECK(plant_saw[k] == static_cast<double>(k / 20 + 1));
    }
}

TEST_CASE("fast to slow takes the newest sample", "[tdf]") {
    Cluster c(1.0);
    std::vector<double> latest;
    const auto a = c.add(source("fast", 1));
    ModuleSpec slow{"slow", {{"in", 5}}, {}, {}};
    slow.process = [&](Activation& act) { latest.push_back(act.latest(0)); };
    const auto b = c.add(slow);
    c.connect(a, "out", b, "in");
    Simulator sim(c);
    sim.run_for(10.0);
    CHECK(latest == std::vector<double>{5, 10});
}

TEST_CASE("processing failure names the module", "[tdf]") {
    Cluster c(1e-3);
    ModuleSpec bad{"exploder", {}, {}, {}};
    bad.process = [](Activation& a) {
        if (a.index() == 2) {
            throw std::runtime_error("boom");
        }
    };
    c.add(bad);
    Simulator sim(c);
    sim.step_hyperperiod();
    sim.step_hyperperiod();
    try {
        sim.step_hyperperiod();
        FAIL("expected abort");
    } catch (const SimulationAbort& ex) {
        CHECK(ex.where() == "exploder");
        CHECK(ex.time() == Catch::Approx(2e-3));
    }
}

TEST_CASE("port validation", "[tdf]") {
    Cluster c(1e-3);
    CHECK_THROWS_AS(c.add({"A", {{"in", 0}}, {}, {}}), ModelError);
    CHECK_THROWS_AS(c.add({"A", {{"in", 1, -1}}, {}, {}}), ModelError);
    CHECK_THROWS_AS(Cluster(0.0), ModelError);
    const auto a = c.add({"A", {}, {{"out"}}, {}});
    CHECK_THROWS_AS(c.out(a, "nope"), ModelError);
}
