// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cpsim/eln.hpp"
#include "cpsim/tdf.hpp"

#include <memory>
#include <string>
#include <vector>

namespace cpsim {

/// Network plus its evolving state, shared between the dataflow module that
/// advances it and whoever wants to inspect it afterwards.
struct ElnBlock {
    eln::System system;
    eln::ElnState state;

    explicit ElnBlock(eln::System sys) : system(std::move(sys)), state(system.initial_state()) {}
};

/// Dataflow module with one rate-1 input per controlled source and one rate-1
/// output per sink, named after the elements. Activation k produces the
/// network solution at t = k * dt: activation 0 performs the consistent
/// initialisation, later ones advance one step with the inputs of sample k.
inline tdf::ModuleSpec make_eln_module(std::string name, std::shared_ptr<ElnBlock> block) {
    tdf::ModuleSpec spec;
    spec.name = std::move(name);
    for (const auto& n : block->system.netlist().input_names()) {
        spec.inputs.push_back({n});
    }
    for (const auto& n : block->system.netlist().sink_names()) {
        spec.outputs.push_back({n});
    }
    auto inputs = std::make_shared<std::vector<double>>(spec.inputs.size(), 0.0);
    spec.process = [block, inputs](tdf::Activation& act) {
        for (std::size_t i = 0; i < inputs->size(); ++i) {
            (*inputs)[i] = act.read(i);
        }
        auto readings = act.index() == 0 ? block->system.initialize(block->state, *inputs)
                                         : block->system.step(block->state, *inputs);
        for (std::size_t i = 0; i < readings.size(); ++i) {
            act.write(i, readings[i]);
        }
    };
    return spec;
}

} // namespace cpsim
