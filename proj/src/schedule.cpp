#include "gatesim/schedule.hpp"

#include <cmath>

namespace gatesim {

void PulseTrainSpec::validate() const {
    if (!(gating_time > 0.0)) {
        throw ModelError("gating time T_g must be positive");
    }
    if (gating_time >= inter_pulse) {
        throw OverlappingPulses("T_g must be shorter than T_pi");
    }
    if (n_pulses < 1) {
        throw ModelError("pulse train needs at least one pulse");
    }
    if (equilibration < 0.0 || tail < 0.0) {
        throw ModelError("equilibration and tail holds must be non-negative");
    }
    p_on.validate();
    p_off.validate();
}

PulseTrainSpec default_train_spec() {
    PulseTrainSpec spec;
    spec.p_on.pressures_mbar = {{"inlet_dye", 100.0}, {"inlet_gate", 180.0}};
    spec.p_off.pressures_mbar = {{"inlet_dye", 100.0}, {"inlet_gate", 60.0}};
    return spec;
}

void GatingSchedule::validate() const {
    if (steps.empty()) {
        throw ModelError("schedule has no steps");
    }
    if (steps.front().t != 0.0) {
        throw ModelError("schedule must start at t = 0");
    }
    for (size_t i = 1; i < steps.size(); ++i) {
        if (!(steps[i].t > steps[i - 1].t)) {
            throw ModelError("schedule step times must be strictly increasing");
        }
    }
    if (!(duration >= steps.back().t)) {
        throw ModelError("schedule duration must cover the last step");
    }
}

GatingSchedule build_train(const PulseTrainSpec& spec) {
    spec.validate();
    GatingSchedule sched;
    sched.steps.push_back({0.0, spec.p_on});
    for (int k = 0; k < spec.n_pulses; ++k) {
        const double t_off = spec.equilibration + k * spec.inter_pulse;
        sched.steps.push_back({t_off, spec.p_off});
        sched.steps.push_back({t_off + spec.gating_time, spec.p_on});
    }
    sched.duration = spec.equilibration + (spec.n_pulses - 1) * spec.inter_pulse +
                     spec.gating_time + spec.tail;
    sched.validate();
    return sched;
}

GatingSchedule encode_symbols(const SymbolSequence& seq, const PulseTrainSpec& spec) {
    if (seq.bits.empty()) {
        throw EmptySequence("symbol sequence is empty");
    }
    if (seq.slot < spec.gating_time) {
        throw OverlappingPulses("symbol slot must be at least T_g");
    }
    spec.validate();
    GatingSchedule sched;
    sched.steps.push_back({0.0, spec.p_on});
    for (size_t k = 0; k < seq.bits.size(); ++k) {
        if (seq.bits[k] != 0 && seq.bits[k] != 1) {
            throw ModelError("symbol sequence must be binary");
        }
        if (seq.bits[k] == 0) continue;
        const double t_off = spec.equilibration + double(k) * seq.slot;
        sched.steps.push_back({t_off, spec.p_off});
        sched.steps.push_back({t_off + spec.gating_time, spec.p_on});
    }
    sched.duration = spec.equilibration + double(seq.bits.size() - 1) * seq.slot +
                     spec.gating_time + spec.tail;
    if (sched.duration < sched.steps.back().t) sched.duration = sched.steps.back().t;
    sched.validate();
    return sched;
}

std::vector<PhiStep> injection_profile(const GatingSchedule& schedule,
                                       const ChipNetwork& network,
                                       double phi_min) {
    schedule.validate();
    std::vector<PhiStep> profile;
    profile.reserve(schedule.steps.size());
    // identical assignments solve identically; cache by pressure map
    std::map<std::map<std::string, double>, double> cache;
    for (const auto& step : schedule.steps) {
        auto it = cache.find(step.assignment.pressures_mbar);
        double phi;
        if (it != cache.end()) {
            phi = it->second;
        } else {
            phi = gate_state(network, step.assignment, phi_min).dye_fraction;
            cache.emplace(step.assignment.pressures_mbar, phi);
        }
        profile.push_back({step.t, phi});
    }
    return profile;
}

} // namespace gatesim
