#pragma once

#include <cstdint>
#include <vector>

#include "gatesim/hydraulics.hpp"

namespace gatesim {

struct PulseTrainSpec {
    double gating_time = 0.1;        // T_g: injection (gating-OFF) window, s
    double inter_pulse = 8.0;        // T_pi: start-to-start spacing, s
    int n_pulses = 5;
    PressureAssignment p_on;         // classifies as GatingOn
    PressureAssignment p_off;        // classifies as GatingOff
    double equilibration = 5.0;      // hold in ON state before the first pulse, s
    double tail = 25.0;              // hold in ON state after the last pulse, s

    void validate() const;           // throws OverlappingPulses etc.
};

// The paper's operating point: dye reservoir held constant, gate reservoir
// pulsed down from its offset value to admit dye for T_g.
PulseTrainSpec default_train_spec();

struct ScheduleStep {
    double t = 0.0; // s
    PressureAssignment assignment;

    bool operator==(const ScheduleStep&) const = default;
};

struct GatingSchedule {
    std::vector<ScheduleStep> steps; // strictly increasing t, starts at 0 with ON
    double duration = 0.0;

    bool operator==(const GatingSchedule&) const = default;
    void validate() const;
};

struct SymbolSequence {
    std::vector<int> bits; // 0 / 1
    double slot = 8.0;     // s
};

GatingSchedule build_train(const PulseTrainSpec& spec);

// OOK front end: bit 1 in slot k opens the gate for T_g at k*slot.
GatingSchedule encode_symbols(const SymbolSequence& seq, const PulseTrainSpec& spec);

// Piecewise-constant dye-fraction boundary signal, one entry per schedule step.
struct PhiStep {
    double t = 0.0;
    double phi = 0.0;
};

std::vector<PhiStep> injection_profile(const GatingSchedule& schedule,
                                       const ChipNetwork& network,
                                       double phi_min = 0.0);

} // namespace gatesim
