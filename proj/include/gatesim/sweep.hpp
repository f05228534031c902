#pragma once

#include <map>
#include <string>
#include <vector>

#include "gatesim/analysis.hpp"
#include "gatesim/calibration.hpp"

namespace gatesim {

enum class SweepVariable { GatingTime, InterPulse };

struct SweepSpec {
    SweepVariable variable = SweepVariable::GatingTime;
    std::vector<double> values; // s, positive, ascending
    PulseTrainSpec base;        // carries the fixed parameter and pressures
    TransportOverrides overrides;
    std::vector<std::string> points; // empty -> all chip sampling points
    int jobs = 1;
};

std::vector<double> sweep_range(double from, double to, double step);

struct SweepCell {
    double value = 0.0;
    std::string point_id;
    double mean_width = 0.0;          // s, 0 when no pulse resolved
    double mean_inter_pulse = 0.0;    // mean T_pm, s
    double frac_distinguishable = 1.0;
    int n_pulses = 0;
    int n_resolved = 0;
    double mean_isi_ratio = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells; // sorted by (value, point_id)
    // per point: w_p vs T_g fit for gating sweeps, T_pm vs T_pi for spacing sweeps
    std::map<std::string, LinearFit> fits;
};

// Runs every (value, point) cell; cells are pure and may execute on up to
// `jobs` worker threads, output is independent of the schedule.
SweepResult run_sweep(const ChipNetwork& chip, const SweepSpec& spec);

} // namespace gatesim
