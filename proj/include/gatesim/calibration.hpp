#pragma once

#include <functional>
#include <vector>

#include "gatesim/analysis.hpp"
#include "gatesim/schedule.hpp"

namespace gatesim {

// Deterministic bounded Nelder–Mead ----------------------------------------

struct NelderMeadOptions {
    int max_iterations = 500;
    double tolerance = 1e-8; // simplex value spread
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
};

// Derivative-free simplex search with fixed, seedless initialization; bound
// violations are folded back into [lo, hi] by reflection.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, std::vector<double> steps,
                             std::vector<double> lo, std::vector<double> hi,
                             const NelderMeadOptions& options = {});

// Calibration against measured pulse widths --------------------------------

struct CalibrationTarget {
    double gating_time = 0.0; // T_g, s
    double width = 0.0;       // target mean w_p, s
};

struct CalibrationBounds {
    double tau_lo = 0.05, tau_hi = 20.0;
    double scale_lo = 0.01, scale_hi = 100.0;
};

struct CalibrationResult {
    double mixer_timeconstant = 0.0;
    double dispersion_scale = 1.0;
    double amplitude_scale = 1.0;
    double objective = 0.0; // RMS relative error on the target widths
    bool converged = false;
    int iterations = 0;
};

// Fits {tau_m, dispersion scale} so that simulated mean w_p at `point_id`
// matches the targets (RMS relative error). Deterministic; the result is
// reported even when the objective stays above the convergence threshold.
CalibrationResult calibrate(const std::vector<CalibrationTarget>& targets,
                            const ChipNetwork& chip, const PulseTrainSpec& base,
                            const CalibrationBounds& bounds = {},
                            const std::string& point_id = "p1",
                            const NelderMeadOptions& options = {});

// Simulated mean pulse width for one gating time (shared with the sweep path).
double simulated_mean_width(const ChipNetwork& chip, PulseTrainSpec spec,
                            double gating_time, const TransportOverrides& overrides,
                            const std::string& point_id);

} // namespace gatesim
