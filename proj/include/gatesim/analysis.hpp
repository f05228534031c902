#pragma once

#include <string>
#include <vector>

#include "gatesim/transport.hpp"

namespace gatesim {

// Trace with samples min-max normalized into [0, 1] (the paper's NCIP).
struct NcipTrace {
    std::string point_id;
    double x = 0.0;
    double dt = 0.0;
    std::vector<double> samples;

    double time(size_t i) const { return double(i) * dt; }
};

NcipTrace normalize_ncip(const ConcentrationTrace& trace);

struct PulseMetrics {
    double peak_time = 0.0;
    double peak_value = 0.0;
    double baseline = 0.0;     // local baseline the half level refers to
    double left_half_t = 0.0;
    double right_half_t = 0.0;
    double width = 0.0;        // w_p = FWHM, s
    bool resolved = false;     // half crossings found on both sides
};

struct DetectorConfig {
    double min_prominence = 0.2; // NCIP units
    double min_separation = 0.1; // s
};

// Local maxima with prominence >= min_prominence and pairwise separation
// >= min_separation (higher peak wins, earlier peak on ties). Half-maximum
// crossings are linearly interpolated relative to the local baseline.
std::vector<PulseMetrics> detect_pulses(const NcipTrace& trace,
                                        const DetectorConfig& config = {});

struct TrainMetrics {
    std::vector<PulseMetrics> pulses;
    double mean_width = 0.0;                // over resolved pulses
    int n_resolved = 0;
    std::vector<double> inter_pulse;        // T_pm: consecutive peak spacings, s
    std::vector<double> isi_ratio;          // valley min / adjacent peak mean
    std::vector<bool> distinguishable;      // isi_ratio < threshold
};

TrainMetrics train_metrics(const std::vector<PulseMetrics>& pulses,
                           const NcipTrace& trace, double isi_threshold = 0.5);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    size_t n_points = 0;
    std::vector<double> residuals;
};

LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys);

// CSV ingestion (`t_s,intensity`): validates monotone time, resamples to a
// uniform grid when jitter exceeds 1%, clamps negative intensities to zero.
struct IngestResult {
    ConcentrationTrace trace;
    int clamped_negatives = 0;
    bool resampled = false;
};

IngestResult ingest_trace(const std::string& path);

} // namespace gatesim
