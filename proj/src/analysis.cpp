#include "gatesim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace gatesim {

NcipTrace normalize_ncip(const ConcentrationTrace& trace) {
    trace.validate();
    NcipTrace out;
    out.point_id = trace.point_id;
    out.x = trace.x;
    out.dt = trace.dt;
    out.samples.resize(trace.samples.size());
    const auto [min_it, max_it] =
        std::minmax_element(trace.samples.begin(), trace.samples.end());
    const double lo = *min_it;
    const double range = *max_it - lo;
    if (range <= 0.0) {
        // zero dynamic range (all-zero or constant input) maps to all zeros
        std::fill(out.samples.begin(), out.samples.end(), 0.0);
        return out;
    }
    for (size_t i = 0; i < trace.samples.size(); ++i) {
        out.samples[i] = (trace.samples[i] - lo) / range;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Peak detection + FWHM
// ---------------------------------------------------------------------------

namespace {

struct Candidate {
    size_t idx = 0;
    double height = 0.0;
    double prominence = 0.0;
    size_t left_limit = 0;   // extent of the prominence walk
    size_t right_limit = 0;
    double base = 0.0;       // min value inside [left_limit, right_limit]
};

std::vector<size_t> local_maxima(const std::vector<double>& s) {
    std::vector<size_t> peaks;
    const size_t n = s.size();
    size_t i = 1;
    while (i + 1 < n) {
        if (s[i] > s[i - 1]) {
            size_t j = i;
            while (j + 1 < n && s[j + 1] == s[i]) ++j; // plateau
            if (j + 1 < n && s[j + 1] < s[i]) {
                peaks.push_back(i); // earlier edge of a plateau wins
                i = j + 1;
                continue;
            }
            i = j + 1;
            continue;
        }
        ++i;
    }
    return peaks;
}

Candidate measure_candidate(const std::vector<double>& s, size_t peak) {
    Candidate c;
    c.idx = peak;
    c.height = s[peak];

    double left_min = c.height;
    size_t j = peak;
    while (j > 0 && s[j - 1] <= c.height) {
        --j;
        left_min = std::min(left_min, s[j]);
    }
    c.left_limit = j;

    double right_min = c.height;
    size_t k = peak;
    while (k + 1 < s.size() && s[k + 1] <= c.height) {
        ++k;
        right_min = std::min(right_min, s[k]);
    }
    c.right_limit = k;

    c.prominence = c.height - std::max(left_min, right_min);
    c.base = std::min(left_min, right_min);
    return c;
}

} // namespace

std::vector<PulseMetrics> detect_pulses(const NcipTrace& trace,
                                        const DetectorConfig& config) {
    if (trace.samples.size() < 3 || !(trace.dt > 0.0)) return {};

    std::vector<Candidate> candidates;
    for (size_t idx : local_maxima(trace.samples)) {
        Candidate c = measure_candidate(trace.samples, idx);
        if (c.prominence >= config.min_prominence) candidates.push_back(c);
    }

    // separation filter: higher peak first, earlier on ties
    std::vector<size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (candidates[a].height != candidates[b].height) {
            return candidates[a].height > candidates[b].height;
        }
        return candidates[a].idx < candidates[b].idx;
    });
    std::vector<Candidate> kept;
    for (size_t oi : order) {
        const Candidate& c = candidates[oi];
        bool ok = true;
        for (const Candidate& k : kept) {
            if (std::abs(double(c.idx) - double(k.idx)) * trace.dt < config.min_separation) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end(),
              [](const Candidate& a, const Candidate& b) { return a.idx < b.idx; });

    const auto& s = trace.samples;
    std::vector<PulseMetrics> out;
    for (size_t m = 0; m < kept.size(); ++m) {
        const Candidate& c = kept[m];
        PulseMetrics pm;
        pm.peak_time = trace.time(c.idx);
        pm.peak_value = c.height;
        pm.baseline = c.base;
        const double half = c.base + 0.5 * (c.height - c.base);

        // the crossing search may not run into a neighboring pulse
        size_t left_bound = c.left_limit;
        if (m > 0) left_bound = std::max(left_bound, kept[m - 1].idx);
        size_t right_bound = c.right_limit;
        if (m + 1 < kept.size()) right_bound = std::min(right_bound, kept[m + 1].idx);

        bool left_found = false, right_found = false;
        for (size_t i = c.idx; i > left_bound; --i) {
            if (s[i - 1] < half) {
                pm.left_half_t =
                    trace.time(i) - trace.dt * (half - s[i]) / (s[i - 1] - s[i]);
                left_found = true;
                break;
            }
        }
        for (size_t i = c.idx; i < right_bound; ++i) {
            if (s[i + 1] < half) {
                pm.right_half_t =
                    trace.time(i) + trace.dt * (s[i] - half) / (s[i] - s[i + 1]);
                right_found = true;
                break;
            }
        }
        pm.resolved = left_found && right_found;
        if (pm.resolved) pm.width = pm.right_half_t - pm.left_half_t;
        out.push_back(pm);
    }
    return out;
}

TrainMetrics train_metrics(const std::vector<PulseMetrics>& pulses,
                           const NcipTrace& trace, double isi_threshold) {
    TrainMetrics tm;
    tm.pulses = pulses;
    double width_sum = 0.0;
    for (const auto& p : pulses) {
        if (p.resolved) {
            width_sum += p.width;
            ++tm.n_resolved;
        }
    }
    tm.mean_width = tm.n_resolved > 0 ? width_sum / tm.n_resolved : 0.0;
    if (pulses.size() < 2) return tm; // degenerate train: empty derived lists

    for (size_t k = 0; k + 1 < pulses.size(); ++k) {
        tm.inter_pulse.push_back(pulses[k + 1].peak_time - pulses[k].peak_time);
        const size_t a = static_cast<size_t>(std::llround(pulses[k].peak_time / trace.dt));
        const size_t b = static_cast<size_t>(std::llround(pulses[k + 1].peak_time / trace.dt));
        double valley = pulses[k].peak_value;
        for (size_t i = a; i <= b && i < trace.samples.size(); ++i) {
            valley = std::min(valley, trace.samples[i]);
        }
        const double peak_mean = 0.5 * (pulses[k].peak_value + pulses[k + 1].peak_value);
        const double ratio = peak_mean > 0.0 ? std::clamp(valley / peak_mean, 0.0, 1.0) : 0.0;
        tm.isi_ratio.push_back(ratio);
        tm.distinguishable.push_back(ratio < isi_threshold);
    }
    return tm;
}

// ---------------------------------------------------------------------------
// Ordinary least squares
// ---------------------------------------------------------------------------

LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw DegenerateFit("linear fit needs >= 2 paired points");
    }
    const double n = double(xs.size());
    const double mean_x = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
        sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
        syy += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    if (sxx <= 0.0) {
        throw DegenerateFit("all x values are equal");
    }
    LinearFit fit;
    fit.n_points = xs.size();
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    double ss_res = 0.0;
    fit.residuals.resize(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        fit.residuals[i] = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ss_res += fit.residuals[i] * fit.residuals[i];
    }
    fit.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0)
                       : (ss_res == 0.0 ? 1.0 : 0.0);
    return fit;
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

IngestResult ingest_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open trace file '" + path + "'");
    }
    std::vector<double> times, values;
    std::string line;
    int line_no = 0;
    IngestResult result;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        if (line_no == 1 && line.rfind("t_s", 0) == 0) continue; // header
        std::istringstream ss(line);
        std::string t_str, v_str;
        if (!std::getline(ss, t_str, ',') || !std::getline(ss, v_str)) {
            throw ParseError(path + ": malformed row at line " + std::to_string(line_no));
        }
        double t, v;
        try {
            size_t pos_t = 0, pos_v = 0;
            t = std::stod(t_str, &pos_t);
            v = std::stod(v_str, &pos_v);
        } catch (const std::exception&) {
            throw ParseError(path + ": malformed row at line " + std::to_string(line_no));
        }
        if (!times.empty() && t <= times.back()) {
            throw InvalidTrace(path + ": non-monotone time at line " + std::to_string(line_no));
        }
        if (v < 0.0) {
            v = 0.0;
            ++result.clamped_negatives;
        }
        times.push_back(t);
        values.push_back(v);
    }
    if (times.size() < 2) {
        throw InvalidTrace(path + ": trace needs at least two rows");
    }

    const double dt_mean = (times.back() - times.front()) / double(times.size() - 1);
    bool uniform = true;
    for (size_t i = 0; i + 1 < times.size(); ++i) {
        if (std::abs((times[i + 1] - times[i]) - dt_mean) > 0.01 * dt_mean) {
            uniform = false;
            break;
        }
    }

    result.trace.point_id = path;
    result.trace.dt = dt_mean;
    if (uniform) {
        result.trace.samples = values;
    } else {
        result.resampled = true;
        result.trace.samples.resize(times.size());
        size_t j = 0;
        for (size_t i = 0; i < times.size(); ++i) {
            const double t = times.front() + double(i) * dt_mean;
            while (j + 2 < times.size() && times[j + 1] < t) ++j;
            const double f = (t - times[j]) / (times[j + 1] - times[j]);
            result.trace.samples[i] =
                std::max(0.0, values[j] + std::clamp(f, 0.0, 1.0) * (values[j + 1] - values[j]));
        }
    }
    result.trace.validate();
    return result;
}

} // namespace gatesim
