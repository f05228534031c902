#include "gatesim/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

namespace gatesim {

namespace {

// fold x back into [lo, hi] by reflection at the bounds
double reflect_into(double x, double lo, double hi) {
    const double span = hi - lo;
    if (span <= 0.0) return lo;
    double y = std::fmod(x - lo, 2.0 * span);
    if (y < 0.0) y += 2.0 * span;
    return lo + (y <= span ? y : 2.0 * span - y);
}

} // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, std::vector<double> steps,
                             std::vector<double> lo, std::vector<double> hi,
                             const NelderMeadOptions& options) {
    const size_t n = x0.size();
    if (steps.size() != n || lo.size() != n || hi.size() != n || n == 0) {
        throw ModelError("nelder_mead: inconsistent dimensions");
    }

    auto clamp_point = [&](std::vector<double>& p) {
        for (size_t i = 0; i < n; ++i) p[i] = reflect_into(p[i], lo[i], hi[i]);
    };

    std::vector<std::vector<double>> verts(n + 1, x0);
    for (size_t i = 0; i < n; ++i) verts[i + 1][i] += steps[i];
    for (auto& v : verts) clamp_point(v);
    std::vector<double> vals(n + 1);
    for (size_t i = 0; i <= n; ++i) vals[i] = f(verts[i]);

    constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        // order (stable: ties keep insertion order for determinism)
        std::vector<size_t> idx(n + 1);
        for (size_t i = 0; i <= n; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(),
                         [&](size_t a, size_t b) { return vals[a] < vals[b]; });
        std::vector<std::vector<double>> sv(n + 1);
        std::vector<double> sf(n + 1);
        for (size_t i = 0; i <= n; ++i) {
            sv[i] = verts[idx[i]];
            sf[i] = vals[idx[i]];
        }
        verts.swap(sv);
        vals.swap(sf);

        if (vals[n] - vals[0] < options.tolerance) break;

        std::vector<double> centroid(n, 0.0);
        for (size_t i = 0; i < n; ++i) {
            for (size_t d = 0; d < n; ++d) centroid[d] += verts[i][d];
        }
        for (double& c : centroid) c /= double(n);

        auto make_point = [&](double coeff) {
            std::vector<double> p(n);
            for (size_t d = 0; d < n; ++d) {
                p[d] = centroid[d] + coeff * (centroid[d] - verts[n][d]);
            }
            clamp_point(p);
            return p;
        };

        auto reflected = make_point(alpha);
        const double fr = f(reflected);
        if (fr < vals[0]) {
            auto expanded = make_point(gamma);
            const double fe = f(expanded);
            if (fe < fr) {
                verts[n] = expanded;
                vals[n] = fe;
            } else {
                verts[n] = reflected;
                vals[n] = fr;
            }
            continue;
        }
        if (fr < vals[n - 1]) {
            verts[n] = reflected;
            vals[n] = fr;
            continue;
        }
        auto contracted = make_point(-rho);
        const double fc = f(contracted);
        if (fc < vals[n]) {
            verts[n] = contracted;
            vals[n] = fc;
            continue;
        }
        for (size_t i = 1; i <= n; ++i) { // shrink toward best
            for (size_t d = 0; d < n; ++d) {
                verts[i][d] = verts[0][d] + sigma * (verts[i][d] - verts[0][d]);
            }
            clamp_point(verts[i]);
            vals[i] = f(verts[i]);
        }
    }

    size_t best = 0;
    for (size_t i = 1; i <= n; ++i) {
        if (vals[i] < vals[best]) best = i;
    }
    return {verts[best], vals[best], iter};
}

double simulated_mean_width(const ChipNetwork& chip, PulseTrainSpec spec,
                            double gating_time, const TransportOverrides& overrides,
                            const std::string& point_id) {
    spec.gating_time = gating_time;
    const auto schedule = build_train(spec);
    const auto sim = simulate(schedule, chip, overrides);
    auto it = sim.traces.find(point_id);
    if (it == sim.traces.end()) {
        throw ModelError("no trace for sampling point '" + point_id + "'");
    }
    const NcipTrace ncip = normalize_ncip(it->second);
    DetectorConfig det;
    det.min_separation = gating_time;
    const auto pulses = detect_pulses(ncip, det);
    const auto tm = train_metrics(pulses, ncip);
    if (tm.n_resolved == 0) return 0.0;
    return tm.mean_width;
}

CalibrationResult calibrate(const std::vector<CalibrationTarget>& targets,
                            const ChipNetwork& chip, const PulseTrainSpec& base,
                            const CalibrationBounds& bounds,
                            const std::string& point_id,
                            const NelderMeadOptions& options) {
    std::set<double> distinct;
    for (const auto& t : targets) {
        if (!(t.gating_time > 0.0) || !(t.width > 0.0)) {
            throw DegenerateTargets("calibration targets must be positive");
        }
        distinct.insert(t.gating_time);
    }
    if (distinct.size() < 2) {
        throw DegenerateTargets("calibration needs >= 2 distinct gating times");
    }

    auto objective = [&](const std::vector<double>& p) {
        TransportOverrides ov;
        ov.mixer_timeconstant = p[0];
        ov.dispersion_scale = p[1];
        double acc = 0.0;
        for (const auto& t : targets) {
            const double w = simulated_mean_width(chip, base, t.gating_time, ov, point_id);
            if (w <= 0.0) return 10.0; // no resolved pulse: reject this region
            const double rel = (w - t.width) / t.width;
            acc += rel * rel;
        }
        return std::sqrt(acc / double(targets.size()));
    };

    // The objective can be nearly flat along curves of equal mean width, so a
    // single simplex run may stall far from the optimum. Stage 1: geometric
    // scan over the dispersion scale with a golden-section search in tau
    // (width, hence the objective, is unimodal in tau at fixed scale).
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    auto best_tau_at = [&](double scale) {
        double a = bounds.tau_lo, b = bounds.tau_hi;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = objective({c, scale}), fd = objective({d, scale});
        const double stop = std::max(1e-3, 1e-2 * (bounds.tau_hi - bounds.tau_lo));
        while (b - a > stop) {
            if (fc < fd) {
                b = d; d = c; fd = fc;
                c = b - gr * (b - a);
                fc = objective({c, scale});
            } else {
                a = c; c = d; fc = fd;
                d = a + gr * (b - a);
                fd = objective({d, scale});
            }
        }
        return fc < fd ? std::pair{c, fc} : std::pair{d, fd};
    };

    constexpr int kScaleSamples = 8;
    double seed_tau = 0.5 * (bounds.tau_lo + bounds.tau_hi);
    double seed_scale = bounds.scale_lo;
    double seed_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kScaleSamples; ++i) {
        const double s = bounds.scale_lo *
                         std::pow(bounds.scale_hi / bounds.scale_lo,
                                  double(i) / double(kScaleSamples - 1));
        const auto [tau, val] = best_tau_at(s);
        if (val < seed_val) {
            seed_val = val;
            seed_tau = tau;
            seed_scale = s;
        }
    }

    // Stage 2: local simplex refinement of both parameters.
    const auto nm = nelder_mead(objective, {seed_tau, seed_scale},
                                {0.5, 0.5 * seed_scale},
                                {bounds.tau_lo, bounds.scale_lo},
                                {bounds.tau_hi, bounds.scale_hi}, options);

    CalibrationResult result;
    result.mixer_timeconstant = nm.x[0];
    result.dispersion_scale = nm.x[1];
    result.amplitude_scale = 1.0;
    result.objective = nm.value;
    result.iterations = nm.iterations;
    result.converged = nm.value <= 0.10;
    return result;
}

} // namespace gatesim
