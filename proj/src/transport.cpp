#include "gatesim/transport.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <deque>
#include <limits>

namespace gatesim {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Scaled complementary error function erfcx(b) = exp(b^2) erfc(b), b >= 0.
// Direct evaluation is exact-in-double up to b ~ 12; beyond that the
// asymptotic expansion is already at machine precision.
double erfcx_pos(double b) {
    if (b <= 12.0) {
        return std::exp(b * b) * std::erfc(b);
    }
    const double inv2b2 = 1.0 / (2.0 * b * b);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 8; ++k) {
        term *= -(2.0 * k - 1.0) * inv2b2;
        sum += term;
    }
    return sum / (b * std::sqrt(kPi));
}

// exp(a) * erfc(b), stable for the large a, large b pairs produced by the
// advection-dispersion solutions. Callers guarantee a <= 0 whenever b < 0.
double exp_erfc(double a, double b) {
    if (b >= 0.0) {
        return std::exp(a - b * b) * erfcx_pos(b);
    }
    return 2.0 * std::exp(a) - std::exp(a - b * b) * erfcx_pos(-b);
}

// Scaled complementary error function for complex argument with Re z >= 0,
// needed by the oscillatory branch of the exponential-inlet solution.
//
// Moderate |z|: Weideman's rational approximation of the Faddeeva function
// w(zeta) = erfcx(-i zeta), uniformly accurate on the closed upper
// half-plane (J.A.C. Weideman, SIAM J. Numer. Anal. 31 (1994) 1497).
// Large |z|: asymptotic series, reflected across the origin near the
// imaginary axis where the series alone loses the e^{z^2} contribution.
struct WeidemanTable {
    static constexpr int N = 64;
    double L = 0.0;
    std::array<double, N> coeff{}; // descending powers for Horner evaluation

    WeidemanTable() {
        const int M = 2 * N, M2 = 2 * M;
        L = std::sqrt(N / std::sqrt(2.0));
        std::array<double, 4 * N> v{};
        for (int j = 1; j < M2; ++j) {
            const double theta = double(j - M) * kPi / M;
            const double t = L * std::tan(0.5 * theta);
            v[j] = std::exp(-t * t) * (L * L + t * t);
        }
        for (int m = 1; m <= N; ++m) {
            double re = 0.0;
            for (int i = 0; i < M2; ++i) {
                const double s = v[(i + M) % M2];
                re += s * std::cos(2.0 * kPi * double(i) * double(m) / M2);
            }
            coeff[N - m] = re / M2;
        }
    }
};

std::complex<double> faddeeva_w(std::complex<double> zeta) {
    static const WeidemanTable table;
    const std::complex<double> d = table.L - std::complex<double>(0.0, 1.0) * zeta;
    const std::complex<double> Z = (table.L + std::complex<double>(0.0, 1.0) * zeta) / d;
    std::complex<double> p = 0.0;
    for (int j = 0; j < WeidemanTable::N; ++j) p = p * Z + table.coeff[j];
    return 2.0 * p / (d * d) + (1.0 / std::sqrt(kPi)) / d;
}

std::complex<double> erfcx_asymptotic(std::complex<double> z) {
    const std::complex<double> inv2z2 = 0.5 / (z * z);
    std::complex<double> term = 1.0, sum = 1.0;
    for (int k = 1; k <= 14; ++k) {
        term *= -double(2 * k - 1) * inv2z2;
        sum += term;
    }
    return sum / (z * std::sqrt(kPi));
}

std::complex<double> erfcx_complex(std::complex<double> z) {
    // Re z >= 0 by construction of the callers
    if (std::norm(z) >= 144.0) {
        if (z.real() >= std::abs(z.imag())) {
            return erfcx_asymptotic(z);
        }
        // near the imaginary axis: erfcx(z) = 2 exp(z^2) - erfcx(-z), and -z
        // lies in the sector where the asymptotic series applies;
        // |exp(z^2)| <= 1 here since |Im z| >= Re z
        return 2.0 * std::exp(z * z) - erfcx_asymptotic(-z);
    }
    return faddeeva_w(std::complex<double>(0.0, 1.0) * z);
}

} // namespace

void TransportParams::validate() const {
    if (!(velocity > 0.0)) throw ModelError("transport velocity must be positive");
    if (!(dispersion > 0.0)) throw ModelError("dispersion coefficient must be positive");
    if (mixer_timeconstant < 0.0) throw ModelError("mixer time constant must be >= 0");
    if (!(amplitude_scale > 0.0) || amplitude_scale > 1.0) {
        throw ModelError("amplitude scale must lie in (0, 1]");
    }
}

void ConcentrationTrace::validate() const {
    if (samples.size() < 2) throw ModelError("trace needs at least two samples");
    if (!(dt > 0.0)) throw ModelError("trace sample interval must be positive");
    for (double v : samples) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ModelError("trace samples must be finite and non-negative");
        }
    }
}

// ---------------------------------------------------------------------------
// Taylor–Aris closure
// ---------------------------------------------------------------------------

double dispersion_kappa(double aspect) {
    if (aspect < 0.0 || aspect > 1.0) {
        throw ModelError("aspect ratio must lie in [0, 1]");
    }
    // alpha = min(w,h)/max(w,h); alpha -> 0 recovers the parallel-plate
    // coefficient 1/840 on the hydraulic diameter.
    static const double alphas[] = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    static const double kappas[] = {1.0 / 840.0, 0.0022, 0.0038,
                                    0.0055, 0.0067, 0.0075};
    for (int i = 0; i < 5; ++i) {
        if (aspect <= alphas[i + 1]) {
            const double f = (aspect - alphas[i]) / (alphas[i + 1] - alphas[i]);
            return kappas[i] + f * (kappas[i + 1] - kappas[i]);
        }
    }
    return kappas[5];
}

double taylor_dispersion_kappa(double u, double hydraulic_diameter, double D,
                               double kappa) {
    const double pe = u * hydraulic_diameter / D;
    return D * (1.0 + kappa * pe * pe);
}

DispersionEstimate taylor_dispersion(double u, const ChannelSegment& channel,
                                     double D, double kinematic_viscosity) {
    channel.validate();
    if (u < 0.0) u = -u;
    if (!(D > 0.0)) throw ModelError("molecular diffusivity must be positive");
    const double dh = 2.0 * channel.width * channel.height /
                      (channel.width + channel.height);
    const double aspect = std::min(channel.width, channel.height) /
                          std::max(channel.width, channel.height);
    DispersionEstimate est;
    est.peclet = u * dh / D;
    est.reynolds = u * dh / kinematic_viscosity;
    est.laminar = est.reynolds < 100.0;
    est.d_eff = taylor_dispersion_kappa(u, dh, D, dispersion_kappa(aspect));
    return est;
}

// ---------------------------------------------------------------------------
// Analytic solver
// ---------------------------------------------------------------------------

double smoothed_source(const std::vector<PhiStep>& source, double tau_m, double t) {
    if (source.empty() || t < source.front().t) return 0.0;
    if (tau_m <= 0.0) {
        double phi = 0.0;
        for (const auto& step : source) {
            if (step.t <= t) phi = step.phi;
        }
        return phi;
    }
    double m = 0.0;
    for (size_t i = 0; i < source.size(); ++i) {
        const double t_end = (i + 1 < source.size()) ? std::min(source[i + 1].t, t) : t;
        m = source[i].phi + (m - source[i].phi) * std::exp(-(t_end - source[i].t) / tau_m);
        if (i + 1 < source.size() && source[i + 1].t >= t) break;
    }
    return m;
}

double advection_dispersion_step(double x, double t, double u, double D) {
    if (t <= 0.0) return x <= 0.0 ? 1.0 : 0.0;
    const double s = 2.0 * std::sqrt(D * t);
    return 0.5 * (exp_erfc(0.0, (x - u * t) / s) +
                  exp_erfc(u * x / D, (x + u * t) / s));
}

double advection_dispersion_smoothed_step(double x, double t, double u, double D,
                                          double tau) {
    if (t <= 0.0) return 0.0;
    if (tau <= 0.0) return advection_dispersion_step(x, t, u, D);
    const double lambda = 1.0 / tau;
    const double s = 2.0 * std::sqrt(D * t);
    // boundary signal exp(-lambda t): van Genuchten/Alves closed form with
    // characteristic speed W = u sqrt(1 - 4 lambda D / u^2). For
    // 4 lambda D > u^2 the root is imaginary and the two erfc terms become a
    // conjugate pair; their sum reduces to the stable all-real expression
    // exp(-(x-ut)^2/(4Dt)) * Re erfcx((x - i omega t) / (2 sqrt(D t))).
    const double disc = u * u - 4.0 * lambda * D;
    double decaying;
    if (disc >= 0.0) {
        const double W = std::sqrt(disc);
        decaying = 0.5 * (exp_erfc(x * (u - W) / (2.0 * D) - lambda * t, (x - W * t) / s) +
                          exp_erfc(x * (u + W) / (2.0 * D) - lambda * t, (x + W * t) / s));
    } else {
        const double omega = std::sqrt(-disc);
        const std::complex<double> z(x / s, -omega * t / s);
        decaying = std::exp(-(x - u * t) * (x - u * t) / (4.0 * D * t)) *
                   erfcx_complex(z).real();
    }
    return advection_dispersion_step(x, t, u, D) - decaying;
}

ConcentrationTrace analytic_trace(const std::vector<PhiStep>& source,
                                  const TransportParams& params, double x,
                                  double dt, double horizon,
                                  const std::string& point_id) {
    params.validate();
    if (!(dt > 0.0) || !(horizon > dt)) {
        throw ModelError("analytic_trace: need dt > 0 and horizon > dt");
    }
    if (x < 0.0) throw ModelError("analytic_trace: x must be >= 0");

    ConcentrationTrace trace;
    trace.point_id = point_id;
    trace.x = x;
    trace.dt = dt;
    if (horizon < x / params.velocity) {
        trace.warnings.push_back("horizon ends before first arrival x/u");
    }

    // step decomposition of the piecewise-constant source
    struct Jump {
        double t;
        double dphi;
    };
    std::vector<Jump> jumps;
    double prev = 0.0;
    for (const auto& step : source) {
        const double d = step.phi - prev;
        if (d != 0.0) jumps.push_back({step.t, d});
        prev = step.phi;
    }

    const size_t n = static_cast<size_t>(std::floor(horizon / dt)) + 1;
    trace.samples.assign(n, 0.0);
    const double u = params.velocity;
    const double D = params.dispersion;
    const double tau = params.mixer_timeconstant;
    for (size_t i = 0; i < n; ++i) {
        const double t = double(i) * dt;
        double c = 0.0;
        for (const auto& j : jumps) {
            if (t <= j.t) break;
            c += j.dphi * advection_dispersion_smoothed_step(x, t - j.t, u, D, tau);
        }
        trace.samples[i] = std::max(0.0, params.amplitude_scale * c);
    }
    trace.validate();
    return trace;
}

// ---------------------------------------------------------------------------
// Finite-volume solver: first-order upwind advection, central diffusion,
// explicit Euler, Dirichlet inflow carrying the mixer-smoothed source.
// ---------------------------------------------------------------------------

NumericalTraceResult numerical_trace(const std::vector<PhiStep>& source,
                                     const TransportParams& params, double x,
                                     double dt, double horizon,
                                     const GridSpec& grid,
                                     const std::string& point_id) {
    params.validate();
    if (!(dt > 0.0) || !(horizon > dt)) {
        throw ModelError("numerical_trace: need dt > 0 and horizon > dt");
    }
    const double u = params.velocity;
    const double D = params.dispersion;
    const double tau = params.mixer_timeconstant;

    const double x_max = x + grid.domain_sigmas * std::sqrt(D * horizon);
    double dx = grid.dx;
    if (dx <= 0.0) {
        // keep the upwind numerical diffusion u dx / 2 below ~1% of D
        dx = std::min(0.02 * D / u, x_max / 64.0);
    }
    const size_t n_cells = std::max<size_t>(8, static_cast<size_t>(std::ceil(x_max / dx)));
    dx = x_max / double(n_cells);

    double dt_sim = grid.dt_sim;
    // combined explicit limit; the inflow face contributes an extra D/dx^2
    const double dt_limit = 1.0 / (u / dx + 3.0 * D / (dx * dx));
    if (dt_sim <= 0.0) {
        dt_sim = grid.safety * dt_limit;
    } else if (dt_sim > dt_limit) {
        throw ModelError("numerical_trace: requested dt violates CFL/diffusion limits");
    }

    // shortest OFF window must be resolved by at least 8 time steps
    double min_window = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < source.size(); ++i) {
        if (source[i].phi > 0.0) {
            min_window = std::min(min_window, source[i + 1].t - source[i].t);
        }
    }
    if (std::isfinite(min_window) && min_window / dt_sim < 8.0) {
        throw UnderResolved("fewer than 8 time steps per gating window");
    }

    std::vector<double> c(n_cells, 0.0);
    std::vector<double> c_new(n_cells, 0.0);

    NumericalTraceResult result;
    result.trace.point_id = point_id;
    result.trace.x = x;
    result.trace.dt = dt;
    const size_t n_out = static_cast<size_t>(std::floor(horizon / dt)) + 1;
    result.trace.samples.assign(n_out, 0.0);

    // observation by linear interpolation between the two bracketing cells
    const double xi = std::min(x / dx - 0.5, double(n_cells) - 1.0);
    const size_t i_lo = static_cast<size_t>(std::max(0.0, std::floor(xi)));
    const size_t i_hi = std::min(i_lo + 1, n_cells - 1);
    const double w_hi = std::clamp(xi - double(i_lo), 0.0, 1.0);
    auto observe = [&](const std::vector<double>& field) {
        return (1.0 - w_hi) * field[i_lo] + w_hi * field[i_hi];
    };

    size_t out_idx = 0;
    double t = 0.0;
    double prev_obs = observe(c);
    double prev_t = 0.0;
    if (out_idx < n_out) {
        result.trace.samples[out_idx++] = prev_obs;
    }

    const size_t n_steps = static_cast<size_t>(std::ceil(horizon / dt_sim));
    const double amp = params.amplitude_scale;
    for (size_t step = 0; step < n_steps; ++step) {
        const double cb = amp * smoothed_source(source, tau, t);
        // inflow face: advective flux u*cb, diffusive flux over the half cell
        const double flux_in = u * cb - D * (c[0] - cb) / (0.5 * dx);
        double flux_left = flux_in;
        for (size_t i = 0; i < n_cells; ++i) {
            double flux_right;
            if (i + 1 < n_cells) {
                flux_right = u * c[i] - D * (c[i + 1] - c[i]) / dx;
            } else {
                flux_right = u * c[i]; // advective outflow, no diffusive flux
            }
            c_new[i] = c[i] + dt_sim / dx * (flux_left - flux_right);
            flux_left = flux_right;
        }
        result.mass_in += dt_sim * flux_in;
        result.mass_out += dt_sim * u * c[n_cells - 1];
        c.swap(c_new);
        t += dt_sim;

        const double obs = observe(c);
        while (out_idx < n_out && double(out_idx) * dt <= t) {
            const double t_out = double(out_idx) * dt;
            const double f = (t_out - prev_t) / (t - prev_t);
            result.trace.samples[out_idx] = std::max(0.0, prev_obs + f * (obs - prev_obs));
            ++out_idx;
        }
        prev_obs = obs;
        prev_t = t;
    }
    while (out_idx < n_out) {
        result.trace.samples[out_idx++] = std::max(0.0, prev_obs);
    }

    for (double v : c) result.mass_final += v * dx;
    const double denom = std::max({std::abs(result.mass_in), result.mass_final, 1e-300});
    result.mass_error_rel =
        std::abs(result.mass_in - result.mass_out - result.mass_final) / denom;

    result.trace.validate();
    return result;
}

// ---------------------------------------------------------------------------
// End-to-end simulation
// ---------------------------------------------------------------------------

namespace {

// Advective travel time from the junction to (segment entrance + axial
// position), following the flow directions of `flow`.
double travel_time_to_point(const ChipNetwork& chip, const FlowSolution& flow,
                            const SamplePoint& sp) {
    const ChannelSegment* target = chip.find_segment(sp.segment_id);
    const std::string& start = chip.junction_node();

    // BFS over nodes; edge cost = residence time of the segment
    std::map<std::string, double> time_to;
    std::deque<std::string> frontier;
    time_to[start] = 0.0;
    frontier.push_back(start);
    while (!frontier.empty()) {
        const std::string cur = frontier.front();
        frontier.pop_front();
        for (const auto& seg : chip.segments) {
            if (seg.from_node != cur && seg.to_node != cur) continue;
            const std::string& other = (seg.from_node == cur) ? seg.to_node : seg.from_node;
            if (time_to.count(other)) continue;
            const double speed = std::abs(mean_velocity(chip, flow, seg.id));
            if (speed <= 0.0) continue;
            time_to[other] = time_to[cur] + seg.length / speed;
            frontier.push_back(other);
        }
    }
    auto it = time_to.find(target->from_node);
    if (it == time_to.end()) {
        throw ModelError("sample point '" + sp.point_id + "' is not reachable from the junction");
    }
    const double u_seg = std::abs(mean_velocity(chip, flow, target->id));
    if (u_seg <= 0.0) {
        throw ZeroFlow("no carrier flow through segment '" + target->id + "'");
    }
    return it->second + sp.axial_position / u_seg;
}

} // namespace

SimulationResult simulate(const GatingSchedule& schedule, const ChipNetwork& chip,
                          const TransportOverrides& overrides) {
    schedule.validate();
    chip.validate();
    if (chip.sample_points.empty()) {
        throw InvalidTopology("chip defines no sampling points");
    }

    const auto profile = injection_profile(schedule, chip, overrides.phi_min);

    // carrier flow: gating-ON state (the dominant dwell; inlet pressures are
    // chosen so the ON/OFF velocity difference stays small)
    const FlowSolution on_flow = solve_flows(chip, schedule.steps.front().assignment);

    SimulationResult result;
    for (const auto& step : profile) {
        result.derived.phi_off = std::max(result.derived.phi_off, step.phi);
    }

    for (const auto& sp : chip.sample_points) {
        const ChannelSegment* seg = chip.find_segment(sp.segment_id);
        const double u = std::abs(mean_velocity(chip, on_flow, seg->id));
        if (u <= 0.0) {
            throw ZeroFlow("no carrier flow through segment '" + seg->id + "'");
        }
        const auto est = taylor_dispersion(u, *seg, chip.fluid.diffusivity);
        TransportParams params;
        params.velocity = u;
        params.dispersion = est.d_eff * overrides.dispersion_scale;
        params.mixer_timeconstant = overrides.mixer_timeconstant;
        params.amplitude_scale = overrides.amplitude_scale;

        const double t_travel = travel_time_to_point(chip, on_flow, sp);
        const double x_eff = u * t_travel;

        result.traces[sp.point_id] = analytic_trace(
            profile, params, x_eff, overrides.dt, schedule.duration, sp.point_id);

        result.derived.u_propagation = u;
        result.derived.d_eff = params.dispersion;
        result.derived.reynolds = est.reynolds;
        result.derived.mixer_delay = t_travel - sp.axial_position / u;
        result.derived.point_positions[sp.point_id] = x_eff;
    }
    return result;
}

} // namespace gatesim
