#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gatesim/transport.hpp"

using namespace gatesim;

namespace {

TransportParams params(double u, double D, double tau, double amp = 1.0) {
    TransportParams p;
    p.velocity = u;
    p.dispersion = D;
    p.mixer_timeconstant = tau;
    p.amplitude_scale = amp;
    return p;
}

// Forward-Euler quadrature of tau y' + y = phi(t); independent of the
// closed-form evaluator.
double smoothing_ode_oracle(const std::vector<PhiStep>& src, double tau, double t) {
    const double dt = 1e-5;
    double y = 0.0;
    double time = 0.0;
    size_t k = 0;
    while (time < t) {
        const double step = std::min(dt, t - time);
        while (k + 1 < src.size() && src[k + 1].t <= time) ++k;
        const double phi = (src.empty() || time < src[0].t) ? 0.0 : src[k].phi;
        y += step * (phi - y) / tau;
        time += step;
    }
    return y;
}

} // namespace

TEST_CASE("circular-duct closure: D_eff = D (1 + Pe^2 / 48)") {
    const double u = 1e-3, d = 50e-6, D = 5e-10;
    const double pe = u * d / D;
    CHECK(taylor_dispersion_kappa(u, d, D, 1.0 / 48.0) ==
          doctest::Approx(D * (1.0 + pe * pe / 48.0)).epsilon(1e-14));
}

TEST_CASE("kappa table: anchors, monotonicity, interpolation") {
    CHECK(dispersion_kappa(0.0) == doctest::Approx(1.0 / 840.0));
    CHECK(dispersion_kappa(1.0) == doctest::Approx(0.0075));
    CHECK(dispersion_kappa(0.3) ==
          doctest::Approx(0.5 * (0.0022 + 0.0038)).epsilon(1e-12));
    double prev = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double k = dispersion_kappa(std::min(1.0, 0.05 * i));
        CHECK(k >= prev);
        prev = k;
    }
}

TEST_CASE("taylor_dispersion never falls below molecular diffusion") {
    ChannelSegment seg;
    seg.id = "s";
    seg.from_node = "a";
    seg.to_node = "b";
    seg.width = 200e-6;
    seg.height = 50e-6;
    seg.length = 1e-2;

    const auto zero = taylor_dispersion(0.0, seg, 5e-10);
    CHECK(zero.d_eff == doctest::Approx(5e-10));
    CHECK(zero.peclet == 0.0);

    const auto est = taylor_dispersion(8e-3, seg, 5e-10);
    const double dh = 2.0 * seg.width * seg.height / (seg.width + seg.height);
    CHECK(est.peclet == doctest::Approx(8e-3 * dh / 5e-10));
    CHECK(est.d_eff ==
          doctest::Approx(5e-10 * (1.0 + dispersion_kappa(0.25) * est.peclet * est.peclet)));
    CHECK(est.d_eff > 5e-10);
    CHECK(est.laminar);
}

TEST_CASE("smoothed source matches an ODE quadrature oracle") {
    const std::vector<PhiStep> boxcar = {{0.0, 0.0}, {1.0, 0.8}, {1.3, 0.0}};
    const double tau = 0.45;
    for (double t : {0.5, 1.05, 1.25, 1.31, 2.0, 4.0}) {
        CHECK(smoothed_source(boxcar, tau, t) ==
              doctest::Approx(smoothing_ode_oracle(boxcar, tau, t)).epsilon(5e-4));
    }
    // single step from zero: exact 1 - exp(-t/tau)
    const std::vector<PhiStep> step = {{0.0, 1.0}};
    CHECK(smoothed_source(step, tau, 2.0) ==
          doctest::Approx(1.0 - std::exp(-2.0 / tau)).epsilon(1e-12));
    CHECK(smoothed_source(step, tau, -1.0) == 0.0);
}

TEST_CASE("unit-step response: limits and interior PDE residual") {
    const double u = 5e-3, D = 2e-4;

    // far past the front the response saturates at 1
    CHECK(advection_dispersion_step(1e-3, 500.0, u, D) == doctest::Approx(1.0).epsilon(1e-6));
    // ahead of the front at early times it is essentially 0
    CHECK(advection_dispersion_step(50e-3, 1e-3, u, D) == doctest::Approx(0.0).scale(1.0));
    // at the boundary it equals the boundary signal
    CHECK(advection_dispersion_step(0.0, 3.0, u, D) == doctest::Approx(1.0).epsilon(1e-12));

    // c_t + u c_x - D c_xx = 0 away from boundary and front, central differences
    const double x = 4e-3, t = 1.0;
    const double hx = 1e-6, ht = 1e-5;
    auto c = [&](double xx, double tt) { return advection_dispersion_step(xx, tt, u, D); };
    const double ct = (c(x, t + ht) - c(x, t - ht)) / (2.0 * ht);
    const double cx = (c(x + hx, t) - c(x - hx, t)) / (2.0 * hx);
    const double cxx = (c(x + hx, t) - 2.0 * c(x, t) + c(x - hx, t)) / (hx * hx);
    const double residual = ct + u * cx - D * cxx;
    const double scale = std::abs(ct) + std::abs(u * cx) + std::abs(D * cxx);
    CHECK(std::abs(residual) <= 1e-5 * scale);
}

TEST_CASE("step response stays in [0, 1] over a wide argument sweep") {
    const double u = 8e-3, D = 1e-4;
    for (double x = 1e-4; x <= 0.2; x *= 1.7) {
        for (double t = 1e-3; t <= 100.0; t *= 2.1) {
            const double v = advection_dispersion_step(x, t, u, D);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0 + 1e-12);
            CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("smoothed step matches a Duhamel quadrature oracle") {
    // c(x,t) = int_0^t cb(t-th) k(th) dth with the first-passage kernel
    // k(th) = x / (2 sqrt(pi D th^3)) exp(-(x - u th)^2 / (4 D th)) and the
    // boundary signal cb(t) = 1 - exp(-t/tau); independent of the erfc forms.
    auto oracle = [](double x, double t, double u, double D, double tau) {
        const double dth = 2e-5;
        double acc = 0.0;
        for (double th = 0.5 * dth; th < t; th += dth) {
            const double k = x / (2.0 * std::sqrt(std::acos(-1.0) * D * th * th * th)) *
                             std::exp(-(x - u * th) * (x - u * th) / (4.0 * D * th));
            acc += (1.0 - std::exp(-(t - th) / tau)) * k * dth;
        }
        return acc;
    };
    // oscillatory branch (4 D / (tau u^2) >> 1) and near-real branch
    for (double tau : {0.9, 25.0}) {
        for (double t : {0.1, 0.5, 2.0, 5.0}) {
            CHECK(advection_dispersion_smoothed_step(5e-3, t, 6e-3, 2.5e-4, tau) ==
                  doctest::Approx(oracle(5e-3, t, 6e-3, 2.5e-4, tau)).epsilon(2e-4));
        }
    }
    // strictly real branch: 4 lambda D < u^2
    CHECK(advection_dispersion_smoothed_step(2e-3, 3.0, 5e-3, 1e-6, 0.5) ==
          doctest::Approx(oracle(2e-3, 3.0, 5e-3, 1e-6, 0.5)).epsilon(2e-4));
}

TEST_CASE("smoothed step: boundary value and tau -> 0 limit") {
    const double u = 5e-3, D = 2e-4, tau = 0.8;
    CHECK(advection_dispersion_smoothed_step(0.0, 2.0, u, D, tau) ==
          doctest::Approx(1.0 - std::exp(-2.0 / tau)).epsilon(1e-9));
    // with a tiny tau the smoothed step collapses onto the sharp step
    CHECK(advection_dispersion_smoothed_step(3e-3, 1.5, u, D, 1e-6) ==
          doctest::Approx(advection_dispersion_step(3e-3, 1.5, u, D)).epsilon(1e-6));
    // smoothing can only lag the sharp step on the rise
    for (double t = 0.1; t < 5.0; t += 0.3) {
        CHECK(advection_dispersion_smoothed_step(3e-3, t, u, D, tau) <=
              advection_dispersion_step(3e-3, t, u, D) + 1e-12);
    }
}

TEST_CASE("analytic trace obeys superposition over boxcar decomposition") {
    const TransportParams p = params(5e-3, 2e-4, 0.7);
    const double x = 4e-3, dt = 0.01, horizon = 12.0;

    const std::vector<PhiStep> boxcar = {{0.0, 0.0}, {1.0, 0.6}, {1.4, 0.0}};
    const std::vector<PhiStep> up = {{0.0, 0.0}, {1.0, 0.6}};
    const std::vector<PhiStep> up_late = {{0.0, 0.0}, {1.4, 0.6}};

    const auto full = analytic_trace(boxcar, p, x, dt, horizon);
    const auto a = analytic_trace(up, p, x, dt, horizon);
    const auto b = analytic_trace(up_late, p, x, dt, horizon);
    REQUIRE(full.samples.size() == a.samples.size());
    double peak = *std::max_element(full.samples.begin(), full.samples.end());
    CHECK(peak > 0.0);
    for (size_t i = 0; i < full.samples.size(); ++i) {
        CHECK(full.samples[i] ==
              doctest::Approx(a.samples[i] - b.samples[i]).epsilon(1e-9).scale(peak));
        CHECK(full.samples[i] >= 0.0);
    }
}

TEST_CASE("amplitude scale multiplies the trace linearly") {
    const std::vector<PhiStep> boxcar = {{0.0, 0.0}, {0.5, 1.0}, {0.6, 0.0}};
    const auto one = analytic_trace(boxcar, params(5e-3, 2e-4, 0.7, 1.0), 3e-3, 0.01, 8.0);
    const auto half = analytic_trace(boxcar, params(5e-3, 2e-4, 0.7, 0.5), 3e-3, 0.01, 8.0);
    for (size_t i = 0; i < one.samples.size(); ++i) {
        CHECK(half.samples[i] == doctest::Approx(0.5 * one.samples[i]).epsilon(1e-12));
    }
}

TEST_CASE("horizon shorter than the advective arrival yields a warning") {
    const std::vector<PhiStep> boxcar = {{0.0, 0.0}, {0.1, 1.0}, {0.2, 0.0}};
    const auto trace = analytic_trace(boxcar, params(1e-3, 1e-5, 0.5), 10e-3, 0.01, 2.0);
    CHECK(!trace.warnings.empty());
    const auto ok = analytic_trace(boxcar, params(1e-3, 1e-5, 0.5), 10e-3, 0.01, 30.0);
    CHECK(ok.warnings.empty());
}

TEST_CASE("finite-volume solver agrees with the analytic solution") {
    const TransportParams p = params(6e-3, 2.5e-4, 0.9);
    const double x = 5e-3, dt = 0.01, horizon = 15.0;
    const std::vector<PhiStep> src = {{0.0, 0.0}, {2.0, 0.7}, {2.12, 0.0}};

    const auto exact = analytic_trace(src, p, x, dt, horizon);
    const auto fv = numerical_trace(src, p, x, dt, horizon);
    REQUIRE(fv.trace.samples.size() == exact.samples.size());

    const double peak = *std::max_element(exact.samples.begin(), exact.samples.end());
    REQUIRE(peak > 0.0);
    double linf = 0.0;
    for (size_t i = 0; i < exact.samples.size(); ++i) {
        linf = std::max(linf, std::abs(fv.trace.samples[i] - exact.samples[i]));
    }
    CHECK(linf / peak <= 0.01);
    CHECK(fv.mass_error_rel <= 1e-3);
}

TEST_CASE("finite-volume solver rejects under-resolved gating windows") {
    const TransportParams p = params(5e-3, 2e-4, 0.8);
    const std::vector<PhiStep> src = {{0.0, 0.0}, {1.0, 1.0}, {1.001, 0.0}};
    GridSpec grid;
    grid.dt_sim = 5e-4; // stable, but only 2 steps across the 1 ms window
    CHECK_THROWS_AS(numerical_trace(src, p, 4e-3, 0.01, 8.0, grid), UnderResolved);
}

TEST_CASE("end-to-end simulate: one trace per sampling point, ordered arrivals") {
    const ChipNetwork chip = build_default_chip();
    PulseTrainSpec spec = default_train_spec();
    spec.n_pulses = 1;
    spec.tail = 20.0;
    const GatingSchedule sched = build_train(spec);

    TransportOverrides ov;
    ov.dt = 0.01;
    const SimulationResult res = simulate(sched, chip, ov);

    REQUIRE(res.traces.size() == 3);
    CHECK(res.derived.u_propagation > 0.0);
    CHECK(res.derived.phi_off > 0.0);
    CHECK(res.derived.d_eff > chip.fluid.diffusivity);
    CHECK(res.derived.reynolds < 100.0);

    // p1 sits downstream of the mixer, so its effective x is positive
    CHECK(res.derived.point_positions.at("p1") > 0.0);
    CHECK(res.derived.point_positions.at("p2") >
          res.derived.point_positions.at("p1"));

    auto peak_time = [](const ConcentrationTrace& tr) {
        const auto it = std::max_element(tr.samples.begin(), tr.samples.end());
        return tr.time(size_t(it - tr.samples.begin()));
    };
    const double t1 = peak_time(res.traces.at("p1"));
    const double t2 = peak_time(res.traces.at("p2"));
    const double t3 = peak_time(res.traces.at("p3"));
    CHECK(t1 < t2);
    CHECK(t2 < t3);

    // successive peaks are delayed by roughly spacing / u
    const double spacing = 3e-3;
    CHECK(t2 - t1 ==
          doctest::Approx(spacing / res.derived.u_propagation).epsilon(0.15));
}

TEST_CASE("invalid transport parameters are rejected") {
    CHECK_THROWS_AS(params(-1.0, 1e-4, 0.5).validate(), ModelError);
    CHECK_THROWS_AS(params(1e-3, 0.0, 0.5).validate(), ModelError);
    CHECK_THROWS_AS(params(1e-3, 1e-4, -0.5).validate(), ModelError);
}
