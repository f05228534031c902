#pragma once

#include <map>
#include <string>
#include <vector>

#include "gatesim/chip.hpp"
#include "gatesim/schedule.hpp"

namespace gatesim {

struct TransportParams {
    double velocity = 0.0;          // u, mean axial velocity, m/s
    double dispersion = 0.0;        // D_eff, m^2/s
    double mixer_timeconstant = 0.0;// tau_m, first-order residence-time spread, s
    double amplitude_scale = 1.0;   // maps phi to source concentration, (0, 1]

    void validate() const;
};

struct ConcentrationTrace {
    std::string point_id;
    double x = 0.0;   // axial position, m
    double dt = 0.0;  // s
    std::vector<double> samples; // concentration >= 0, arbitrary units
    std::vector<std::string> warnings;

    double time(size_t i) const { return double(i) * dt; }
    void validate() const;
};

// Taylor–Aris closure ------------------------------------------------------

struct DispersionEstimate {
    double d_eff = 0.0;   // m^2/s, >= molecular D
    double peclet = 0.0;  // on the hydraulic diameter
    double reynolds = 0.0;
    bool laminar = true;  // Re < 100
};

// kappa(aspect) for D_eff = D (1 + kappa Pe^2); aspect = min(w,h)/max(w,h).
// Tabulated engineering values anchored at the parallel-plate limit
// (kappa -> 1/840 with Pe on the hydraulic diameter 2h), linear interpolation.
double dispersion_kappa(double aspect);

DispersionEstimate taylor_dispersion(double u, const ChannelSegment& channel,
                                     double D, double kinematic_viscosity = 1.0e-6);

// Explicit-kappa form used by closed-form checks (e.g. circular duct 1/48).
double taylor_dispersion_kappa(double u, double hydraulic_diameter, double D,
                               double kappa);

// Analytic solver ----------------------------------------------------------

// Mixer-smoothed source: the piecewise-constant phi signal passed through a
// first-order kernel of time constant tau_m. Closed form, exact.
double smoothed_source(const std::vector<PhiStep>& source, double tau_m, double t);

// Exact superposition solution of c_t + u c_x = D c_xx on x > 0 with
// boundary signal smoothed_source(t): every step change in phi contributes a
// pair of complementary-error-function terms (constant-inlet and
// exponential-inlet solutions), evaluated in scaled form for stability.
ConcentrationTrace analytic_trace(const std::vector<PhiStep>& source,
                                  const TransportParams& params, double x,
                                  double dt, double horizon,
                                  const std::string& point_id = "");

// Unit-step boundary response at (x, t); exposed for tests.
double advection_dispersion_step(double x, double t, double u, double D);
// Response to boundary signal 1 - exp(-t/tau).
double advection_dispersion_smoothed_step(double x, double t, double u, double D,
                                          double tau);

// Finite-volume solver (independent of the analytic path) ------------------

struct GridSpec {
    double dx = 0.0;            // 0 -> auto from dispersion/velocity balance
    double dt_sim = 0.0;        // 0 -> auto from CFL + diffusion number
    double safety = 0.9;        // fraction of the stability limits
    double domain_sigmas = 6.0; // x_max = x + domain_sigmas * sqrt(D * horizon)
};

struct NumericalTraceResult {
    ConcentrationTrace trace;
    double mass_in = 0.0;       // time-integrated inflow flux
    double mass_out = 0.0;      // time-integrated outflow flux
    double mass_final = 0.0;    // in-domain mass at the horizon
    double mass_error_rel = 0.0;
};

NumericalTraceResult numerical_trace(const std::vector<PhiStep>& source,
                                     const TransportParams& params, double x,
                                     double dt, double horizon,
                                     const GridSpec& grid = {},
                                     const std::string& point_id = "");

// End-to-end simulation ----------------------------------------------------

struct TransportOverrides {
    double mixer_timeconstant = 1.0; // tau_m, s (calibrated)
    double dispersion_scale = 1.0;   // multiplies the Taylor–Aris D_eff
    double amplitude_scale = 1.0;
    double dt = 0.005;               // output sample interval, s
    double phi_min = 0.0;
};

struct SimulationDerived {
    double u_propagation = 0.0; // m/s, gating-ON carrier flow
    double d_eff = 0.0;         // m^2/s, after dispersion_scale
    double reynolds = 0.0;
    double phi_off = 0.0;       // boxcar height of the injection profile
    double mixer_delay = 0.0;   // advective residence time of the mixer, s
    std::map<std::string, double> point_positions; // effective axial x per point
};

struct SimulationResult {
    std::map<std::string, ConcentrationTrace> traces;
    SimulationDerived derived;
};

// injection_profile -> mean_velocity -> taylor_dispersion -> analytic_trace
// at every sampling point of the chip. Sampling-point positions are mapped to
// an effective axial coordinate u_prop * (advective travel time from the
// junction), which folds the fast mixer transit into the single-velocity
// 1-D model.
SimulationResult simulate(const GatingSchedule& schedule, const ChipNetwork& chip,
                          const TransportOverrides& overrides = {});

} // namespace gatesim
