#pragma once

#include <map>
#include <string>

#include "gatesim/chip.hpp"

namespace gatesim {

constexpr double kPaPerMbar = 100.0;

// Inlet boundary pressures in mbar; outlets are implicitly at 0 mbar.
struct PressureAssignment {
    std::map<std::string, double> pressures_mbar;

    bool operator==(const PressureAssignment&) const = default;
    void validate() const;
};

struct FlowSolution {
    std::map<std::string, double> node_pressures;   // Pa
    std::map<std::string, double> segment_flows;    // m^3/s, + from from_node to to_node
    double dye_injection_flow = 0.0;                // m^3/s into the junction

    double flow(const std::string& segment_id) const;
    double pressure(const std::string& node_id) const;
};

enum class Gating { On, Off };

struct GateState {
    Gating state = Gating::On;
    double dye_fraction = 0.0; // phi in [0, 1]
};

// Resistances for every segment of a network, keyed by segment id.
std::map<std::string, double> network_resistances(const ChipNetwork& network);

// Solves the Kirchhoff node system G p = b with a direct sparse factorization.
// Throws SingularNetwork when some interior node has no path to an outlet.
FlowSolution solve_flows(const ChipNetwork& network, const PressureAssignment& p);

// phi = max(0, Q_dye) / (total junction outflow); GatingOn iff phi <= phi_min.
GateState gate_state(const ChipNetwork& network, const PressureAssignment& p,
                     double phi_min = 0.0);
GateState gate_state_of(const ChipNetwork& network, const FlowSolution& flow,
                        double phi_min = 0.0);

// Mean axial velocity u = Q / (w h), signed along the segment orientation.
double mean_velocity(const ChipNetwork& network, const FlowSolution& flow,
                     const std::string& segment_id);

} // namespace gatesim
