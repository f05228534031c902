#pragma once

#include <string>
#include <vector>

#include "gatesim/errors.hpp"

namespace gatesim {

// All quantities are SI internally (m, Pa, s). The chip configuration file
// uses micrometers / mbar / mPa·s for human editing; conversion happens at
// the I/O boundary (see chip_config.hpp).

enum class SegmentKind { Straight, ZigZag };

enum class NodeRole { InletDye, InletGate, Junction, Outlet };

struct ChannelSegment {
    std::string id;
    SegmentKind kind = SegmentKind::Straight;
    double length = 0.0;      // unrolled path length, m
    double width = 0.0;       // m
    double height = 0.0;      // m
    double zigzag_step = 0.0; // step length s, m (ZigZag only)
    std::string from_node;
    std::string to_node;

    void validate() const;
};

// ZigZag constructor enforcing the s/w = 4 mixing-efficiency rule.
ChannelSegment make_zigzag(std::string id, double length, double width,
                           double height, std::string from, std::string to);

struct ChipNode {
    std::string id;
    NodeRole role = NodeRole::Junction;
};

struct SamplePoint {
    std::string point_id;
    std::string segment_id;
    double axial_position = 0.0; // m from segment entrance
};

struct FluidProperties {
    double viscosity = 1.0e-3;     // Pa·s (water, 20 C)
    double diffusivity = 5.0e-10;  // m^2/s (small-molecule dye)
};

struct ChipNetwork {
    std::vector<ChipNode> nodes;
    std::vector<ChannelSegment> segments;
    std::vector<SamplePoint> sample_points;
    FluidProperties fluid;

    const ChipNode* find_node(const std::string& id) const;
    const ChannelSegment* find_segment(const std::string& id) const;
    const ChipNode& inlet(NodeRole role) const;

    // The cross junction: the far endpoint of the dye feed segment.
    const std::string& junction_node() const;

    // Throws InvalidGeometry / InvalidTopology on violations.
    void validate() const;
};

struct SegmentResistance {
    std::string segment_id;
    double R = 0.0; // Pa·s/m^3
};

// Laminar resistance of a rectangular duct, exact series form.
// ZigZag segments are treated as straight ducts of their unrolled length
// (bend minor losses are negligible at the chip's Reynolds numbers).
SegmentResistance hydraulic_resistance(const ChannelSegment& segment,
                                       double viscosity);

// Single-term engineering approximation, valid for height <= width.
double hydraulic_resistance_approx(const ChannelSegment& segment,
                                   double viscosity);

// Default chip construction -------------------------------------------------

struct ChipConfig {
    // main channels (feeds + propagation)
    double main_width_um = 200.0;
    double main_height_um = 50.0;
    double feed_length_um = 5000.0;
    // zig-zag mixer; width defaults to 0.1x the main channel width and the
    // step to 4x the mixer width unless overridden
    double mixer_width_um = 20.0;
    double mixer_length_um = 4000.0;
    double mixer_step_um = 0.0;     // 0 -> 4 * mixer_width
    // propagation channel with the observation points
    double propagation_length_um = 12000.0;
    // sampling points p1..pN, axial positions from the propagation entrance
    double sample_start_um = 0.0;
    double sample_spacing_um = 3000.0;
    int sample_count = 3;
    // fluid
    double viscosity_mPas = 1.0;
    double diffusivity_m2s = 5.0e-10;
};

// Cross-shaped transmitter: dye and gate inlets meet at a junction; each of
// the two symmetric output arms carries an identical zig-zag mixer followed
// by a propagation channel to an outlet. Sampling points sit on arm "a".
ChipNetwork build_default_chip(const ChipConfig& config = {});

} // namespace gatesim
