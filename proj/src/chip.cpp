#include "gatesim/chip.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

namespace gatesim {

void ChannelSegment::validate() const {
    if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0)) {
        throw InvalidGeometry("segment '" + id + "': dimensions must be positive");
    }
    if (kind == SegmentKind::ZigZag) {
        if (!(zigzag_step > 0.0) || zigzag_step > length) {
            throw InvalidGeometry("segment '" + id + "': zig-zag step must satisfy 0 < s <= L");
        }
    }
    if (from_node.empty() || to_node.empty() || from_node == to_node) {
        throw InvalidTopology("segment '" + id + "': endpoints invalid");
    }
}

ChannelSegment make_zigzag(std::string id, double length, double width,
                           double height, std::string from, std::string to) {
    ChannelSegment seg;
    seg.id = std::move(id);
    seg.kind = SegmentKind::ZigZag;
    seg.length = length;
    seg.width = width;
    seg.height = height;
    seg.zigzag_step = 4.0 * width; // s/w = 4, maximum mixing efficiency
    seg.from_node = std::move(from);
    seg.to_node = std::move(to);
    seg.validate();
    return seg;
}

const ChipNode* ChipNetwork::find_node(const std::string& id) const {
    for (const auto& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

const ChannelSegment* ChipNetwork::find_segment(const std::string& id) const {
    for (const auto& s : segments) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

const ChipNode& ChipNetwork::inlet(NodeRole role) const {
    for (const auto& n : nodes) {
        if (n.role == role) return n;
    }
    throw InvalidTopology("network has no node with the requested inlet role");
}

const std::string& ChipNetwork::junction_node() const {
    const ChipNode& dye = inlet(NodeRole::InletDye);
    for (const auto& s : segments) {
        if (s.from_node == dye.id) return s.to_node;
        if (s.to_node == dye.id) return s.from_node;
    }
    throw InvalidTopology("dye inlet has no incident segment");
}

void ChipNetwork::validate() const {
    if (nodes.empty() || segments.empty()) {
        throw InvalidTopology("network is empty");
    }
    int n_dye = 0, n_gate = 0, n_outlet = 0;
    std::set<std::string> node_ids;
    for (const auto& n : nodes) {
        if (!node_ids.insert(n.id).second) {
            throw InvalidTopology("duplicate node id '" + n.id + "'");
        }
        switch (n.role) {
            case NodeRole::InletDye: ++n_dye; break;
            case NodeRole::InletGate: ++n_gate; break;
            case NodeRole::Outlet: ++n_outlet; break;
            default: break;
        }
    }
    if (n_dye != 1 || n_gate != 1) {
        throw InvalidTopology("network needs exactly one dye inlet and one gate inlet");
    }
    if (n_outlet < 1) {
        throw InvalidTopology("network needs at least one outlet");
    }

    std::map<std::string, std::vector<std::string>> adjacency;
    std::set<std::string> segment_ids;
    for (const auto& s : segments) {
        s.validate();
        if (!segment_ids.insert(s.id).second) {
            throw InvalidTopology("duplicate segment id '" + s.id + "'");
        }
        if (!node_ids.count(s.from_node) || !node_ids.count(s.to_node)) {
            throw InvalidTopology("segment '" + s.id + "' references unknown node");
        }
        adjacency[s.from_node].push_back(s.to_node);
        adjacency[s.to_node].push_back(s.from_node);
    }

    // connectivity
    std::set<std::string> seen;
    std::queue<std::string> frontier;
    frontier.push(nodes.front().id);
    seen.insert(nodes.front().id);
    while (!frontier.empty()) {
        auto cur = frontier.front();
        frontier.pop();
        for (const auto& next : adjacency[cur]) {
            if (seen.insert(next).second) frontier.push(next);
        }
    }
    if (seen.size() != nodes.size()) {
        throw InvalidTopology("network graph is disconnected");
    }

    for (const auto& sp : sample_points) {
        const ChannelSegment* seg = find_segment(sp.segment_id);
        if (seg == nullptr) {
            throw InvalidTopology("sample point '" + sp.point_id + "' references unknown segment");
        }
        if (sp.axial_position < 0.0 || sp.axial_position > seg->length) {
            throw InvalidGeometry("sample point '" + sp.point_id + "' lies outside its segment");
        }
    }
    if (!(fluid.viscosity > 0.0) || !(fluid.diffusivity > 0.0)) {
        throw InvalidGeometry("fluid properties must be positive");
    }
}

// ---------------------------------------------------------------------------
// Rectangular-duct laminar resistance
//
//   R = 12 mu L / (w h^3) * [1 - (192 h)/(pi^5 w) * sum_{n odd} tanh(n pi w / (2h)) / n^5]^-1
//
// with w the wide side and h the narrow side of the cross-section. The series
// converges as n^-5; 51 odd terms put the truncation error far below 1e-15.
// ---------------------------------------------------------------------------

static double rect_duct_resistance(double wide, double narrow, double length,
                                   double viscosity) {
    constexpr double pi = 3.14159265358979323846;
    double sum = 0.0;
    for (int n = 1; n <= 101; n += 2) {
        sum += std::tanh(n * pi * wide / (2.0 * narrow)) / std::pow(double(n), 5);
    }
    double bracket = 1.0 - (192.0 * narrow) / (std::pow(pi, 5) * wide) * sum;
    return 12.0 * viscosity * length / (wide * std::pow(narrow, 3) * bracket);
}

SegmentResistance hydraulic_resistance(const ChannelSegment& segment,
                                       double viscosity) {
    segment.validate();
    if (!(viscosity > 0.0)) {
        throw InvalidGeometry("viscosity must be positive");
    }
    double wide = std::max(segment.width, segment.height);
    double narrow = std::min(segment.width, segment.height);
    return {segment.id, rect_duct_resistance(wide, narrow, segment.length, viscosity)};
}

double hydraulic_resistance_approx(const ChannelSegment& segment,
                                   double viscosity) {
    double wide = std::max(segment.width, segment.height);
    double narrow = std::min(segment.width, segment.height);
    return 12.0 * viscosity * segment.length /
           (wide * std::pow(narrow, 3) * (1.0 - 0.63 * narrow / wide));
}

// ---------------------------------------------------------------------------
// Default chip
// ---------------------------------------------------------------------------

ChipNetwork build_default_chip(const ChipConfig& config) {
    auto um = [](double v) { return v * 1.0e-6; };

    if (config.main_width_um <= 0 || config.main_height_um <= 0 ||
        config.feed_length_um <= 0 || config.mixer_width_um <= 0 ||
        config.mixer_length_um <= 0 || config.propagation_length_um <= 0 ||
        config.sample_spacing_um <= 0 || config.sample_count < 1 ||
        config.sample_start_um < 0 || config.viscosity_mPas <= 0 ||
        config.diffusivity_m2s <= 0) {
        throw InvalidGeometry("chip config: all dimensions must be positive");
    }

    ChipNetwork net;
    net.fluid.viscosity = config.viscosity_mPas * 1.0e-3;
    net.fluid.diffusivity = config.diffusivity_m2s;

    net.nodes = {
        {"inlet_dye", NodeRole::InletDye},
        {"inlet_gate", NodeRole::InletGate},
        {"junction", NodeRole::Junction},
        {"mixer_a_end", NodeRole::Junction},
        {"mixer_b_end", NodeRole::Junction},
        {"outlet_a", NodeRole::Outlet},
        {"outlet_b", NodeRole::Outlet},
    };

    auto straight = [&](std::string id, double length_um, std::string from,
                        std::string to) {
        ChannelSegment seg;
        seg.id = std::move(id);
        seg.kind = SegmentKind::Straight;
        seg.length = um(length_um);
        seg.width = um(config.main_width_um);
        seg.height = um(config.main_height_um);
        seg.from_node = std::move(from);
        seg.to_node = std::move(to);
        seg.validate();
        return seg;
    };

    auto mixer = [&](std::string id, std::string from, std::string to) {
        ChannelSegment seg = make_zigzag(std::move(id), um(config.mixer_length_um),
                                         um(config.mixer_width_um),
                                         um(config.main_height_um), std::move(from),
                                         std::move(to));
        if (config.mixer_step_um > 0.0) {
            seg.zigzag_step = um(config.mixer_step_um);
            seg.validate();
        }
        return seg;
    };

    net.segments.push_back(straight("feed_dye", config.feed_length_um, "inlet_dye", "junction"));
    net.segments.push_back(straight("feed_gate", config.feed_length_um, "inlet_gate", "junction"));
    // identical mixing structures in both output arms keep the flow split
    // symmetric
    net.segments.push_back(mixer("mixer_a", "junction", "mixer_a_end"));
    net.segments.push_back(straight("prop_a", config.propagation_length_um, "mixer_a_end", "outlet_a"));
    net.segments.push_back(mixer("mixer_b", "junction", "mixer_b_end"));
    net.segments.push_back(straight("prop_b", config.propagation_length_um, "mixer_b_end", "outlet_b"));

    for (int i = 0; i < config.sample_count; ++i) {
        SamplePoint sp;
        sp.point_id = "p" + std::to_string(i + 1);
        sp.segment_id = "prop_a";
        sp.axial_position = um(config.sample_start_um + i * config.sample_spacing_um);
        net.sample_points.push_back(sp);
    }

    net.validate();
    return net;
}

} // namespace gatesim
