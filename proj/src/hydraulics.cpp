#include "gatesim/hydraulics.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <vector>

namespace gatesim {

void PressureAssignment::validate() const {
    bool any_positive = false;
    for (const auto& [node, p] : pressures_mbar) {
        if (!std::isfinite(p)) {
            throw ModelError("pressure at '" + node + "' is not finite");
        }
        if (p > 0.0) any_positive = true;
    }
    if (pressures_mbar.empty() || !any_positive) {
        throw ModelError("pressure assignment needs at least one positive inlet");
    }
}

double FlowSolution::flow(const std::string& segment_id) const {
    auto it = segment_flows.find(segment_id);
    if (it == segment_flows.end()) {
        throw ModelError("no flow recorded for segment '" + segment_id + "'");
    }
    return it->second;
}

double FlowSolution::pressure(const std::string& node_id) const {
    auto it = node_pressures.find(node_id);
    if (it == node_pressures.end()) {
        throw ModelError("no pressure recorded for node '" + node_id + "'");
    }
    return it->second;
}

std::map<std::string, double> network_resistances(const ChipNetwork& network) {
    std::map<std::string, double> out;
    for (const auto& seg : network.segments) {
        out[seg.id] = hydraulic_resistance(seg, network.fluid.viscosity).R;
    }
    return out;
}

FlowSolution solve_flows(const ChipNetwork& network, const PressureAssignment& p) {
    network.validate();
    p.validate();

    const auto resistances = network_resistances(network);

    // Dirichlet nodes: assigned inlets plus all outlets (reference 0 Pa).
    std::map<std::string, double> fixed_pa;
    for (const auto& [node, mbar] : p.pressures_mbar) {
        if (network.find_node(node) == nullptr) {
            throw ModelError("pressure assigned to unknown node '" + node + "'");
        }
        fixed_pa[node] = mbar * kPaPerMbar;
    }
    for (const auto& n : network.nodes) {
        if (n.role == NodeRole::Outlet) fixed_pa[n.id] = 0.0;
    }

    std::map<std::string, int> unknown_index;
    for (const auto& n : network.nodes) {
        if (!fixed_pa.count(n.id)) {
            int idx = static_cast<int>(unknown_index.size());
            unknown_index[n.id] = idx;
        }
    }

    const int n_unknown = static_cast<int>(unknown_index.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknown);
    std::vector<Eigen::Triplet<double>> triplets;
    for (const auto& seg : network.segments) {
        const double g = 1.0 / resistances.at(seg.id);
        const std::string* ends[2] = {&seg.from_node, &seg.to_node};
        for (int side = 0; side < 2; ++side) {
            const std::string& a = *ends[side];
            const std::string& b = *ends[1 - side];
            auto it = unknown_index.find(a);
            if (it == unknown_index.end()) continue;
            triplets.emplace_back(it->second, it->second, g);
            auto jt = unknown_index.find(b);
            if (jt != unknown_index.end()) {
                triplets.emplace_back(it->second, jt->second, -g);
            } else {
                rhs[it->second] += g * fixed_pa.at(b);
            }
        }
    }

    FlowSolution sol;
    for (const auto& [node, pa] : fixed_pa) sol.node_pressures[node] = pa;

    if (n_unknown > 0) {
        Eigen::SparseMatrix<double> G(n_unknown, n_unknown);
        G.setFromTriplets(triplets.begin(), triplets.end());
        G.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.analyzePattern(G);
        lu.factorize(G);
        if (lu.info() != Eigen::Success) {
            throw SingularNetwork("conductance matrix is singular (node without a path to an outlet?)");
        }
        Eigen::VectorXd x = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !x.allFinite()) {
            throw SingularNetwork("sparse solve failed");
        }
        for (const auto& [node, idx] : unknown_index) {
            sol.node_pressures[node] = x[idx];
        }
    }

    for (const auto& seg : network.segments) {
        const double dp = sol.node_pressures.at(seg.from_node) -
                          sol.node_pressures.at(seg.to_node);
        sol.segment_flows[seg.id] = dp / resistances.at(seg.id);
    }

    // Net flow from the dye inlet arm into the junction.
    const ChipNode& dye = network.inlet(NodeRole::InletDye);
    sol.dye_injection_flow = 0.0;
    for (const auto& seg : network.segments) {
        if (seg.from_node == dye.id) sol.dye_injection_flow += sol.segment_flows.at(seg.id);
        if (seg.to_node == dye.id) sol.dye_injection_flow -= sol.segment_flows.at(seg.id);
    }

    return sol;
}

GateState gate_state_of(const ChipNetwork& network, const FlowSolution& flow,
                        double phi_min) {
    if (phi_min < 0.0 || phi_min >= 1.0) {
        throw ModelError("gate threshold must lie in [0, 1)");
    }
    const std::string& junction = network.junction_node();
    double outflow = 0.0;
    for (const auto& seg : network.segments) {
        double q = flow.flow(seg.id);
        if (seg.from_node == junction && q > 0.0) outflow += q;
        if (seg.to_node == junction && q < 0.0) outflow += -q;
    }
    if (outflow <= 0.0) {
        throw ZeroFlow("junction carries no outflow");
    }
    GateState gs;
    gs.dye_fraction = std::min(1.0, std::max(0.0, flow.dye_injection_flow) / outflow);
    gs.state = (gs.dye_fraction <= phi_min) ? Gating::On : Gating::Off;
    if (gs.state == Gating::On) gs.dye_fraction = 0.0;
    return gs;
}

GateState gate_state(const ChipNetwork& network, const PressureAssignment& p,
                     double phi_min) {
    return gate_state_of(network, solve_flows(network, p), phi_min);
}

double mean_velocity(const ChipNetwork& network, const FlowSolution& flow,
                     const std::string& segment_id) {
    const ChannelSegment* seg = network.find_segment(segment_id);
    if (seg == nullptr) {
        throw ModelError("unknown segment '" + segment_id + "'");
    }
    return flow.flow(segment_id) / (seg->width * seg->height);
}

} // namespace gatesim
