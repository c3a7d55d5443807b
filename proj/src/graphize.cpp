#include "pinflow/graphize.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace pinflow {

int pin_role_slot(ComponentKind kind, const std::string& role) {
    if (kind == ComponentKind::MOSFET) {
        if (role == "gate") return 0;
        if (role == "source") return 1;
        if (role == "drain") return 2;
        if (role == "body") return 3;
    } else {
        if (role == "plus") return 0;
        if (role == "minus") return 1;
    }
    throw GraphError("UnknownPinRole", "no one-hot slot for role " + role);
}

namespace {

// Slot values for one component: MOSFET width*fingers collapses into "wnf",
// length maps to "l", two-terminal value maps to "value".
std::vector<std::pair<std::string, double>> slot_values(const Component& comp) {
    if (comp.kind == ComponentKind::MOSFET) {
        const double w = comp.params.at("W");
        const double nf = comp.params.count("NF") ? comp.params.at("NF") : 1.0;
        return {{"wnf", w * nf}, {"l", comp.params.at("L")}};
    }
    return {{"value", comp.params.at("value")}};
}

}  // namespace

PinGraph circuit_to_graph(const Circuit& circuit, const FeatureSchema& schema,
                          const TargetSpec& targets, const std::vector<double>& y,
                          const std::vector<std::uint8_t>& y_mask) {
    if (circuit.circuit_class != schema.circuit_class)
        throw GraphError("ClassMismatch", "circuit class '" + circuit.circuit_class +
                                              "' does not match schema class '" +
                                              schema.circuit_class + "'");

    const std::size_t H = targets.size();
    if (!y.empty() && (y.size() != H || y_mask.size() != H))
        throw GraphError("TargetArityMismatch",
                         "expected " + std::to_string(H) + " targets, got " +
                             std::to_string(y.size()));

    PinGraph g;
    g.d = static_cast<std::uint32_t>(schema.feature_dim());
    g.n = static_cast<std::uint32_t>(circuit.total_pin_count());
    g.x.assign(static_cast<std::size_t>(g.n) * g.d, 0.0f);

    // Node ids in component order, pins in declared order.
    std::map<std::pair<std::string, std::string>, std::uint32_t> node_id;
    std::uint32_t next = 0;
    for (const auto& comp : circuit.components) {
        if (!schema.symmetry_map.count(comp.name))
            throw GraphError("UnmappedComponent",
                             comp.name + " has no symmetry group in the schema");
        for (const auto& [role, net] : comp.pins) {
            node_id[{comp.name, role}] = next;
            g.node_map.emplace_back(comp.name, role);
            ++next;
        }
    }

    // Features.
    for (const auto& comp : circuit.components) {
        const std::string& group = schema.symmetry_map.at(comp.name);
        std::vector<std::pair<int, double>> cols;
        for (const auto& [param, value] : slot_values(comp)) {
            const int slot = schema.slot_index(group, param);
            if (slot >= 0) cols.emplace_back(slot, value);
        }
        for (const auto& [role, net] : comp.pins) {
            const std::uint32_t v = node_id.at({comp.name, role});
            for (const auto& [col, value] : cols) g.at(v, static_cast<std::uint32_t>(col)) = static_cast<float>(value);
            const int onehot = schema.one_hot_offset() + pin_role_slot(comp.kind, role);
            g.at(v, static_cast<std::uint32_t>(onehot)) = 1.0f;
            for (std::size_t gi = 0; gi < schema.globals.size(); ++gi) {
                auto it = circuit.globals.find(schema.globals[gi]);
                if (it == circuit.globals.end())
                    throw GraphError("UnboundGlobal",
                                     "schema global " + schema.globals[gi] + " missing from circuit");
                g.at(v, static_cast<std::uint32_t>(schema.global_offset() + gi)) =
                    static_cast<float>(it->second);
            }
            g.at(v, static_cast<std::uint32_t>(schema.bias_column())) = 1.0f;
        }
    }

    // Edges: intra-component cliques, then net cliques, deduplicated.
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    auto add_clique = [&edges](const std::vector<std::uint32_t>& nodes) {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (std::size_t j = i + 1; j < nodes.size(); ++j) {
                const auto a = std::min(nodes[i], nodes[j]);
                const auto b = std::max(nodes[i], nodes[j]);
                if (a != b) edges.insert({a, b});
            }
    };
    for (const auto& comp : circuit.components) {
        std::vector<std::uint32_t> ids;
        for (const auto& [role, net] : comp.pins) ids.push_back(node_id.at({comp.name, role}));
        add_clique(ids);
    }
    for (const auto& [net, pins] : circuit.nets) {
        std::vector<std::uint32_t> ids;
        for (const auto& [comp, role] : pins) {
            auto it = node_id.find({comp, role});
            if (it != node_id.end()) ids.push_back(it->second);
        }
        add_clique(ids);
    }
    g.edges.assign(edges.begin(), edges.end());

    if (!y.empty()) {
        g.y = y;
        g.y_mask = y_mask;
    } else {
        g.y.assign(H, 0.0);
        g.y_mask.assign(H, 0);
    }
    return g;
}

}  // namespace pinflow
