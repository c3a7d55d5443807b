#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pinflow/netlist.hpp"
#include "pinflow/schema.hpp"
#include "pinflow/targets.hpp"

namespace pinflow {

/// Pin-level numeric graph. One node per (component, pin); intra-component
/// pins form a clique and so do all pins attached to one net. Feature rows
/// follow the FeatureSchema column layout and are stored unscaled.
struct PinGraph {
    std::uint32_t n = 0;  // node count
    std::uint32_t d = 0;  // feature dim
    std::vector<float> x;  // n*d, row-major
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // undirected, u<v, sorted, unique
    std::vector<std::pair<std::string, std::string>> node_map;   // node -> (component, pin role)
    std::vector<double> y;        // length H, original units
    std::vector<std::uint8_t> y_mask;  // length H
    std::uint8_t split_tag = 0;   // 0 train, 1 val, 2 test

    float& at(std::uint32_t node, std::uint32_t col) { return x[node * d + col]; }
    float at(std::uint32_t node, std::uint32_t col) const { return x[node * d + col]; }
};

/// Build the pin graph for one circuit. `y`/`y_mask` may be empty (prediction
/// path); otherwise both must have H = targets.size() entries.
/// Throws GraphError with codes UnmappedComponent, ClassMismatch,
/// UnboundGlobal, TargetArityMismatch.
PinGraph circuit_to_graph(const Circuit& circuit, const FeatureSchema& schema,
                          const TargetSpec& targets,
                          const std::vector<double>& y = {},
                          const std::vector<std::uint8_t>& y_mask = {});

/// One-hot position of a pin role within the 4-wide block.
/// MOSFET: gate=0, source=1, drain=2, body=3. Two-terminal: plus=0, minus=1.
int pin_role_slot(ComponentKind kind, const std::string& role);

}  // namespace pinflow
