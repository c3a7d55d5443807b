#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pinflow/errors.hpp"

namespace pinflow {

/// Column layout of node feature vectors for one circuit class.
///
/// Columns are assigned deterministically: parameter slots in the order the
/// schema lists them, then the 4-wide pin-role one-hot block, then globals in
/// listed order, then a constant bias column of ones. Components in the same
/// symmetry group share slot columns.
struct FeatureSchema {
    static constexpr int kPinRoleWidth = 4;

    std::string circuit_class;
    std::map<std::string, std::string> symmetry_map;          // component -> group
    std::vector<std::pair<std::string, std::string>> slots;   // (group, param) in column order
    std::vector<std::string> globals;                         // in column order

    int slot_index(const std::string& group, const std::string& param) const {
        for (std::size_t i = 0; i < slots.size(); ++i)
            if (slots[i].first == group && slots[i].second == param) return static_cast<int>(i);
        return -1;
    }

    int one_hot_offset() const { return static_cast<int>(slots.size()); }
    int global_offset() const { return one_hot_offset() + kPinRoleWidth; }
    int bias_column() const { return global_offset() + static_cast<int>(globals.size()); }
    int feature_dim() const { return bias_column() + 1; }

    /// Stable 32-bit FNV-1a hash of the canonical column layout; stored in
    /// graph files so stale caches are rejected.
    std::uint32_t hash() const;
};

/// Parse a schema JSON document:
///   {"circuit_class": ..., "symmetry_groups": {group: [components]},
///    "slots": [{"group":..., "param":...}], "globals": [names]}
/// Throws SchemaError on a component listed in two groups, a slot referencing
/// an unknown group, or an unknown top-level field.
FeatureSchema load_schema(const std::string& json_text);

std::string schema_to_json(const FeatureSchema& schema);

}  // namespace pinflow
