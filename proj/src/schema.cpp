#include "pinflow/schema.hpp"

#include <json.hpp>

namespace pinflow {

using nlohmann::json;

std::uint32_t FeatureSchema::hash() const {
    std::uint32_t h = 2166136261u;
    auto feed = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 16777619u;
        }
        h ^= 0xFFu;  // field separator
        h *= 16777619u;
    };
    feed(circuit_class);
    for (const auto& [comp, group] : symmetry_map) {
        feed(comp);
        feed(group);
    }
    for (const auto& [group, param] : slots) {
        feed(group);
        feed(param);
    }
    for (const auto& g : globals) feed(g);
    return h;
}

FeatureSchema load_schema(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SchemaError("SchemaError", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("SchemaError", "schema must be a JSON object");

    static const std::vector<std::string> allowed = {"circuit_class", "symmetry_groups", "slots",
                                                     "globals"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw SchemaError("SchemaError", "unknown field '" + it.key() + "'");
    }

    FeatureSchema schema;
    schema.circuit_class = doc.value("circuit_class", std::string());
    if (schema.circuit_class.empty())
        throw SchemaError("SchemaError", "circuit_class is required");

    std::vector<std::string> known_groups;
    if (doc.contains("symmetry_groups")) {
        if (!doc["symmetry_groups"].is_object())
            throw SchemaError("SchemaError", "symmetry_groups must be an object");
        for (auto it = doc["symmetry_groups"].begin(); it != doc["symmetry_groups"].end(); ++it) {
            known_groups.push_back(it.key());
            if (!it.value().is_array())
                throw SchemaError("SchemaError", "group " + it.key() + " must list components");
            for (const auto& comp : it.value()) {
                const std::string name = comp.get<std::string>();
                if (schema.symmetry_map.count(name))
                    throw SchemaError("SchemaError", "component " + name + " listed in groups " +
                                                         schema.symmetry_map[name] + " and " +
                                                         it.key());
                schema.symmetry_map[name] = it.key();
            }
        }
    }

    if (doc.contains("slots")) {
        if (!doc["slots"].is_array()) throw SchemaError("SchemaError", "slots must be an array");
        for (const auto& slot : doc["slots"]) {
            if (!slot.is_object() || !slot.contains("group") || !slot.contains("param"))
                throw SchemaError("SchemaError", "each slot needs group and param");
            for (auto it = slot.begin(); it != slot.end(); ++it)
                if (it.key() != "group" && it.key() != "param")
                    throw SchemaError("SchemaError", "unknown slot field '" + it.key() + "'");
            const std::string group = slot["group"].get<std::string>();
            if (std::find(known_groups.begin(), known_groups.end(), group) == known_groups.end())
                throw SchemaError("SchemaError", "slot references unknown group " + group);
            const std::string param = slot["param"].get<std::string>();
            if (schema.slot_index(group, param) >= 0)
                throw SchemaError("SchemaError",
                                  "duplicate slot (" + group + ", " + param + ")");
            schema.slots.emplace_back(group, param);
        }
    }

    if (doc.contains("globals")) {
        if (!doc["globals"].is_array()) throw SchemaError("SchemaError", "globals must be an array");
        for (const auto& g : doc["globals"]) schema.globals.push_back(g.get<std::string>());
    }

    return schema;
}

std::string schema_to_json(const FeatureSchema& schema) {
    json doc;
    doc["circuit_class"] = schema.circuit_class;
    json groups = json::object();
    for (const auto& [comp, group] : schema.symmetry_map) groups[group].push_back(comp);
    doc["symmetry_groups"] = groups;
    json slots = json::array();
    for (const auto& [group, param] : schema.slots)
        slots.push_back({{"group", group}, {"param", param}});
    doc["slots"] = slots;
    doc["globals"] = schema.globals;
    return doc.dump(2);
}

}  // namespace pinflow
