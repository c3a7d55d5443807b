#pragma once

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pinflow/model.hpp"
#include "pinflow/scaler.hpp"

namespace pinflow {

/// PFCK checkpoint: magic "PFCK", u32 format version, u32 manifest length,
/// manifest JSON ({"tensors":[{"name","shape"}...], "meta":{...}}), then raw
/// little-endian float32 tensor data in manifest order. Scaler statistics are
/// stored as tensors; model dims, TargetSpec and the schema ride in meta so a
/// checkpoint is self-contained for prediction.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointExtras {
    Scaler feature_scaler;
    Scaler target_scaler;
    nlohmann::json meta;  // schema_json, train config echo, anything else
};

namespace detail {

inline nlohmann::json targets_to_json(const TargetSpec& targets) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& head : targets.heads)
        arr.push_back({{"name", head.name},
                       {"unit", head.unit},
                       {"kind", head.kind == HeadKind::Deterministic ? "deterministic"
                                                                     : "probabilistic"}});
    return arr;
}

inline TargetSpec targets_from_json(const nlohmann::json& arr) {
    TargetSpec t;
    for (const auto& h : arr)
        t.heads.push_back({h.at("name").get<std::string>(), h.value("unit", std::string()),
                           h.at("kind").get<std::string>() == "deterministic"
                               ? HeadKind::Deterministic
                               : HeadKind::Probabilistic});
    return t;
}

inline std::vector<std::pair<std::string, std::vector<float>>> scaler_tensors(
    const CheckpointExtras& extras) {
    auto to_floats = [](const std::vector<double>& v) {
        std::vector<float> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
        return out;
    };
    return {{"scaler.feature.lo", to_floats(extras.feature_scaler.lo)},
            {"scaler.feature.hi", to_floats(extras.feature_scaler.hi)},
            {"scaler.target.mean", to_floats(extras.target_scaler.lo)},
            {"scaler.target.std", to_floats(extras.target_scaler.hi)}};
}

}  // namespace detail

template <typename T>
void save_checkpoint(Model<T>& model, const CheckpointExtras& extras, const std::string& path) {
    nlohmann::json manifest;
    manifest["tensors"] = nlohmann::json::array();
    std::vector<float> payload;

    model.for_each_param([&](ad::Param<T>& p) {
        manifest["tensors"].push_back(
            {{"name", p.name},
             {"shape", {p.value.rows(), p.value.cols()}}});
        for (Eigen::Index i = 0; i < p.value.size(); ++i)
            payload.push_back(static_cast<float>(p.value.data()[i]));
    });
    for (const auto& [name, data] : detail::scaler_tensors(extras)) {
        manifest["tensors"].push_back(
            {{"name", name}, {"shape", {1, static_cast<long>(data.size())}}});
        payload.insert(payload.end(), data.begin(), data.end());
    }

    nlohmann::json meta = extras.meta;
    meta["model"] = {{"feature_dim", model.cfg.feature_dim}, {"hidden", model.cfg.hidden},
                     {"layers", model.cfg.layers},           {"flow_hidden", model.cfg.flow_hidden},
                     {"flow_blocks", model.cfg.flow_blocks}, {"seed", model.cfg.seed}};
    meta["targets"] = detail::targets_to_json(model.targets);
    manifest["meta"] = meta;

    const std::string manifest_text = manifest.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("IoError", "cannot write " + path);
    out.write("PFCK", 4);
    const std::uint32_t version = kCheckpointVersion;
    out.write(reinterpret_cast<const char*>(&version), 4);
    const std::uint32_t len = static_cast<std::uint32_t>(manifest_text.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(manifest_text.data(), static_cast<std::streamsize>(manifest_text.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
}

template <typename T>
struct LoadedCheckpoint {
    Model<T> model;
    CheckpointExtras extras;
};

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("IoError", "cannot read " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PFCK", 4) != 0)
        throw IoError("FormatVersionMismatch", "not a PFCK checkpoint");
    std::uint32_t version = 0, len = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    if (version != kCheckpointVersion)
        throw IoError("FormatVersionMismatch", "unsupported checkpoint version");
    in.read(reinterpret_cast<char*>(&len), 4);
    std::string manifest_text(len, '\0');
    in.read(manifest_text.data(), len);
    if (!in) throw IoError("IoError", "truncated checkpoint manifest");
    const nlohmann::json manifest = nlohmann::json::parse(manifest_text);
    const nlohmann::json& meta = manifest.at("meta");

    LoadedCheckpoint<T> loaded;
    loaded.model.cfg.feature_dim = meta.at("model").at("feature_dim").get<int>();
    loaded.model.cfg.hidden = meta.at("model").at("hidden").get<int>();
    loaded.model.cfg.layers = meta.at("model").at("layers").get<int>();
    loaded.model.cfg.flow_hidden = meta.at("model").at("flow_hidden").get<int>();
    loaded.model.cfg.flow_blocks = meta.at("model").at("flow_blocks").get<int>();
    loaded.model.cfg.seed = meta.at("model").at("seed").get<std::uint64_t>();
    loaded.model.targets = detail::targets_from_json(meta.at("targets"));
    loaded.model.init();
    loaded.extras.meta = meta;

    // Read tensors by manifest order into a name-indexed pool.
    std::map<std::string, std::vector<float>> pool;
    for (const auto& t : manifest.at("tensors")) {
        const auto rows = t.at("shape")[0].get<long>();
        const auto cols = t.at("shape")[1].get<long>();
        std::vector<float> data(static_cast<std::size_t>(rows * cols));
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(float)));
        if (!in) throw IoError("IoError", "truncated checkpoint payload");
        pool[t.at("name").get<std::string>()] = std::move(data);
    }

    loaded.model.for_each_param([&pool](ad::Param<T>& p) {
        auto it = pool.find(p.name);
        if (it == pool.end()) throw IoError("IoError", "checkpoint missing tensor " + p.name);
        if (static_cast<std::size_t>(p.value.size()) != it->second.size())
            throw IoError("IoError", "checkpoint shape mismatch for " + p.name);
        for (Eigen::Index i = 0; i < p.value.size(); ++i)
            p.value.data()[i] = static_cast<T>(it->second[static_cast<std::size_t>(i)]);
    });

    auto to_doubles = [&pool](const std::string& name) {
        std::vector<double> out;
        for (float v : pool.at(name)) out.push_back(static_cast<double>(v));
        return out;
    };
    loaded.extras.feature_scaler.kind = Scaler::Kind::MinMaxFeature;
    loaded.extras.feature_scaler.lo = to_doubles("scaler.feature.lo");
    loaded.extras.feature_scaler.hi = to_doubles("scaler.feature.hi");
    loaded.extras.target_scaler.kind = Scaler::Kind::ZScoreTarget;
    loaded.extras.target_scaler.lo = to_doubles("scaler.target.mean");
    loaded.extras.target_scaler.hi = to_doubles("scaler.target.std");
    return loaded;
}

}  // namespace pinflow
