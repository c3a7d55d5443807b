#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pinflow/checkpoint.hpp"
#include "pinflow/trainer.hpp"

using namespace pinflow;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("pinflow_ckpt_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::vector<PinGraph> family(int n) {
    std::vector<PinGraph> graphs;
    for (int i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / (n - 1);
        PinGraph g;
        g.n = 2;
        g.d = 2;
        g.x = {static_cast<float>(x), 1.0f, static_cast<float>(x), 1.0f};
        g.edges = {{0, 1}};
        g.y = {2.0 * x - 1.0, x};
        g.y_mask = {1, 1};
        graphs.push_back(std::move(g));
    }
    return graphs;
}

std::vector<const PinGraph*> view(const std::vector<PinGraph>& graphs) {
    std::vector<const PinGraph*> out;
    for (const auto& g : graphs) out.push_back(&g);
    return out;
}

TargetSpec two_heads() {
    TargetSpec t;
    t.heads.push_back({"det", "V", HeadKind::Deterministic});
    t.heads.push_back({"prob", "dB", HeadKind::Probabilistic});
    return t;
}

}  // namespace

TEST_CASE("checkpoint round trip restores every tensor, scaler and meta field") {
    Model<float> model;
    model.cfg = ModelConfig{3, 8, 2, 12, 3, 21};
    model.targets = two_heads();
    model.init();
    CounterRng rng(4, 0);
    std::uint64_t ctr = 0;
    model.for_each_param([&](ad::Param<float>& p) {
        for (Eigen::Index i = 0; i < p.value.size(); ++i)
            p.value.data()[i] += static_cast<float>(rng.uniform_at(ctr++, -0.2, 0.2));
    });

    CheckpointExtras extras;
    extras.feature_scaler.kind = Scaler::Kind::MinMaxFeature;
    extras.feature_scaler.lo = {0.0, 1.0, -2.0};
    extras.feature_scaler.hi = {1.0, 4.0, 2.0};
    extras.target_scaler.kind = Scaler::Kind::ZScoreTarget;
    extras.target_scaler.lo = {0.5, -1.5};
    extras.target_scaler.hi = {2.0, 0.0};
    extras.meta["schema_json"] = "{}";
    extras.meta["note"] = "round-trip";

    const auto dir = temp_dir("roundtrip");
    const std::string path = (dir / "model.pfck").string();
    save_checkpoint(model, extras, path);

    auto loaded = load_checkpoint<float>(path);
    CHECK(loaded.model.cfg.hidden == 8);
    CHECK(loaded.model.cfg.flow_blocks == 3);
    CHECK(loaded.model.targets.heads[1].name == "prob");
    CHECK(loaded.model.targets.heads[1].kind == HeadKind::Probabilistic);
    CHECK(loaded.extras.meta.at("note") == "round-trip");
    CHECK(loaded.extras.feature_scaler.hi[1] == 4.0);
    CHECK(loaded.extras.target_scaler.lo[1] == doctest::Approx(-1.5));

    bool all_equal = true;
    std::vector<ad::Param<float>*> orig, back;
    model.for_each_param([&orig](ad::Param<float>& p) { orig.push_back(&p); });
    loaded.model.for_each_param([&back](ad::Param<float>& p) { back.push_back(&p); });
    REQUIRE(orig.size() == back.size());
    for (std::size_t i = 0; i < orig.size(); ++i) {
        CHECK(orig[i]->name == back[i]->name);
        all_equal = all_equal && orig[i]->value == back[i]->value;  // float32 exact
    }
    CHECK(all_equal);
}

TEST_CASE("checkpoint header is PFCK with a version gate") {
    const auto dir = temp_dir("magic");
    const std::string path = (dir / "model.pfck").string();
    Model<float> model;
    model.cfg = ModelConfig{2, 4, 1, 8, 2, 1};
    TargetSpec t;
    t.heads.push_back({"y", "", HeadKind::Deterministic});
    model.targets = t;
    model.init();
    CheckpointExtras extras;
    extras.feature_scaler.lo = {0};
    extras.feature_scaler.hi = {1};
    extras.target_scaler.lo = {0};
    extras.target_scaler.hi = {1};
    save_checkpoint(model, extras, path);

    std::string bytes = slurp(path);
    CHECK(bytes.substr(0, 4) == "PFCK");

    std::ofstream out(path, std::ios::binary);
    out << "NOPE" << bytes.substr(4);
    out.close();
    CHECK_THROWS_WITH_AS(load_checkpoint<float>(path), doctest::Contains("FormatVersionMismatch"),
                         IoError);
}

TEST_CASE("identical seeds train to byte-identical checkpoints") {
    auto graphs = family(24);
    auto val = family(8);
    TrainConfig tcfg;
    tcfg.max_epochs = 6;
    tcfg.seed = 33;
    tcfg.batch_size = 8;
    ModelConfig mcfg;
    mcfg.hidden = 8;
    mcfg.layers = 2;
    mcfg.flow_hidden = 8;
    mcfg.flow_blocks = 2;

    const auto dir = temp_dir("determinism");
    std::string paths[2];
    for (int run = 0; run < 2; ++run) {
        auto result = train<float>(view(graphs), view(val), two_heads(), mcfg, tcfg);
        CheckpointExtras extras;
        extras.feature_scaler = result.feature_scaler;
        extras.target_scaler = result.target_scaler;
        paths[run] = (dir / ("run" + std::to_string(run) + ".pfck")).string();
        save_checkpoint(result.model, extras, paths[run]);
    }
    CHECK(slurp(paths[0]) == slurp(paths[1]));

    // A different seed must give a different file.
    TrainConfig other = tcfg;
    other.seed = 34;
    auto result = train<float>(view(graphs), view(val), two_heads(), mcfg, other);
    CheckpointExtras extras;
    extras.feature_scaler = result.feature_scaler;
    extras.target_scaler = result.target_scaler;
    const std::string path3 = (dir / "run3.pfck").string();
    save_checkpoint(result.model, extras, path3);
    CHECK(slurp(paths[0]) != slurp(path3));
}
