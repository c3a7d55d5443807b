// pinflow: netlist -> pin graph -> GNN surrogate pipeline driver.
//
// Subcommands: synth, ingest, train, evaluate, predict, report, bench,
// selftest. Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "pinflow/checkpoint.hpp"
#include "pinflow/dataset.hpp"
#include "pinflow/evaluate.hpp"
#include "pinflow/metrics.hpp"
#include "pinflow/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pinflow;

namespace {

void write_resolved_config(const std::string& out_dir, const json& config) {
    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "config.resolved.json").string(), config.dump(2) + "\n");
}

TargetSpec targets_from_config(const json& config) {
    TargetSpec targets;
    for (const auto& h : config.at("targets"))
        targets.heads.push_back({h.at("name").get<std::string>(), h.value("unit", std::string()),
                                 h.value("kind", std::string("deterministic")) == "probabilistic"
                                     ? HeadKind::Probabilistic
                                     : HeadKind::Deterministic});
    targets.check();
    return targets;
}

json default_train_config() {
    return json{{"lr", 1e-3},          {"weight_decay", 1e-4},  {"beta1", 0.9},
                {"beta2", 0.999},      {"eps", 1e-8},           {"batch_size", 64},
                {"max_epochs", 200},   {"lr_patience", 5},      {"lr_factor", 0.5},
                {"head_patience", 10}, {"noise_std", 0.1},      {"mc_samples", 256},
                {"seed", 0},           {"deterministic", true}, {"precision", 32}};
}

json default_model_config() {
    return json{{"hidden", 128}, {"layers", 4}, {"flow_hidden", 128}, {"flow_blocks", 10}};
}

TrainConfig train_config_from(const json& j) {
    TrainConfig cfg;
    cfg.lr = j.at("lr").get<double>();
    cfg.weight_decay = j.at("weight_decay").get<double>();
    cfg.beta1 = j.at("beta1").get<double>();
    cfg.beta2 = j.at("beta2").get<double>();
    cfg.eps = j.at("eps").get<double>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.max_epochs = j.at("max_epochs").get<int>();
    cfg.lr_patience = j.at("lr_patience").get<int>();
    cfg.lr_factor = j.at("lr_factor").get<double>();
    cfg.head_patience = j.at("head_patience").get<int>();
    cfg.noise_std = j.at("noise_std").get<double>();
    cfg.mc_samples = j.at("mc_samples").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.deterministic = j.at("deterministic").get<bool>();
    cfg.precision = j.at("precision").get<int>();
    return cfg;
}

template <typename T>
int run_train(const GraphStore& store, const json& resolved, const std::string& out_dir) {
    const TargetSpec targets = targets_from_config(resolved);
    if (targets.size() != store.n_heads)
        throw TrainError("TargetArityMismatch",
                         "config lists " + std::to_string(targets.size()) + " heads, store has " +
                             std::to_string(store.n_heads));

    ModelConfig mcfg;
    const json& m = resolved.at("model");
    mcfg.hidden = m.at("hidden").get<int>();
    mcfg.layers = m.at("layers").get<int>();
    mcfg.flow_hidden = m.at("flow_hidden").get<int>();
    mcfg.flow_blocks = m.at("flow_blocks").get<int>();
    const TrainConfig tcfg = train_config_from(resolved.at("train"));

    auto train_view = store.split_view(0);
    auto val_view = store.split_view(1);
    auto result = train<T>(train_view, val_view, targets, mcfg, tcfg);

    std::ostringstream log;
    for (const auto& entry : result.log) log << entry.to_json() << "\n";
    write_text_file((fs::path(out_dir) / "train_log.jsonl").string(), log.str());

    CheckpointExtras extras;
    extras.feature_scaler = result.feature_scaler;
    extras.target_scaler = result.target_scaler;
    extras.meta["train_config"] = resolved.at("train");
    if (resolved.contains("schema_json")) extras.meta["schema_json"] = resolved.at("schema_json");
    save_checkpoint(result.model, extras, (fs::path(out_dir) / "model.pfck").string());

    std::cout << "trained " << result.epochs_run << " epochs, final lr " << result.final_lr
              << "\n";
    for (const auto& hs : result.head_states)
        std::cout << "  head " << hs.name << ": best val " << hs.best_val
                  << (hs.frozen ? " (frozen)" : "") << "\n";
    return 0;
}

int cmd_synth(const std::string& kind, int n, std::uint64_t seed, const std::string& out) {
    const auto corpus = generate_synthetic_corpus(kind, n, seed, out);
    write_resolved_config(
        out, json{{"command", "synth"}, {"kind", kind}, {"n", n}, {"seed", seed}, {"out", out}});
    std::cout << "wrote " << corpus.manifest_path << "\n";
    return 0;
}

void print_diagnostics(const Circuit& circuit) {
    for (const auto& d : validate(circuit)) std::cerr << d.to_json() << "\n";
}

int cmd_ingest(const std::string& manifest_path, const std::string& out, int workers) {
    const CorpusManifest manifest = load_manifest(manifest_path);
    print_diagnostics(parse_netlist(read_text_file(manifest.netlist_template)));
    const GraphStore store = ingest(manifest, workers);
    fs::create_directories(out);
    const std::string store_path = (fs::path(out) / "store.pgf").string();
    save_store(store, store_path);
    write_resolved_config(out, json{{"command", "ingest"},
                                    {"manifest", manifest_path},
                                    {"workers", workers},
                                    {"records", store.records.size()},
                                    {"schema_hash", store.schema_hash},
                                    {"out", out}});
    std::cout << "wrote " << store_path << " (" << store.records.size() << " records)\n";
    return 0;
}

int cmd_train(const std::string& store_path, const std::string& config_path,
              const std::string& out, std::optional<std::uint64_t> seed_flag,
              std::optional<bool> deterministic_flag, std::optional<int> precision_flag) {
    // defaults <- config file <- flags
    json resolved;
    resolved["command"] = "train";
    resolved["store"] = store_path;
    resolved["train"] = default_train_config();
    resolved["model"] = default_model_config();
    if (!config_path.empty()) {
        const json file_cfg = json::parse(read_text_file(config_path));
        for (const auto& section : {"train", "model"})
            if (file_cfg.contains(section))
                for (auto it = file_cfg[section].begin(); it != file_cfg[section].end(); ++it)
                    resolved[section][it.key()] = it.value();
        if (file_cfg.contains("targets")) resolved["targets"] = file_cfg["targets"];
        if (file_cfg.contains("schema")) {
            const fs::path base = fs::path(config_path).parent_path();
            const fs::path schema_path = fs::path(file_cfg["schema"].get<std::string>());
            resolved["schema_json"] = read_text_file(
                schema_path.is_absolute() ? schema_path.string() : (base / schema_path).string());
        }
    }
    if (!resolved.contains("targets"))
        throw TrainError("BadConfig", "config file must list targets");
    if (seed_flag) resolved["train"]["seed"] = *seed_flag;
    if (deterministic_flag) resolved["train"]["deterministic"] = *deterministic_flag;
    if (precision_flag) resolved["train"]["precision"] = *precision_flag;

    const GraphStore store = load_store(store_path);
    write_resolved_config(out, resolved);
    const int precision = resolved["train"]["precision"].get<int>();
    if (precision == 64) return run_train<double>(store, resolved, out);
    if (precision == 32) return run_train<float>(store, resolved, out);
    throw TrainError("BadConfig", "precision must be 32 or 64");
}

void write_report_files(const MetricsReport& report, const std::string& out) {
    fs::create_directories(out);
    write_text_file((fs::path(out) / "report.json").string(), report.to_json().dump(2) + "\n");
    write_text_file((fs::path(out) / "report_table.txt").string(), report.to_table());
    for (std::size_t i = 0; i < report.heads.size(); ++i)
        write_text_file((fs::path(out) / ("kde_" + report.heads[i].head + ".csv")).string(),
                        report.kde_csv(i));
}

int cmd_evaluate(const std::string& store_path, const std::string& ckpt_path,
                 const std::string& out, std::optional<int> mc_samples,
                 std::optional<std::uint64_t> seed) {
    auto loaded = load_checkpoint<float>(ckpt_path);
    const GraphStore store = load_store(store_path);
    auto test_view = store.split_view(2);

    EvalConfig cfg;
    if (loaded.extras.meta.contains("train_config"))
        cfg.mc_samples = loaded.extras.meta["train_config"].value("mc_samples", 256);
    if (mc_samples) cfg.mc_samples = *mc_samples;
    if (seed) cfg.seed = *seed;

    const MetricsReport report = evaluate(loaded.model, test_view, loaded.extras.feature_scaler,
                                          loaded.extras.target_scaler, cfg);
    write_report_files(report, out);
    write_resolved_config(out, json{{"command", "evaluate"},
                                    {"store", store_path},
                                    {"checkpoint", ckpt_path},
                                    {"mc_samples", cfg.mc_samples},
                                    {"seed", cfg.seed},
                                    {"n_test", test_view.size()}});
    std::cout << report.to_table();
    return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& netlist_path,
                const std::string& params_path, std::optional<int> mc_samples,
                std::optional<std::uint64_t> seed) {
    auto loaded = load_checkpoint<float>(ckpt_path);
    if (!loaded.extras.meta.contains("schema_json"))
        throw Error("MissingSchema", "checkpoint carries no schema; retrain with a schema path");
    const FeatureSchema schema = load_schema(loaded.extras.meta["schema_json"].get<std::string>());

    Circuit circuit = parse_netlist(read_text_file(netlist_path));
    print_diagnostics(circuit);
    if (!params_path.empty()) {
        const json overrides = json::parse(read_text_file(params_path));
        if (overrides.contains("components"))
            for (auto it = overrides["components"].begin(); it != overrides["components"].end();
                 ++it) {
                Component* comp = circuit.find_component(it.key());
                if (!comp)
                    throw GraphError("UnmappedComponent",
                                     "override names unknown component " + it.key());
                for (auto p = it.value().begin(); p != it.value().end(); ++p)
                    comp->params[p.key()] = p.value().get<double>();
            }
        if (overrides.contains("globals"))
            for (auto it = overrides["globals"].begin(); it != overrides["globals"].end(); ++it)
                circuit.globals[it.key()] = it.value().get<double>();
    }

    const PinGraph graph = circuit_to_graph(circuit, schema, loaded.model.targets);
    std::vector<const PinGraph*> graphs = {&graph};
    EvalConfig cfg;
    if (loaded.extras.meta.contains("train_config"))
        cfg.mc_samples = loaded.extras.meta["train_config"].value("mc_samples", 256);
    if (mc_samples) cfg.mc_samples = *mc_samples;
    if (seed) cfg.seed = *seed;

    GraphBatch<float> batch =
        make_batch<float>(graphs, {0}, loaded.extras.feature_scaler, loaded.extras.target_scaler);
    ad::Tape<float> tape(false);
    auto hg_var = loaded.model.encoder.encode(tape, tape.constant(batch.x), batch);
    const ad::Mat<float>& hg = tape.value(hg_var);

    json out;
    out["netlist"] = netlist_path;
    out["n_nodes"] = graph.n;
    json heads = json::object();
    for (std::size_t i = 0; i < loaded.model.targets.size(); ++i) {
        const auto& head = loaded.model.targets.heads[i];
        json entry;
        entry["unit"] = head.unit;
        if (loaded.model.det_heads[i]) {
            ad::Tape<float> head_tape(false);
            const double std_pred = head_tape.value(
                loaded.model.det_head_t(head_tape, i, head_tape.leaf(hg, false)))(0, 0);
            entry["kind"] = "deterministic";
            entry["value"] = invert_target(std_pred, loaded.extras.target_scaler, i);
        } else {
            auto& flow = *loaded.model.flows[i];
            const ad::Mat<float> draws = flow.sample(hg, cfg.mc_samples, cfg.seed);
            std::vector<double> inv;
            inv.reserve(static_cast<std::size_t>(draws.rows()));
            for (Eigen::Index s = 0; s < draws.rows(); ++s)
                inv.push_back(invert_target(draws(s, 0), loaded.extras.target_scaler, i));
            double mean = 0;
            for (double v : inv) mean += v;
            mean /= static_cast<double>(inv.size());
            entry["kind"] = "probabilistic";
            entry["value"] = mean;
            entry["quantiles"] = {{"p05", metrics::percentile(inv, 0.05)},
                                  {"p50", metrics::percentile(inv, 0.50)},
                                  {"p95", metrics::percentile(inv, 0.95)}};
            entry["mc_samples"] = cfg.mc_samples;
        }
        heads[head.name] = entry;
    }
    out["heads"] = heads;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_report(const std::string& eval_dir, const std::string& format) {
    const json report = json::parse(read_text_file((fs::path(eval_dir) / "report.json").string()));
    if (format == "json") {
        std::cout << report.dump(2) << "\n";
    } else if (format == "csv") {
        std::cout << "head,r2,mre_avg,mre_p75,mre_p90,frac_lt_2pct,frac_lt_5pct,frac_gt_20pct,"
                     "nrmse,smape,n_eval,n_excluded_zero_truth\n";
        for (auto it = report.begin(); it != report.end(); ++it) {
            const json& e = it.value();
            auto cell = [&e](const char* key) {
                return e.at(key).is_null() ? std::string("N/A") : e.at(key).dump();
            };
            std::cout << it.key() << "," << cell("r2") << "," << cell("mre_avg") << ","
                      << cell("mre_p75") << "," << cell("mre_p90") << "," << cell("frac_lt_2pct")
                      << "," << cell("frac_lt_5pct") << "," << cell("frac_gt_20pct") << ","
                      << cell("nrmse") << "," << cell("smape") << "," << cell("n_eval") << ","
                      << cell("n_excluded_zero_truth") << "\n";
        }
    } else {  // table
        std::cout << read_text_file((fs::path(eval_dir) / "report_table.txt").string());
    }
    return 0;
}

int cmd_bench(const std::string& ckpt_path, const std::string& store_path, int repetitions,
              const std::string& out) {
    auto loaded = load_checkpoint<float>(ckpt_path);
    const GraphStore store = load_store(store_path);
    auto test_view = store.split_view(2);
    if (test_view.empty())
        for (const auto& g : store.records) test_view.push_back(&g);

    EvalConfig cfg;
    const TimingStats stats = timing_benchmark(loaded.model, test_view,
                                               loaded.extras.feature_scaler,
                                               loaded.extras.target_scaler, repetitions, cfg);
    const json doc = stats.to_json();
    if (!out.empty()) {
        fs::create_directories(out);
        write_text_file((fs::path(out) / "bench.json").string(), doc.dump(2) + "\n");
        write_resolved_config(out, json{{"command", "bench"},
                                        {"checkpoint", ckpt_path},
                                        {"store", store_path},
                                        {"repetitions", repetitions}});
    }
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int cmd_selftest() {
    int passed = 0, failed = 0;
    auto check = [&](const char* name, bool ok) {
        std::cout << (ok ? "  ok  " : " FAIL ") << name << "\n";
        (ok ? passed : failed)++;
    };

    {  // flow round trip
        Flow<float> flow;
        flow.dim = 1;
        flow.context = 4;
        flow.hidden = 32;
        flow.n_blocks = 10;
        flow.head_name = "selftest";
        flow.init(CounterRng(1, rng_stream::kWeightInit));
        CounterRng rng(2, 0);
        std::uint64_t ctr = 0;
        flow.for_each_param([&](ad::Param<float>& p) {
            for (Eigen::Index i = 0; i < p.value.size(); ++i)
                p.value.data()[i] += static_cast<float>(rng.uniform_at(ctr++, -0.2, 0.2));
        });
        const int n = 2000;
        ad::Mat<float> y(n, 1), h(n, 4);
        for (int i = 0; i < n; ++i) {
            y(i, 0) = static_cast<float>(rng.uniform_at(ctr++, -3.0, 3.0));
            for (int j = 0; j < 4; ++j)
                h(i, j) = static_cast<float>(rng.uniform_at(ctr++, -1.0, 1.0));
        }
        auto [z, logdet] = flow.forward(y, h);
        check("flow inverse(forward) < 1e-5",
              (flow.inverse(z, h) - y).cwiseAbs().maxCoeff() < 1e-5f);
    }

    {  // gradient check on a joint model
        TargetSpec targets;
        targets.heads.push_back({"det", "", HeadKind::Deterministic});
        targets.heads.push_back({"prob", "", HeadKind::Probabilistic});
        Model<double> model;
        model.cfg = ModelConfig{3, 6, 2, 8, 2, 5};
        model.targets = targets;
        model.init();
        GraphBatch<double> batch;
        batch.x = ad::Mat<double>::Zero(5, 3);
        CounterRng rng(7, 0);
        std::uint64_t ctr = 0;
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 3; ++j) batch.x(i, j) = rng.uniform_at(ctr++, -1.0, 1.0);
        for (int i = 0; i + 1 < 5; ++i) {
            batch.edge_src.push_back(i);
            batch.edge_dst.push_back(i + 1);
            batch.edge_src.push_back(i + 1);
            batch.edge_dst.push_back(i);
        }
        batch.node_graph = {0, 0, 0, 0, 0};
        batch.n_graphs = 1;
        batch.y_std = ad::Mat<double>::Constant(1, 2, 0.4);
        batch.mask = ad::Mat<double>::Ones(1, 2);
        check("full-model gradient check < 1e-5", gradient_check(model, batch) < 1e-5);
    }

    {  // permutation invariance
        Encoder<float> enc;
        enc.input_dim = 4;
        enc.hidden = 16;
        enc.n_layers = 4;
        enc.init(CounterRng(3, rng_stream::kWeightInit));
        CounterRng rng(4, 0);
        std::uint64_t ctr = 0;
        GraphBatch<float> batch;
        batch.x = ad::Mat<float>::Zero(6, 4);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 4; ++j)
                batch.x(i, j) = static_cast<float>(rng.uniform_at(ctr++, -1.0, 1.0));
        const std::vector<std::pair<int, int>> edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4},
                                                        {4, 5}, {0, 5}, {1, 4}};
        for (auto [u, v] : edges) {
            batch.edge_src.push_back(u);
            batch.edge_dst.push_back(v);
            batch.edge_src.push_back(v);
            batch.edge_dst.push_back(u);
        }
        batch.node_graph.assign(6, 0);
        batch.n_graphs = 1;
        ad::Tape<float> t1(false);
        const ad::Mat<float> a = t1.value(enc.encode(t1, t1.constant(batch.x), batch));

        const std::vector<int> perm = {3, 5, 0, 2, 4, 1};
        GraphBatch<float> pbatch = batch;
        for (int i = 0; i < 6; ++i)
            pbatch.x.row(perm[static_cast<std::size_t>(i)]) = batch.x.row(i);
        for (std::size_t e = 0; e < batch.edge_src.size(); ++e) {
            pbatch.edge_src[e] = perm[static_cast<std::size_t>(batch.edge_src[e])];
            pbatch.edge_dst[e] = perm[static_cast<std::size_t>(batch.edge_dst[e])];
        }
        ad::Tape<float> t2(false);
        const ad::Mat<float> b = t2.value(enc.encode(t2, t2.constant(pbatch.x), pbatch));
        check("encode permutation invariance < 1e-5", (a - b).cwiseAbs().maxCoeff() < 1e-5f);
    }

    {  // metric oracles
        CounterRng rng(9, 0);
        bool ok = true;
        for (int trial = 0; trial < 200 && ok; ++trial) {
            const std::size_t n = 2 + rng.below_at(static_cast<std::uint64_t>(trial), 30);
            std::vector<double> y(n), yhat(n);
            for (std::size_t i = 0; i < n; ++i) {
                y[i] = rng.uniform_at(static_cast<std::uint64_t>(trial) * 1000 + 2 * i, -10.0,
                                      10.0);
                yhat[i] = rng.uniform_at(static_cast<std::uint64_t>(trial) * 1000 + 2 * i + 1,
                                         -10.0, 10.0);
            }
            double mean = 0, res = 0, tot = 0, sm = 0;
            for (std::size_t i = 0; i < n; ++i) mean += y[i];
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
                tot += (y[i] - mean) * (y[i] - mean);
                sm += 2 * std::abs(y[i] - yhat[i]) / (std::abs(y[i]) + std::abs(yhat[i]));
            }
            ok = ok && std::abs(metrics::r2(y, yhat) - (1 - res / tot)) < 1e-12;
            ok = ok &&
                 std::abs(metrics::smape(y, yhat).value - sm / static_cast<double>(n)) < 1e-12;
        }
        check("metric oracles < 1e-12 over 200 random vectors", ok);
    }

    std::cout << passed << " passed, " << failed << " failed\n";
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pin-level circuit graphs, GNN surrogates and flow heads"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate a synthetic RC corpus");
    std::string synth_kind = "rc_lowpass";
    int synth_n = 2000;
    std::uint64_t synth_seed = 1;
    std::string synth_out;
    synth->add_option("--kind", synth_kind, "rc_lowpass or rc_bimodal");
    synth->add_option("--n", synth_n, "number of rows");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--out", synth_out, "output directory")->required();

    auto* ing = app.add_subcommand("ingest", "build a graph store from a manifest");
    std::string ing_manifest, ing_out;
    int ing_workers = 0;
    ing->add_option("--manifest", ing_manifest, "corpus manifest JSON")->required();
    ing->add_option("--out", ing_out, "output directory")->required();
    ing->add_option("--workers", ing_workers, "worker threads (0 = auto / PINFLOW_WORKERS)");

    auto* tr = app.add_subcommand("train", "train the surrogate on a graph store");
    std::string tr_store, tr_config, tr_out;
    std::optional<std::uint64_t> tr_seed;
    std::optional<bool> tr_det;
    std::optional<int> tr_precision;
    tr->add_option("--store", tr_store, "graph store (PGF)")->required();
    tr->add_option("--config", tr_config, "train config JSON")->required();
    tr->add_option("--out", tr_out, "output directory")->required();
    tr->add_option("--seed", tr_seed, "override config seed");
    tr->add_option("--deterministic", tr_det, "override deterministic flag");
    tr->add_option("--precision", tr_precision, "32 or 64");

    auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
    std::string ev_store, ev_ckpt, ev_out;
    std::optional<int> ev_mc;
    std::optional<std::uint64_t> ev_seed;
    ev->add_option("--store", ev_store, "graph store (PGF)")->required();
    ev->add_option("--checkpoint", ev_ckpt, "model checkpoint (PFCK)")->required();
    ev->add_option("--out", ev_out, "output directory")->required();
    ev->add_option("--mc-samples", ev_mc, "Monte-Carlo draws per flow head");
    ev->add_option("--seed", ev_seed, "evaluation seed");

    auto* pr = app.add_subcommand("predict", "predict metrics for one netlist");
    std::string pr_ckpt, pr_netlist, pr_params;
    std::optional<int> pr_mc;
    std::optional<std::uint64_t> pr_seed;
    pr->add_option("--checkpoint", pr_ckpt, "model checkpoint (PFCK)")->required();
    pr->add_option("--netlist", pr_netlist, "netlist file")->required();
    pr->add_option("--params", pr_params, "JSON parameter overrides");
    pr->add_option("--mc-samples", pr_mc, "Monte-Carlo draws per flow head");
    pr->add_option("--seed", pr_seed, "sampling seed");

    auto* rp = app.add_subcommand("report", "re-render an evaluation report");
    std::string rp_eval, rp_format = "table";
    rp->add_option("--eval", rp_eval, "evaluation output directory")->required();
    rp->add_option("--format", rp_format, "json, csv or table")
        ->check(CLI::IsMember({"json", "csv", "table"}));

    auto* be = app.add_subcommand("bench", "inference latency benchmark");
    std::string be_ckpt, be_store, be_out;
    int be_reps = 100;
    be->add_option("--checkpoint", be_ckpt, "model checkpoint (PFCK)")->required();
    be->add_option("--store", be_store, "graph store (PGF)")->required();
    be->add_option("--repetitions", be_reps, "single-graph repetitions");
    be->add_option("--out", be_out, "optional output directory");

    auto* st = app.add_subcommand("selftest", "run the built-in invariant suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_kind, synth_n, synth_seed, synth_out);
        if (ing->parsed()) return cmd_ingest(ing_manifest, ing_out, ing_workers);
        if (tr->parsed())
            return cmd_train(tr_store, tr_config, tr_out, tr_seed, tr_det, tr_precision);
        if (ev->parsed()) return cmd_evaluate(ev_store, ev_ckpt, ev_out, ev_mc, ev_seed);
        if (pr->parsed()) return cmd_predict(pr_ckpt, pr_netlist, pr_params, pr_mc, pr_seed);
        if (rp->parsed()) return cmd_report(rp_eval, rp_format);
        if (be->parsed()) return cmd_bench(be_ckpt, be_store, be_reps, be_out);
        if (st->parsed()) return cmd_selftest();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
