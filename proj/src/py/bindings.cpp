#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "pinflow/checkpoint.hpp"
#include "pinflow/dataset.hpp"
#include "pinflow/evaluate.hpp"
#include "pinflow/metrics.hpp"
#include "pinflow/trainer.hpp"

namespace py = pybind11;
using namespace pinflow;

namespace {

TargetSpec targets_from_pairs(const std::vector<std::pair<std::string, std::string>>& heads) {
    TargetSpec t;
    for (const auto& [name, kind] : heads)
        t.heads.push_back({name, "",
                           kind == "probabilistic" ? HeadKind::Probabilistic
                                                   : HeadKind::Deterministic});
    t.check();
    return t;
}

/// Trained surrogate handle: model, scalers and target layout in one object.
struct PyModel {
    Model<float> model;
    Scaler feature_scaler;
    Scaler target_scaler;

    py::dict evaluate_store(const GraphStore& store, int split, int mc_samples,
                            std::uint64_t seed) {
        auto view = store.split_view(static_cast<std::uint8_t>(split));
        EvalConfig cfg;
        cfg.mc_samples = mc_samples;
        cfg.seed = seed;
        const MetricsReport report = evaluate(model, view, feature_scaler, target_scaler, cfg);
        py::dict out;
        for (const auto& hr : report.heads) {
            py::dict entry;
            entry["r2"] = hr.r2 ? py::object(py::float_(*hr.r2)) : py::none();
            entry["mre_avg"] = hr.mre_avg;
            entry["mre_p75"] = hr.mre_p75;
            entry["mre_p90"] = hr.mre_p90;
            entry["frac_lt_2pct"] = hr.frac_lt_2pct;
            entry["frac_lt_5pct"] = hr.frac_lt_5pct;
            entry["frac_gt_20pct"] = hr.frac_gt_20pct;
            entry["nrmse"] = hr.nrmse ? py::object(py::float_(*hr.nrmse)) : py::none();
            entry["smape"] = hr.smape;
            entry["n_eval"] = hr.n_eval;
            entry["n_excluded_zero_truth"] = hr.n_excluded_zero_truth;
            entry["kde_grid"] = hr.kde_truth.grid;
            entry["kde_density_true"] = hr.kde_truth.density;
            entry["kde_density_pred"] = hr.kde_pred.density;
            out[py::str(hr.head)] = entry;
        }
        return out;
    }

    py::dict predict_netlist(const std::string& netlist_text, const std::string& schema_json,
                             int mc_samples, std::uint64_t seed) {
        const FeatureSchema schema = load_schema(schema_json);
        const Circuit circuit = parse_netlist(netlist_text);
        const PinGraph graph = circuit_to_graph(circuit, schema, model.targets);
        std::vector<const PinGraph*> graphs = {&graph};
        GraphBatch<float> batch = make_batch<float>(graphs, {0}, feature_scaler, target_scaler);
        ad::Tape<float> tape(false);
        const ad::Mat<float> hg =
            tape.value(model.encoder.encode(tape, tape.constant(batch.x), batch));

        py::dict out;
        for (std::size_t i = 0; i < model.targets.size(); ++i) {
            py::dict entry;
            if (model.det_heads[i]) {
                ad::Tape<float> head_tape(false);
                const double std_pred = head_tape.value(
                    model.det_head_t(head_tape, i, head_tape.leaf(hg, false)))(0, 0);
                entry["kind"] = "deterministic";
                entry["value"] = invert_target(std_pred, target_scaler, i);
            } else {
                auto& flow = *model.flows[i];
                const ad::Mat<float> draws = flow.sample(hg, mc_samples, seed);
                std::vector<double> inv;
                for (Eigen::Index s = 0; s < draws.rows(); ++s)
                    inv.push_back(invert_target(draws(s, 0), target_scaler, i));
                double mean = 0;
                for (double v : inv) mean += v;
                entry["kind"] = "probabilistic";
                entry["value"] = mean / static_cast<double>(inv.size());
                entry["p05"] = metrics::percentile(inv, 0.05);
                entry["p50"] = metrics::percentile(inv, 0.50);
                entry["p95"] = metrics::percentile(inv, 0.95);
            }
            out[py::str(model.targets.heads[i].name)] = entry;
        }
        return out;
    }

    void save(const std::string& path) {
        CheckpointExtras extras;
        extras.feature_scaler = feature_scaler;
        extras.target_scaler = target_scaler;
        save_checkpoint(model, extras, path);
    }
};

PyModel train_on_store(const GraphStore& store,
                       const std::vector<std::pair<std::string, std::string>>& heads,
                       py::dict model_cfg, py::dict train_cfg) {
    const TargetSpec targets = targets_from_pairs(heads);
    ModelConfig mcfg;
    if (model_cfg.contains("hidden")) mcfg.hidden = model_cfg["hidden"].cast<int>();
    if (model_cfg.contains("layers")) mcfg.layers = model_cfg["layers"].cast<int>();
    if (model_cfg.contains("flow_hidden")) mcfg.flow_hidden = model_cfg["flow_hidden"].cast<int>();
    if (model_cfg.contains("flow_blocks")) mcfg.flow_blocks = model_cfg["flow_blocks"].cast<int>();
    TrainConfig tcfg;
    if (train_cfg.contains("lr")) tcfg.lr = train_cfg["lr"].cast<double>();
    if (train_cfg.contains("weight_decay"))
        tcfg.weight_decay = train_cfg["weight_decay"].cast<double>();
    if (train_cfg.contains("batch_size")) tcfg.batch_size = train_cfg["batch_size"].cast<int>();
    if (train_cfg.contains("max_epochs")) tcfg.max_epochs = train_cfg["max_epochs"].cast<int>();
    if (train_cfg.contains("lr_patience")) tcfg.lr_patience = train_cfg["lr_patience"].cast<int>();
    if (train_cfg.contains("head_patience"))
        tcfg.head_patience = train_cfg["head_patience"].cast<int>();
    if (train_cfg.contains("noise_std")) tcfg.noise_std = train_cfg["noise_std"].cast<double>();
    if (train_cfg.contains("mc_samples")) tcfg.mc_samples = train_cfg["mc_samples"].cast<int>();
    if (train_cfg.contains("seed")) tcfg.seed = train_cfg["seed"].cast<std::uint64_t>();

    auto result = train<float>(store.split_view(0), store.split_view(1), targets, mcfg, tcfg);
    PyModel out;
    out.model = std::move(result.model);
    out.feature_scaler = result.feature_scaler;
    out.target_scaler = result.target_scaler;
    return out;
}

PyModel load_model(const std::string& path) {
    auto loaded = load_checkpoint<float>(path);
    PyModel out;
    out.model = std::move(loaded.model);
    out.feature_scaler = loaded.extras.feature_scaler;
    out.target_scaler = loaded.extras.target_scaler;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "pin-level circuit graphs, GNN surrogates and conditional flow heads";

    py::register_exception<Error>(m, "PinflowError");

    py::enum_<ComponentKind>(m, "ComponentKind")
        .value("MOSFET", ComponentKind::MOSFET)
        .value("RESISTOR", ComponentKind::RESISTOR)
        .value("CAPACITOR", ComponentKind::CAPACITOR)
        .value("INDUCTOR", ComponentKind::INDUCTOR)
        .value("VSOURCE", ComponentKind::VSOURCE)
        .value("ISOURCE", ComponentKind::ISOURCE);

    py::class_<Component>(m, "Component")
        .def_readonly("name", &Component::name)
        .def_readonly("kind", &Component::kind)
        .def_readonly("pins", &Component::pins)
        .def_readonly("params", &Component::params)
        .def_readonly("model", &Component::model);

    py::class_<Circuit>(m, "Circuit")
        .def_readonly("components", &Circuit::components)
        .def_readonly("globals", &Circuit::globals)
        .def_readonly("circuit_class", &Circuit::circuit_class)
        .def("__repr__", [](const Circuit& c) {
            return "<Circuit class=" + c.circuit_class +
                   " components=" + std::to_string(c.components.size()) +
                   " nets=" + std::to_string(c.nets.size()) + ">";
        });

    m.def("parse_netlist", &parse_netlist, py::arg("text"));
    m.def("emit_netlist", &emit_netlist, py::arg("circuit"));
    m.def(
        "parse_si_number", [](const std::string& token) { return parse_si_number(token); },
        py::arg("token"));
    m.def("validate", [](const Circuit& c) {
        py::list out;
        for (const auto& d : validate(c)) {
            py::dict entry;
            entry["level"] = d.level == Diagnostic::Level::Warn ? "warn" : "error";
            entry["code"] = d.code;
            entry["message"] = d.message;
            out.append(entry);
        }
        return out;
    });

    py::class_<FeatureSchema>(m, "FeatureSchema")
        .def_property_readonly("circuit_class",
                               [](const FeatureSchema& s) { return s.circuit_class; })
        .def_property_readonly("feature_dim",
                               [](const FeatureSchema& s) { return s.feature_dim(); })
        .def_property_readonly("hash", [](const FeatureSchema& s) { return s.hash(); });
    m.def("load_schema", &load_schema, py::arg("json_text"));

    py::class_<PinGraph>(m, "PinGraph")
        .def_readonly("n", &PinGraph::n)
        .def_readonly("d", &PinGraph::d)
        .def_readonly("edges", &PinGraph::edges)
        .def_readonly("node_map", &PinGraph::node_map)
        .def_readonly("y", &PinGraph::y)
        .def_readonly("split_tag", &PinGraph::split_tag)
        .def_property_readonly("x", [](const PinGraph& g) {
            ad::Mat<float> x(g.n, g.d);
            for (std::uint32_t v = 0; v < g.n; ++v)
                for (std::uint32_t c = 0; c < g.d; ++c) x(v, c) = g.at(v, c);
            return x;
        });
    m.def(
        "circuit_to_graph",
        [](const Circuit& c, const FeatureSchema& s, const std::vector<std::string>& head_names,
           const std::vector<double>& y, const std::vector<bool>& mask) {
            TargetSpec targets;
            for (const auto& name : head_names)
                targets.heads.push_back({name, "", HeadKind::Deterministic});
            std::vector<std::uint8_t> m8(mask.begin(), mask.end());
            return circuit_to_graph(c, s, targets, y, m8);
        },
        py::arg("circuit"), py::arg("schema"), py::arg("heads"),
        py::arg("y") = std::vector<double>{}, py::arg("mask") = std::vector<bool>{});

    py::class_<GraphStore>(m, "GraphStore")
        .def_readonly("schema_hash", &GraphStore::schema_hash)
        .def_readonly("n_heads", &GraphStore::n_heads)
        .def_readonly("records", &GraphStore::records)
        .def("__len__", [](const GraphStore& s) { return s.records.size(); })
        .def("split_sizes", [](const GraphStore& s) {
            py::dict out;
            out["train"] = s.split_view(0).size();
            out["val"] = s.split_view(1).size();
            out["test"] = s.split_view(2).size();
            return out;
        });
    m.def("save_store", &save_store, py::arg("store"), py::arg("path"));
    m.def("load_store", &load_store, py::arg("path"));
    m.def(
        "generate_synthetic_corpus",
        [](const std::string& kind, int n, std::uint64_t seed, const std::string& out_dir) {
            return generate_synthetic_corpus(kind, n, seed, out_dir).manifest_path;
        },
        py::arg("kind"), py::arg("n"), py::arg("seed"), py::arg("out_dir"));
    m.def(
        "ingest",
        [](const std::string& manifest_path, int workers) {
            return ingest(load_manifest(manifest_path), workers);
        },
        py::arg("manifest_path"), py::arg("workers") = 0);
    m.def("crc64", [](py::bytes data) {
        const std::string s = data;
        return crc64(s.data(), s.size());
    });

    auto mm = m.def_submodule("metrics");
    mm.def("r2", &metrics::r2);
    mm.def("nrmse", &metrics::nrmse);
    mm.def("smape", [](const std::vector<double>& y, const std::vector<double>& yhat) {
        return metrics::smape(y, yhat).value;
    });
    mm.def("percentile", &metrics::percentile);
    mm.def("mre_stats", [](const std::vector<double>& y, const std::vector<double>& yhat) {
        const auto s = metrics::mre_stats(y, yhat);
        py::dict out;
        out["avg"] = s.avg;
        out["p75"] = s.p75;
        out["p90"] = s.p90;
        out["frac_lt_2pct"] = s.frac_lt_2pct;
        out["frac_lt_5pct"] = s.frac_lt_5pct;
        out["frac_gt_20pct"] = s.frac_gt_20pct;
        out["n_eval"] = s.n_eval;
        out["n_excluded"] = s.n_excluded;
        return out;
    });
    mm.def(
        "kde",
        [](const std::vector<double>& values, const std::vector<double>& grid, double bandwidth) {
            const auto curve = metrics::kde(values, grid, bandwidth);
            return py::make_tuple(curve.grid, curve.density, curve.bandwidth);
        },
        py::arg("values"), py::arg("grid"), py::arg("bandwidth") = 0.0);
    mm.def("silverman_bandwidth", &metrics::silverman_bandwidth);

    py::class_<Flow<double>>(m, "Flow")
        .def(py::init([](int dim, int context, int hidden, int blocks, std::uint64_t seed) {
                 Flow<double> f;
                 f.dim = dim;
                 f.context = context;
                 f.hidden = hidden;
                 f.n_blocks = blocks;
                 f.head_name = "py";
                 f.init(CounterRng(seed, rng_stream::kWeightInit));
                 return f;
             }),
             py::arg("dim") = 1, py::arg("context") = 1, py::arg("hidden") = 128,
             py::arg("blocks") = 10, py::arg("seed") = 0)
        .def("forward",
             [](Flow<double>& f, const ad::Mat<double>& y, const ad::Mat<double>& h) {
                 auto [z, logdet] = f.forward(y, h);
                 return py::make_tuple(z, logdet);
             })
        .def("inverse", &Flow<double>::inverse)
        .def("log_prob", &Flow<double>::log_prob)
        .def("sample", &Flow<double>::sample, py::arg("h"), py::arg("n"), py::arg("seed"))
        .def("mc_mean", &Flow<double>::mc_mean, py::arg("h"), py::arg("S"), py::arg("seed"))
        .def("nll", &Flow<double>::nll);

    py::class_<CounterRng>(m, "CounterRng")
        .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"), py::arg("stream") = 0)
        .def("word_at", &CounterRng::word_at)
        .def("uniform_at", [](const CounterRng& r, std::uint64_t c) { return r.uniform_at(c); })
        .def("normal_at", &CounterRng::normal_at);

    py::class_<PyModel>(m, "TrainedModel")
        .def("evaluate", &PyModel::evaluate_store, py::arg("store"), py::arg("split") = 2,
             py::arg("mc_samples") = 256, py::arg("seed") = 17)
        .def("predict", &PyModel::predict_netlist, py::arg("netlist_text"), py::arg("schema_json"),
             py::arg("mc_samples") = 256, py::arg("seed") = 17)
        .def("save", &PyModel::save, py::arg("path"));
    m.def("train", &train_on_store, py::arg("store"), py::arg("heads"),
          py::arg("model_cfg") = py::dict(), py::arg("train_cfg") = py::dict());
    m.def("load_model", &load_model, py::arg("path"));
}
