// Acceptance suite. Each criterion runs standalone (--criterion N) or as the
// full battery, prints one PASS/FAIL/SKIP line with measured values, and the
// process exits nonzero if any executed criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pinflow/checkpoint.hpp"
#include "pinflow/dataset.hpp"
#include "pinflow/evaluate.hpp"
#include "pinflow/trainer.hpp"

namespace fs = std::filesystem;
using namespace pinflow;
using ad::Mat;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

fs::path scratch_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("pinflow_acceptance_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

template <typename T>
Flow<T> make_flow(int dim, int context, int hidden, int blocks, std::uint64_t seed) {
    Flow<T> f;
    f.dim = dim;
    f.context = context;
    f.hidden = hidden;
    f.n_blocks = blocks;
    f.head_name = "acc";
    f.init(CounterRng(seed, rng_stream::kWeightInit));
    return f;
}

template <typename T>
void perturb_flow(Flow<T>& flow, std::uint64_t seed, double amplitude) {
    CounterRng rng(seed, 99);
    std::uint64_t ctr = 0;
    flow.for_each_param([&](ad::Param<T>& p) {
        for (Eigen::Index i = 0; i < p.value.size(); ++i)
            p.value.data()[i] += static_cast<T>(rng.uniform_at(ctr++, -amplitude, amplitude));
    });
}

// --- criterion 1: flow exactness ------------------------------------------

Outcome criterion_1() {
    auto ident = make_flow<float>(1, 8, 128, 10, 1);
    Mat<float> h = Mat<float>::Zero(1, 8);
    CounterRng hr(11, 0);
    for (int j = 0; j < 8; ++j)
        h(0, j) = static_cast<float>(hr.uniform_at(static_cast<std::uint64_t>(j), -1.0, 1.0));
    auto [z0, logdet0] = ident.forward(Mat<float>::Zero(1, 1), h);
    const double lp0 = ident.log_prob(Mat<float>::Zero(1, 1), h)(0, 0);
    const bool identity_ok =
        std::abs(lp0 - (-0.918939)) < 1e-6 && logdet0(0, 0) == 0.0f && z0(0, 0) == 0.0f;

    auto flow = make_flow<float>(1, 8, 64, 10, 2);
    perturb_flow(flow, 3, 0.2);
    const int n = 10000;
    CounterRng rng(4, 0);
    std::uint64_t ctr = 0;
    Mat<float> y(n, 1), hs(n, 8);
    for (int i = 0; i < n; ++i) {
        y(i, 0) = static_cast<float>(rng.uniform_at(ctr++, -4.0, 4.0));
        for (int j = 0; j < 8; ++j)
            hs(i, j) = static_cast<float>(rng.uniform_at(ctr++, -1.0, 1.0));
    }
    auto [z, logdet] = flow.forward(y, hs);
    const double rt = static_cast<double>((flow.inverse(z, hs) - y).cwiseAbs().maxCoeff());

    Outcome out;
    out.pass = identity_ok && rt < 1e-5;
    out.detail = "log_prob(0)=" + fmt(lp0) + ", logdet=" + fmt(logdet0(0, 0)) +
                 ", max round-trip err=" + fmt(rt) + " over 1e4 pairs";
    return out;
}

// --- criterion 2: density normalization ------------------------------------

Outcome criterion_2() {
    const double step = 1e-3;
    const int n_points = static_cast<int>(std::round(24.0 / step)) + 1;
    double worst = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
        // Mix of compact and default-sized conditioners.
        const bool big = draw % 10 == 0;
        const int hidden = big ? 128 : 32;
        const int blocks = big ? 10 : 3;
        auto flow = make_flow<double>(1, 4, hidden, blocks,
                                      static_cast<std::uint64_t>(draw) + 50);
        // Amplitude scaled so the pushed-forward mass stays inside [-12, 12].
        perturb_flow(flow, static_cast<std::uint64_t>(draw) + 500,
                     1.5 / std::sqrt(static_cast<double>(hidden) * blocks));
        CounterRng rng(static_cast<std::uint64_t>(draw), 7);
        for (int c = 0; c < 5; ++c) {
            Mat<double> h(1, 4);
            for (int j = 0; j < 4; ++j)
                h(0, j) = rng.uniform_at(
                    static_cast<std::uint64_t>(c) * 16 + static_cast<std::uint64_t>(j), -1.0,
                    1.0);
            Mat<double> ys(n_points, 1), hs(n_points, 4);
            for (int i = 0; i < n_points; ++i) {
                ys(i, 0) = -12.0 + step * i;
                hs.row(i) = h.row(0);
            }
            const Mat<double> lp = flow.log_prob(ys, hs);
            double integral = 0.0;
            for (int i = 0; i + 1 < n_points; ++i)
                integral += 0.5 * (std::exp(lp(i, 0)) + std::exp(lp(i + 1, 0))) * step;
            worst = std::max(worst, std::abs(integral - 1.0));
        }
    }
    Outcome out;
    out.pass = worst < 1e-3;
    out.detail = "max |integral-1| = " + fmt(worst) + " over 20 draws x 5 contexts";
    return out;
}

// --- criterion 3: triangular Jacobian at D=3 --------------------------------

Outcome criterion_3() {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto flow = make_flow<double>(3, 2, 16, 3, static_cast<std::uint64_t>(trial) + 200);
        perturb_flow(flow, static_cast<std::uint64_t>(trial) + 900, 0.3);
        CounterRng rng(static_cast<std::uint64_t>(trial), 13);
        std::uint64_t ctr = 0;
        Mat<double> y(1, 3), h(1, 2);
        for (int j = 0; j < 3; ++j) y(0, j) = rng.uniform_at(ctr++, -1.5, 1.5);
        for (int j = 0; j < 2; ++j) h(0, j) = rng.uniform_at(ctr++, -1.0, 1.0);

        auto [z, logdet] = flow.forward(y, h);
        const double eps = 1e-6;
        Eigen::Matrix3d jac;
        for (int j = 0; j < 3; ++j) {
            Mat<double> up = y, dn = y;
            up(0, j) += eps;
            dn(0, j) -= eps;
            auto [zu, lu] = flow.forward(up, h);
            auto [zd, ld] = flow.forward(dn, h);
            for (int i = 0; i < 3; ++i) jac(i, j) = (zu(0, i) - zd(0, i)) / (2 * eps);
        }
        worst = std::max(worst, std::abs(logdet(0, 0) - std::log(std::abs(jac.determinant()))));
    }
    Outcome out;
    out.pass = worst < 1e-4;
    out.detail = "max |logdet - fd log|det|| = " + fmt(worst) + " over 100 cases";
    return out;
}

// --- criterion 4: full-model gradient correctness ---------------------------

Outcome criterion_4() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        TargetSpec targets;
        targets.heads.push_back({"det", "", HeadKind::Deterministic});
        targets.heads.push_back({"prob", "", HeadKind::Probabilistic});
        Model<double> model;
        model.cfg = ModelConfig{3, 6, 2, 8, 2, seed + 1000};
        model.targets = targets;
        model.init();
        // Nonzero deterministic head so trunk gradients flow through both paths.
        CounterRng rng(seed, 17);
        std::uint64_t ctr = 0;
        for (int j = 0; j < 6; ++j)
            model.det_heads[0]->w.value(0, j) = rng.uniform_at(ctr++, -0.5, 0.5);

        GraphBatch<double> batch;
        batch.node_graph.assign(5, 0);
        batch.n_graphs = 1;
        // 5-node seeded graph: path plus one seeded chord.
        std::vector<std::pair<int, int>> edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}};
        const int a = static_cast<int>(rng.below_at(ctr++, 5));
        const int b = static_cast<int>(rng.below_at(ctr++, 5));
        if (a != b) edges.push_back({a, b});
        for (auto [u, v] : edges) {
            batch.edge_src.push_back(u);
            batch.edge_dst.push_back(v);
            batch.edge_src.push_back(v);
            batch.edge_dst.push_back(u);
        }
        batch.y_std = Mat<double>(1, 2);
        batch.y_std << rng.uniform_at(ctr++, -1.0, 1.0), rng.uniform_at(ctr++, -1.0, 1.0);
        batch.mask = Mat<double>::Ones(1, 2);
        batch.x = Mat<double>::Zero(5, 3);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 3; ++j) batch.x(i, j) = rng.uniform_at(ctr++, -1.0, 1.0);

        worst = std::max(worst, gradient_check(model, batch));
    }
    Outcome out;
    out.pass = worst < 1e-5;
    out.detail = "max relative deviation = " + fmt(worst) + " over 20 seeded 5-node graphs";
    return out;
}

// --- criterion 5: encoder invariances ---------------------------------------

Outcome criterion_5() {
    float worst = 0.0f;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Encoder<float> enc;
        enc.input_dim = 5;
        enc.hidden = 16;
        enc.n_layers = 4;
        enc.init(CounterRng(seed + 3000, rng_stream::kWeightInit));
        CounterRng rng(seed, 23);
        std::uint64_t ctr = 0;
        const int n = 3 + static_cast<int>(rng.below_at(ctr++, 8));
        GraphBatch<float> batch;
        batch.x = Mat<float>::Zero(n, 5);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 5; ++j)
                batch.x(i, j) = static_cast<float>(rng.uniform_at(ctr++, -1.0, 1.0));
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
        for (int e = 0; e < n; ++e) {
            const int u = static_cast<int>(rng.below_at(ctr++, static_cast<std::uint64_t>(n)));
            const int v = static_cast<int>(rng.below_at(ctr++, static_cast<std::uint64_t>(n)));
            if (u != v) edges.push_back({u, v});
        }
        for (auto [u, v] : edges) {
            batch.edge_src.push_back(u);
            batch.edge_dst.push_back(v);
            batch.edge_src.push_back(v);
            batch.edge_dst.push_back(u);
        }
        batch.node_graph.assign(static_cast<std::size_t>(n), 0);
        batch.n_graphs = 1;

        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        counter_shuffle(perm, CounterRng(seed, 29));
        GraphBatch<float> pbatch = batch;
        for (int i = 0; i < n; ++i)
            pbatch.x.row(perm[static_cast<std::size_t>(i)]) = batch.x.row(i);
        for (std::size_t e = 0; e < batch.edge_src.size(); ++e) {
            pbatch.edge_src[e] = perm[static_cast<std::size_t>(batch.edge_src[e])];
            pbatch.edge_dst[e] = perm[static_cast<std::size_t>(batch.edge_dst[e])];
        }
        ad::Tape<float> t1(false), t2(false);
        const Mat<float> one = t1.value(enc.encode(t1, t1.constant(batch.x), batch));
        const Mat<float> two = t2.value(enc.encode(t2, t2.constant(pbatch.x), pbatch));
        worst = std::max(worst, (one - two).cwiseAbs().maxCoeff());
    }

    // 4-hop receptive field on the 5-node path, exact as stated.
    Encoder<double> enc;
    enc.input_dim = 2;
    enc.hidden = 8;
    enc.n_layers = 4;
    enc.init(CounterRng(4242, rng_stream::kWeightInit));
    GraphBatch<double> path;
    path.x = Mat<double>(5, 2);
    path.x << 0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7, 0.8, -0.9, 1.0;
    for (int i = 0; i + 1 < 5; ++i) {
        path.edge_src.push_back(i);
        path.edge_dst.push_back(i + 1);
        path.edge_src.push_back(i + 1);
        path.edge_dst.push_back(i);
    }
    path.node_graph.assign(5, 0);
    path.n_graphs = 1;
    auto base = enc.layer_embeddings(path);
    GraphBatch<double> bumped_batch = path;
    bumped_batch.x(4, 0) += 0.5;
    auto bumped = enc.layer_embeddings(bumped_batch);
    bool hops_ok = true;
    for (int k = 1; k <= 4; ++k) {
        const double delta = (base[static_cast<std::size_t>(k - 1)].row(0) -
                              bumped[static_cast<std::size_t>(k - 1)].row(0))
                                 .cwiseAbs()
                                 .maxCoeff();
        hops_ok = hops_ok && (k < 4 ? delta == 0.0 : delta > 0.0);
    }

    Outcome out;
    out.pass = worst < 1e-5f && hops_ok;
    out.detail = "max permutation deviation = " + fmt(worst) + " over 100 graphs; 4-hop " +
                 (hops_ok ? "exact" : "violated");
    return out;
}

// --- criterion 6: bimodal fitting -------------------------------------------
// The affine autoregressive family with D=1 and a fixed context composes to a
// single affine map, whose pushforward of the normal base is Gaussian. The
// criterion is asserted exactly as stated; the distance to the true mixture
// NLL cannot drop below the moment-matched-Gaussian floor, which the printout
// includes for comparison.

Outcome criterion_6() {
    auto flow = make_flow<double>(1, 1, 32, 5, 60);
    CounterRng data_rng(61, 0);
    const int n_train = 10000, n_held = 2000;
    auto draw = [&](std::uint64_t i) {
        const double mode = data_rng.uniform_at(3 * i) < 0.5 ? -2.0 : 2.0;
        return mode + 0.5 * data_rng.normal_at(i);
    };
    Mat<double> y_train(n_train, 1), y_held(n_held, 1);
    for (int i = 0; i < n_train; ++i) y_train(i, 0) = draw(static_cast<std::uint64_t>(i));
    for (int i = 0; i < n_held; ++i)
        y_held(i, 0) = draw(static_cast<std::uint64_t>(n_train + i));

    AdamW<double> opt(AdamWConfig{1e-2, 0.0});
    const int batch = 1000;
    for (int step = 0; step < 600; ++step) {
        const int start = (step * batch) % n_train;
        const int count = std::min(batch, n_train - start);
        Mat<double> yb = y_train.middleRows(start, count);
        Mat<double> hb = Mat<double>::Ones(count, 1);
        flow.for_each_param([](ad::Param<double>& p) { p.zero_grad(); });
        ad::Tape<double> tape(true);
        auto lp = flow.log_prob_t(tape, tape.constant(yb), tape.constant(hb));
        tape.backward(tape.scale(tape.sum(lp), -1.0 / count));
        flow.for_each_param([&](ad::Param<double>& p) { opt.step(p); });
    }

    const double nll_flow = flow.nll(y_held, Mat<double>::Ones(n_held, 1));
    auto log_mix = [](double v) {
        const double a = std::exp(-0.5 * (v + 2.0) * (v + 2.0) / 0.25);
        const double b = std::exp(-0.5 * (v - 2.0) * (v - 2.0) / 0.25);
        return std::log(0.5 * (a + b) / std::sqrt(2.0 * M_PI * 0.25));
    };
    double nll_true = 0.0;
    for (int i = 0; i < n_held; ++i) nll_true -= log_mix(y_held(i, 0));
    nll_true /= n_held;

    const Mat<double> draws = flow.sample(Mat<double>::Ones(1, 1), 50000, 9);
    int below = 0;
    for (Eigen::Index i = 0; i < draws.rows(); ++i)
        if (draws(i, 0) < 0.0) ++below;
    const double frac_below = static_cast<double>(below) / static_cast<double>(draws.rows());

    const double gap = std::abs(nll_flow - nll_true);
    const double gaussian_floor = 0.5 * std::log(2.0 * M_PI * M_E * 4.25);
    Outcome out;
    out.pass = gap <= 0.05 && std::abs(frac_below - 0.5) <= 0.05;
    out.detail = "held-out NLL " + fmt(nll_flow) + " vs true " + fmt(nll_true) + " (gap " +
                 fmt(gap) + ", limit 0.05; affine-family floor " + fmt(gaussian_floor) +
                 "); mass below 0: " + fmt(100 * frac_below) + "%";
    return out;
}

// --- criterion 7: end-to-end synthetic regression ---------------------------

json synth_train_config(bool bimodal) {
    // The cutoff target is noiseless and steep near the low-R/low-C corner in
    // min-max space, so these runs train without feature noise and give the
    // deterministic fit a long schedule.
    json cfg;
    cfg["targets"] = json::array();
    cfg["targets"].push_back(
        {{"name", "log10_fc"}, {"unit", "log10(Hz)"}, {"kind", "deterministic"}});
    if (bimodal)
        cfg["targets"].push_back(
            {{"name", "t"}, {"unit", "log10(Hz)"}, {"kind", "probabilistic"}});
    cfg["model"] = {{"hidden", bimodal ? 64 : 96},
                    {"layers", 4},
                    {"flow_hidden", 48},
                    {"flow_blocks", 5}};
    cfg["train"] = {{"lr", 1e-3},
                    {"weight_decay", 1e-5},
                    {"beta1", 0.9},
                    {"beta2", 0.999},
                    {"eps", 1e-8},
                    {"batch_size", 64},
                    {"max_epochs", bimodal ? 300 : 800},
                    {"lr_patience", 20},
                    {"lr_factor", 0.5},
                    {"head_patience", bimodal ? 40 : 100},
                    {"noise_std", 0.0},
                    {"mc_samples", 256},
                    {"seed", 7},
                    {"deterministic", true},
                    {"precision", 32}};
    return cfg;
}

TargetSpec targets_of(const json& cfg) {
    TargetSpec targets;
    for (const auto& h : cfg["targets"])
        targets.heads.push_back({h["name"].get<std::string>(), "",
                                 h["kind"] == "probabilistic" ? HeadKind::Probabilistic
                                                              : HeadKind::Deterministic});
    return targets;
}

template <typename T>
TrainResult<T> run_pipeline(const std::string& kind, const json& cfg, const fs::path& dir,
                            GraphStore& store_out) {
    const auto corpus = generate_synthetic_corpus(kind, 2000, 1, dir.string());
    const CorpusManifest manifest = load_manifest(corpus.manifest_path);
    store_out = ingest(manifest, 0);

    ModelConfig mcfg;
    mcfg.hidden = cfg["model"]["hidden"].get<int>();
    mcfg.layers = cfg["model"]["layers"].get<int>();
    mcfg.flow_hidden = cfg["model"]["flow_hidden"].get<int>();
    mcfg.flow_blocks = cfg["model"]["flow_blocks"].get<int>();
    TrainConfig tcfg;
    tcfg.lr = cfg["train"]["lr"].get<double>();
    tcfg.weight_decay = cfg["train"]["weight_decay"].get<double>();
    tcfg.batch_size = cfg["train"]["batch_size"].get<int>();
    tcfg.max_epochs = cfg["train"]["max_epochs"].get<int>();
    tcfg.lr_patience = cfg["train"]["lr_patience"].get<int>();
    tcfg.head_patience = cfg["train"]["head_patience"].get<int>();
    tcfg.noise_std = cfg["train"]["noise_std"].get<double>();
    tcfg.mc_samples = cfg["train"]["mc_samples"].get<int>();
    tcfg.seed = cfg["train"]["seed"].get<std::uint64_t>();

    return train<T>(store_out.split_view(0), store_out.split_view(1), targets_of(cfg), mcfg,
                    tcfg);
}

Outcome criterion_7() {
    Outcome out;

    // Deterministic target on rc_lowpass.
    const auto dir_a = scratch_dir("c7_lowpass");
    GraphStore store_a;
    const json cfg_a = synth_train_config(false);
    auto result_a = run_pipeline<float>("rc_lowpass", cfg_a, dir_a, store_a);
    const MetricsReport report = evaluate(result_a.model, store_a.split_view(2),
                                          result_a.feature_scaler, result_a.target_scaler);
    const double smape_pct = 100.0 * report.heads[0].smape;
    const double r2 = report.heads[0].r2.value_or(-1.0);

    // Probabilistic head on rc_bimodal: pooled per-row two-sided coverage.
    const auto dir_b = scratch_dir("c7_bimodal");
    GraphStore store_b;
    const json cfg_b = synth_train_config(true);
    auto result_b = run_pipeline<float>("rc_bimodal", cfg_b, dir_b, store_b);
    auto test_view = store_b.split_view(2);
    auto& flow = *result_b.model.flows[1];
    std::size_t below = 0, total = 0;
    const int draws_per_row = 512;
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < test_view.size(); start += kChunk) {
        std::vector<std::size_t> idx(std::min(kChunk, test_view.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        GraphBatch<float> batch =
            make_batch<float>(test_view, idx, result_b.feature_scaler, result_b.target_scaler);
        ad::Tape<float> tape(false);
        const Mat<float> hg =
            tape.value(result_b.model.encoder.encode(tape, tape.constant(batch.x), batch));
        for (Eigen::Index b = 0; b < hg.rows(); ++b) {
            const PinGraph& g = *test_view[idx[static_cast<std::size_t>(b)]];
            const double center = g.y[0];  // log10_fc is the mixture center of t
            Mat<float> h_row = hg.row(b);
            const Mat<float> draws = flow.sample(
                h_row, draws_per_row,
                1234 + static_cast<std::uint64_t>(idx[static_cast<std::size_t>(b)]));
            for (Eigen::Index s = 0; s < draws.rows(); ++s) {
                const double value = invert_target(draws(s, 0), result_b.target_scaler, 1);
                if (value < center) ++below;
                ++total;
            }
        }
    }
    const double coverage = static_cast<double>(below) / static_cast<double>(total);

    const bool det_ok = smape_pct < 5.0 && r2 > 0.95;
    const bool cov_ok = std::abs(coverage - 0.5) <= 0.05;
    out.pass = det_ok && cov_ok;
    out.detail = "lowpass: sMAPE " + fmt(smape_pct) + "% (<5), R2 " + fmt(r2) +
                 " (>0.95), epochs " + std::to_string(result_a.epochs_run) +
                 "; bimodal pooled below-center mass " + fmt(100 * coverage) + "% (50+-5)";
    return out;
}

// --- criterion 8: metric oracles --------------------------------------------

Outcome criterion_8() {
    CounterRng rng(81, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below_at(static_cast<std::uint64_t>(trial) * 7919, 49);
        std::vector<double> y(n), yhat(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform_at(static_cast<std::uint64_t>(trial) * 8192 + 2 * i, -10.0, 10.0);
            yhat[i] =
                rng.uniform_at(static_cast<std::uint64_t>(trial) * 8192 + 2 * i + 1, -10.0, 10.0);
        }
        double mean = 0, res = 0, tot = 0, sm = 0, mre = 0, lo = y[0], hi = y[0];
        for (std::size_t i = 0; i < n; ++i) mean += y[i];
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
            tot += (y[i] - mean) * (y[i] - mean);
            sm += 2 * std::abs(y[i] - yhat[i]) / (std::abs(y[i]) + std::abs(yhat[i]));
            mre += std::abs(y[i] - yhat[i]) / std::abs(y[i]);
            lo = std::min(lo, y[i]);
            hi = std::max(hi, y[i]);
        }
        worst = std::max(worst, std::abs(metrics::r2(y, yhat) - (1 - res / tot)));
        worst = std::max(worst, std::abs(metrics::nrmse(y, yhat) -
                                         std::sqrt(res / static_cast<double>(n)) / (hi - lo)));
        worst = std::max(worst,
                         std::abs(metrics::smape(y, yhat).value - sm / static_cast<double>(n)));
        worst = std::max(
            worst, std::abs(metrics::mre_stats(y, yhat).avg - mre / static_cast<double>(n)));

        // kde vs a direct kernel sum at one probe point
        const double probe = rng.uniform_at(static_cast<std::uint64_t>(trial) + 77, -10.0, 10.0);
        const double bw = 0.8;
        const auto curve = metrics::kde(y, {probe}, bw);
        double direct = 0.0;
        for (double v : y) direct += std::exp(-0.5 * (probe - v) * (probe - v) / (bw * bw));
        direct /= static_cast<double>(n) * bw * std::sqrt(2.0 * M_PI);
        worst = std::max(worst, std::abs(curve.density[0] - direct));
    }

    // Hand-worked examples reproduce exactly.
    bool hands_ok = true;
    hands_ok = hands_ok && std::abs(metrics::r2({0, 1, 2}, {0, 1, 1}) - 0.5) < 1e-15;
    hands_ok = hands_ok && std::abs(metrics::mre_stats({2}, {1}).avg - 0.5) < 1e-15;
    {
        const auto s = metrics::mre_stats({1, 0}, {1.1, 5});
        hands_ok = hands_ok && s.n_excluded == 1 && std::abs(s.avg - 0.1) < 1e-12;
    }
    hands_ok = hands_ok &&
               std::abs(metrics::nrmse({0, 1, 2}, {1, 1, 1}) - std::sqrt(2.0 / 3.0) / 2.0) < 1e-12;
    hands_ok = hands_ok && std::abs(metrics::smape({2}, {1}).value - 2.0 / 3.0) < 1e-12;
    hands_ok = hands_ok && std::abs(metrics::kde({0.0}, {0.0}, 1.0).density[0] -
                                    1.0 / std::sqrt(2.0 * M_PI)) < 1e-12;
    {
        const auto one = metrics::mre_stats({4.0}, {5.0});  // n=1 percentile collapse
        hands_ok = hands_ok && one.p75 == one.p90 && std::abs(one.p75 - 0.25) < 1e-15;
    }

    Outcome out;
    out.pass = worst < 1e-12 && hands_ok;
    out.detail = "max |metric - brute force| = " + fmt(worst) +
                 " over 1000 vectors; hand-worked examples " + (hands_ok ? "exact" : "WRONG");
    return out;
}

// --- criterion 9: determinism ------------------------------------------------

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

Outcome criterion_9() {
    const auto dir = scratch_dir("c9");
    const auto corpus = generate_synthetic_corpus("rc_bimodal", 200, 5, dir.string());
    const CorpusManifest manifest = load_manifest(corpus.manifest_path);

    const GraphStore store_1 = ingest(manifest, 1);
    const GraphStore store_8 = ingest(manifest, 8);
    const bool stores_equal = store_to_bytes(store_1) == store_to_bytes(store_8);

    TargetSpec targets;
    targets.heads.push_back({"log10_fc", "", HeadKind::Deterministic});
    targets.heads.push_back({"t", "", HeadKind::Probabilistic});
    ModelConfig mcfg;
    mcfg.hidden = 16;
    mcfg.layers = 2;
    mcfg.flow_hidden = 16;
    mcfg.flow_blocks = 3;
    TrainConfig tcfg;
    tcfg.max_epochs = 10;
    tcfg.seed = 21;
    tcfg.batch_size = 32;

    std::string ckpt[2], report[2];
    for (int run = 0; run < 2; ++run) {
        auto result =
            train<float>(store_1.split_view(0), store_1.split_view(1), targets, mcfg, tcfg);
        CheckpointExtras extras;
        extras.feature_scaler = result.feature_scaler;
        extras.target_scaler = result.target_scaler;
        const std::string path = (dir / ("ckpt" + std::to_string(run) + ".pfck")).string();
        save_checkpoint(result.model, extras, path);
        ckpt[run] = file_bytes(path);
        const MetricsReport rep = evaluate(result.model, store_1.split_view(2),
                                           result.feature_scaler, result.target_scaler);
        report[run] = rep.to_json().dump();
    }
    const bool ckpt_equal = ckpt[0] == ckpt[1];
    const bool report_equal = report[0] == report[1];

    Outcome out;
    out.pass = stores_equal && ckpt_equal && report_equal;
    out.detail = std::string("stores byte-identical across 1 vs 8 workers: ") +
                 (stores_equal ? "yes" : "NO") + "; checkpoints: " + (ckpt_equal ? "yes" : "NO") +
                 "; reports: " + (report_equal ? "yes" : "NO");
    return out;
}

// --- criterion 10: inference latency ----------------------------------------

Outcome criterion_10() {
    // 16-section RC ladder: 64 pins, default-size model, one head of each kind.
    std::ostringstream netlist;
    netlist << ".class LADDER\n";
    for (int i = 0; i < 16; ++i) {
        netlist << "R" << i << " n" << i << " n" << i + 1 << " 1k\n";
        netlist << "C" << i << " n" << i + 1 << " gnd 1n\n";
    }
    std::ostringstream schema;
    schema << R"({"circuit_class":"LADDER","symmetry_groups":{"res":[)";
    for (int i = 0; i < 16; ++i) schema << (i ? "," : "") << "\"R" << i << "\"";
    schema << R"(],"cap":[)";
    for (int i = 0; i < 16; ++i) schema << (i ? "," : "") << "\"C" << i << "\"";
    schema << R"(]},"slots":[{"group":"res","param":"value"},{"group":"cap","param":"value"}]})";

    const Circuit circuit = parse_netlist(netlist.str());
    const FeatureSchema fs_schema = load_schema(schema.str());
    TargetSpec targets;
    targets.heads.push_back({"det", "", HeadKind::Deterministic});
    targets.heads.push_back({"prob", "", HeadKind::Probabilistic});
    const PinGraph graph = circuit_to_graph(circuit, fs_schema, targets);

    Model<float> model;
    model.cfg = ModelConfig{static_cast<int>(graph.d), 128, 4, 128, 10, 3};
    model.targets = targets;
    model.init();
    Scaler fscale;
    fscale.kind = Scaler::Kind::MinMaxFeature;
    fscale.lo.assign(graph.d, 0.0);
    fscale.hi.assign(graph.d, 1000.0);
    Scaler tscale;
    tscale.kind = Scaler::Kind::ZScoreTarget;
    tscale.lo = {0.0, 0.0};
    tscale.hi = {1.0, 1.0};

    std::vector<const PinGraph*> graphs = {&graph};
    EvalConfig cfg;
    cfg.mc_samples = 256;
    const TimingStats stats = timing_benchmark(model, graphs, fscale, tscale, 30, cfg);

    Outcome out;
    out.pass = stats.median_ms < 50.0;
    out.detail = "median " + fmt(stats.median_ms) + " ms (min " + fmt(stats.min_ms) + ", mean " +
                 fmt(stats.mean_ms) + ", batch-64 amortized " + fmt(stats.batch64_per_graph_ms) +
                 ") on a " + std::to_string(graph.n) + "-node graph, S=256";
    return out;
}

// --- criterion 11: optional public-dataset smoke -----------------------------

Outcome criterion_11() {
    const char* manifest_path = std::getenv("PINFLOW_SMOKE_MANIFEST");
    Outcome out;
    if (!manifest_path || !fs::exists(manifest_path)) {
        out.pass = true;
        out.skipped = true;
        out.detail = "no manifest at $PINFLOW_SMOKE_MANIFEST; skipped";
        return out;
    }
    const CorpusManifest manifest = load_manifest(manifest_path);
    const GraphStore store = ingest(manifest, 0);
    if (store.records.size() < 500) {
        out.pass = false;
        out.detail = "manifest yields only " + std::to_string(store.records.size()) +
                     " rows (need >= 500)";
        return out;
    }
    TargetSpec targets;
    for (const auto& name : manifest.target_order)
        targets.heads.push_back({name, "", HeadKind::Deterministic});
    ModelConfig mcfg;
    mcfg.hidden = 64;
    mcfg.layers = 4;
    TrainConfig tcfg;
    tcfg.max_epochs = 10;
    auto result = train<float>(store.split_view(0), store.split_view(1), targets, mcfg, tcfg);
    const MetricsReport report = evaluate(result.model, store.split_view(2),
                                          result.feature_scaler, result.target_scaler);
    const std::string table = report.to_table();
    bool rows_ok = true;
    for (const char* row : {"R2", "Avg. MRE", "MRE P75", "MRE P90", "MRE<2%", "MRE<5%", "MRE>20%",
                            "NRMSE", "sMAPE"})
        rows_ok = rows_ok && table.find(row) != std::string::npos;
    out.pass = rows_ok;
    out.detail = "ingest+train+evaluate completed on " + std::to_string(store.records.size()) +
                 " rows; benchmark rows " + (rows_ok ? "present" : "MISSING");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--criterion" && i + 1 < argc) only = std::atoi(argv[i + 1]);

    const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, criterion_1}, {2, criterion_2},  {3, criterion_3},  {4, criterion_4},
        {5, criterion_5}, {6, criterion_6},  {7, criterion_7},  {8, criterion_8},
        {9, criterion_9}, {10, criterion_10}, {11, criterion_11}};

    bool all_pass = true;
    for (const auto& [id, fn] : criteria) {
        if (only != 0 && id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = fn();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* verdict = outcome.skipped ? "SKIP" : (outcome.pass ? "PASS" : "FAIL");
        std::cout << "criterion " << id << ": " << verdict << " [" << fmt(seconds) << "s] "
                  << outcome.detail << "\n";
        all_pass = all_pass && outcome.pass;
    }
    return all_pass ? 0 : 1;
}
