#pragma once

#include <algorithm>
#include <chrono>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pinflow/metrics.hpp"
#include "pinflow/model.hpp"
#include "pinflow/trainer.hpp"

namespace pinflow {

struct HeadReport {
    std::string head;
    std::optional<double> r2;      // absent = N/A (constant truth)
    double mre_avg = 0.0;
    double mre_p75 = 0.0;
    double mre_p90 = 0.0;
    double frac_lt_2pct = 0.0;
    double frac_lt_5pct = 0.0;
    double frac_gt_20pct = 0.0;
    std::optional<double> nrmse;   // absent = N/A (zero range)
    double smape = 0.0;
    std::size_t n_eval = 0;
    std::size_t n_excluded_zero_truth = 0;
    metrics::KdeCurve kde_truth;
    metrics::KdeCurve kde_pred;
    std::vector<double> truth;       // original units
    std::vector<double> prediction;  // original units
};

struct MetricsReport {
    std::vector<HeadReport> heads;

    nlohmann::json to_json() const;
    std::string to_table() const;  // aligned text, rows mirror the benchmark layout
    std::string kde_csv(std::size_t head) const;  // x,density_true,density_pred
};

struct EvalConfig {
    int mc_samples = 256;
    std::uint64_t seed = 17;  // fixed evaluation seed for Monte-Carlo heads
};

/// Evaluate a model over graphs (typically the test split): deterministic
/// heads use the linear output, probabilistic heads the Monte-Carlo mean of S
/// draws at a fixed seed; all metrics are computed on inverse-transformed
/// original-unit values. Throws Error(MissingScaler) when scalers are absent.
template <typename T>
MetricsReport evaluate(Model<T>& model, const std::vector<const PinGraph*>& graphs,
                       const Scaler& feature_scaler, const Scaler& target_scaler,
                       const EvalConfig& cfg = {}) {
    if (feature_scaler.dim() == 0 || target_scaler.dim() == 0)
        throw Error("MissingScaler", "evaluate requires fitted scalers");
    if (graphs.empty()) throw TrainError("EmptySplit", "evaluate over zero graphs");
    const std::size_t H = model.targets.size();

    // Pooled embeddings in evaluation chunks.
    std::vector<std::vector<double>> truth(H), pred(H);
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < graphs.size(); start += kChunk) {
        std::vector<std::size_t> idx(std::min(kChunk, graphs.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        GraphBatch<T> batch = make_batch<T>(graphs, idx, feature_scaler, target_scaler);
        ad::Tape<T> tape(false);
        auto h_graph = model.encoder.encode(tape, tape.constant(batch.x), batch);
        const ad::Mat<T>& hg = tape.value(h_graph);

        for (std::size_t i = 0; i < H; ++i) {
            std::optional<ad::Mat<T>> det_out;
            if (model.det_heads[i]) {
                ad::Tape<T> head_tape(false);
                det_out = head_tape.value(
                    model.det_head_t(head_tape, i, head_tape.leaf(hg, false)));
            }
            for (Eigen::Index b = 0; b < hg.rows(); ++b) {
                const PinGraph& g = *graphs[idx[static_cast<std::size_t>(b)]];
                if (i >= g.y_mask.size() || !g.y_mask[i]) continue;
                double y_std_pred;
                if (det_out) {
                    y_std_pred = static_cast<double>((*det_out)(b, 0));
                } else {
                    ad::Mat<T> h_row = hg.row(b);
                    const std::uint64_t row_seed =
                        cfg.seed ^ (0x9E3779B97F4A7C15ull * (idx[static_cast<std::size_t>(b)] + 1));
                    y_std_pred = static_cast<double>(
                        model.flows[i]->mc_mean(h_row, cfg.mc_samples, row_seed)(0, 0));
                }
                truth[i].push_back(g.y[i]);
                pred[i].push_back(invert_target(y_std_pred, target_scaler, i));
            }
        }
    }

    MetricsReport report;
    for (std::size_t i = 0; i < H; ++i) {
        HeadReport hr;
        hr.head = model.targets.heads[i].name;
        hr.truth = truth[i];
        hr.prediction = pred[i];
        if (!truth[i].empty()) {
            try {
                hr.r2 = metrics::r2(truth[i], pred[i]);
            } catch (const Error&) {
                hr.r2.reset();
            }
            const auto mre = metrics::mre_stats(truth[i], pred[i]);
            hr.mre_avg = mre.avg;
            hr.mre_p75 = mre.p75;
            hr.mre_p90 = mre.p90;
            hr.frac_lt_2pct = mre.frac_lt_2pct;
            hr.frac_lt_5pct = mre.frac_lt_5pct;
            hr.frac_gt_20pct = mre.frac_gt_20pct;
            hr.n_eval = mre.n_eval;
            hr.n_excluded_zero_truth = mre.n_excluded;
            try {
                hr.nrmse = metrics::nrmse(truth[i], pred[i]);
            } catch (const Error&) {
                hr.nrmse.reset();
            }
            hr.smape = metrics::smape(truth[i], pred[i]).value;

            // Shared grid over pooled truth+prediction values.
            std::vector<double> pooled = truth[i];
            pooled.insert(pooled.end(), pred[i].begin(), pred[i].end());
            const double h_bw = metrics::silverman_bandwidth(pooled);
            const auto [lo, hi] = std::minmax_element(pooled.begin(), pooled.end());
            const auto grid = metrics::kde_grid(*lo, *hi, h_bw);
            hr.kde_truth = metrics::kde(truth[i], grid, h_bw);
            hr.kde_pred = metrics::kde(pred[i], grid, h_bw);
        }
        report.heads.push_back(std::move(hr));
    }
    return report;
}

struct TimingStats {
    double min_ms = 0.0;
    double median_ms = 0.0;
    double mean_ms = 0.0;
    double batch64_per_graph_ms = 0.0;
    int repetitions = 0;
    std::vector<int> node_counts;

    nlohmann::json to_json() const;
};

/// Wall-clock per single-graph forward (encode + every head, S Monte-Carlo
/// draws for flow heads) after a warm-up pass, plus per-graph amortized time
/// at batch size 64.
template <typename T>
TimingStats timing_benchmark(Model<T>& model, const std::vector<const PinGraph*>& graphs,
                             const Scaler& feature_scaler, const Scaler& target_scaler,
                             int repetitions, const EvalConfig& cfg = {}) {
    if (graphs.empty()) throw TrainError("EmptySplit", "benchmark over zero graphs");
    TimingStats stats;
    stats.repetitions = repetitions;
    for (const auto* g : graphs) stats.node_counts.push_back(static_cast<int>(g->n));

    auto forward_once = [&](const std::vector<std::size_t>& idx) {
        GraphBatch<T> batch = make_batch<T>(graphs, idx, feature_scaler, target_scaler);
        ad::Tape<T> tape(false);
        auto h_graph = model.encoder.encode(tape, tape.constant(batch.x), batch);
        const ad::Mat<T>& hg = tape.value(h_graph);
        double sink = 0.0;
        for (std::size_t i = 0; i < model.targets.size(); ++i) {
            if (model.det_heads[i]) {
                ad::Tape<T> head_tape(false);
                sink += static_cast<double>(head_tape.value(
                    model.det_head_t(head_tape, i, head_tape.leaf(hg, false)))(0, 0));
            } else {
                for (Eigen::Index b = 0; b < hg.rows(); ++b) {
                    ad::Mat<T> h_row = hg.row(b);
                    sink += static_cast<double>(
                        model.flows[i]->mc_mean(h_row, cfg.mc_samples, cfg.seed)(0, 0));
                }
            }
        }
        return sink;
    };

    volatile double sink = forward_once({0});  // warm-up
    (void)sink;

    std::vector<double> singles;
    for (int r = 0; r < repetitions; ++r) {
        const std::size_t gi = static_cast<std::size_t>(r) % graphs.size();
        const auto t0 = std::chrono::steady_clock::now();
        sink = forward_once({gi});
        const auto t1 = std::chrono::steady_clock::now();
        singles.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    stats.min_ms = *std::min_element(singles.begin(), singles.end());
    stats.mean_ms = 0.0;
    for (double v : singles) stats.mean_ms += v;
    stats.mean_ms /= static_cast<double>(singles.size());
    stats.median_ms = metrics::percentile(singles, 0.5);

    const std::size_t bsz = std::min<std::size_t>(64, graphs.size());
    std::vector<std::size_t> idx(bsz);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto t0 = std::chrono::steady_clock::now();
    sink = forward_once(idx);
    const auto t1 = std::chrono::steady_clock::now();
    stats.batch64_per_graph_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count() / static_cast<double>(bsz);
    return stats;
}

}  // namespace pinflow
