#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pinflow/encoder.hpp"
#include "pinflow/flow.hpp"
#include "pinflow/graphize.hpp"
#include "pinflow/scaler.hpp"
#include "pinflow/targets.hpp"

namespace pinflow {

struct ModelConfig {
    int feature_dim = 0;
    int hidden = 128;       // encoder width d_h (also flow context width)
    int layers = 4;         // encoder depth L
    int flow_hidden = 128;  // conditioner hidden width
    int flow_blocks = 10;   // K
    std::uint64_t seed = 0;
};

template <typename T>
struct DetHead {
    ad::Param<T> w, b;
};

/// Shared-trunk model: one encoder, a linear head per deterministic target
/// and a conditional flow per probabilistic target. Heads are indexed by
/// TargetSpec order. Deterministic heads initialize to zero so epoch-0
/// predictions equal the standardized target mean.
template <typename T>
struct Model {
    ModelConfig cfg;
    TargetSpec targets;
    Encoder<T> encoder;
    std::vector<std::optional<DetHead<T>>> det_heads;  // per head, set iff deterministic
    std::vector<std::optional<Flow<T>>> flows;         // per head, set iff probabilistic

    void init() {
        targets.check();
        encoder.input_dim = cfg.feature_dim;
        encoder.hidden = cfg.hidden;
        encoder.n_layers = cfg.layers;
        encoder.init(CounterRng(cfg.seed, rng_stream::kWeightInit));
        det_heads.assign(targets.size(), std::nullopt);
        flows.assign(targets.size(), std::nullopt);
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const auto& head = targets.heads[i];
            if (head.kind == HeadKind::Deterministic) {
                DetHead<T> dh;
                dh.w = ad::Param<T>("head." + head.name + ".w", ad::Mat<T>::Zero(1, cfg.hidden));
                dh.b = ad::Param<T>("head." + head.name + ".b", ad::Mat<T>::Zero(1, 1));
                det_heads[i] = std::move(dh);
            } else {
                Flow<T> fl;
                fl.dim = 1;
                fl.context = cfg.hidden;
                fl.hidden = cfg.flow_hidden;
                fl.n_blocks = cfg.flow_blocks;
                fl.head_name = head.name;
                fl.init(CounterRng(cfg.seed, rng_stream::kWeightInit ^ (0x1000 + i)));
                flows[i] = std::move(fl);
            }
        }
    }

    template <typename Fn>
    void for_each_param(Fn&& fn) {
        encoder.for_each_param(fn);
        for (auto& dh : det_heads)
            if (dh) {
                fn(dh->w);
                fn(dh->b);
            }
        for (auto& fl : flows)
            if (fl) fl->for_each_param(fn);
    }

    template <typename Fn>
    void for_each_head_param(std::size_t head, Fn&& fn) {
        if (det_heads[head]) {
            fn(det_heads[head]->w);
            fn(det_heads[head]->b);
        }
        if (flows[head]) flows[head]->for_each_param(fn);
    }

    /// Deterministic head output (standardized units) for pooled embeddings.
    typename ad::Tape<T>::Var det_head_t(ad::Tape<T>& tape, std::size_t head,
                                         typename ad::Tape<T>::Var h_graph) {
        if (!det_heads[head]) throw Error("WrongHeadKind", "head is not deterministic");
        return tape.linear(h_graph, tape.param(det_heads[head]->w),
                           tape.param(det_heads[head]->b));
    }

    /// Per-head losses on the tape. Masked-absent targets contribute nothing.
    /// Returns a var per head (1x1), or nullopt when the batch holds no
    /// present target for it.
    std::vector<std::optional<typename ad::Tape<T>::Var>> head_losses_t(
        ad::Tape<T>& tape, const GraphBatch<T>& batch, typename ad::Tape<T>::Var h_graph) {
        std::vector<std::optional<typename ad::Tape<T>::Var>> losses(targets.size());
        for (std::size_t i = 0; i < targets.size(); ++i) {
            ad::Mat<T> mask_col = batch.mask.col(static_cast<Eigen::Index>(i));
            const T count = mask_col.sum();
            if (count <= T(0)) continue;
            auto mask_c = tape.constant(mask_col);
            auto y_col = tape.constant(
                ad::Mat<T>(batch.y_std.col(static_cast<Eigen::Index>(i))));
            if (det_heads[i]) {
                auto diff = tape.sub(det_head_t(tape, i, h_graph), y_col);
                auto masked = tape.mul_colvec(diff, mask_c);
                losses[i] = tape.scale(tape.sum(tape.mul(masked, masked)), T(1) / count);
            } else {
                auto lp = flows[i]->log_prob_t(tape, y_col, h_graph);
                losses[i] = tape.scale(tape.sum(tape.mul_colvec(lp, mask_c)), T(-1) / count);
            }
        }
        return losses;
    }

    /// Joint loss (sum of active head losses). `active` empty means all heads.
    typename ad::Tape<T>::Var loss_t(ad::Tape<T>& tape, const GraphBatch<T>& batch,
                                     const std::vector<bool>& active = {}) {
        auto h_graph = encoder.encode(tape, tape.constant(batch.x), batch);
        auto losses = head_losses_t(tape, batch, h_graph);
        std::optional<typename ad::Tape<T>::Var> total;
        for (std::size_t i = 0; i < losses.size(); ++i) {
            if (!losses[i]) continue;
            if (!active.empty() && !active[i]) continue;
            total = total ? tape.add(*total, *losses[i]) : *losses[i];
        }
        if (!total) return tape.constant(ad::Mat<T>::Zero(1, 1));
        return *total;
    }
};

/// Assemble a disjoint-union batch from graphs: scale features, optionally
/// inject Gaussian noise (training path only), standardize targets, expand
/// directed edges. Graph order inside the batch follows `indices`.
template <typename T>
GraphBatch<T> make_batch(const std::vector<const PinGraph*>& graphs,
                         const std::vector<std::size_t>& indices, const Scaler& feature_scaler,
                         const Scaler& target_scaler, double noise_std = 0.0,
                         std::uint64_t noise_seed = 0, std::uint64_t noise_round = 0) {
    if (indices.empty()) throw TrainError("EmptySplit", "batch over zero graphs");
    const std::size_t H = target_scaler.dim();
    int n_nodes = 0;
    for (std::size_t gi : indices) n_nodes += static_cast<int>(graphs[gi]->n);

    GraphBatch<T> batch;
    batch.n_graphs = static_cast<int>(indices.size());
    batch.x.resize(n_nodes, graphs[indices[0]]->d);
    batch.y_std.resize(batch.n_graphs, static_cast<Eigen::Index>(H));
    batch.mask.resize(batch.n_graphs, static_cast<Eigen::Index>(H));
    batch.node_graph.resize(static_cast<std::size_t>(n_nodes));

    const CounterRng noise_rng(noise_seed, rng_stream::kFeatureNoise);
    std::vector<double> scaled;
    int node_base = 0;
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const PinGraph& g = *graphs[indices[b]];
        apply_feature_scaler(g, feature_scaler, scaled);
        for (std::uint32_t v = 0; v < g.n; ++v) {
            for (std::uint32_t c = 0; c < g.d; ++c) {
                double value = scaled[static_cast<std::size_t>(v) * g.d + c];
                if (noise_std > 0.0) {
                    // Noise indexed by (round, graph id, entry); independent of
                    // batch composition and worker scheduling.
                    const std::uint64_t ctr = (noise_round << 44) ^
                                              (static_cast<std::uint64_t>(indices[b]) << 24) ^
                                              (static_cast<std::uint64_t>(v) * g.d + c);
                    value += noise_std * noise_rng.normal_at(ctr);
                }
                batch.x(node_base + static_cast<int>(v), static_cast<Eigen::Index>(c)) =
                    static_cast<T>(value);
            }
            batch.node_graph[static_cast<std::size_t>(node_base) + v] = static_cast<int>(b);
        }
        for (std::size_t h = 0; h < H; ++h) {
            const bool present = h < g.y_mask.size() && g.y_mask[h];
            batch.mask(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(h)) =
                present ? T(1) : T(0);
            batch.y_std(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(h)) =
                present ? static_cast<T>(standardize_target(g.y[h], target_scaler, h)) : T(0);
        }
        for (const auto& [u, v] : g.edges) {
            batch.edge_src.push_back(node_base + static_cast<int>(u));
            batch.edge_dst.push_back(node_base + static_cast<int>(v));
            batch.edge_src.push_back(node_base + static_cast<int>(v));
            batch.edge_dst.push_back(node_base + static_cast<int>(u));
        }
        node_base += static_cast<int>(g.n);
    }
    return batch;
}

/// Distance of the closest activation input to a LeakyReLU/clamp kink for
/// one forward pass. gradient_check's finite differences are meaningful only
/// when this exceeds the probe step by a safe margin.
template <typename T>
double kink_gap(Model<T>& model, const GraphBatch<T>& batch,
                const std::vector<bool>& active = {}) {
    ad::Tape<T> tape(false);
    model.loss_t(tape, batch, active);
    return static_cast<double>(tape.min_kink_gap());
}

/// Max relative deviation between analytic gradients and central finite
/// differences (step 1e-5) over every trainable parameter entry.
/// Intended for 64-bit models.
///
/// A central difference straddling a LeakyReLU/clamp kink does not measure
/// the gradient, so entries that disagree at the base step are re-probed at
/// geometrically smaller steps; a kink artifact shrinks with the step while a
/// wrong analytic gradient does not.
template <typename T>
double gradient_check(Model<T>& model, const GraphBatch<T>& batch,
                      const std::vector<bool>& active = {}, double step = 1e-5) {
    std::vector<ad::Param<T>*> params;
    model.for_each_param([&params](ad::Param<T>& p) {
        if (p.trainable) params.push_back(&p);
    });
    for (auto* p : params) p->zero_grad();

    {
        ad::Tape<T> tape(true);
        auto loss = model.loss_t(tape, batch, active);
        tape.backward(loss);
    }

    auto eval_loss = [&]() -> double {
        ad::Tape<T> tape(false);
        return static_cast<double>(tape.scalar(model.loss_t(tape, batch, active)));
    };

    double worst = 0.0;
    for (auto* p : params) {
        for (Eigen::Index i = 0; i < p->value.rows(); ++i)
            for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
                const T saved = p->value(i, j);
                const double an = static_cast<double>(p->grad(i, j));
                double dev = 0.0;
                for (const double h : {step, step / 16.0, step / 256.0}) {
                    p->value(i, j) = saved + static_cast<T>(h);
                    const double up = eval_loss();
                    p->value(i, j) = saved - static_cast<T>(h);
                    const double down = eval_loss();
                    p->value(i, j) = saved;
                    const double fd = (up - down) / (2.0 * h);
                    if (!std::isfinite(fd) || !std::isfinite(an))
                        throw TrainError("NonFiniteGradient",
                                         "gradient check hit a non-finite value");
                    dev = std::abs(an - fd) / std::max({1.0, std::abs(an), std::abs(fd)});
                    if (dev < 1e-7) break;  // agreement at the base step, no kink nearby
                }
                worst = std::max(worst, dev);
            }
    }
    return worst;
}

}  // namespace pinflow
