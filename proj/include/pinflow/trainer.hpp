#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pinflow/model.hpp"
#include "pinflow/optimizer.hpp"

namespace pinflow {

struct TrainConfig {
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch_size = 64;
    int max_epochs = 200;
    int lr_patience = 5;         // epochs without median val improvement
    double lr_factor = 0.5;
    int head_patience = 10;      // epochs without per-head val improvement
    double noise_std = 0.1;      // feature noise at train time
    int mc_samples = 256;
    std::uint64_t seed = 0;
    bool deterministic = true;
    int precision = 32;

    void check() const {
        if (lr <= 0) throw TrainError("BadConfig", "lr must be > 0");
        if (lr_factor <= 0 || lr_factor >= 1) throw TrainError("BadConfig", "lr_factor in (0,1)");
        if (lr_patience < 1 || head_patience < 1)
            throw TrainError("BadConfig", "patience values must be >= 1");
    }
};

struct HeadState {
    std::string name;
    bool frozen = false;
    double best_val = std::numeric_limits<double>::infinity();
    int epochs_since_improve = 0;
    std::string loss_kind;  // "mse" or "nll"
};

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    std::string head;
    std::string split;  // "train" or "val"
    double loss = 0.0;
    bool frozen = false;

    std::string to_json() const {
        std::ostringstream out;
        out.precision(12);
        out << R"({"epoch":)" << epoch << R"(,"lr":)" << lr << R"(,"head":")" << head
            << R"(","split":")" << split << R"(","loss":)" << loss << R"(,"frozen":)"
            << (frozen ? "true" : "false") << "}";
        return out.str();
    }
};

template <typename T>
struct TrainResult {
    Model<T> model;
    Scaler feature_scaler;
    Scaler target_scaler;
    std::vector<EpochLog> log;
    std::vector<HeadState> head_states;
    int epochs_run = 0;
    double final_lr = 0.0;
};

namespace detail {

inline double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Per-head mean losses over a split (no noise), chunked to bound memory.
/// Heads with no present targets report NaN.
template <typename T>
std::vector<double> split_losses(Model<T>& model, const std::vector<const PinGraph*>& graphs,
                                 const Scaler& fs, const Scaler& ts, int chunk = 256) {
    const std::size_t H = model.targets.size();
    std::vector<double> weighted(H, 0.0), counts(H, 0.0);
    for (std::size_t start = 0; start < graphs.size(); start += static_cast<std::size_t>(chunk)) {
        std::vector<std::size_t> idx(
            std::min(static_cast<std::size_t>(chunk), graphs.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        GraphBatch<T> batch = make_batch<T>(graphs, idx, fs, ts);
        ad::Tape<T> tape(false);
        auto h_graph = model.encoder.encode(tape, tape.constant(batch.x), batch);
        auto losses = model.head_losses_t(tape, batch, h_graph);
        for (std::size_t i = 0; i < H; ++i) {
            if (!losses[i]) continue;
            const double count = static_cast<double>(batch.mask.col(static_cast<Eigen::Index>(i)).sum());
            weighted[i] += static_cast<double>(tape.scalar(*losses[i])) * count;
            counts[i] += count;
        }
    }
    std::vector<double> out(H, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < H; ++i)
        if (counts[i] > 0) out[i] = weighted[i] / counts[i];
    return out;
}

}  // namespace detail

/// End-to-end training: seeded shuffling, minibatch AdamW with feature noise,
/// plateau-halved learning rate tracked on the median per-head validation
/// loss, and per-head early freezing. Frozen heads leave the total loss and
/// receive no parameter updates; the shared trunk keeps learning from the
/// remaining heads. Stops when every head is frozen or max_epochs is reached.
template <typename T>
TrainResult<T> train(const std::vector<const PinGraph*>& train_graphs,
                     const std::vector<const PinGraph*>& val_graphs, const TargetSpec& targets,
                     const ModelConfig& mcfg, const TrainConfig& tcfg) {
    tcfg.check();
    if (train_graphs.empty() || val_graphs.empty())
        throw TrainError("EmptySplit", "training requires non-empty train and val splits");

    TrainResult<T> result;
    result.feature_scaler = fit_feature_scaler(train_graphs);
    result.target_scaler = fit_target_scaler(train_graphs, targets.size());

    result.model.cfg = mcfg;
    result.model.cfg.feature_dim = static_cast<int>(train_graphs.front()->d);
    result.model.cfg.seed = tcfg.seed;
    result.model.targets = targets;
    result.model.init();
    Model<T>& model = result.model;

    for (const auto& head : targets.heads) {
        HeadState hs;
        hs.name = head.name;
        hs.loss_kind = head.kind == HeadKind::Deterministic ? "mse" : "nll";
        result.head_states.push_back(hs);
    }

    AdamW<T> opt(AdamWConfig{tcfg.lr, tcfg.weight_decay, tcfg.beta1, tcfg.beta2, tcfg.eps});
    double best_median = std::numeric_limits<double>::infinity();
    int median_stall = 0;
    constexpr double kImprove = 1e-6;

    std::vector<std::size_t> order(train_graphs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
        counter_shuffle(order, CounterRng(tcfg.seed,
                                          rng_stream::kEpochShuffle ^
                                              (static_cast<std::uint64_t>(epoch) << 16)));

        std::vector<bool> active(targets.size());
        bool any_active = false;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            active[i] = !result.head_states[i].frozen;
            any_active = any_active || active[i];
        }
        if (!any_active) break;

        std::vector<double> train_weighted(targets.size(), 0.0), train_counts(targets.size(), 0.0);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(tcfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(tcfg.batch_size));
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(stop));
            GraphBatch<T> batch =
                make_batch<T>(train_graphs, idx, result.feature_scaler, result.target_scaler,
                              tcfg.noise_std, tcfg.seed, static_cast<std::uint64_t>(epoch));

            model.for_each_param([](ad::Param<T>& p) { p.zero_grad(); });
            ad::Tape<T> tape(true);
            auto h_graph = model.encoder.encode(tape, tape.constant(batch.x), batch);
            auto losses = model.head_losses_t(tape, batch, h_graph);
            std::optional<typename ad::Tape<T>::Var> total;
            for (std::size_t i = 0; i < losses.size(); ++i) {
                if (!losses[i] || !active[i]) continue;
                const double value = static_cast<double>(tape.scalar(*losses[i]));
                if (!std::isfinite(value))
                    throw TrainError("NonFiniteLoss",
                                     "head " + targets.heads[i].name + " produced a non-finite "
                                     "loss at epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(start / tcfg.batch_size));
                const double count =
                    static_cast<double>(batch.mask.col(static_cast<Eigen::Index>(i)).sum());
                train_weighted[i] += value * count;
                train_counts[i] += count;
                total = total ? tape.add(*total, *losses[i]) : *losses[i];
            }
            if (!total) continue;
            tape.backward(*total);

            model.encoder.for_each_param([&opt](ad::Param<T>& p) { opt.step(p); });
            for (std::size_t i = 0; i < targets.size(); ++i)
                if (active[i])
                    model.for_each_head_param(i, [&opt](ad::Param<T>& p) { opt.step(p); });
        }

        const std::vector<double> val_losses = detail::split_losses<T>(
            model, val_graphs, result.feature_scaler, result.target_scaler);

        std::vector<double> medians_input;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            if (train_counts[i] > 0)
                result.log.push_back({epoch, opt.lr(), targets.heads[i].name, "train",
                                      train_weighted[i] / train_counts[i],
                                      result.head_states[i].frozen});
            if (std::isfinite(val_losses[i])) {
                result.log.push_back({epoch, opt.lr(), targets.heads[i].name, "val",
                                      val_losses[i], result.head_states[i].frozen});
                medians_input.push_back(val_losses[i]);
            }
        }

        const double median = detail::median_of(medians_input);
        if (median < best_median - kImprove) {
            best_median = median;
            median_stall = 0;
        } else if (++median_stall >= tcfg.lr_patience) {
            opt.set_lr(opt.lr() * tcfg.lr_factor);
            median_stall = 0;
        }

        for (std::size_t i = 0; i < targets.size(); ++i) {
            HeadState& hs = result.head_states[i];
            if (hs.frozen || !std::isfinite(val_losses[i])) continue;
            if (val_losses[i] < hs.best_val - kImprove) {
                hs.best_val = val_losses[i];
                hs.epochs_since_improve = 0;
            } else if (++hs.epochs_since_improve >= tcfg.head_patience) {
                hs.frozen = true;
            }
        }

        result.epochs_run = epoch;
        result.final_lr = opt.lr();
        if (std::all_of(result.head_states.begin(), result.head_states.end(),
                        [](const HeadState& h) { return h.frozen; }))
            break;
    }
    return result;
}

/// Gaussian feature noise on an already-scaled matrix; training path only.
template <typename T>
void add_feature_noise(ad::Mat<T>& x, double noise_std, std::uint64_t seed) {
    if (noise_std <= 0.0) return;
    CounterRng rng(seed, rng_stream::kFeatureNoise);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            x(i, j) += static_cast<T>(
                noise_std * rng.normal_at(static_cast<std::uint64_t>(i) *
                                              static_cast<std::uint64_t>(x.cols()) +
                                          static_cast<std::uint64_t>(j)));
}

}  // namespace pinflow
