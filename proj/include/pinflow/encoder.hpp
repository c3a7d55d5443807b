#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pinflow/ad.hpp"
#include "pinflow/constants.hpp"
#include "pinflow/rng.hpp"

namespace pinflow {

/// A batch of graphs as one disjoint union. Node features are already scaled
/// (and noise-injected on the training path). Directed edges list both
/// orientations of every undirected edge.
template <typename T>
struct GraphBatch {
    ad::Mat<T> x;                    // n_nodes x d
    std::vector<int> edge_src;       // directed
    std::vector<int> edge_dst;
    std::vector<int> node_graph;     // node -> graph index
    int n_graphs = 0;

    ad::Mat<T> y_std;                // n_graphs x H, standardized targets
    ad::Mat<T> mask;                 // n_graphs x H, 1 present / 0 absent

    int n_nodes() const { return static_cast<int>(x.rows()); }
};

template <typename T>
struct EncoderLayer {
    ad::Param<T> msg_w1, msg_b1, msg_w2, msg_b2;  // message MLP, two affines
    ad::Param<T> att_src, att_dst, att_bias;      // affine score on [h_u || h_v]
    ad::Param<T> log_tau;                         // softmax temperature, tau = exp(log_tau)
};

/// L-layer softmax-attention message-passing encoder. The first layer applies
/// an input projection d -> d_h before messaging; aggregation is
/// h'_v = LeakyReLU(sum_u alpha_uv * phi_msg(h_u)) with no residual paths.
template <typename T>
struct Encoder {
    int input_dim = 0;
    int hidden = 128;
    int n_layers = 4;
    ad::Param<T> in_w, in_b;
    std::vector<EncoderLayer<T>> layers;

    void init(const CounterRng& rng) {
        std::uint64_t counter = 0;
        in_w = ad::Param<T>("encoder.in.w",
                            ad::uniform_init<T>(hidden, input_dim, input_dim, rng, counter));
        in_b = ad::Param<T>("encoder.in.b", ad::Mat<T>::Zero(1, hidden));
        layers.clear();
        layers.resize(static_cast<std::size_t>(n_layers));
        for (int l = 0; l < n_layers; ++l) {
            auto& ly = layers[static_cast<std::size_t>(l)];
            const std::string p = "encoder.l" + std::to_string(l) + ".";
            ly.msg_w1 = ad::Param<T>(p + "msg.w1",
                                     ad::uniform_init<T>(hidden, hidden, hidden, rng, counter));
            ly.msg_b1 = ad::Param<T>(p + "msg.b1", ad::Mat<T>::Zero(1, hidden));
            ly.msg_w2 = ad::Param<T>(p + "msg.w2",
                                     ad::uniform_init<T>(hidden, hidden, hidden, rng, counter));
            ly.msg_b2 = ad::Param<T>(p + "msg.b2", ad::Mat<T>::Zero(1, hidden));
            ly.att_src = ad::Param<T>(p + "att.src",
                                      ad::uniform_init<T>(1, hidden, 2 * hidden, rng, counter));
            ly.att_dst = ad::Param<T>(p + "att.dst",
                                      ad::uniform_init<T>(1, hidden, 2 * hidden, rng, counter));
            ly.att_bias = ad::Param<T>(p + "att.bias", ad::Mat<T>::Zero(1, 1));
            ly.log_tau = ad::Param<T>(p + "log_tau", ad::Mat<T>::Zero(1, 1));
        }
    }

    template <typename Fn>
    void for_each_param(Fn&& fn) {
        fn(in_w);
        fn(in_b);
        for (auto& ly : layers) {
            fn(ly.msg_w1);
            fn(ly.msg_b1);
            fn(ly.msg_w2);
            fn(ly.msg_b2);
            fn(ly.att_src);
            fn(ly.att_dst);
            fn(ly.att_bias);
            fn(ly.log_tau);
        }
    }

    /// One message-passing layer on the tape. `h` is (n_nodes x hidden).
    typename ad::Tape<T>::Var layer_forward(ad::Tape<T>& tape, typename ad::Tape<T>::Var h,
                                            const GraphBatch<T>& batch, int layer) {
        auto& ly = layers[static_cast<std::size_t>(layer)];
        const int n = batch.n_nodes();

        auto w1 = tape.param(ly.msg_w1);
        auto b1 = tape.param(ly.msg_b1);
        auto w2 = tape.param(ly.msg_w2);
        auto b2 = tape.param(ly.msg_b2);
        auto msg = tape.linear(tape.leaky_relu(tape.linear(h, w1, b1), T(kLeakySlope)), w2, b2);

        auto zero_bias = tape.constant(ad::Mat<T>::Zero(1, 1));
        auto p = tape.linear(h, tape.param(ly.att_src), tape.param(ly.att_bias));  // n x 1
        auto q = tape.linear(h, tape.param(ly.att_dst), zero_bias);                // n x 1
        auto scores = tape.add(tape.gather_rows(p, batch.edge_src),
                               tape.gather_rows(q, batch.edge_dst));
        auto tau = tape.exp(tape.param(ly.log_tau));
        auto alpha = tape.segment_softmax(tape.div_by_scalar(scores, tau), batch.edge_dst, n);

        auto weighted = tape.mul_colvec(tape.gather_rows(msg, batch.edge_src), alpha);
        auto aggregated = tape.segment_sum(weighted, batch.edge_dst, n);
        return tape.leaky_relu(aggregated, T(kLeakySlope));
    }

    /// Full encode: input projection, L layers, per-graph mean pooling.
    /// Returns (n_graphs x hidden). Throws GraphError(IsolatedNode) when a
    /// node has no neighbors.
    typename ad::Tape<T>::Var encode(ad::Tape<T>& tape, typename ad::Tape<T>::Var x_nodes,
                                     const GraphBatch<T>& batch) {
        check_no_isolated(batch);
        auto h = tape.linear(x_nodes, tape.param(in_w), tape.param(in_b));
        for (int l = 0; l < n_layers; ++l) h = layer_forward(tape, h, batch, l);
        return tape.segment_mean(h, batch.node_graph, batch.n_graphs);
    }

    /// Node embeddings after each layer (plain evaluation path).
    std::vector<ad::Mat<T>> layer_embeddings(const GraphBatch<T>& batch) {
        check_no_isolated(batch);
        ad::Tape<T> tape(false);
        auto h = tape.linear(tape.constant(batch.x), tape.param(in_w), tape.param(in_b));
        std::vector<ad::Mat<T>> out;
        for (int l = 0; l < n_layers; ++l) {
            h = layer_forward(tape, h, batch, l);
            out.push_back(tape.value(h));
        }
        return out;
    }

    void check_no_isolated(const GraphBatch<T>& batch) const {
        std::vector<char> has_neighbor(static_cast<std::size_t>(batch.n_nodes()), 0);
        for (int v : batch.edge_dst) has_neighbor[static_cast<std::size_t>(v)] = 1;
        for (std::size_t v = 0; v < has_neighbor.size(); ++v)
            if (!has_neighbor[v])
                throw GraphError("IsolatedNode",
                                 "node " + std::to_string(v) + " has no neighbors");
    }
};

// ---- single-vector operation forms (used directly and as test oracles) ----

/// phi_msg on one hidden row.
template <typename T>
ad::Mat<T> encoder_message(const Encoder<T>& enc, int layer, const ad::Mat<T>& h_u) {
    const auto& ly = enc.layers.at(static_cast<std::size_t>(layer));
    if (h_u.cols() != enc.hidden) throw ShapeError("ShapeMismatch", "message: bad input width");
    ad::Mat<T> a = h_u * ly.msg_w1.value.transpose();
    a.rowwise() += ly.msg_b1.value.row(0);
    a = a.unaryExpr([](T x) { return x >= T(0) ? x : T(kLeakySlope) * x; });
    ad::Mat<T> m = a * ly.msg_w2.value.transpose();
    m.rowwise() += ly.msg_b2.value.row(0);
    return m;
}

/// Softmax attention over the neighbors of one node.
template <typename T>
std::vector<T> encoder_attention_weights(const Encoder<T>& enc, int layer,
                                         const std::vector<ad::Mat<T>>& h_neighbors,
                                         const ad::Mat<T>& h_v) {
    if (h_neighbors.empty()) throw GraphError("NoNeighbors", "attention over zero neighbors");
    const auto& ly = enc.layers.at(static_cast<std::size_t>(layer));
    const T tau = std::exp(ly.log_tau.value(0, 0));
    std::vector<T> scores;
    scores.reserve(h_neighbors.size());
    for (const auto& h_u : h_neighbors) {
        const T s = (h_u * ly.att_src.value.transpose())(0, 0) +
                    (h_v * ly.att_dst.value.transpose())(0, 0) + ly.att_bias.value(0, 0);
        scores.push_back(s / tau);
    }
    const T max_score = *std::max_element(scores.begin(), scores.end());
    T total = T(0);
    for (auto& s : scores) {
        s = std::exp(s - max_score);
        total += s;
    }
    for (auto& s : scores) s /= total;
    return scores;
}

/// Weighted message aggregation M_v = sum_u alpha_u m_u.
template <typename T>
ad::Mat<T> encoder_aggregate(const std::vector<ad::Mat<T>>& messages, const std::vector<T>& alpha) {
    if (messages.size() != alpha.size())
        throw ShapeError("ShapeMismatch", "aggregate: |messages| != |alpha|");
    ad::Mat<T> out = ad::Mat<T>::Zero(1, messages.front().cols());
    for (std::size_t i = 0; i < messages.size(); ++i) out += alpha[i] * messages[i];
    return out;
}

}  // namespace pinflow
