#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pinflow/ad.hpp"
#include "pinflow/constants.hpp"
#include "pinflow/rng.hpp"

namespace pinflow {

template <typename T>
struct FlowBlock {
    ad::Param<T> w1, b1, w2, b2, w3, b3;
};

/// Conditional masked affine autoregressive flow.
///
/// K stacked blocks; each block's conditioner is a two-hidden-layer MLP
/// (LeakyReLU 0.1) over [y, h] with MADE masks so that (mu_i, log sigma_i)
/// depend only on y_<i and h. For D=1 they depend on h alone. Coordinates are
/// reversed between blocks when D>1. The final conditioner layer initializes
/// to zero, so the whole flow starts as the identity map.
template <typename T>
struct Flow {
    int dim = 1;        // D, target dimension
    int context = 0;    // M, conditioning width
    int hidden = 128;
    int n_blocks = 10;  // K
    std::string head_name;
    std::vector<FlowBlock<T>> blocks;
    ad::Mat<T> mask1, mask2, mask3;  // 0/1 masks shared by all blocks

    void init(const CounterRng& rng) {
        build_masks();
        std::uint64_t counter = 0;
        blocks.clear();
        blocks.resize(static_cast<std::size_t>(n_blocks));
        const int in_dim = dim + context;
        for (int k = 0; k < n_blocks; ++k) {
            auto& blk = blocks[static_cast<std::size_t>(k)];
            const std::string p = "flow." + head_name + ".b" + std::to_string(k) + ".";
            blk.w1 = ad::Param<T>(p + "w1", ad::uniform_init<T>(hidden, in_dim, in_dim, rng, counter));
            blk.b1 = ad::Param<T>(p + "b1", ad::Mat<T>::Zero(1, hidden));
            blk.w2 = ad::Param<T>(p + "w2", ad::uniform_init<T>(hidden, hidden, hidden, rng, counter));
            blk.b2 = ad::Param<T>(p + "b2", ad::Mat<T>::Zero(1, hidden));
            blk.w3 = ad::Param<T>(p + "w3", ad::Mat<T>::Zero(2 * dim, hidden));
            blk.b3 = ad::Param<T>(p + "b3", ad::Mat<T>::Zero(1, 2 * dim));
        }
    }

    template <typename Fn>
    void for_each_param(Fn&& fn) {
        for (auto& blk : blocks) {
            fn(blk.w1);
            fn(blk.b1);
            fn(blk.w2);
            fn(blk.b2);
            fn(blk.w3);
            fn(blk.b3);
        }
    }

    /// MADE degrees: y_j has degree j+1, context columns degree 0, hidden
    /// units cycle 1..D-1 (all 0 when D=1), outputs (mu_i, log sigma_i) have
    /// degree i+1. mask1: m_hidden >= m_in; mask2: m_hidden >= m_hidden;
    /// mask3: m_out > m_hidden.
    void build_masks() {
        const int in_dim = dim + context;
        std::vector<int> deg_in(static_cast<std::size_t>(in_dim), 0);
        for (int j = 0; j < dim; ++j) deg_in[static_cast<std::size_t>(j)] = j + 1;
        std::vector<int> deg_hidden(static_cast<std::size_t>(hidden), 0);
        if (dim > 1)
            for (int k = 0; k < hidden; ++k) deg_hidden[static_cast<std::size_t>(k)] = k % (dim - 1) + 1;
        mask1 = ad::Mat<T>::Zero(hidden, in_dim);
        for (int k = 0; k < hidden; ++k)
            for (int j = 0; j < in_dim; ++j)
                if (deg_hidden[static_cast<std::size_t>(k)] >= deg_in[static_cast<std::size_t>(j)])
                    mask1(k, j) = T(1);
        mask2 = ad::Mat<T>::Zero(hidden, hidden);
        for (int k = 0; k < hidden; ++k)
            for (int j = 0; j < hidden; ++j)
                if (deg_hidden[static_cast<std::size_t>(k)] >= deg_hidden[static_cast<std::size_t>(j)])
                    mask2(k, j) = T(1);
        mask3 = ad::Mat<T>::Zero(2 * dim, hidden);
        for (int i = 0; i < 2 * dim; ++i) {
            const int deg_out = (i % dim) + 1;
            for (int k = 0; k < hidden; ++k)
                if (deg_out > deg_hidden[static_cast<std::size_t>(k)]) mask3(i, k) = T(1);
        }
    }

    /// Conditioner of block k on the tape: returns (mu, log_sigma) as
    /// (B x D) vars. `y` may contain arbitrary values in columns >= i when
    /// only coordinate i outputs are consumed; the masks make them inert.
    std::pair<typename ad::Tape<T>::Var, typename ad::Tape<T>::Var> conditioner(
        ad::Tape<T>& tape, int k, typename ad::Tape<T>::Var y,
        typename ad::Tape<T>::Var h_ctx) {
        auto& blk = blocks[static_cast<std::size_t>(k)];
        auto input = context > 0 ? tape.hstack(y, h_ctx) : y;
        auto h1 = tape.leaky_relu(
            tape.linear(input, tape.param(blk.w1), tape.param(blk.b1), &mask1), T(kLeakySlope));
        auto h2 = tape.leaky_relu(
            tape.linear(h1, tape.param(blk.w2), tape.param(blk.b2), &mask2), T(kLeakySlope));
        auto out = tape.linear(h2, tape.param(blk.w3), tape.param(blk.b3), &mask3);
        auto mu = tape.slice_cols(out, 0, dim);
        auto log_sigma = tape.clamp(tape.slice_cols(out, dim, 2 * dim), T(-kLogSigmaClamp),
                                    T(kLogSigmaClamp));
        return std::make_pair(mu, log_sigma);
    }

    /// Density-direction transform on the tape: y -> (z, logdet), both vars
    /// (B x D) and (B x 1). Coordinates reverse between consecutive blocks.
    std::pair<typename ad::Tape<T>::Var, typename ad::Tape<T>::Var> forward_t(
        ad::Tape<T>& tape, typename ad::Tape<T>::Var y, typename ad::Tape<T>::Var h_ctx) {
        const auto B = tape.value(y).rows();
        auto logdet = tape.constant(ad::Mat<T>::Zero(B, 1));
        auto cur = y;
        for (int k = 0; k < n_blocks; ++k) {
            auto [mu, log_sigma] = conditioner(tape, k, cur, h_ctx);
            auto z = tape.mul(tape.sub(cur, mu), tape.exp(tape.neg(log_sigma)));
            logdet = tape.sub(logdet, tape.rowsum(log_sigma));
            cur = (k + 1 < n_blocks && dim > 1) ? tape.matmul(z, reversal_const(tape)) : z;
        }
        return std::make_pair(cur, logdet);
    }

    /// log p(y | h) rows on the tape: log N(z;0,I) + logdet.
    typename ad::Tape<T>::Var log_prob_t(ad::Tape<T>& tape, typename ad::Tape<T>::Var y,
                                         typename ad::Tape<T>::Var h_ctx) {
        auto [z, logdet] = forward_t(tape, y, h_ctx);
        auto zsq = tape.rowsum(tape.mul(z, z));
        auto base = tape.scale(zsq, T(-0.5));
        const auto B = tape.value(y).rows();
        auto c = tape.constant(ad::Mat<T>::Constant(B, 1, T(-0.5 * dim * kLogTwoPi)));
        return tape.add(tape.add(base, c), logdet);
    }

    // ---- plain (gradient-free) evaluation ----

    /// (z, logdet) for a batch of targets with per-row contexts.
    std::pair<ad::Mat<T>, ad::Mat<T>> forward(const ad::Mat<T>& y, const ad::Mat<T>& h_ctx) {
        ad::Tape<T> tape(false);
        auto [z, logdet] = forward_t(tape, tape.constant(y), tape.constant(h_ctx));
        return std::make_pair(ad::Mat<T>(tape.value(z)), ad::Mat<T>(tape.value(logdet)));
    }

    ad::Mat<T> log_prob(const ad::Mat<T>& y, const ad::Mat<T>& h_ctx) {
        ad::Tape<T> tape(false);
        auto lp = log_prob_t(tape, tape.constant(y), tape.constant(h_ctx));
        return tape.value(lp);
    }

    /// Inverse transform z -> y. Coordinates are recovered sequentially in
    /// autoregressive order within each block, blocks applied in reverse.
    ad::Mat<T> inverse(const ad::Mat<T>& z, const ad::Mat<T>& h_ctx) {
        const Eigen::Index B = z.rows();
        ad::Mat<T> cur = z;
        for (int k = n_blocks - 1; k >= 0; --k) {
            if (k + 1 < n_blocks && dim > 1) {
                ad::Mat<T> unpermuted(B, dim);
                for (int j = 0; j < dim; ++j) unpermuted.col(j) = cur.col(dim - 1 - j);
                cur = unpermuted;
            }
            ad::Mat<T> y = ad::Mat<T>::Zero(B, dim);
            for (int i = 0; i < dim; ++i) {
                ad::Tape<T> tape(false);
                auto [mu, log_sigma] = conditioner(tape, k, tape.constant(y), tape.constant(h_ctx));
                const ad::Mat<T>& mu_v = tape.value(mu);
                const ad::Mat<T>& ls_v = tape.value(log_sigma);
                for (Eigen::Index r = 0; r < B; ++r)
                    y(r, i) = mu_v(r, i) + std::exp(ls_v(r, i)) * cur(r, i);
            }
            cur = y;
        }
        return cur;
    }

    /// n draws from p(.|h) for a single context row, reproducible in (seed).
    /// Base normals come from the counter generator at (seed, draw index).
    ad::Mat<T> sample(const ad::Mat<T>& h_row, int n, std::uint64_t seed) {
        CounterRng rng(seed, rng_stream::kFlowSample);
        ad::Mat<T> z(n, dim);
        for (int s = 0; s < n; ++s)
            for (int i = 0; i < dim; ++i)
                z(s, i) = static_cast<T>(rng.normal_at(static_cast<std::uint64_t>(s) *
                                                           static_cast<std::uint64_t>(dim) +
                                                       static_cast<std::uint64_t>(i)));
        if (dim == 1) {
            // For D=1 the conditioner depends on h alone, so one conditioner
            // pass per block covers every draw.
            std::vector<T> mu_k, sigma_k;
            ad::Mat<T> y0 = ad::Mat<T>::Zero(1, 1);
            for (int k = 0; k < n_blocks; ++k) {
                ad::Tape<T> tape(false);
                auto [mu, log_sigma] =
                    conditioner(tape, k, tape.constant(y0), tape.constant(h_row));
                mu_k.push_back(tape.value(mu)(0, 0));
                sigma_k.push_back(std::exp(tape.value(log_sigma)(0, 0)));
            }
            ad::Mat<T> y = z;
            for (int k = n_blocks - 1; k >= 0; --k)
                y = (y.array() * sigma_k[static_cast<std::size_t>(k)] +
                     mu_k[static_cast<std::size_t>(k)])
                        .matrix();
            return y;
        }
        ad::Mat<T> h_rep(n, context);
        for (int s = 0; s < n; ++s) h_rep.row(s) = h_row.row(0);
        return inverse(z, h_rep);
    }

    /// Monte-Carlo conditional mean over S draws (standardized units).
    ad::Mat<T> mc_mean(const ad::Mat<T>& h_row, int S, std::uint64_t seed) {
        ad::Mat<T> draws = sample(h_row, S, seed);
        ad::Mat<T> mean = draws.colwise().mean();
        return mean;
    }

    /// Mean negative log-likelihood of a batch (plain evaluation).
    T nll(const ad::Mat<T>& y, const ad::Mat<T>& h_ctx) {
        if (y.rows() == 0) throw TrainError("EmptySplit", "nll over an empty batch");
        return -log_prob(y, h_ctx).mean();
    }

private:
    typename ad::Tape<T>::Var reversal_const(ad::Tape<T>& tape) const {
        ad::Mat<T> perm = ad::Mat<T>::Zero(dim, dim);
        for (int j = 0; j < dim; ++j) perm(j, dim - 1 - j) = T(1);
        return tape.constant(std::move(perm));
    }
};

}  // namespace pinflow
