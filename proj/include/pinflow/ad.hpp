#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "pinflow/errors.hpp"

namespace pinflow::ad {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Persistent trainable tensor. Gradients accumulate across tape backward
/// passes until zero_grad().
template <typename T>
struct Param {
    std::string name;
    Mat<T> value;
    Mat<T> grad;
    bool trainable = true;

    Param() = default;
    Param(std::string n, Mat<T> v) : name(std::move(n)), value(std::move(v)) {
        grad = Mat<T>::Zero(value.rows(), value.cols());
    }

    void zero_grad() { grad.setZero(); }
    std::size_t size() const { return static_cast<std::size_t>(value.size()); }
};

/// Reverse-mode tape over dense row-major matrices. Nodes are created in
/// topological order; backward() walks them in reverse. Construct with
/// record=false for gradient-free forward evaluation.
template <typename T>
class Tape {
public:
    using M = Mat<T>;
    struct Var {
        int id = -1;
    };

    explicit Tape(bool record = true) : record_(record) {}

    bool recording() const { return record_; }

    const M& value(Var v) const { return nodes_[check(v)].value; }
    const M& grad(Var v) const { return nodes_[check(v)].grad; }
    T scalar(Var v) const { return nodes_[check(v)].value(0, 0); }

    Var constant(M v) { return push(std::move(v), false, {}); }

    Var leaf(M v, bool requires_grad) { return push(std::move(v), requires_grad && record_, {}); }

    Var param(Param<T>& p) {
        Var v = push(p.value, p.trainable && record_, {});
        if (nodes_[v.id].requires_grad) {
            Param<T>* target = &p;
            nodes_[v.id].backward = [this, id = v.id, target]() {
                target->grad += nodes_[id].grad;
            };
        }
        return v;
    }

    // ---- arithmetic ----

    Var add(Var a, Var b) {
        require_same_shape(a, b, "add");
        Var out = push(nodes_[a.id].value + nodes_[b.id].value, needs(a, b), {a, b});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, b]() {
                accum(a, nodes_[out.id].grad);
                accum(b, nodes_[out.id].grad);
            };
        return out;
    }

    Var sub(Var a, Var b) {
        require_same_shape(a, b, "sub");
        Var out = push(nodes_[a.id].value - nodes_[b.id].value, needs(a, b), {a, b});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, b]() {
                accum(a, nodes_[out.id].grad);
                accum(b, -nodes_[out.id].grad);
            };
        return out;
    }

    Var mul(Var a, Var b) {
        require_same_shape(a, b, "mul");
        Var out = push(nodes_[a.id].value.cwiseProduct(nodes_[b.id].value), needs(a, b), {a, b});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, b]() {
                accum(a, nodes_[out.id].grad.cwiseProduct(nodes_[b.id].value));
                accum(b, nodes_[out.id].grad.cwiseProduct(nodes_[a.id].value));
            };
        return out;
    }

    Var scale(Var a, T c) {
        Var out = push(nodes_[a.id].value * c, needs(a), {a});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, c]() { accum(a, nodes_[out.id].grad * c); };
        return out;
    }

    Var neg(Var a) { return scale(a, T(-1)); }

    Var matmul(Var a, Var b) {
        if (nodes_[a.id].value.cols() != nodes_[b.id].value.rows())
            throw ShapeError("ShapeMismatch", "matmul inner dims disagree");
        Var out = push(nodes_[a.id].value * nodes_[b.id].value, needs(a, b), {a, b});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, b]() {
                accum(a, nodes_[out.id].grad * nodes_[b.id].value.transpose());
                accum(b, nodes_[a.id].value.transpose() * nodes_[out.id].grad);
            };
        return out;
    }

    /// x (n x in) * W^T (in x out) + bias row. W is (out x in), b is (1 x out).
    /// Optional constant 0/1 mask (out x in) multiplies W elementwise.
    Var linear(Var x, Var w, Var b, const M* mask = nullptr) {
        const M& X = nodes_[x.id].value;
        const M& W = nodes_[w.id].value;
        const M& B = nodes_[b.id].value;
        if (X.cols() != W.cols() || B.rows() != 1 || B.cols() != W.rows())
            throw ShapeError("ShapeMismatch", "linear layer shape mismatch");
        M weff = mask ? W.cwiseProduct(*mask).eval() : W;
        M out_val = X * weff.transpose();
        out_val.rowwise() += B.row(0);
        Var out = push(std::move(out_val), needs(x, w) || needs(b), {x, w, b});
        if (nodes_[out.id].requires_grad) {
            std::shared_ptr<M> mask_copy = mask ? std::make_shared<M>(*mask) : nullptr;
            nodes_[out.id].backward = [this, out, x, w, b, mask_copy]() {
                const M& G = nodes_[out.id].grad;
                M weff = mask_copy ? nodes_[w.id].value.cwiseProduct(*mask_copy).eval()
                                   : nodes_[w.id].value;
                accum(x, G * weff);
                M gw = G.transpose() * nodes_[x.id].value;
                if (mask_copy) gw = gw.cwiseProduct(*mask_copy);
                accum(w, gw);
                accum(b, G.colwise().sum());
            };
        }
        return out;
    }

    Var leaky_relu(Var a, T slope) {
        const M& A = nodes_[a.id].value;
        for (Eigen::Index i = 0; i < A.size(); ++i)
            min_kink_gap_ = std::min(min_kink_gap_, std::abs(A.data()[i]));
        M out_val = A.unaryExpr([slope](T x) { return x >= T(0) ? x : slope * x; });
        Var out = push(std::move(out_val), needs(a), {a});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, slope]() {
                const M& A = nodes_[a.id].value;
                M g = nodes_[out.id].grad;
                for (Eigen::Index i = 0; i < g.rows(); ++i)
                    for (Eigen::Index j = 0; j < g.cols(); ++j)
                        if (A(i, j) < T(0)) g(i, j) *= slope;
                accum(a, g);
            };
        return out;
    }

    Var exp(Var a) {
        M out_val = nodes_[a.id].value.array().exp().matrix();
        Var out = push(std::move(out_val), needs(a), {a});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a]() {
                accum(a, nodes_[out.id].grad.cwiseProduct(nodes_[out.id].value));
            };
        return out;
    }

    /// Clamp with pass-through gradient strictly inside [lo, hi].
    Var clamp(Var a, T lo, T hi) {
        const M& A = nodes_[a.id].value;
        for (Eigen::Index i = 0; i < A.size(); ++i) {
            min_kink_gap_ = std::min(min_kink_gap_, std::abs(A.data()[i] - lo));
            min_kink_gap_ = std::min(min_kink_gap_, std::abs(A.data()[i] - hi));
        }
        M out_val = A.unaryExpr([lo, hi](T x) { return x < lo ? lo : (x > hi ? hi : x); });
        Var out = push(std::move(out_val), needs(a), {a});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, lo, hi]() {
                const M& A = nodes_[a.id].value;
                M g = nodes_[out.id].grad;
                for (Eigen::Index i = 0; i < g.rows(); ++i)
                    for (Eigen::Index j = 0; j < g.cols(); ++j)
                        if (A(i, j) <= lo || A(i, j) >= hi) g(i, j) = T(0);
                accum(a, g);
            };
        return out;
    }

    Var sum(Var a) {
        M out_val(1, 1);
        out_val(0, 0) = nodes_[a.id].value.sum();
        Var out = push(std::move(out_val), needs(a), {a});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a]() {
                accum(a, M::Constant(nodes_[a.id].value.rows(), nodes_[a.id].value.cols(),
                                     nodes_[out.id].grad(0, 0)));
            };
        return out;
    }

    Var rowsum(Var a) {
        M out_val = nodes_[a.id].value.rowwise().sum();
        Var out = push(std::move(out_val), needs(a), {a});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a]() {
                const M& G = nodes_[out.id].grad;  // n x 1
                M g(nodes_[a.id].value.rows(), nodes_[a.id].value.cols());
                for (Eigen::Index i = 0; i < g.rows(); ++i) g.row(i).setConstant(G(i, 0));
                accum(a, g);
            };
        return out;
    }

    /// Divide every entry by a positive 1x1 scalar node.
    Var div_by_scalar(Var a, Var s) {
        if (nodes_[s.id].value.size() != 1)
            throw ShapeError("ShapeMismatch", "div_by_scalar expects a 1x1 divisor");
        const T sv = nodes_[s.id].value(0, 0);
        Var out = push(nodes_[a.id].value / sv, needs(a, s), {a, s});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, s]() {
                const T sv = nodes_[s.id].value(0, 0);
                accum(a, nodes_[out.id].grad / sv);
                M gs(1, 1);
                gs(0, 0) = -(nodes_[out.id].grad.cwiseProduct(nodes_[out.id].value)).sum() / sv;
                accum(s, gs);
            };
        return out;
    }

    Var gather_rows(Var a, const std::vector<int>& idx) {
        const M& A = nodes_[a.id].value;
        M out_val(static_cast<Eigen::Index>(idx.size()), A.cols());
        for (std::size_t i = 0; i < idx.size(); ++i) out_val.row(static_cast<Eigen::Index>(i)) = A.row(idx[i]);
        Var out = push(std::move(out_val), needs(a), {a});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, idx]() {
                M g = M::Zero(nodes_[a.id].value.rows(), nodes_[a.id].value.cols());
                for (std::size_t i = 0; i < idx.size(); ++i)
                    g.row(idx[i]) += nodes_[out.id].grad.row(static_cast<Eigen::Index>(i));
                accum(a, g);
            };
        return out;
    }

    /// Softmax over entries sharing a segment id. `scores` is (n x 1).
    Var segment_softmax(Var scores, const std::vector<int>& seg, int n_segments) {
        const M& S = nodes_[scores.id].value;
        if (S.cols() != 1 || S.rows() != static_cast<Eigen::Index>(seg.size()))
            throw ShapeError("ShapeMismatch", "segment_softmax expects (n x 1) scores");
        std::vector<T> seg_max(static_cast<std::size_t>(n_segments),
                               -std::numeric_limits<T>::infinity());
        for (std::size_t i = 0; i < seg.size(); ++i)
            seg_max[seg[i]] = std::max(seg_max[seg[i]], S(static_cast<Eigen::Index>(i), 0));
        std::vector<T> seg_sum(static_cast<std::size_t>(n_segments), T(0));
        M out_val(S.rows(), 1);
        for (std::size_t i = 0; i < seg.size(); ++i) {
            out_val(static_cast<Eigen::Index>(i), 0) =
                std::exp(S(static_cast<Eigen::Index>(i), 0) - seg_max[seg[i]]);
            seg_sum[seg[i]] += out_val(static_cast<Eigen::Index>(i), 0);
        }
        for (std::size_t i = 0; i < seg.size(); ++i)
            out_val(static_cast<Eigen::Index>(i), 0) /= seg_sum[seg[i]];
        Var out = push(std::move(out_val), needs(scores), {scores});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, scores, seg, n_segments]() {
                const M& alpha = nodes_[out.id].value;
                const M& G = nodes_[out.id].grad;
                std::vector<T> dot(static_cast<std::size_t>(n_segments), T(0));
                for (std::size_t i = 0; i < seg.size(); ++i)
                    dot[seg[i]] += G(static_cast<Eigen::Index>(i), 0) * alpha(static_cast<Eigen::Index>(i), 0);
                M g(alpha.rows(), 1);
                for (std::size_t i = 0; i < seg.size(); ++i)
                    g(static_cast<Eigen::Index>(i), 0) =
                        alpha(static_cast<Eigen::Index>(i), 0) *
                        (G(static_cast<Eigen::Index>(i), 0) - dot[seg[i]]);
                accum(scores, g);
            };
        return out;
    }

    /// Scale row i of `a` by w(i). `w` is (n x 1).
    Var mul_colvec(Var a, Var w) {
        const M& A = nodes_[a.id].value;
        const M& W = nodes_[w.id].value;
        if (W.cols() != 1 || W.rows() != A.rows())
            throw ShapeError("ShapeMismatch", "mul_colvec expects (n x 1) weights");
        M out_val = A;
        for (Eigen::Index i = 0; i < A.rows(); ++i) out_val.row(i) *= W(i, 0);
        Var out = push(std::move(out_val), needs(a, w), {a, w});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, w]() {
                const M& G = nodes_[out.id].grad;
                const M& A = nodes_[a.id].value;
                const M& W = nodes_[w.id].value;
                M ga = G;
                for (Eigen::Index i = 0; i < G.rows(); ++i) ga.row(i) *= W(i, 0);
                accum(a, ga);
                M gw(W.rows(), 1);
                for (Eigen::Index i = 0; i < G.rows(); ++i) gw(i, 0) = G.row(i).dot(A.row(i));
                accum(w, gw);
            };
        return out;
    }

    /// out.row(seg[i]) += a.row(i)
    Var segment_sum(Var a, const std::vector<int>& seg, int n_out) {
        const M& A = nodes_[a.id].value;
        M out_val = M::Zero(n_out, A.cols());
        for (std::size_t i = 0; i < seg.size(); ++i)
            out_val.row(seg[i]) += A.row(static_cast<Eigen::Index>(i));
        Var out = push(std::move(out_val), needs(a), {a});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, seg]() {
                M g(nodes_[a.id].value.rows(), nodes_[a.id].value.cols());
                for (std::size_t i = 0; i < seg.size(); ++i)
                    g.row(static_cast<Eigen::Index>(i)) = nodes_[out.id].grad.row(seg[i]);
                accum(a, g);
            };
        return out;
    }

    /// Segment mean with precomputed segment sizes (graph pooling).
    Var segment_mean(Var a, const std::vector<int>& seg, int n_out) {
        std::vector<T> inv(static_cast<std::size_t>(n_out), T(0));
        for (int s : seg) inv[s] += T(1);
        for (auto& v : inv) v = v > T(0) ? T(1) / v : T(0);
        Var summed = segment_sum(a, seg, n_out);
        M weights(n_out, 1);
        for (int i = 0; i < n_out; ++i) weights(i, 0) = inv[static_cast<std::size_t>(i)];
        return mul_colvec(summed, constant(std::move(weights)));
    }

    Var hstack(Var a, Var b) {
        const M& A = nodes_[a.id].value;
        const M& B = nodes_[b.id].value;
        if (A.rows() != B.rows()) throw ShapeError("ShapeMismatch", "hstack row mismatch");
        M out_val(A.rows(), A.cols() + B.cols());
        out_val << A, B;
        Var out = push(std::move(out_val), needs(a, b), {a, b});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, b]() {
                const M& G = nodes_[out.id].grad;
                const Eigen::Index ca = nodes_[a.id].value.cols();
                accum(a, G.leftCols(ca));
                accum(b, G.rightCols(G.cols() - ca));
            };
        return out;
    }

    Var slice_cols(Var a, int from, int to) {
        const M& A = nodes_[a.id].value;
        M out_val = A.middleCols(from, to - from);
        Var out = push(std::move(out_val), needs(a), {a});
        if (nodes_[out.id].requires_grad)
            nodes_[out.id].backward = [this, out, a, from, to]() {
                M g = M::Zero(nodes_[a.id].value.rows(), nodes_[a.id].value.cols());
                g.middleCols(from, to - from) = nodes_[out.id].grad;
                accum(a, g);
            };
        return out;
    }

    /// Seed d(loss)/d(loss)=1 and propagate. `loss` must be 1x1. A loss that
    /// does not depend on any parameter (all heads inactive) leaves every
    /// gradient zero.
    void backward(Var loss) {
        if (!record_) throw Error("TapeNotRecording", "backward on a non-recording tape");
        if (nodes_[check(loss)].value.size() != 1)
            throw ShapeError("ShapeMismatch", "backward expects a scalar loss");
        for (auto& n : nodes_)
            if (n.requires_grad) n.grad.setZero();
        if (!nodes_[loss.id].requires_grad) return;
        nodes_[loss.id].grad(0, 0) = T(1);
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
            if (nodes_[i].requires_grad && nodes_[i].backward) nodes_[i].backward();
    }

    std::size_t node_count() const { return nodes_.size(); }

    /// Smallest distance of any LeakyReLU or clamp input to its kink during
    /// this tape's forward passes. Finite-difference gradient oracles are only
    /// valid when this gap exceeds the probe step.
    T min_kink_gap() const { return min_kink_gap_; }

private:
    struct Node {
        M value;
        M grad;
        std::function<void()> backward;
        bool requires_grad = false;
    };

    int check(Var v) const {
        if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
            throw Error("BadVar", "variable does not belong to this tape");
        return v.id;
    }

    bool needs(Var a) const { return record_ && nodes_[a.id].requires_grad; }
    bool needs(Var a, Var b) const {
        return record_ && (nodes_[a.id].requires_grad || nodes_[b.id].requires_grad);
    }

    void require_same_shape(Var a, Var b, const char* op) const {
        if (nodes_[a.id].value.rows() != nodes_[b.id].value.rows() ||
            nodes_[a.id].value.cols() != nodes_[b.id].value.cols())
            throw ShapeError("ShapeMismatch", std::string(op) + ": operand shapes differ");
    }

    void accum(Var v, const M& g) {
        Node& n = nodes_[v.id];
        if (!n.requires_grad) return;
        n.grad += g;
    }

    Var push(M value, bool requires_grad, std::initializer_list<Var>) {
        Node n;
        n.requires_grad = requires_grad;
        if (requires_grad) n.grad = M::Zero(value.rows(), value.cols());
        n.value = std::move(value);
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    bool record_;
    T min_kink_gap_ = std::numeric_limits<T>::infinity();
    std::vector<Node> nodes_;
};

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weight init on a fixed counter
/// stream, one counter per entry.
template <typename T, typename Rng>
Mat<T> uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, const Rng& rng,
                    std::uint64_t& counter) {
    Mat<T> m(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = static_cast<T>(rng.uniform_at(counter++, -bound, bound));
    return m;
}

}  // namespace pinflow::ad
