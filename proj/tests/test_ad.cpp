#include <doctest.h>

#include <cmath>

#include "pinflow/ad.hpp"
#include "pinflow/rng.hpp"

using namespace pinflow;
using ad::Mat;
using ad::Param;
using ad::Tape;

namespace {

Mat<double> random_mat(Eigen::Index rows, Eigen::Index cols, const CounterRng& rng,
                       std::uint64_t& ctr, double lo = -1.0, double hi = 1.0) {
    Mat<double> m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform_at(ctr++, lo, hi);
    return m;
}

/// Finite-difference check of d(loss)/d(param) for a scalar-valued builder.
template <typename BuildFn>
double fd_check(Param<double>& p, BuildFn build, double step = 1e-6) {
    p.zero_grad();
    {
        Tape<double> tape(true);
        tape.backward(build(tape));
    }
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.value.rows(); ++i)
        for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
            const double saved = p.value(i, j);
            p.value(i, j) = saved + step;
            Tape<double> up_tape(false);
            const double up = up_tape.scalar(build(up_tape));
            p.value(i, j) = saved - step;
            Tape<double> dn_tape(false);
            const double dn = dn_tape.scalar(build(dn_tape));
            p.value(i, j) = saved;
            const double fd = (up - dn) / (2 * step);
            const double an = p.grad(i, j);
            worst = std::max(worst, std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)}));
        }
    return worst;
}

}  // namespace

TEST_CASE("basic op values") {
    Tape<double> tape(false);
    Mat<double> a(2, 2), b(2, 2);
    a << 1, 2, 3, 4;
    b << 5, 6, 7, 8;
    auto va = tape.constant(a), vb = tape.constant(b);
    CHECK(tape.value(tape.add(va, vb))(1, 1) == 12.0);
    CHECK(tape.value(tape.sub(va, vb))(0, 0) == -4.0);
    CHECK(tape.value(tape.mul(va, vb))(0, 1) == 12.0);
    CHECK(tape.value(tape.matmul(va, vb))(0, 0) == 19.0);
    CHECK(tape.value(tape.leaky_relu(tape.constant(-a), 0.1))(0, 0) == doctest::Approx(-0.1));
    CHECK(tape.value(tape.sum(va))(0, 0) == 10.0);
    CHECK(tape.value(tape.rowsum(va))(1, 0) == 7.0);
    CHECK(tape.value(tape.exp(tape.constant(Mat<double>::Zero(1, 1))))(0, 0) == 1.0);
    CHECK(tape.value(tape.clamp(va, 0.0, 2.5))(1, 1) == 2.5);
    CHECK(tape.value(tape.slice_cols(va, 1, 2))(0, 0) == 2.0);
    CHECK(tape.value(tape.hstack(va, vb)).cols() == 4);
}

TEST_CASE("segment ops") {
    Tape<double> tape(false);
    Mat<double> scores(4, 1);
    scores << std::log(2.0), 0.0, 1.0, 1.0;
    const std::vector<int> seg = {0, 0, 1, 1};
    auto alpha = tape.segment_softmax(tape.constant(scores), seg, 2);
    CHECK(tape.value(alpha)(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(tape.value(alpha)(1, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(tape.value(alpha)(2, 0) == doctest::Approx(0.5));

    Mat<double> rows(4, 2);
    rows << 1, 0, 0, 1, 2, 2, 4, 4;
    auto summed = tape.segment_sum(tape.constant(rows), seg, 2);
    CHECK(tape.value(summed)(0, 0) == 1.0);
    CHECK(tape.value(summed)(1, 1) == 6.0);
    auto mean = tape.segment_mean(tape.constant(rows), seg, 2);
    CHECK(tape.value(mean)(1, 0) == 3.0);
}

TEST_CASE("gradients match finite differences per op") {
    const CounterRng rng(13, 0);
    std::uint64_t ctr = 0;

    SUBCASE("matmul + sum") {
        Param<double> p("w", random_mat(3, 4, rng, ctr));
        const Mat<double> x = random_mat(5, 3, rng, ctr);
        CHECK(fd_check(p, [&](Tape<double>& t) {
                  return t.sum(t.matmul(t.constant(x), t.param(p)));
              }) < 1e-8);
    }
    SUBCASE("linear with mask") {
        Param<double> w("w", random_mat(4, 3, rng, ctr));
        Param<double> b("b", random_mat(1, 4, rng, ctr));
        Mat<double> mask(4, 3);
        mask << 1, 0, 1, 0, 1, 1, 1, 1, 0, 0, 0, 1;
        const Mat<double> x = random_mat(6, 3, rng, ctr);
        auto build = [&](Tape<double>& t) {
            auto out = t.linear(t.constant(x), t.param(w), t.param(b), &mask);
            return t.sum(t.mul(out, out));
        };
        CHECK(fd_check(w, build) < 1e-7);
        CHECK(fd_check(b, build) < 1e-7);
        // Masked-out weights must have exactly zero gradient.
        w.zero_grad();
        b.zero_grad();
        {
            Tape<double> t(true);
            t.backward(build(t));
        }
        CHECK(w.grad(0, 1) == 0.0);
        CHECK(w.grad(3, 0) == 0.0);
    }
    SUBCASE("leaky_relu, exp, clamp chain") {
        Param<double> p("p", random_mat(4, 4, rng, ctr, -2.0, 2.0));
        CHECK(fd_check(p, [&](Tape<double>& t) {
                  auto v = t.param(p);
                  return t.sum(t.exp(t.clamp(t.leaky_relu(v, 0.1), -1.5, 1.5)));
              }) < 1e-7);
    }
    SUBCASE("segment softmax attention pattern") {
        Param<double> p("scores", random_mat(6, 1, rng, ctr));
        const std::vector<int> seg = {0, 0, 0, 1, 1, 2};
        const Mat<double> msg = random_mat(6, 3, rng, ctr);
        CHECK(fd_check(p, [&](Tape<double>& t) {
                  auto alpha = t.segment_softmax(t.param(p), seg, 3);
                  auto agg = t.segment_sum(t.mul_colvec(t.constant(msg), alpha), seg, 3);
                  return t.sum(t.mul(agg, agg));
              }) < 1e-7);
    }
    SUBCASE("gather + hstack + slice + rowsum") {
        Param<double> p("p", random_mat(4, 3, rng, ctr));
        const std::vector<int> idx = {2, 0, 0, 3, 1};
        CHECK(fd_check(p, [&](Tape<double>& t) {
                  auto g = t.gather_rows(t.param(p), idx);
                  auto s = t.hstack(g, g);
                  return t.sum(t.rowsum(t.mul(t.slice_cols(s, 1, 5), t.slice_cols(s, 0, 4))));
              }) < 1e-7);
    }
    SUBCASE("div_by_scalar with gradient to both sides") {
        Param<double> p("p", random_mat(3, 3, rng, ctr));
        Param<double> s("s", Mat<double>::Constant(1, 1, 1.7));
        auto build = [&](Tape<double>& t) {
            auto out = t.div_by_scalar(t.param(p), t.exp(t.param(s)));
            return t.sum(t.mul(out, out));
        };
        CHECK(fd_check(p, build) < 1e-7);
        CHECK(fd_check(s, build) < 1e-7);
    }
}

TEST_CASE("gradients accumulate across backward passes until cleared") {
    Param<double> p("p", Mat<double>::Constant(1, 1, 2.0));
    for (int round = 0; round < 2; ++round) {
        Tape<double> t(true);
        auto v = t.param(p);
        t.backward(t.mul(v, v));  // d/dp = 2p = 4
    }
    CHECK(p.grad(0, 0) == doctest::Approx(8.0));
    p.zero_grad();
    CHECK(p.grad(0, 0) == 0.0);
}

TEST_CASE("non-recording tapes skip gradient bookkeeping") {
    Param<double> p("p", Mat<double>::Constant(2, 2, 1.0));
    Tape<double> t(false);
    auto v = t.param(p);
    auto loss = t.sum(t.mul(v, v));
    CHECK(t.scalar(loss) == 4.0);
    CHECK_THROWS_AS(t.backward(loss), Error);
}

TEST_CASE("shape errors are reported") {
    Tape<double> t(false);
    auto a = t.constant(Mat<double>::Zero(2, 3));
    auto b = t.constant(Mat<double>::Zero(3, 2));
    CHECK_THROWS_AS(t.add(a, b), ShapeError);
    CHECK_THROWS_AS(t.matmul(a, a), ShapeError);
    CHECK_THROWS_AS(t.backward(a), Error);
}
