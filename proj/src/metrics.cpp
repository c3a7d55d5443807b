#include "pinflow/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace pinflow::metrics {

namespace {
constexpr double kInvSqrtTwoPi = 0.3989422804014327;

void require_same_size(const std::vector<double>& y, const std::vector<double>& yhat) {
    if (y.size() != yhat.size()) throw ShapeError("DimensionMismatch", "y/yhat length mismatch");
}
}  // namespace

double r2(const std::vector<double>& y, const std::vector<double>& yhat) {
    require_same_size(y, yhat);
    if (y.size() < 2) throw Error("TooFew", "r2 needs at least 2 points");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0.0) throw Error("ConstantTruth", "r2 undefined for constant truth");
    return 1.0 - ss_res / ss_tot;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw Error("EmptyInput", "percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double rank = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = rank - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

MreStats mre_stats(const std::vector<double>& y, const std::vector<double>& yhat) {
    require_same_size(y, yhat);
    MreStats stats;
    std::vector<double> errs;
    errs.reserve(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) {
            ++stats.n_excluded;
            continue;
        }
        errs.push_back(std::abs(y[i] - yhat[i]) / std::abs(y[i]));
    }
    if (errs.empty()) throw Error("AllExcluded", "every truth is exactly zero");
    stats.n_eval = errs.size();
    double sum = 0.0;
    std::size_t lt2 = 0, lt5 = 0, gt20 = 0;
    for (double e : errs) {
        sum += e;
        if (e < 0.02) ++lt2;
        if (e < 0.05) ++lt5;
        if (e > 0.20) ++gt20;
    }
    stats.avg = sum / static_cast<double>(errs.size());
    stats.p75 = percentile(errs, 0.75);
    stats.p90 = percentile(errs, 0.90);
    stats.frac_lt_2pct = static_cast<double>(lt2) / static_cast<double>(errs.size());
    stats.frac_lt_5pct = static_cast<double>(lt5) / static_cast<double>(errs.size());
    stats.frac_gt_20pct = static_cast<double>(gt20) / static_cast<double>(errs.size());
    return stats;
}

double nrmse(const std::vector<double>& y, const std::vector<double>& yhat) {
    require_same_size(y, yhat);
    if (y.empty()) throw Error("EmptyInput", "nrmse of an empty sample");
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const double range = *hi - *lo;
    if (range == 0.0) throw Error("ZeroRange", "nrmse undefined for zero truth range");
    double mse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) mse += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    mse /= static_cast<double>(y.size());
    return std::sqrt(mse) / range;
}

SmapeResult smape(const std::vector<double>& y, const std::vector<double>& yhat) {
    require_same_size(y, yhat);
    SmapeResult out;
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double denom = std::abs(y[i]) + std::abs(yhat[i]);
        if (denom == 0.0) {
            ++out.n_excluded;
            continue;
        }
        sum += 2.0 * std::abs(y[i] - yhat[i]) / denom;
        ++out.n_eval;
    }
    if (out.n_eval == 0) throw Error("AllExcluded", "every |y|+|yhat| is zero");
    out.value = sum / static_cast<double>(out.n_eval);
    return out;
}

double silverman_bandwidth(const std::vector<double>& values) {
    if (values.empty()) throw Error("EmptyInput", "bandwidth of an empty sample");
    const double n = static_cast<double>(values.size());
    if (values.size() == 1) return 1.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(sq / (n - 1.0));
    if (sd <= 0.0) return 1.0;
    return 1.06 * sd * std::pow(n, -0.2);
}

KdeCurve kde(const std::vector<double>& values, const std::vector<double>& grid,
             double bandwidth) {
    if (values.empty()) throw Error("EmptyInput", "kde of an empty sample");
    KdeCurve curve;
    curve.bandwidth = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(values);
    curve.grid = grid;
    curve.density.resize(grid.size(), 0.0);
    const double inv_h = 1.0 / curve.bandwidth;
    const double norm = kInvSqrtTwoPi * inv_h / static_cast<double>(values.size());
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        double acc = 0.0;
        for (double v : values) {
            const double u = (grid[gi] - v) * inv_h;
            acc += std::exp(-0.5 * u * u);
        }
        curve.density[gi] = acc * norm;
    }
    return curve;
}

std::vector<double> kde_grid(double lo, double hi, double bandwidth, std::size_t points) {
    std::vector<double> grid(points);
    const double a = lo - 3.0 * bandwidth;
    const double b = hi + 3.0 * bandwidth;
    const double step = points > 1 ? (b - a) / static_cast<double>(points - 1) : 0.0;
    for (std::size_t i = 0; i < points; ++i) grid[i] = a + step * static_cast<double>(i);
    return grid;
}

}  // namespace pinflow::metrics
