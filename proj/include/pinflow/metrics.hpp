#pragma once

#include <cstddef>
#include <vector>

#include "pinflow/errors.hpp"

namespace pinflow::metrics {

/// Coefficient of determination 1 - SS_res/SS_tot.
/// Throws Error(ConstantTruth) when the truth has no variance (reported N/A
/// upstream) and Error(TooFew) for n < 2.
double r2(const std::vector<double>& y, const std::vector<double>& yhat);

struct MreStats {
    double avg = 0.0;
    double p75 = 0.0;
    double p90 = 0.0;
    double frac_lt_2pct = 0.0;
    double frac_lt_5pct = 0.0;
    double frac_gt_20pct = 0.0;
    std::size_t n_eval = 0;
    std::size_t n_excluded = 0;  // exact-zero truths
};

/// Relative errors |y-yhat|/|y|. Entries with y exactly 0 are excluded and
/// counted. Percentiles interpolate the sorted sample at rank q*(n-1);
/// threshold fractions use strict comparisons. Throws Error(AllExcluded).
MreStats mre_stats(const std::vector<double>& y, const std::vector<double>& yhat);

/// RMSE / (max(y) - min(y)). Throws Error(ZeroRange) when the truth range is
/// zero (reported N/A upstream).
double nrmse(const std::vector<double>& y, const std::vector<double>& yhat);

struct SmapeResult {
    double value = 0.0;      // fraction; multiply by 100 for display
    std::size_t n_eval = 0;
    std::size_t n_excluded = 0;  // |y|+|yhat| == 0 entries
};

/// mean of 2|y-yhat| / (|y|+|yhat|); bounded by 2. Throws Error(AllExcluded).
SmapeResult smape(const std::vector<double>& y, const std::vector<double>& yhat);

/// Linear-interpolation percentile of an unsorted sample, q in [0,1].
double percentile(std::vector<double> values, double q);

struct KdeCurve {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
};

/// Gaussian kernel density on an explicit grid. bandwidth <= 0 selects
/// Silverman's rule 1.06 * sigma_hat * n^(-1/5) with the n-1 sample std
/// (falls back to 1.0 when the sample is degenerate).
/// Throws Error(EmptyInput).
KdeCurve kde(const std::vector<double>& values, const std::vector<double>& grid,
             double bandwidth = 0.0);

/// Evenly spaced grid of `points` values covering [lo - 3h, hi + 3h].
std::vector<double> kde_grid(double lo, double hi, double bandwidth, std::size_t points = 512);

double silverman_bandwidth(const std::vector<double>& values);

}  // namespace pinflow::metrics
