#pragma once

#include <string>
#include <vector>

#include "pinflow/graphize.hpp"

namespace pinflow {

/// Per-column statistics for feature min-max scaling or per-head target
/// z-standardization. Fitted on the training split only; degenerate columns
/// (min==max or std==0) map to 0 on apply and back to the stored center on
/// invert.
struct Scaler {
    enum class Kind { MinMaxFeature, ZScoreTarget };

    Kind kind = Kind::MinMaxFeature;
    std::vector<double> lo;      // min (minmax) or mean (zscore)
    std::vector<double> hi;      // max (minmax) or population std (zscore)
    std::string fitted_on = "train";

    std::size_t dim() const { return lo.size(); }

    double apply_one(double value, std::size_t col) const;
    double invert_one(double value, std::size_t col) const;
};

/// Fit a feature scaler over every node row of the given graphs.
/// Throws TrainError(EmptySplit) when `graphs` is empty.
Scaler fit_feature_scaler(const std::vector<const PinGraph*>& graphs);

/// Fit a per-head target standardizer over masked-present targets.
/// Uses the population std. Heads with no present targets keep mean 0, std 0.
Scaler fit_target_scaler(const std::vector<const PinGraph*>& graphs, std::size_t n_heads);

/// Scale one graph's feature matrix into `out` (row-major n*d).
/// Throws ShapeError(DimensionMismatch) when d differs from the scaler.
void apply_feature_scaler(const PinGraph& g, const Scaler& s, std::vector<double>& out);

double standardize_target(double y, const Scaler& s, std::size_t head);
double invert_target(double y_std, const Scaler& s, std::size_t head);

}  // namespace pinflow
