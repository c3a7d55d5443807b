#include "pinflow/scaler.hpp"

#include <cmath>
#include <limits>

namespace pinflow {

double Scaler::apply_one(double value, std::size_t col) const {
    if (col >= dim()) throw ShapeError("DimensionMismatch", "scaler column out of range");
    if (kind == Kind::MinMaxFeature) {
        const double range = hi[col] - lo[col];
        if (range == 0.0) return 0.0;
        return (value - lo[col]) / range;
    }
    if (hi[col] == 0.0) return 0.0;
    return (value - lo[col]) / hi[col];
}

double Scaler::invert_one(double value, std::size_t col) const {
    if (col >= dim()) throw ShapeError("DimensionMismatch", "scaler column out of range");
    if (kind == Kind::MinMaxFeature) {
        const double range = hi[col] - lo[col];
        if (range == 0.0) return lo[col];
        return lo[col] + value * range;
    }
    if (hi[col] == 0.0) return lo[col];
    return lo[col] + value * hi[col];
}

Scaler fit_feature_scaler(const std::vector<const PinGraph*>& graphs) {
    if (graphs.empty()) throw TrainError("EmptySplit", "cannot fit a feature scaler on zero graphs");
    const std::size_t d = graphs.front()->d;
    Scaler s;
    s.kind = Scaler::Kind::MinMaxFeature;
    s.lo.assign(d, std::numeric_limits<double>::infinity());
    s.hi.assign(d, -std::numeric_limits<double>::infinity());
    for (const PinGraph* g : graphs) {
        if (g->d != d) throw ShapeError("DimensionMismatch", "graphs disagree on feature dim");
        for (std::uint32_t v = 0; v < g->n; ++v)
            for (std::uint32_t c = 0; c < g->d; ++c) {
                const double value = g->at(v, c);
                s.lo[c] = std::min(s.lo[c], value);
                s.hi[c] = std::max(s.hi[c], value);
            }
    }
    return s;
}

Scaler fit_target_scaler(const std::vector<const PinGraph*>& graphs, std::size_t n_heads) {
    if (graphs.empty()) throw TrainError("EmptySplit", "cannot fit a target scaler on zero graphs");
    Scaler s;
    s.kind = Scaler::Kind::ZScoreTarget;
    s.lo.assign(n_heads, 0.0);
    s.hi.assign(n_heads, 0.0);
    for (std::size_t h = 0; h < n_heads; ++h) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const PinGraph* g : graphs)
            if (h < g->y_mask.size() && g->y_mask[h]) {
                sum += g->y[h];
                ++count;
            }
        if (count == 0) continue;
        const double mean = sum / static_cast<double>(count);
        double sq = 0.0;
        for (const PinGraph* g : graphs)
            if (h < g->y_mask.size() && g->y_mask[h]) {
                const double dy = g->y[h] - mean;
                sq += dy * dy;
            }
        s.lo[h] = mean;
        s.hi[h] = std::sqrt(sq / static_cast<double>(count));  // population std
    }
    return s;
}

void apply_feature_scaler(const PinGraph& g, const Scaler& s, std::vector<double>& out) {
    if (s.kind != Scaler::Kind::MinMaxFeature)
        throw ShapeError("DimensionMismatch", "feature scaler expected");
    if (g.d != s.dim()) throw ShapeError("DimensionMismatch", "graph/scaler dim mismatch");
    out.resize(static_cast<std::size_t>(g.n) * g.d);
    for (std::uint32_t v = 0; v < g.n; ++v)
        for (std::uint32_t c = 0; c < g.d; ++c)
            out[static_cast<std::size_t>(v) * g.d + c] = s.apply_one(g.at(v, c), c);
}

double standardize_target(double y, const Scaler& s, std::size_t head) {
    if (s.kind != Scaler::Kind::ZScoreTarget)
        throw ShapeError("DimensionMismatch", "target scaler expected");
    return s.apply_one(y, head);
}

double invert_target(double y_std, const Scaler& s, std::size_t head) {
    if (s.kind != Scaler::Kind::ZScoreTarget)
        throw ShapeError("DimensionMismatch", "target scaler expected");
    return s.invert_one(y_std, head);
}

}  // namespace pinflow
