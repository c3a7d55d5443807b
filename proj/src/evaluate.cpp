#include "pinflow/evaluate.hpp"

#include <iomanip>

namespace pinflow {

using nlohmann::json;

json MetricsReport::to_json() const {
    json doc = json::object();
    for (const auto& hr : heads) {
        json entry;
        if (hr.r2) entry["r2"] = *hr.r2; else entry["r2"] = nullptr;
        entry["mre_avg"] = hr.mre_avg;
        entry["mre_p75"] = hr.mre_p75;
        entry["mre_p90"] = hr.mre_p90;
        entry["frac_lt_2pct"] = hr.frac_lt_2pct;
        entry["frac_lt_5pct"] = hr.frac_lt_5pct;
        entry["frac_gt_20pct"] = hr.frac_gt_20pct;
        if (hr.nrmse) entry["nrmse"] = *hr.nrmse; else entry["nrmse"] = nullptr;
        entry["smape"] = hr.smape;
        entry["n_eval"] = hr.n_eval;
        entry["n_excluded_zero_truth"] = hr.n_excluded_zero_truth;
        entry["kde"] = {{"grid", hr.kde_truth.grid},
                        {"density_true", hr.kde_truth.density},
                        {"density_pred", hr.kde_pred.density},
                        {"bandwidth", hr.kde_truth.bandwidth}};
        doc[hr.head] = entry;
    }
    return doc;
}

std::string MetricsReport::to_table() const {
    static const std::vector<std::string> rows = {"R2",      "Avg. MRE", "MRE P75",
                                                  "MRE P90", "MRE<2%",   "MRE<5%",
                                                  "MRE>20%", "NRMSE",    "sMAPE"};
    std::ostringstream out;
    out << std::left << std::setw(12) << "Benchmark";
    for (const auto& hr : heads) out << std::right << std::setw(14) << hr.head;
    out << "\n";

    auto pct = [](double v) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(2) << 100.0 * v << "%";
        return s.str();
    };
    for (const auto& row : rows) {
        out << std::left << std::setw(12) << row;
        for (const auto& hr : heads) {
            std::string cell = "N/A";
            if (row == "R2" && hr.r2) cell = pct(*hr.r2);
            else if (row == "Avg. MRE") cell = pct(hr.mre_avg);
            else if (row == "MRE P75") cell = pct(hr.mre_p75);
            else if (row == "MRE P90") cell = pct(hr.mre_p90);
            else if (row == "MRE<2%") cell = pct(hr.frac_lt_2pct);
            else if (row == "MRE<5%") cell = pct(hr.frac_lt_5pct);
            else if (row == "MRE>20%") cell = pct(hr.frac_gt_20pct);
            else if (row == "NRMSE" && hr.nrmse) cell = pct(*hr.nrmse);
            else if (row == "sMAPE") cell = pct(hr.smape);
            out << std::right << std::setw(14) << cell;
        }
        out << "\n";
    }
    return out.str();
}

std::string MetricsReport::kde_csv(std::size_t head) const {
    const auto& hr = heads.at(head);
    std::ostringstream out;
    out.precision(12);
    out << "x,density_true,density_pred\n";
    for (std::size_t i = 0; i < hr.kde_truth.grid.size(); ++i)
        out << hr.kde_truth.grid[i] << "," << hr.kde_truth.density[i] << ","
            << hr.kde_pred.density[i] << "\n";
    return out.str();
}

json TimingStats::to_json() const {
    return {{"min_ms", min_ms},
            {"median_ms", median_ms},
            {"mean_ms", mean_ms},
            {"batch64_per_graph_ms", batch64_per_graph_ms},
            {"repetitions", repetitions},
            {"node_counts", node_counts}};
}

}  // namespace pinflow
