#ifndef PROXIMITY_EQUITY_HPP
#define PROXIMITY_EQUITY_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "proximity/dataset.hpp"
#include "proximity/indicators.hpp"

namespace proximity {

class WeightedSeries {
public:
    WeightedSeries(std::vector<std::pair<double, double>> entries)  // (value, weight)
        : entries_(std::move(entries)) {
        double wsum = 0.0;
        for (const auto& [v, w] : entries_) {
            if (!std::isfinite(v) || !std::isfinite(w) || w < 0.0)
                throw std::invalid_argument("WeightedSeries: values finite, weights >= 0");
            wsum += w;
        }
        if (!(wsum > 0.0)) throw std::invalid_argument("WeightedSeries: total weight must be > 0");
        std::sort(entries_.begin(), entries_.end());
    }

    const std::vector<std::pair<double, double>>& sorted() const { return entries_; }
    size_t size() const { return entries_.size(); }

private:
    std::vector<std::pair<double, double>> entries_;  // ascending by value
};

/// Lorenz-trapezoid Gini: G = 1 - Sum_k (X_k - X_{k-1})(Y_k + Y_{k-1}) over the
/// value-ascending cumulative curve.
inline double gini(const WeightedSeries& series) {
    double wsum = 0.0, vwsum = 0.0;
    for (const auto& [v, w] : series.sorted()) {
        if (v < 0.0) throw std::invalid_argument("gini: values must be >= 0");
        wsum += w;
        vwsum += v * w;
    }
    if (!(vwsum > 0.0)) throw std::invalid_argument("gini: total value is zero, Lorenz curve undefined");
    double g = 1.0, x_prev = 0.0, y_prev = 0.0, xc = 0.0, yc = 0.0;
    for (const auto& [v, w] : series.sorted()) {
        xc += w / wsum;
        yc += v * w / vwsum;
        g -= (xc - x_prev) * (yc + y_prev);
        x_prev = xc;
        y_prev = yc;
    }
    return g;
}

/// Pearson product-moment r; nullopt when either variance vanishes.
inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    const size_t n = x.size();
    if (n < 3) throw std::invalid_argument("pearson: need at least 3 observations");
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

inline constexpr double kReportableThreshold = 0.3;

inline const std::vector<std::string>& indicator_names() {
    static const std::vector<std::string> n = {"num_poi", "pct_act_15min", "pct_act_sat_15min",
                                               "pct_reduced_dist", "pct_reduced_carbon"};
    return n;
}
inline const std::vector<std::string>& demographic_names() {
    static const std::vector<std::string> n = {"median_income", "pct_white", "pct_black",
                                               "pct_asian", "pct_hispanic"};
    return n;
}

inline std::optional<double> indicator_value(const IndicatorRow& row, const std::string& name) {
    if (row.excluded) return std::nullopt;
    if (name == "num_poi") return static_cast<double>(row.values.num_poi);
    if (name == "pct_act_15min") return row.values.pct_act_15min;
    if (name == "pct_act_sat_15min") return row.values.pct_act_sat_15min;
    if (name == "pct_reduced_dist") return row.values.pct_reduced_dist;
    if (name == "pct_reduced_carbon") return row.values.pct_reduced_carbon;
    throw std::invalid_argument("unknown indicator " + name);
}

inline std::optional<double> demographic_value(const CbgRecord& cbg, const std::string& name) {
    if (name == "median_income") return cbg.median_income;
    if (name == "pct_white") return cbg.pct_white;
    if (name == "pct_black") return cbg.pct_black;
    if (name == "pct_asian") return cbg.pct_asian;
    if (name == "pct_hispanic") return cbg.pct_hispanic;
    throw std::invalid_argument("unknown demographic " + name);
}

struct CorrelationCell {
    std::string indicator;
    Mode mode = Mode::walk;
    std::string variable;
    std::optional<double> r;  // nullopt: degenerate (zero variance or n < 3)
    int n = 0;
    bool reportable = false;  // |r| >= 0.3
};

struct CorrelationMatrix {
    std::vector<CorrelationCell> cells;
    std::string diagnostic;  // nonempty when the matrix could not be built
};

/// Pairwise-complete Pearson grid: (indicator x mode) rows by demographic
/// columns. Requires >= 3 CBGs with complete demographics overall.
inline CorrelationMatrix correlation_matrix(const std::vector<IndicatorRow>& rows,
                                            const CityDataset& ds) {
    CorrelationMatrix out;
    int complete = 0;
    for (const auto& c : ds.cbgs)
        if (c.has_complete_demographics()) ++complete;
    if (complete < 3) {
        out.diagnostic = "fewer than 3 CBGs with complete demographics (" +
                         std::to_string(complete) + ")";
        return out;
    }

    // group rows by mode for lookup
    std::map<std::pair<std::string, int>, const IndicatorRow*> by_key;
    std::vector<Mode> modes;
    for (const auto& r : rows) {
        by_key[{r.cbg_id, static_cast<int>(r.mode)}] = &r;
        if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
    }
    std::sort(modes.begin(), modes.end(),
              [](Mode a, Mode b) { return static_cast<int>(a) < static_cast<int>(b); });

    for (const auto& ind : indicator_names()) {
        for (Mode m : modes) {
            for (const auto& dem : demographic_names()) {
                CorrelationCell cell;
                cell.indicator = ind;
                cell.mode = m;
                cell.variable = dem;
                std::vector<double> x, y;
                for (const auto& cbg : ds.cbgs) {
                    auto it = by_key.find({cbg.cbg_id, static_cast<int>(m)});
                    if (it == by_key.end()) continue;
                    auto iv = indicator_value(*it->second, ind);
                    auto dv = demographic_value(cbg, dem);
                    if (iv && dv) { x.push_back(*iv); y.push_back(*dv); }
                }
                cell.n = static_cast<int>(x.size());
                if (cell.n >= 3) {
                    cell.r = pearson(x, y);
                    if (cell.r) cell.reportable = std::abs(*cell.r) >= kReportableThreshold;
                }
                out.cells.push_back(std::move(cell));
            }
        }
    }
    return out;
}

enum class GiniWeighting { population, unweighted };

inline std::string to_string(GiniWeighting w) {
    return w == GiniWeighting::population ? "population" : "unweighted";
}

struct SummaryRow {
    std::string indicator;
    Mode mode = Mode::walk;
    int n = 0;
    double mean = 0.0;
    double median = 0.0;
    std::optional<double> gini;  // nullopt when undefined (with a diagnostic)
    std::string diagnostic;
};

struct CitySummary {
    std::vector<SummaryRow> rows;
    std::vector<std::string> diagnostics;  // omitted all-null rows etc.
};

/// Per-(indicator, mode) mean, median, and Gini over non-null CBG values.
inline CitySummary city_summary(const std::vector<IndicatorRow>& rows, const CityDataset& ds,
                                GiniWeighting weighting = GiniWeighting::population) {
    CitySummary out;
    if (rows.empty()) throw std::invalid_argument("city_summary: empty indicator set");
    std::vector<Mode> modes;
    for (const auto& r : rows)
        if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
    std::sort(modes.begin(), modes.end(),
              [](Mode a, Mode b) { return static_cast<int>(a) < static_cast<int>(b); });

    for (const auto& ind : indicator_names()) {
        for (Mode m : modes) {
            std::vector<std::pair<double, double>> entries;
            std::vector<double> values;
            for (const auto& r : rows) {
                if (r.mode != m) continue;
                auto v = indicator_value(r, ind);
                if (!v) continue;
                values.push_back(*v);
                double w = 1.0;
                if (weighting == GiniWeighting::population) {
                    int ci = ds.cbg_index(r.cbg_id);
                    w = ci >= 0 ? static_cast<double>(ds.cbgs[ci].population) : 0.0;
                }
                if (w > 0.0) entries.emplace_back(*v, w);
            }
            if (values.empty()) {
                out.diagnostics.push_back(ind + "/" + to_string(m) + ": all values null, row omitted");
                continue;
            }
            SummaryRow row;
            row.indicator = ind;
            row.mode = m;
            row.n = static_cast<int>(values.size());
            for (double v : values) row.mean += v;
            row.mean /= values.size();
            std::sort(values.begin(), values.end());
            row.median = values.size() % 2 ? values[values.size() / 2]
                                           : 0.5 * (values[values.size() / 2 - 1] + values[values.size() / 2]);
            try {
                row.gini = gini(WeightedSeries(entries));
            } catch (const std::exception& e) {
                row.diagnostic = e.what();
            }
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

}  // namespace proximity

#endif  // PROXIMITY_EQUITY_HPP
