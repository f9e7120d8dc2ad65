#pragma once

#include <cstddef>
#include <vector>

namespace bgf {

/// Turns a ragged per-period history v_0..v_t into a fixed-width feature
/// block: optionally a cumulative sum over periods older than the last
/// `order`, then the most recent `order` period vectors (most recent first),
/// then a one-hot period indicator. Early periods are zero-padded so the
/// width never depends on t.
struct HistoryFeaturizer {
    int order = 1;
    bool cumulate = false;
    bool include_period_indicator = true;
    int num_periods = 1; // width of the indicator block (the study horizon)

    std::size_t width(std::size_t dim) const {
        return dim * static_cast<std::size_t>(order + (cumulate ? 1 : 0)) +
               (include_period_indicator ? static_cast<std::size_t>(num_periods) : 0);
    }

    /// Appends the feature block for the series to `out`. An empty series is
    /// treated as all-padding (used for the treatment history at t = 0).
    void append(std::vector<double>& out, const std::vector<std::vector<double>>& series,
                std::size_t dim) const {
        const int t = static_cast<int>(series.size()) - 1;
        if (cumulate) {
            for (std::size_t d = 0; d < dim; ++d) {
                double sum = 0.0;
                for (int s = 0; s <= t - order; ++s) sum += series[s][d];
                out.push_back(sum);
            }
        }
        for (int j = 0; j < order; ++j) {
            const int s = t - j;
            for (std::size_t d = 0; d < dim; ++d)
                out.push_back(s >= 0 ? series[s][d] : 0.0);
        }
        if (include_period_indicator) {
            for (int k = 0; k < num_periods; ++k)
                out.push_back(k == t ? 1.0 : 0.0);
        }
    }

    std::vector<double> featurize(const std::vector<std::vector<double>>& series,
                                  std::size_t dim) const {
        std::vector<double> out;
        out.reserve(width(dim));
        append(out, series, dim);
        return out;
    }
};

/// featurize_history per the module contract: series must be nonempty and
/// all periods share the width of the first.
std::vector<double> featurize_history(const HistoryFeaturizer& f,
                                      const std::vector<std::vector<double>>& series);

} // namespace bgf
