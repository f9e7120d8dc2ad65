#pragma once

#include <span>
#include <vector>

#include "bgf/featurizer.hpp"

namespace bgf {

/// The treatment-history featurizer derived from the covariate one: same
/// order/cumulation, no period indicator (the covariate block already carries
/// it).
inline HistoryFeaturizer treatment_featurizer(HistoryFeaturizer f) {
    f.include_period_indicator = false;
    return f;
}

/// One pooled design row: static baseline block, featurized covariate
/// history, featurized treatment history. The covariate series may be one
/// period ahead of the treatment series (assignment models) or aligned with
/// it (outcome and transition models).
inline void append_history_row(std::vector<double>& row, std::span<const double> statics,
                               const std::vector<std::vector<double>>& cov_series,
                               std::size_t cov_dim,
                               const std::vector<std::vector<double>>& a_series,
                               const HistoryFeaturizer& cov_f, const HistoryFeaturizer& a_f) {
    row.insert(row.end(), statics.begin(), statics.end());
    cov_f.append(row, cov_series, cov_dim);
    a_f.append(row, a_series, 1);
}

inline std::size_t history_row_width(std::size_t n_static, std::size_t cov_dim,
                                     const HistoryFeaturizer& cov_f,
                                     const HistoryFeaturizer& a_f) {
    return n_static + cov_f.width(cov_dim) + a_f.width(1);
}

/// Per-feature binary flags matching append_history_row's layout. Cumulative
/// sums are continuous even for binary inputs; indicator entries are binary.
inline std::vector<bool> history_row_binary(const std::vector<bool>& static_binary,
                                            const std::vector<bool>& cov_binary,
                                            const HistoryFeaturizer& cov_f,
                                            const HistoryFeaturizer& a_f) {
    std::vector<bool> flags(static_binary);
    if (cov_f.cumulate)
        for (std::size_t d = 0; d < cov_binary.size(); ++d) flags.push_back(false);
    for (int j = 0; j < cov_f.order; ++j)
        for (bool b : cov_binary) flags.push_back(b);
    if (cov_f.include_period_indicator)
        for (int k = 0; k < cov_f.num_periods; ++k) flags.push_back(true);
    if (a_f.cumulate) flags.push_back(false);
    for (int j = 0; j < a_f.order; ++j) flags.push_back(true);
    if (a_f.include_period_indicator)
        for (int k = 0; k < a_f.num_periods; ++k) flags.push_back(true);
    return flags;
}

} // namespace bgf
