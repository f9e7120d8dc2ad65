#include "bgf/featurizer.hpp"

#include "bgf/errors.hpp"

namespace bgf {

std::vector<double> featurize_history(const HistoryFeaturizer& f,
                                      const std::vector<std::vector<double>>& series) {
    if (series.empty()) throw WidthMismatch("featurize_history: series must be nonempty");
    const std::size_t dim = series.front().size();
    for (const auto& v : series)
        if (v.size() != dim) throw WidthMismatch("featurize_history: ragged series");
    return f.featurize(series, dim);
}

} // namespace bgf
