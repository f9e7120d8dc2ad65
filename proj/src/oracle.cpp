#include "bgf/oracle.hpp"

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bgf/errors.hpp"

namespace bgf {

namespace {

struct HistoryKey {
    std::vector<std::vector<double>> l; // covariate vectors 0..t
    std::vector<int> a;                 // treatments 0..t

    std::string describe() const {
        std::ostringstream os;
        os << "t=" << l.size() - 1 << " l=(";
        for (std::size_t p = 0; p < l.size(); ++p) {
            if (p) os << ';';
            for (std::size_t j = 0; j < l[p].size(); ++j) {
                if (j) os << ',';
                os << l[p][j];
            }
        }
        os << ") a=(";
        for (std::size_t p = 0; p < a.size(); ++p) {
            if (p) os << ',';
            os << a[p];
        }
        os << ')';
        return os.str();
    }
};

bool matches(const SubjectRecord& s, const HistoryKey& key) {
    if (s.periods.size() < key.l.size()) return false;
    for (std::size_t p = 0; p < key.l.size(); ++p) {
        if (s.periods[p].covariates != key.l[p]) return false;
        if (s.periods[p].treatment != key.a[p]) return false;
    }
    return true;
}

struct PluginContext {
    const LongitudinalDataset& data;
    const TreatmentRegime& regime;
    int t_star;
    double alpha;
    std::vector<std::size_t> tailoring_idx;
    double risk = 0.0;
};

std::vector<double> tailoring_of(const std::vector<double>& cov,
                                 const std::vector<std::size_t>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (std::size_t j : idx) out.push_back(cov[j]);
    return out;
}

/// Recursion over histories: key holds (l_0..l_t, a_0..a_t); prob is the
/// empirical probability of the covariate path, surv the survival product.
void recurse(PluginContext& ctx, const HistoryKey& key, TailoringHistory& h_hist, double prob,
             double surv) {
    const std::size_t t = key.l.size() - 1; // predictors observed at period t

    // hazard of an event at t+1 among matching subjects uncensored through t+1
    std::size_t at_risk = 0, events = 0;
    for (const auto& s : ctx.data.subjects()) {
        if (!matches(s, key)) continue;
        const auto& rec = s.periods[t];
        if (rec.censored_next != 0) continue;
        ++at_risk;
        if (rec.event_next.value() == 1) ++events;
    }
    double hazard;
    if (at_risk == 0) {
        if (ctx.alpha <= 0.0)
            throw EmptyCell("plugin_gformula: no uncensored transitions in stratum " +
                            key.describe());
        hazard = 0.5; // alpha / (2 alpha) with zero counts
    } else {
        hazard = (static_cast<double>(events) + ctx.alpha) /
                 (static_cast<double>(at_risk) + 2.0 * ctx.alpha);
    }
    ctx.risk += prob * surv * hazard;

    const int next_t = static_cast<int>(t) + 1;
    if (next_t >= ctx.t_star) return;
    const double surv_next = surv * (1.0 - hazard);

    // empirical next-state distribution among event-free survivors
    std::map<std::vector<double>, std::size_t> counts;
    std::size_t survivors = 0;
    for (const auto& s : ctx.data.subjects()) {
        if (!matches(s, key)) continue;
        const auto& rec = s.periods[t];
        if (rec.censored_next != 0 || rec.event_next.value() != 0) continue;
        if (s.periods.size() <= t + 1)
            throw OrderingViolation("plugin_gformula: survivor lacks a follow-up record");
        ++counts[s.periods[t + 1].covariates];
        ++survivors;
    }
    if (survivors == 0) {
        if (prob * surv_next == 0.0) return;
        throw EmptyCell("plugin_gformula: no surviving transitions out of stratum " +
                        key.describe());
    }
    for (const auto& [state, count] : counts) {
        const double p_state = static_cast<double>(count) / static_cast<double>(survivors);
        HistoryKey next = key;
        next.l.push_back(state);
        h_hist.push_back(tailoring_of(state, ctx.tailoring_idx));
        next.a.push_back(ctx.regime.assign(h_hist, key.a, 0.0));
        recurse(ctx, next, h_hist, prob * p_state, surv_next);
        h_hist.pop_back();
    }
}

} // namespace

double plugin_gformula(const LongitudinalDataset& data, const TreatmentRegime& regime, int t_star,
                       double smooth_alpha) {
    if (!regime.deterministic())
        throw RegimeKindMismatch("plugin_gformula: regime must be deterministic");
    if (t_star < 1 || t_star > data.horizon())
        throw ConfigError("plugin_gformula: t_star outside 1..horizon");
    if (data.subjects().empty()) throw EmptyData("plugin_gformula: empty dataset");

    std::vector<std::size_t> tailoring_idx;
    const auto tv = data.schema().time_varying_indices();
    for (std::size_t k = 0; k < tv.size(); ++k)
        if (data.schema().covariates[tv[k]].tailoring) tailoring_idx.push_back(k);

    // empirical baseline distribution
    std::map<std::vector<double>, std::size_t> baseline;
    for (const auto& s : data.subjects()) ++baseline[s.periods.front().covariates];
    const double n = static_cast<double>(data.subjects().size());

    PluginContext ctx{data, regime, t_star, smooth_alpha, tailoring_idx};
    for (const auto& [state, count] : baseline) {
        HistoryKey key;
        key.l.push_back(state);
        TailoringHistory h_hist{tailoring_of(state, tailoring_idx)};
        key.a.push_back(regime.assign(h_hist, {}, 0.0));
        recurse(ctx, key, h_hist, static_cast<double>(count) / n, 1.0);
    }
    return ctx.risk;
}

double empirical_cuminc(const LongitudinalDataset& data, int t_star, const ScoreSeries* scores) {
    if (data.subjects().empty()) throw EmptyData("empirical_cuminc: empty dataset");
    double total = 0.0;
    for (std::size_t si = 0; si < data.subjects().size(); ++si) {
        const auto& s = data.subjects()[si];
        for (std::size_t p = 0; p < s.periods.size(); ++p) {
            const auto& rec = s.periods[p];
            if (rec.censored_next != 0 || rec.event_next.value() != 1) continue;
            if (static_cast<int>(p) + 1 > t_star) continue;
            double keep = 1.0;
            if (scores != nullptr)
                for (std::size_t q = 0; q <= p; ++q)
                    keep *= scores->per_subject[si][q].p_uncens;
            total += 1.0 / keep;
        }
    }
    return total / static_cast<double>(data.subjects().size());
}

} // namespace bgf
