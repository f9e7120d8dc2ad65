#include "bgf/parametric.hpp"

#include "bgf/errors.hpp"
#include "bgf/rng.hpp"

namespace bgf {

double GlmEngine::outcome_prob(std::size_t, std::span<const double> row) const {
    return outcome.predict_prob(row);
}

double GlmEngine::draw_element(std::size_t, std::size_t m, std::span<const double> row,
                               Rng& rng) const {
    const ElementModel& em = elements[m];
    if (em.binary) return rng.uniform() < em.logistic.predict_prob(row) ? 1.0 : 0.0;
    return rng.normal(em.linear.predict(row), em.linear.residual_sd);
}

ParametricModels fit_parametric_models(const BalancingSeries& series,
                                       const HistoryFeaturizer& f) {
    PooledDesigns d = build_pooled_designs(series, f);

    ParametricModels models;
    models.schema = series.schema;
    models.featurizer = d.featurizer;
    models.horizon = series.horizon;
    models.element_order = d.element_order;
    // small ridge: absorbing binary states make some transition models
    // perfectly separable, where the unpenalized MLE sits at infinity
    constexpr double kRidge = 1e-3;
    models.engine.outcome = fit_logistic(d.outcome_x, d.outcome_y, 1e-8, 100, kRidge);

    for (std::size_t m = 0; m < d.element_order.size(); ++m) {
        GlmEngine::ElementModel em;
        em.binary = series.schema.binary[d.element_order[m]];
        if (em.binary) {
            std::vector<int> ybin(d.element_y[m].size());
            for (std::size_t i = 0; i < ybin.size(); ++i)
                ybin[i] = d.element_y[m][i] > 0.5 ? 1 : 0;
            em.logistic = fit_logistic(d.element_x[m], ybin, 1e-8, 100, kRidge);
        } else {
            em.linear = fit_linear(d.element_x[m], d.element_y[m]);
        }
        models.engine.elements.push_back(std::move(em));
    }
    return models;
}

namespace {
BalancingSeries resample_subjects(const BalancingSeries& series, Rng& rng) {
    BalancingSeries out;
    out.schema = series.schema;
    out.horizon = series.horizon;
    out.subjects.reserve(series.subjects.size());
    for (std::size_t i = 0; i < series.subjects.size(); ++i)
        out.subjects.push_back(series.subjects[rng.uniform_int(series.subjects.size())]);
    return out;
}
} // namespace

RiskDraws estimate_parametric(const BalancingSeries& series, const TreatmentRegime& regime,
                              const HistoryFeaturizer& f, const MonteCarloConfig& cfg,
                              int bootstrap_b) {
    const std::vector<BaselineRecord> pool = baseline_pool(series);

    MonteCarloConfig point_cfg = cfg;
    point_cfg.R = 1;
    const ParametricModels fit = fit_parametric_models(series, f);
    RiskDraws out = estimate_with_engine(fit.engine, fit.schema, fit.featurizer,
                                         fit.element_order, fit.horizon, regime, pool, point_cfg,
                                         "parametric");

    Rng boot_rng(derive_seed(cfg.seed, 0xB007ULL));
    for (int b = 1; b <= bootstrap_b; ++b) {
        const BalancingSeries resampled = resample_subjects(series, boot_rng);
        const ParametricModels refit = fit_parametric_models(resampled, f);
        MonteCarloConfig bcfg = cfg;
        bcfg.R = 1;
        bcfg.seed = derive_seed(cfg.seed, 0xB007ULL + static_cast<std::uint64_t>(b));
        const RiskDraws rb = estimate_with_engine(
            refit.engine, refit.schema, refit.featurizer, refit.element_order, refit.horizon,
            regime, baseline_pool(resampled), bcfg, "parametric");
        out.draws.push_back(rb.draws.front());
    }
    return out;
}

} // namespace bgf
