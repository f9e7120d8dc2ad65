#pragma once

#include "bgf/gformula.hpp"
#include "bgf/glm.hpp"
#include "bgf/scores.hpp"

namespace bgf {

/// GLM conditionals plugged into the shared forward simulator: a logistic
/// outcome model and one linear (continuous) or logistic (binary) model per
/// balancing-state element.
class GlmEngine : public GenerativeEngine {
public:
    struct ElementModel {
        bool binary = false;
        GlmFit logistic;  // used when binary
        LinearFit linear; // used otherwise
    };

    GlmFit outcome;
    std::vector<ElementModel> elements; // in element_order

    std::size_t num_draws() const override { return 1; }
    double outcome_prob(std::size_t r, std::span<const double> row) const override;
    std::size_t num_elements() const override { return elements.size(); }
    double draw_element(std::size_t r, std::size_t m, std::span<const double> row,
                        Rng& rng) const override;
};

/// Fits the GLM component models on the same pooled design rows as the BART
/// engine (same factorization and element order).
struct ParametricModels {
    GlmEngine engine;
    std::vector<std::size_t> element_order;
    BalancingSchema schema;
    HistoryFeaturizer featurizer;
    int horizon = 1;
};

ParametricModels fit_parametric_models(const BalancingSeries& series, const HistoryFeaturizer& f);

/// Forward Monte Carlo with GLM conditionals. Draw 0 is the full-data fit;
/// draws 1..B are nonparametric bootstrap refits (subjects resampled with
/// replacement) when bootstrap_b > 0.
RiskDraws estimate_parametric(const BalancingSeries& series, const TreatmentRegime& regime,
                              const HistoryFeaturizer& f, const MonteCarloConfig& cfg,
                              int bootstrap_b = 0);

} // namespace bgf
