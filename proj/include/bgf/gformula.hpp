#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bgf/bart/bart.hpp"
#include "bgf/featurizer.hpp"
#include "bgf/regime.hpp"
#include "bgf/rng.hpp"
#include "bgf/scores.hpp"

namespace bgf {

struct MonteCarloConfig {
    int R = 0;       // posterior draws used; 0 = all retained draws
    int K = 10000;   // forward-simulation size per draw (deterministic regimes)
    int K_b = 100;   // baseline grid size (random regimes)
    int K_a = 100;   // assignment grid size per baseline draw (random regimes)
    std::uint64_t seed = 0;
    /// Accumulate the hazard product analytically instead of sampling each
    /// event indicator; same expectation, lower Monte Carlo variance.
    bool analytic_hazard = false;
};

/// Posterior samples of the counterfactual cumulative incidence: one risk
/// curve over t* = 1..horizon per retained draw.
struct RiskDraws {
    std::string regime_id;
    std::string spec;
    int horizon = 1;
    std::vector<std::vector<double>> draws; // draws[r][t*-1]

    void write_csv(std::ostream& out) const;
};

struct RiskSummaryRow {
    int t_star = 1;
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double sd = 0.0;
};

/// Equal-tailed credible summaries; quantiles linearly interpolate between
/// order statistics.
std::vector<RiskSummaryRow> summarize(const RiskDraws& draws, double level = 0.95);
void write_summary_csv(std::ostream& out, const RiskDraws& draws,
                       const std::vector<RiskSummaryRow>& rows);

/// Matched-draw contrast a - b (paired posterior risk difference).
RiskDraws paired_difference(const RiskDraws& a, const RiskDraws& b);

/// Conditional generators consumed by the forward simulator. Both the BART
/// and the parametric engines implement this, so the simulation code path is
/// shared verbatim.
class GenerativeEngine {
public:
    virtual ~GenerativeEngine() = default;
    virtual std::size_t num_draws() const = 0;
    /// P(Y_t = 1) given the pooled outcome design row, under draw r.
    virtual double outcome_prob(std::size_t r, std::span<const double> row) const = 0;
    /// Number of balancing-state elements generated per period.
    virtual std::size_t num_elements() const = 0;
    /// Draws element m (position in generation order) given its design row.
    /// Continuous elements consume one normal deviate, binary elements one
    /// uniform, so engines with identical conditionals produce identical
    /// trajectories from the same seed.
    virtual double draw_element(std::size_t r, std::size_t m, std::span<const double> row,
                                Rng& rng) const = 0;
};

/// Fitted g-formula component models: one pooled binary outcome model and one
/// model per element of b_t, each conditioning on the earlier elements in
/// element_order plus the featurized history.
struct ComponentModels {
    bart::BartPosterior outcome;
    std::vector<bart::BartPosterior> bs_models; // in element_order
    std::vector<std::size_t> element_order;     // positions into schema.names
    BalancingSchema schema;
    HistoryFeaturizer featurizer; // covariate featurizer (period indicator on)
    ScoreVariant spec = ScoreVariant::FullConfounders;
    int horizon = 1;
};

/// Pooled design matrices shared by the BART and parametric fits: one outcome
/// design and one per balancing-state element (each conditioning on the
/// earlier elements in element_order).
struct PooledDesigns {
    Matrix outcome_x;
    std::vector<int> outcome_y;
    std::vector<bool> outcome_binary; // per-feature flags
    std::vector<std::size_t> element_order;
    std::vector<Matrix> element_x;
    std::vector<std::vector<double>> element_y;
    std::vector<std::vector<bool>> element_binary;
    HistoryFeaturizer featurizer; // normalized (num_periods = horizon)
};

PooledDesigns build_pooled_designs(const BalancingSeries& series, const HistoryFeaturizer& f);

ComponentModels fit_component_models(const BalancingSeries& series, ScoreVariant spec,
                                     const HistoryFeaturizer& f, const bart::BartHyper& hyper,
                                     const bart::McmcConfig& mcmc);

class BartEngine : public GenerativeEngine {
public:
    explicit BartEngine(const ComponentModels& models);
    std::size_t num_draws() const override;
    double outcome_prob(std::size_t r, std::span<const double> row) const override;
    std::size_t num_elements() const override { return models_.bs_models.size(); }
    double draw_element(std::size_t r, std::size_t m, std::span<const double> row,
                        Rng& rng) const override;

private:
    const ComponentModels& models_;
};

struct BaselineRecord {
    std::vector<double> statics;
    std::vector<double> b0;
};

std::vector<BaselineRecord> baseline_pool(const BalancingSeries& series);

/// The forward Monte Carlo shared by every estimator: per draw r, simulate
/// trajectories under the regime and return the fraction with an event by
/// each t*. Deterministic regimes use K trajectories; random regimes use the
/// K_b x K_a grid.
RiskDraws estimate_with_engine(const GenerativeEngine& engine, const BalancingSchema& schema,
                               const HistoryFeaturizer& f,
                               const std::vector<std::size_t>& element_order, int horizon,
                               const TreatmentRegime& regime,
                               const std::vector<BaselineRecord>& pool,
                               const MonteCarloConfig& cfg, const std::string& spec_label);

RiskDraws estimate_deterministic(const ComponentModels& models, const TreatmentRegime& regime,
                                 const std::vector<BaselineRecord>& pool,
                                 const MonteCarloConfig& cfg);

RiskDraws estimate_random(const ComponentModels& models, const TreatmentRegime& regime,
                          const std::vector<BaselineRecord>& pool, const MonteCarloConfig& cfg);

} // namespace bgf
