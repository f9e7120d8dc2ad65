#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bgf/bart/bart.hpp"
#include "bgf/dataset.hpp"
#include "bgf/featurizer.hpp"
#include "bgf/regime.hpp"

namespace bgf {

/// The two assignment mechanisms: treatment given history, and remaining
/// uncensored given history and the period's treatment.
struct AssignmentModels {
    bart::BartPosterior treatment;
    bart::BartPosterior censoring;
};

AssignmentModels fit_assignment_models(const LongitudinalDataset& data,
                                       const HistoryFeaturizer& f, const bart::BartHyper& hyper,
                                       const bart::McmcConfig& mcmc);

/// Whether the censoring factor of the joint score conditions on the observed
/// treatment or is evaluated at treatment fixed to 1.
enum class ScoreCensoringAt { observed, treated };

struct ScoreRecord {
    int t = 0;
    double p_treat = 0.0;  // posterior-mean P(A_t = 1 | history)
    double p_uncens = 0.0; // posterior-mean P(C_{t+1} = 0 | history, A_t)
    double e = 0.0;        // joint score p_treat * p_uncens
    double logit_e = 0.0;
};

struct ScoreSeries {
    /// Aligned with the dataset's subject order, one record per person-period.
    std::vector<std::vector<ScoreRecord>> per_subject;
    /// Count of records with e outside [0.001, 0.999] (positivity diagnostic;
    /// values are flagged, never clipped).
    std::size_t positivity_violations = 0;

    void write_csv(std::ostream& out, const LongitudinalDataset& data) const;
};

ScoreSeries compute_scores(const AssignmentModels& models, const LongitudinalDataset& data,
                           const HistoryFeaturizer& f,
                           ScoreCensoringAt at = ScoreCensoringAt::observed);

/// Which balancing-score state b_t drives the g-formula component models:
/// the joint score plus tailoring variables, the raw confounders, or both.
enum class ScoreVariant { JointScorePlusTailoring, FullConfounders, Augmented };

std::string score_variant_name(ScoreVariant v);
std::optional<ScoreVariant> parse_score_variant(const std::string& name);

struct BalancingSchema {
    std::vector<std::string> names;
    std::vector<bool> binary;
    std::vector<bool> tailoring;
    std::vector<std::string> static_names; // baseline-only covariates
    std::vector<bool> static_binary;

    std::size_t dim() const { return names.size(); }
    bool has_tailoring() const;
    std::vector<std::size_t> tailoring_indices() const;
};

struct BalancingSubject {
    std::string id;
    std::vector<double> statics;
    std::vector<std::vector<double>> b; // one state vector per observed period
    std::vector<int> a;
    std::vector<int> cens_next;
    std::vector<std::optional<int>> event_next;
};

/// The per-subject balancing-score state series: the common substrate for the
/// g-formula component models and the baseline pool.
struct BalancingSeries {
    BalancingSchema schema;
    std::vector<BalancingSubject> subjects;
    int horizon = 1;
};

/// Assembles b_t per the variant. Scores are required exactly when the
/// variant involves the joint score; the score enters as logit_e.
BalancingSeries build_balancing_series(const LongitudinalDataset& data, ScoreVariant variant,
                                       const ScoreSeries* scores);

/// Random regime whose assignment probability is the fitted treatment model's
/// posterior mean. The regime reads the full covariate history, so it must be
/// used with a series whose tailoring set is the whole of b_t and no baseline
/// statics.
TreatmentRegime make_natural_course_regime(const bart::BartPosterior& treat_model,
                                           const HistoryFeaturizer& f);

} // namespace bgf
