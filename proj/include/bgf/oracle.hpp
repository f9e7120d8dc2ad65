#pragma once

#include "bgf/dataset.hpp"
#include "bgf/regime.hpp"
#include "bgf/scores.hpp"

namespace bgf {

/// Nonparametric plug-in g-formula on all-discrete covariates: saturated
/// empirical hazards and confounder transitions, enumerated over observed
/// histories with treatments fixed by the (deterministic) regime. Optional
/// additive smoothing via smooth_alpha; by default an empty conditional cell
/// is an error (EmptyCell naming the stratum), not a smoothing opportunity.
double plugin_gformula(const LongitudinalDataset& data, const TreatmentRegime& regime, int t_star,
                       double smooth_alpha = 0.0);

/// Observed cumulative incidence by t*, censoring handled by inverse
/// probability-of-remaining-uncensored weights taken from a score series'
/// p_uncens. With no score series all weights are 1 (valid when the data are
/// uncensored or censoring is ignorable by design).
double empirical_cuminc(const LongitudinalDataset& data, int t_star,
                        const ScoreSeries* scores = nullptr);

} // namespace bgf
