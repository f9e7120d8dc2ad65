#pragma once

#include <cstdint>
#include <vector>

#include "bgf/dataset.hpp"
#include "bgf/regime.hpp"

namespace bgf {

/// The benchmark data-generating process: three time-varying confounders
/// (binary l1, continuous l2 and l3, l2 the tailoring variable), absorbing
/// treatment triggered by l2 > 0.2, nonlinear event and censoring hazards.
struct Sim51Config {
    int n = 1000;
    int T = 5;
    double psi_c = 3.0; // censoring intercept: 3 gives ~20%, 5 gives ~50%
    std::uint64_t seed = 0;
};

CovariateSchema sim51_schema();
LongitudinalDataset generate_sim51(const Sim51Config& cfg);

/// The DGP's own assignment rule as a deterministic dynamic regime: treat at
/// t iff treated before or the tailoring value exceeds 0.2.
TreatmentRegime sim51_natural_regime();

/// Small all-discrete process with one binary confounder, driven entirely by
/// lookup tables indexed [confounder][treatment] (or [confounder][previous
/// treatment] for assignment, previous treatment 0 at t = 0).
struct ToyDgpConfig {
    int n = 1000;
    int T = 2;
    std::uint64_t seed = 0;
    double p_l0 = 0.5;
    double p_l_next[2][2] = {{0.3, 0.6}, {0.7, 0.9}};
    double p_a[2][2] = {{0.3, 1.0}, {0.6, 1.0}};
    double p_y[2][2] = {{0.10, 0.05}, {0.20, 0.10}};
    double p_c[2][2] = {{0.10, 0.15}, {0.12, 0.08}};
};

CovariateSchema toy_schema();
LongitudinalDataset generate_toy(const ToyDgpConfig& cfg);

/// Toy variant whose confounder, event, and censoring tables ignore treatment
/// entirely (structural null); assignment still depends on the confounder.
ToyDgpConfig toy_null_config();

struct TrueRiskResult {
    double risk = 0.0;
    double mc_se = 0.0;
};

/// Counterfactual risk by large Monte Carlo from the structural equations,
/// treatment set by the regime and censoring disabled.
TrueRiskResult true_risk(const Sim51Config& cfg, const TreatmentRegime& regime, int t_star,
                         std::size_t m_samples, std::uint64_t seed);
TrueRiskResult true_risk(const ToyDgpConfig& cfg, const TreatmentRegime& regime, int t_star,
                         std::size_t m_samples, std::uint64_t seed);

/// Single-period process with an analytically known joint score: three
/// covariates, treatment and censoring probabilities with fixed coefficients,
/// outcome depending on the covariates only through the score's logit.
struct ScoreDgpRecord {
    double x1 = 0.0, x2 = 0.0, x3 = 0.0;
    int a = 0;
    int c_next = 0;
    int y = 0;       // drawn for every record; observed only when uncensored
    double e = 0.0;  // true joint score
    double logit_e = 0.0;
};

inline constexpr double kScoreDgpTreatEffect = 0.8;  // outcome coefficient on a
inline constexpr double kScoreDgpScoreSlope = 1.5;   // outcome coefficient on logit_e
inline constexpr double kScoreDgpIntercept = -1.0;

// assignment-side coefficients; mild on purpose so the joint score varies
// smoothly and sits near 1/2, which keeps decile strata nearly homogeneous
inline constexpr double kScoreDgpPropCoef[3] = {0.2, 0.35, -0.25};
inline constexpr double kScoreDgpCensIntercept = 2.0;
inline constexpr double kScoreDgpCensCoef[3] = {0.15, -0.2, 0.1};

std::vector<ScoreDgpRecord> generate_score_dgp(std::size_t n, std::uint64_t seed);

} // namespace bgf
