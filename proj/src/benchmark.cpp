#include "bgf/benchmark.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "bgf/errors.hpp"
#include "bgf/parallel.hpp"

namespace bgf {

double BenchmarkResult::mean_estimate(std::size_t e, int t_star) const {
    const auto& reps = estimates[e];
    double sum = 0.0;
    for (const auto& curve : reps) sum += curve[static_cast<std::size_t>(t_star) - 1];
    return sum / static_cast<double>(reps.size());
}

double BenchmarkResult::rel_bias(std::size_t e, int t_star) const {
    const double tr = truth[static_cast<std::size_t>(t_star) - 1];
    return (mean_estimate(e, t_star) - tr) / tr;
}

double BenchmarkResult::rmse(std::size_t e, int t_star) const {
    const double tr = truth[static_cast<std::size_t>(t_star) - 1];
    double ss = 0.0;
    for (const auto& curve : estimates[e]) {
        const double d = curve[static_cast<std::size_t>(t_star) - 1] - tr;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(estimates[e].size()));
}

void BenchmarkResult::write_csv(std::ostream& out) const {
    // rel_bias = (mean estimate - truth) / truth
    out << "estimator,t_star,rel_bias,rmse,truth,truth_mc_se\n";
    out << std::setprecision(17);
    for (std::size_t e = 0; e < estimators.size(); ++e)
        for (int t = 1; t <= horizon; ++t)
            out << estimators[e] << ',' << t << ',' << rel_bias(e, t) << ',' << rmse(e, t) << ','
                << truth[static_cast<std::size_t>(t) - 1] << ','
                << truth_se[static_cast<std::size_t>(t) - 1] << "\n";
}

void BenchmarkResult::write_raw_csv(std::ostream& out) const {
    out << "estimator,replication,t_star,estimate\n";
    out << std::setprecision(17);
    for (std::size_t e = 0; e < estimators.size(); ++e)
        for (std::size_t rep = 0; rep < estimates[e].size(); ++rep)
            for (int t = 1; t <= horizon; ++t)
                out << estimators[e] << ',' << rep << ',' << t << ','
                    << estimates[e][rep][static_cast<std::size_t>(t) - 1] << "\n";
}

std::vector<double> run_estimator_once(const std::string& estimator,
                                       const LongitudinalDataset& data,
                                       const TreatmentRegime& regime,
                                       const HistoryFeaturizer& f, const bart::BartHyper& hyper,
                                       const bart::McmcConfig& mcmc,
                                       const MonteCarloConfig& mc) {
    if (estimator == "parametric") {
        const BalancingSeries series =
            build_balancing_series(data, ScoreVariant::FullConfounders, nullptr);
        const RiskDraws draws = estimate_parametric(series, regime, f, mc, 0);
        return draws.draws.front();
    }

    const auto variant = parse_score_variant(estimator);
    if (!variant.has_value()) throw ConfigError("unknown estimator: " + estimator);

    ScoreSeries scores;
    const ScoreSeries* scores_ptr = nullptr;
    if (*variant != ScoreVariant::FullConfounders) {
        const AssignmentModels assignment = fit_assignment_models(data, f, hyper, mcmc);
        scores = compute_scores(assignment, data, f);
        scores_ptr = &scores;
    }
    const BalancingSeries series = build_balancing_series(data, *variant, scores_ptr);
    const ComponentModels models = fit_component_models(series, *variant, f, hyper, mcmc);
    const RiskDraws draws = estimate_deterministic(models, regime, baseline_pool(series), mc);

    // posterior-mean point estimate per t*
    std::vector<double> point(static_cast<std::size_t>(draws.horizon), 0.0);
    for (const auto& curve : draws.draws)
        for (std::size_t t = 0; t < point.size(); ++t) point[t] += curve[t];
    for (double& v : point) v /= static_cast<double>(draws.draws.size());
    return point;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.n_reps < 1) throw ConfigError("run_benchmark: n_reps must be at least 1");

    const TreatmentRegime regime = sim51_natural_regime();

    BenchmarkResult result;
    result.estimators = cfg.estimators;
    result.horizon = cfg.dgp.T;
    for (int t = 1; t <= cfg.dgp.T; ++t) {
        const TrueRiskResult tr =
            true_risk(cfg.dgp, regime, t, cfg.truth_m, derive_seed(cfg.seed, 0x72657A));
        result.truth.push_back(tr.risk);
        result.truth_se.push_back(tr.mc_se);
    }

    result.estimates.assign(
        cfg.estimators.size(),
        std::vector<std::vector<double>>(static_cast<std::size_t>(cfg.n_reps)));

    parallel_for(static_cast<std::size_t>(cfg.n_reps), configured_threads(), [&](std::size_t rep) {
        Sim51Config dgp = cfg.dgp;
        dgp.seed = derive_seed(cfg.seed, 0xDA7A0000ULL + rep);
        const LongitudinalDataset data = generate_sim51(dgp);

        for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
            bart::McmcConfig mcmc = cfg.mcmc;
            mcmc.seed = derive_seed(cfg.seed, 0x51000000ULL + rep * 64 + e);
            MonteCarloConfig mc = cfg.mc;
            mc.seed = derive_seed(cfg.seed, 0x52000000ULL + rep * 64 + e);
            result.estimates[e][rep] = run_estimator_once(cfg.estimators[e], data, regime,
                                                          cfg.featurizer, cfg.hyper, mcmc, mc);
        }
    });
    return result;
}

} // namespace bgf
