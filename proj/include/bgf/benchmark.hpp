#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bgf/gformula.hpp"
#include "bgf/parametric.hpp"
#include "bgf/simulator.hpp"

namespace bgf {

/// Replicated estimator comparison on the synthetic benchmark process:
/// regenerate data per replication, run each estimator, and score relative
/// bias and RMSE against the large Monte Carlo truth.
struct BenchmarkConfig {
    Sim51Config dgp;
    int n_reps = 20;
    std::vector<std::string> estimators = {"bart-bs", "bart-cov", "bart-cov-bs", "parametric"};
    bart::BartHyper hyper;
    bart::McmcConfig mcmc;
    MonteCarloConfig mc;
    HistoryFeaturizer featurizer;
    std::uint64_t seed = 0;
    std::size_t truth_m = 1000000;
};

struct BenchmarkResult {
    std::vector<std::string> estimators;
    int horizon = 1;
    std::vector<double> truth;    // per t*
    std::vector<double> truth_se; // Monte Carlo standard error of the truth
    /// estimates[e][rep][t*-1]: per-replication point estimates.
    std::vector<std::vector<std::vector<double>>> estimates;

    double mean_estimate(std::size_t e, int t_star) const;
    /// (mean estimate - truth) / truth.
    double rel_bias(std::size_t e, int t_star) const;
    double rmse(std::size_t e, int t_star) const;

    void write_csv(std::ostream& out) const;     // estimator x t* metric table
    void write_raw_csv(std::ostream& out) const; // per-replication estimates
};

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

/// One replication: generates the dataset from `dgp` with the given seed and
/// returns the point-estimate curve (per t*) for the named estimator.
std::vector<double> run_estimator_once(const std::string& estimator,
                                       const LongitudinalDataset& data,
                                       const TreatmentRegime& regime,
                                       const HistoryFeaturizer& f, const bart::BartHyper& hyper,
                                       const bart::McmcConfig& mcmc,
                                       const MonteCarloConfig& mc);

} // namespace bgf
