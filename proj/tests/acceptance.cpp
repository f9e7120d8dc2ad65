// Acceptance gate: one test case per release criterion, each printing a
// single [ACCEPT] line. Tolerances are pinned here, next to the checks.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "bgf/benchmark.hpp"
#include "bgf/distributions.hpp"
#include "bgf/errors.hpp"
#include "bgf/gformula.hpp"
#include "bgf/glm.hpp"
#include "bgf/oracle.hpp"
#include "bgf/parametric.hpp"
#include "bgf/scores.hpp"
#include "bgf/simulator.hpp"

using namespace bgf;
namespace fs = std::filesystem;

namespace {

bool report(int criterion, bool pass) {
    std::printf("[ACCEPT] criterion %d: %s\n", criterion, pass ? "PASS" : "FAIL");
    std::fflush(stdout);
    return pass;
}

bart::BartHyper default_hyper(int trees = 200) {
    bart::BartHyper h;
    h.num_trees = trees;
    return h;
}

bart::McmcConfig mcmc_config(int iters, int burn, int thin, std::uint64_t seed) {
    bart::McmcConfig m;
    m.n_iter = iters;
    m.n_burn = burn;
    m.thin = thin;
    m.seed = seed;
    return m;
}

double posterior_mean_at(const RiskDraws& draws, int t_star) {
    double sum = 0.0;
    for (const auto& curve : draws.draws) sum += curve[static_cast<std::size_t>(t_star) - 1];
    return sum / static_cast<double>(draws.draws.size());
}

} // namespace

TEST_CASE("criterion_1_benchmark_ordering") {
    // sim51, n=1000, T=5, 20 replications, MCMC 3000/1000 (thin 20 keeps 100
    // draws), K=2000. Ordinal check: every BART variant beats the parametric
    // baseline on |relative bias| at t*=5 and on RMSE at t* in {3,4,5}.
    BenchmarkConfig cfg;
    cfg.dgp = Sim51Config{1000, 5, 3.0, 0};
    cfg.n_reps = 20;
    cfg.estimators = {"bart-bs", "bart-cov", "bart-cov-bs", "parametric"};
    cfg.hyper = default_hyper();
    cfg.mcmc = mcmc_config(3000, 1000, 20, 0);
    cfg.mc.K = 2000;
    cfg.seed = 20240915;
    cfg.truth_m = 1000000;

    const BenchmarkResult res = run_benchmark(cfg);
    {
        std::ofstream out("acceptance_benchmark.csv");
        res.write_csv(out);
        std::ofstream raw("acceptance_benchmark_raw.csv");
        res.write_raw_csv(raw);
    }

    const std::size_t par = 3;
    bool pass = true;
    for (std::size_t e = 0; e < 3; ++e) {
        const bool bias_ok = std::abs(res.rel_bias(e, 5)) < std::abs(res.rel_bias(par, 5));
        pass = pass && bias_ok;
        for (int t = 3; t <= 5; ++t) pass = pass && res.rmse(e, t) <= res.rmse(par, t);
        std::printf("  %s: rel_bias(5)=%+.4f rmse(3,4,5)=%.4f %.4f %.4f\n",
                    res.estimators[e].c_str(), res.rel_bias(e, 5), res.rmse(e, 3), res.rmse(e, 4),
                    res.rmse(e, 5));
    }
    std::printf("  parametric: rel_bias(5)=%+.4f rmse(3,4,5)=%.4f %.4f %.4f\n",
                res.rel_bias(par, 5), res.rmse(par, 3), res.rmse(par, 4), res.rmse(par, 5));
    CHECK(report(1, pass));
}

TEST_CASE("criterion_2_censoring_calibration") {
    const double lo = generate_sim51({10000, 5, 3.0, 1}).censored_fraction();
    const double hi = generate_sim51({10000, 5, 5.0, 1}).censored_fraction();
    std::printf("  censored: psi_c=3 -> %.3f, psi_c=5 -> %.3f\n", lo, hi);
    const bool pass = lo >= 0.17 && lo <= 0.23 && hi >= 0.47 && hi <= 0.53;
    CHECK(report(2, pass));
}

TEST_CASE("criterion_3_treatment_prevalence") {
    const double frac = generate_sim51({10000, 5, 3.0, 2}).ever_treated_fraction();
    std::printf("  ever treated: %.3f\n", frac);
    CHECK(report(3, frac >= 0.45 && frac <= 0.55));
}

TEST_CASE("criterion_4_oracle_equivalence") {
    // toy 2-period process, n=20000: BART-Cov within 0.02 of the plug-in
    // g-formula, which is within 0.01 of the large-MC truth (M=10^6)
    ToyDgpConfig dgp;
    dgp.n = 20000;
    dgp.T = 2;
    dgp.seed = 404;
    const LongitudinalDataset data = generate_toy(dgp);
    const BalancingSeries series =
        build_balancing_series(data, ScoreVariant::FullConfounders, nullptr);
    HistoryFeaturizer f;
    const ComponentModels models = fit_component_models(
        series, ScoreVariant::FullConfounders, f, default_hyper(), mcmc_config(1000, 500, 5, 41));

    MonteCarloConfig mc;
    mc.K = 5000;
    mc.seed = 42;

    bool pass = true;
    for (const bool treat : {false, true}) {
        const TreatmentRegime regime =
            treat ? TreatmentRegime::always_treat(2) : TreatmentRegime::never_treat(2);
        const double bart_risk =
            posterior_mean_at(estimate_deterministic(models, regime, baseline_pool(series), mc), 2);
        const double plugin = plugin_gformula(data, regime, 2);
        const TrueRiskResult truth = true_risk(dgp, regime, 2, 1000000, 11);
        std::printf("  %s: bart=%.4f plugin=%.4f truth=%.4f\n", regime.id().c_str(), bart_risk,
                    plugin, truth.risk);
        pass = pass && std::abs(bart_risk - plugin) < 0.02;
        pass = pass && std::abs(plugin - truth.risk) < 0.01;
    }
    CHECK(report(4, pass));
}

TEST_CASE("criterion_5_score_balance") {
    // with the true joint score, >= 90% of decile x confounder cells have
    // |standardized mean difference| < 0.1 between the (A=1, C_next=0) group
    // and the rest within score deciles
    const std::size_t n = 10000;
    const auto recs = generate_score_dgp(n, 505);

    std::vector<double> es(n);
    for (std::size_t i = 0; i < n; ++i) es[i] = recs[i].e;
    std::vector<double> cuts(9);
    {
        std::vector<double> sorted = es;
        std::sort(sorted.begin(), sorted.end());
        for (int d = 1; d < 10; ++d) cuts[d - 1] = sorted[n * d / 10];
    }
    auto decile = [&](double e) {
        int d = 0;
        while (d < 9 && e >= cuts[d]) ++d;
        return d;
    };

    int cells = 0, balanced = 0;
    for (int d = 0; d < 10; ++d) {
        for (int j = 0; j < 3; ++j) {
            std::vector<double> grp, rest;
            for (const auto& r : recs) {
                if (decile(r.e) != d) continue;
                const double x = j == 0 ? r.x1 : j == 1 ? r.x2 : r.x3;
                if (r.a == 1 && r.c_next == 0)
                    grp.push_back(x);
                else
                    rest.push_back(x);
            }
            if (grp.size() < 2 || rest.size() < 2) continue;
            auto moments = [](const std::vector<double>& v) {
                double m = 0.0;
                for (double x : v) m += x;
                m /= static_cast<double>(v.size());
                double s = 0.0;
                for (double x : v) s += (x - m) * (x - m);
                return std::pair<double, double>{m, s / static_cast<double>(v.size() - 1)};
            };
            const auto [m1, v1] = moments(grp);
            const auto [m0, v0] = moments(rest);
            const double smd = (m1 - m0) / std::sqrt(0.5 * (v1 + v0));
            ++cells;
            if (std::abs(smd) < 0.1) ++balanced;
        }
    }
    std::printf("  balanced cells: %d / %d\n", balanced, cells);
    const bool pass =
        cells >= 27 && static_cast<double>(balanced) >= 0.9 * static_cast<double>(cells);
    CHECK(report(5, pass));
}

TEST_CASE("criterion_6_spec_agreement") {
    // the three balancing-score specs agree pairwise within 0.03 on the toy
    // process of criterion 4
    ToyDgpConfig dgp;
    dgp.n = 20000;
    dgp.T = 2;
    dgp.seed = 404;
    const LongitudinalDataset data = generate_toy(dgp);
    HistoryFeaturizer f;
    const bart::BartHyper hyper = default_hyper(200);

    const AssignmentModels assignment =
        fit_assignment_models(data, f, hyper, mcmc_config(1000, 500, 5, 61));
    const ScoreSeries scores = compute_scores(assignment, data, f);

    MonteCarloConfig mc;
    mc.K = 5000;
    mc.seed = 62;

    const std::vector<ScoreVariant> variants{ScoreVariant::JointScorePlusTailoring,
                                             ScoreVariant::FullConfounders,
                                             ScoreVariant::Augmented};
    // risks[v][regime][t*]
    std::vector<std::vector<std::vector<double>>> risks;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        const ScoreSeries* sp = variants[v] == ScoreVariant::FullConfounders ? nullptr : &scores;
        const BalancingSeries series = build_balancing_series(data, variants[v], sp);
        const ComponentModels models = fit_component_models(
            series, variants[v], f, hyper, mcmc_config(1000, 500, 5, 63 + v));
        std::vector<std::vector<double>> per_regime;
        for (const bool treat : {false, true}) {
            const TreatmentRegime regime =
                treat ? TreatmentRegime::always_treat(2) : TreatmentRegime::never_treat(2);
            const RiskDraws d = estimate_deterministic(models, regime, baseline_pool(series), mc);
            per_regime.push_back({posterior_mean_at(d, 1), posterior_mean_at(d, 2)});
        }
        risks.push_back(std::move(per_regime));
        std::printf("  %s: never=(%.4f, %.4f) always=(%.4f, %.4f)\n",
                    score_variant_name(variants[v]).c_str(), risks[v][0][0], risks[v][0][1],
                    risks[v][1][0], risks[v][1][1]);
    }

    bool pass = true;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b)
            for (int g = 0; g < 2; ++g)
                for (int t = 0; t < 2; ++t)
                    pass = pass && std::abs(risks[a][g][t] - risks[b][g][t]) < 0.03;
    CHECK(report(6, pass));
}

TEST_CASE("criterion_7_g_null_guard") {
    // null process: the 95% posterior interval of the always-vs-never risk
    // difference at t*=T must cover 0 in at least 18 of 20 replications
    int covered = 0;
    for (int rep = 0; rep < 20; ++rep) {
        ToyDgpConfig dgp = toy_null_config();
        dgp.n = 1000;
        dgp.T = 2;
        dgp.seed = 700 + static_cast<std::uint64_t>(rep);
        const LongitudinalDataset data = generate_toy(dgp);
        const BalancingSeries series =
            build_balancing_series(data, ScoreVariant::FullConfounders, nullptr);
        HistoryFeaturizer f;
        const ComponentModels models =
            fit_component_models(series, ScoreVariant::FullConfounders, f, default_hyper(),
                                 mcmc_config(1000, 500, 5, 7000 + rep));
        MonteCarloConfig mc;
        mc.K = 2000;
        mc.seed = 7100 + static_cast<std::uint64_t>(rep);
        const RiskDraws always = estimate_deterministic(models, TreatmentRegime::always_treat(2),
                                                        baseline_pool(series), mc);
        const RiskDraws never = estimate_deterministic(models, TreatmentRegime::never_treat(2),
                                                       baseline_pool(series), mc);
        const auto rows = summarize(paired_difference(always, never), 0.95);
        const auto& last = rows.back();
        if (last.lo <= 0.0 && 0.0 <= last.hi) ++covered;
        std::printf("  rep %d: diff=[%.4f, %.4f]\n", rep, last.lo, last.hi);
    }
    std::printf("  covered: %d / 20\n", covered);
    CHECK(report(7, covered >= 18));
}

TEST_CASE("criterion_8_point_mass_consistency") {
    // a point-mass random regime must match the equivalent deterministic
    // regime within 0.01 at every t*
    ToyDgpConfig dgp;
    dgp.n = 5000;
    dgp.T = 2;
    dgp.seed = 808;
    const LongitudinalDataset data = generate_toy(dgp);
    const BalancingSeries series =
        build_balancing_series(data, ScoreVariant::FullConfounders, nullptr);
    HistoryFeaturizer f;
    const ComponentModels models = fit_component_models(
        series, ScoreVariant::FullConfounders, f, default_hyper(), mcmc_config(800, 400, 4, 81));

    MonteCarloConfig mc;
    mc.K = 10000;
    mc.K_b = 100;
    mc.K_a = 100;
    mc.seed = 82;

    bool pass = true;
    for (const int fixed_a : {0, 1}) {
        const TreatmentRegime det = fixed_a == 1 ? TreatmentRegime::always_treat(2)
                                                 : TreatmentRegime::never_treat(2);
        const TreatmentRegime point = TreatmentRegime::random(
            [fixed_a](const TailoringHistory&, const std::vector<int>&) {
                return fixed_a == 1 ? 1.0 : 0.0;
            },
            "point-mass");
        const RiskDraws rd = estimate_deterministic(models, det, baseline_pool(series), mc);
        const RiskDraws rr = estimate_random(models, point, baseline_pool(series), mc);
        for (int t = 1; t <= 2; ++t) {
            const double d = std::abs(posterior_mean_at(rd, t) - posterior_mean_at(rr, t));
            std::printf("  a=%d t*=%d |diff|=%.5f\n", fixed_a, t, d);
            pass = pass && d < 0.01;
        }
    }
    CHECK(report(8, pass));
}

TEST_CASE("criterion_9_bart_unit_suite") {
    bool pass = true;

    { // prior depth-split frequency
        Matrix x(64, 1);
        for (std::size_t i = 0; i < 64; ++i) x.at(i, 0) = static_cast<double>(i);
        const bart::CutpointTable cuts = bart::CutpointTable::from_data(x, {false}, 100);
        Rng rng(90);
        const int n = 40000;
        int split = 0;
        for (int i = 0; i < n; ++i)
            split += bart::sample_tree_from_prior(0.95, 2.0, cuts, rng).node(0).is_leaf() ? 0 : 1;
        const double p = static_cast<double>(split) / n;
        pass = pass && std::abs(p - 0.95) < 3.0 * std::sqrt(0.95 * 0.05 / n);
        std::printf("  root split frequency: %.4f\n", p);
    }

    { // conjugate leaf posterior to 1e-10
        const double sigma_mu2 = 1.0 / 3200.0, w_sum = 7.25, s_sum = -1.3;
        const auto [mean, var] = bart::leaf_posterior(w_sum, s_sum, sigma_mu2);
        const double var_want = 1.0 / (w_sum + 1.0 / sigma_mu2);
        pass = pass && std::abs(var - var_want) < 1e-10 &&
               std::abs(mean - s_sum * var_want) < 1e-10;
    }

    { // held-out Friedman RMSE beats OLS
        Rng gen(91);
        const std::size_t n = 500, nt = 300, p = 5;
        auto f_true = [](std::span<const double> z) {
            return 10.0 * std::sin(3.14159265358979 * z[0] * z[1]) +
                   20.0 * (z[2] - 0.5) * (z[2] - 0.5) + 10.0 * z[3] + 5.0 * z[4];
        };
        Matrix x(n, p), xt(nt, p);
        std::vector<double> y(n), yt(nt);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) x.at(i, j) = gen.uniform();
            y[i] = f_true(x.row(i)) + gen.normal(0.0, 1.0);
        }
        for (std::size_t i = 0; i < nt; ++i) {
            for (std::size_t j = 0; j < p; ++j) xt.at(i, j) = gen.uniform();
            yt[i] = f_true(xt.row(i));
        }
        const bart::BartPosterior post = bart::fit_continuous(
            x, y, default_hyper(50), mcmc_config(600, 300, 3, 92), std::vector<bool>(p, false));
        const auto pred = post.posterior_mean(xt);
        Matrix xa(n, p + 1, 1.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < p; ++j) xa.at(i, j + 1) = x.at(i, j);
        const auto beta = least_squares(xa, y);
        double rb = 0.0, ro = 0.0;
        for (std::size_t i = 0; i < nt; ++i) {
            double ols = beta[0];
            for (std::size_t j = 0; j < p; ++j) ols += beta[j + 1] * xt.at(i, j);
            rb += (pred[i] - yt[i]) * (pred[i] - yt[i]);
            ro += (ols - yt[i]) * (ols - yt[i]);
        }
        std::printf("  held-out rmse: bart=%.3f ols=%.3f\n", std::sqrt(rb / nt),
                    std::sqrt(ro / nt));
        pass = pass && rb < ro;
    }

    { // seeded bit-determinism
        Rng gen(93);
        Matrix x(150, 2);
        std::vector<int> y(150);
        for (std::size_t i = 0; i < 150; ++i) {
            x.at(i, 0) = gen.uniform();
            x.at(i, 1) = gen.uniform();
            y[i] = gen.uniform() < 0.4 ? 1 : 0;
        }
        const auto a = bart::fit_binary(x, y, bart::Link::probit, default_hyper(20),
                                        mcmc_config(120, 60, 1, 94), {false, false});
        const auto b = bart::fit_binary(x, y, bart::Link::probit, default_hyper(20),
                                        mcmc_config(120, 60, 1, 94), {false, false});
        pass = pass && a.posterior_mean(x) == b.posterior_mean(x);
    }

    CHECK(report(9, pass));
}

TEST_CASE("criterion_10_glm_unit_suite") {
    bool pass = true;

    { // IRLS score equations to 1e-6
        Rng gen(100);
        const std::size_t n = 400;
        Matrix x(n, 2);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x.at(i, 0) = gen.normal();
            x.at(i, 1) = gen.uniform() < 0.5 ? 1.0 : 0.0;
            y[i] = gen.uniform() < logistic_cdf(0.4 * x.at(i, 0) - 0.6 * x.at(i, 1)) ? 1 : 0;
        }
        const GlmFit fit = fit_logistic(x, y);
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = static_cast<double>(y[i]) - fit.predict_prob(x.row(i));
            s0 += r;
            s1 += r * x.at(i, 0);
            s2 += r * x.at(i, 1);
        }
        pass = pass && std::abs(s0) < 1e-6 && std::abs(s1) < 1e-6 && std::abs(s2) < 1e-6;
    }

    { // OLS orthogonality to 1e-8
        Rng gen(101);
        const std::size_t n = 250;
        Matrix x(n, 2);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x.at(i, 0) = gen.normal();
            x.at(i, 1) = gen.normal();
            y[i] = 0.5 + x.at(i, 0) - 2.0 * x.at(i, 1) + gen.normal(0.0, 0.4);
        }
        const LinearFit fit = fit_linear(x, y);
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - fit.predict(x.row(i));
            s0 += r;
            s1 += r * x.at(i, 0);
            s2 += r * x.at(i, 1);
        }
        pass = pass && std::abs(s0) < 1e-8 && std::abs(s1) < 1e-8 && std::abs(s2) < 1e-8;
    }

    { // separation detection
        Matrix x(20, 1);
        std::vector<int> y(20);
        for (std::size_t i = 0; i < 20; ++i) {
            x.at(i, 0) = static_cast<double>(i);
            y[i] = i < 10 ? 0 : 1;
        }
        bool fired = false;
        try {
            fit_logistic(x, y);
        } catch (const SeparationDetected&) {
            fired = true;
        }
        pass = pass && fired;
    }

    CHECK(report(10, pass));
}

TEST_CASE("criterion_11_reproducible_benchmark") {
    // two CLI benchmark runs with the same configuration must produce
    // byte-identical CSVs and manifests
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    const fs::path d1 = fs::temp_directory_path() / "bgf_accept_bench1";
    const fs::path d2 = fs::temp_directory_path() / "bgf_accept_bench2";
    fs::remove_all(d1);
    fs::remove_all(d2);

    const std::string base =
        std::string(BGF_CLI_PATH) +
        " benchmark --n-reps 2 --n 300 --T 3 --iters 300 --burn 150 --thin 3 --trees 50 "
        "--K 500 --truth-m 50000 --seed 7 --out ";
    const int s1 = std::system((base + d1.string() + " > /dev/null 2>&1").c_str());
    const int s2 = std::system((base + d2.string() + " > /dev/null 2>&1").c_str());

    bool pass = WIFEXITED(s1) && WEXITSTATUS(s1) == 0 && WIFEXITED(s2) && WEXITSTATUS(s2) == 0;
    for (const char* name : {"benchmark.csv", "benchmark_raw.csv", "manifest.txt"}) {
        const std::string a = slurp(d1 / name);
        pass = pass && !a.empty() && a == slurp(d2 / name);
    }
    CHECK(report(11, pass));
}
