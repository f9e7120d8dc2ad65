#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bgf/benchmark.hpp"
#include "bgf/errors.hpp"
#include "bgf/gformula.hpp"
#include "bgf/oracle.hpp"
#include "bgf/parametric.hpp"
#include "bgf/scores.hpp"
#include "bgf/simulator.hpp"

namespace {

using namespace bgf;

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open output file: " + path.string());
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory: " + dir);
}

/// Reproducibility manifest: the fully resolved configuration, no timestamps.
void write_manifest(const std::string& dir, const std::string& command,
                    const std::map<std::string, std::string>& entries) {
    auto out = open_output(std::filesystem::path(dir) / "manifest.txt");
    out << "command=" << command << "\n";
    out << "format_version=1\n";
    for (const auto& [k, v] : entries) out << k << '=' << v << "\n";
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// Regime grammar: "always", "never", "static:0110...", or "tailor-gt:<x>"
/// (treat once treated before or the first tailoring variable exceeds x;
/// "natural" is the alias for tailor-gt:0.2, the benchmark DGP's own rule).
TreatmentRegime make_regime(const std::string& name, int horizon) {
    if (name == "always") return TreatmentRegime::always_treat(horizon);
    if (name == "never") return TreatmentRegime::never_treat(horizon);
    if (name == "natural") return sim51_natural_regime();
    if (name.rfind("static:", 0) == 0) {
        std::vector<int> seq;
        for (char c : name.substr(7)) {
            if (c != '0' && c != '1') throw ConfigError("static regime bits must be 0/1: " + name);
            seq.push_back(c - '0');
        }
        if (static_cast<int>(seq.size()) != horizon)
            throw ConfigError("static regime length must equal the horizon");
        return TreatmentRegime::deterministic_static(seq, name);
    }
    if (name.rfind("tailor-gt:", 0) == 0) {
        const double threshold = std::stod(name.substr(10));
        return TreatmentRegime::deterministic_dynamic(
            [threshold](const TailoringHistory& h, const std::vector<int>& a_hist) {
                if (!a_hist.empty() && a_hist.back() == 1) return 1;
                return h.back().at(0) > threshold ? 1 : 0;
            },
            name);
    }
    throw ConfigError("unknown regime: " + name);
}

struct McmcFlags {
    int iters = 15000;
    int burn = 10000;
    int thin = 1;
    int trees = 200;

    void attach(CLI::App* cmd) {
        cmd->add_option("--iters", iters, "MCMC iterations");
        cmd->add_option("--burn", burn, "burn-in iterations");
        cmd->add_option("--thin", thin, "posterior thinning interval");
        cmd->add_option("--trees", trees, "trees per ensemble");
    }

    bart::McmcConfig mcmc(std::uint64_t seed) const {
        bart::McmcConfig m;
        m.n_iter = iters;
        m.n_burn = burn;
        m.thin = thin;
        m.seed = seed;
        return m;
    }

    bart::BartHyper hyper() const {
        bart::BartHyper h;
        h.num_trees = trees;
        return h;
    }
};

int cmd_simulate(const std::string& dgp, int n, int t_periods, double psi_c, std::uint64_t seed,
                 const std::string& out_dir) {
    ensure_dir(out_dir);
    LongitudinalDataset data = [&] {
        if (dgp == "sim51") {
            Sim51Config cfg{n, t_periods, psi_c, seed};
            return generate_sim51(cfg);
        }
        if (dgp == "toy" || dgp == "null") {
            ToyDgpConfig cfg = dgp == "null" ? toy_null_config() : ToyDgpConfig{};
            cfg.n = n;
            cfg.T = t_periods;
            cfg.seed = seed;
            return generate_toy(cfg);
        }
        throw ConfigError("unknown dgp: " + dgp);
    }();
    data.validate();

    auto csv = open_output(std::filesystem::path(out_dir) / "data.csv");
    write_dataset(csv, data);
    auto sch = open_output(std::filesystem::path(out_dir) / "schema.cfg");
    write_schema(sch, data.schema());
    write_manifest(out_dir, "simulate",
                   {{"dgp", dgp},
                    {"n", std::to_string(n)},
                    {"T", std::to_string(t_periods)},
                    {"psi_c", fmt(psi_c)},
                    {"seed", std::to_string(seed)}});

    std::cout << "subjects=" << data.subjects().size()
              << " censored=" << fmt(100.0 * data.censored_fraction())
              << "% ever_treated=" << fmt(100.0 * data.ever_treated_fraction())
              << "% events=" << fmt(100.0 * data.event_fraction()) << "%\n";
    return 0;
}

int cmd_estimate(const std::string& data_path, const std::string& schema_path,
                 const std::vector<std::string>& specs, const std::vector<std::string>& regimes,
                 const McmcFlags& flags, int order, bool cumulate, int r_draws, int k_samples,
                 double level, std::uint64_t seed, const std::string& out_dir) {
    ensure_dir(out_dir);
    const CovariateSchema schema = parse_schema_file(schema_path);
    const LongitudinalDataset data = load_dataset_file(data_path, schema);

    HistoryFeaturizer f;
    f.order = order;
    f.cumulate = cumulate;
    f.num_periods = data.horizon();

    // validate all names before any compute
    std::vector<std::string> bad;
    for (const auto& s : specs)
        if (s != "parametric" && !parse_score_variant(s).has_value()) bad.push_back(s);
    if (!bad.empty()) throw ConfigError("unknown spec: " + bad.front());
    std::vector<TreatmentRegime> regime_objs;
    for (const auto& r : regimes) regime_objs.push_back(make_regime(r, data.horizon()));

    const bart::BartHyper hyper = flags.hyper();
    MonteCarloConfig mc;
    mc.R = r_draws;
    mc.K = k_samples;
    mc.seed = derive_seed(seed, 7);

    const bool needs_scores = [&] {
        for (const auto& s : specs) {
            const auto v = parse_score_variant(s);
            if (v.has_value() && *v != ScoreVariant::FullConfounders) return true;
        }
        return false;
    }();

    ScoreSeries scores;
    const ScoreSeries* scores_ptr = nullptr;
    if (needs_scores) {
        const AssignmentModels assignment =
            fit_assignment_models(data, f, hyper, flags.mcmc(derive_seed(seed, 1)));
        scores = compute_scores(assignment, data, f);
        scores_ptr = &scores;
        auto sc = open_output(std::filesystem::path(out_dir) / "scores.csv");
        scores.write_csv(sc, data);
        std::cout << "positivity_violations=" << scores.positivity_violations << "\n";
    }

    for (const auto& spec_name : specs) {
        for (std::size_t ri = 0; ri < regime_objs.size(); ++ri) {
            const std::string tag = spec_name + "_" + regimes[ri];
            RiskDraws draws = [&] {
                if (spec_name == "parametric") {
                    const BalancingSeries series =
                        build_balancing_series(data, ScoreVariant::FullConfounders, nullptr);
                    return estimate_parametric(series, regime_objs[ri], f, mc, 0);
                }
                const ScoreVariant variant = *parse_score_variant(spec_name);
                const ScoreSeries* sp =
                    variant == ScoreVariant::FullConfounders ? nullptr : scores_ptr;
                const BalancingSeries series = build_balancing_series(data, variant, sp);
                const ComponentModels models = fit_component_models(
                    series, variant, f, hyper, flags.mcmc(derive_seed(seed, 2)));
                return estimate_deterministic(models, regime_objs[ri], baseline_pool(series), mc);
            }();
            auto rc = open_output(std::filesystem::path(out_dir) / ("risk_" + tag + ".csv"));
            draws.write_csv(rc);
            auto sc = open_output(std::filesystem::path(out_dir) / ("summary_" + tag + ".csv"));
            write_summary_csv(sc, draws, summarize(draws, level));
            std::cout << "wrote " << tag << "\n";
        }
    }

    std::map<std::string, std::string> manifest{
        {"data", data_path},       {"schema", schema_path},
        {"order", std::to_string(order)}, {"cumulate", cumulate ? "1" : "0"},
        {"iters", std::to_string(flags.iters)}, {"burn", std::to_string(flags.burn)},
        {"thin", std::to_string(flags.thin)},   {"trees", std::to_string(flags.trees)},
        {"R", std::to_string(r_draws)},  {"K", std::to_string(k_samples)},
        {"level", fmt(level)},     {"seed", std::to_string(seed)}};
    for (std::size_t i = 0; i < specs.size(); ++i) manifest["spec" + std::to_string(i)] = specs[i];
    for (std::size_t i = 0; i < regimes.size(); ++i)
        manifest["regime" + std::to_string(i)] = regimes[i];
    write_manifest(out_dir, "estimate", manifest);
    return 0;
}

int cmd_benchmark(int n_reps, int n, int t_periods, double psi_c,
                  const std::vector<std::string>& estimators, const McmcFlags& flags, int order,
                  bool cumulate, int r_draws, int k_samples, std::size_t truth_m,
                  std::uint64_t seed, const std::string& out_dir) {
    ensure_dir(out_dir);
    BenchmarkConfig cfg;
    cfg.dgp = Sim51Config{n, t_periods, psi_c, 0};
    cfg.n_reps = n_reps;
    cfg.estimators = estimators;
    cfg.hyper = flags.hyper();
    cfg.mcmc = flags.mcmc(0);
    cfg.mc.R = r_draws;
    cfg.mc.K = k_samples;
    cfg.featurizer.order = order;
    cfg.featurizer.cumulate = cumulate;
    cfg.seed = seed;
    cfg.truth_m = truth_m;

    for (const auto& e : estimators)
        if (e != "parametric" && !parse_score_variant(e).has_value())
            throw ConfigError("unknown estimator: " + e);

    const BenchmarkResult result = run_benchmark(cfg);
    auto bc = open_output(std::filesystem::path(out_dir) / "benchmark.csv");
    result.write_csv(bc);
    auto rc = open_output(std::filesystem::path(out_dir) / "benchmark_raw.csv");
    result.write_raw_csv(rc);

    std::map<std::string, std::string> manifest{
        {"n_reps", std::to_string(n_reps)},  {"n", std::to_string(n)},
        {"T", std::to_string(t_periods)},    {"psi_c", fmt(psi_c)},
        {"iters", std::to_string(flags.iters)}, {"burn", std::to_string(flags.burn)},
        {"thin", std::to_string(flags.thin)},   {"trees", std::to_string(flags.trees)},
        {"order", std::to_string(order)},    {"cumulate", cumulate ? "1" : "0"},
        {"R", std::to_string(r_draws)},      {"K", std::to_string(k_samples)},
        {"truth_m", std::to_string(truth_m)}, {"seed", std::to_string(seed)}};
    for (std::size_t i = 0; i < estimators.size(); ++i)
        manifest["estimator" + std::to_string(i)] = estimators[i];
    write_manifest(out_dir, "benchmark", manifest);
    std::cout << "wrote benchmark tables to " << out_dir << "\n";
    return 0;
}

int cmd_oracle(const std::string& data_path, const std::string& schema_path,
               const std::string& dgp, const std::string& regime_name, int t_star,
               double smooth_alpha, std::size_t m_samples, double psi_c, int t_periods,
               std::uint64_t seed) {
    if (!data_path.empty()) {
        const CovariateSchema schema = parse_schema_file(schema_path);
        const LongitudinalDataset data = load_dataset_file(data_path, schema);
        const TreatmentRegime regime = make_regime(regime_name, data.horizon());
        const double risk = plugin_gformula(data, regime, t_star, smooth_alpha);
        std::cout << "plugin_risk=" << fmt(risk) << "\n";
        return 0;
    }
    if (dgp == "sim51") {
        Sim51Config cfg{1, t_periods, psi_c, 0};
        const TrueRiskResult r =
            true_risk(cfg, make_regime(regime_name, t_periods), t_star, m_samples, seed);
        std::cout << "true_risk=" << fmt(r.risk) << " mc_se=" << fmt(r.mc_se) << "\n";
        return 0;
    }
    if (dgp == "toy" || dgp == "null") {
        ToyDgpConfig cfg = dgp == "null" ? toy_null_config() : ToyDgpConfig{};
        cfg.T = t_periods;
        const TrueRiskResult r =
            true_risk(cfg, make_regime(regime_name, t_periods), t_star, m_samples, seed);
        std::cout << "true_risk=" << fmt(r.risk) << " mc_se=" << fmt(r.mc_se) << "\n";
        return 0;
    }
    throw ConfigError("oracle: pass --data/--schema or a known --dgp");
}

int cmd_report(const std::string& benchmark_csv) {
    std::ifstream in(benchmark_csv);
    if (!in) throw DataError("cannot open benchmark table: " + benchmark_csv);
    std::string line;
    std::getline(in, line); // header
    std::cout << "estimator        t*   rel_bias      rmse\n";
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string est, t, rb, rmse;
        std::getline(ss, est, ',');
        std::getline(ss, t, ',');
        std::getline(ss, rb, ',');
        std::getline(ss, rmse, ',');
        std::cout << est;
        for (std::size_t i = est.size(); i < 17; ++i) std::cout << ' ';
        std::cout << t << "  " << std::setw(9) << std::setprecision(4)
                  << std::stod(rb) << "  " << std::setw(8) << std::stod(rmse) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian survival g-formula toolkit"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
    std::string sim_dgp = "sim51", sim_out;
    int sim_n = 1000, sim_t = 5;
    double sim_psi = 3.0;
    std::uint64_t sim_seed = 0;
    sim->add_option("--dgp", sim_dgp, "sim51 | toy | null");
    sim->add_option("--n", sim_n, "subjects");
    sim->add_option("--T", sim_t, "periods");
    sim->add_option("--psi-c", sim_psi, "censoring intercept (sim51)");
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--out", sim_out, "output directory")->required();

    // estimate
    auto* est = app.add_subcommand("estimate", "fit models and estimate regime risks");
    std::string est_data, est_schema, est_out;
    std::vector<std::string> est_specs{"bart-cov"};
    std::vector<std::string> est_regimes{"never"};
    McmcFlags est_flags;
    int est_order = 1, est_r = 0, est_k = 10000;
    bool est_cumulate = false;
    double est_level = 0.95;
    std::uint64_t est_seed = 0;
    est->add_option("--data", est_data, "dataset CSV")->required();
    est->add_option("--schema", est_schema, "covariate schema file")->required();
    est->add_option("--spec", est_specs, "bart-bs | bart-cov | bart-cov-bs | parametric");
    est->add_option("--regime", est_regimes, "always | never | natural | static:BITS | tailor-gt:X");
    est_flags.attach(est);
    est->add_option("--order", est_order, "history dependence order");
    est->add_flag("--cumulate", est_cumulate, "summarize older history by cumulative sums");
    est->add_option("--R", est_r, "posterior draws used (0 = all)");
    est->add_option("--K", est_k, "forward Monte Carlo size per draw");
    est->add_option("--level", est_level, "credible level");
    est->add_option("--seed", est_seed, "RNG seed");
    est->add_option("--out", est_out, "output directory")->required();

    // benchmark
    auto* ben = app.add_subcommand("benchmark", "replicated estimator comparison on sim51");
    std::string ben_out;
    std::vector<std::string> ben_estimators{"bart-bs", "bart-cov", "bart-cov-bs", "parametric"};
    McmcFlags ben_flags;
    int ben_reps = 20, ben_n = 1000, ben_t = 5, ben_order = 1, ben_r = 0, ben_k = 2000;
    bool ben_cumulate = false;
    double ben_psi = 3.0;
    std::size_t ben_truth_m = 1000000;
    std::uint64_t ben_seed = 0;
    ben->add_option("--n-reps", ben_reps, "replications");
    ben->add_option("--n", ben_n, "subjects per replication");
    ben->add_option("--T", ben_t, "periods");
    ben->add_option("--psi-c", ben_psi, "censoring intercept");
    ben->add_option("--estimators", ben_estimators, "estimator list");
    ben_flags.attach(ben);
    ben->add_option("--order", ben_order, "history dependence order");
    ben->add_flag("--cumulate", ben_cumulate, "summarize older history by cumulative sums");
    ben->add_option("--R", ben_r, "posterior draws used (0 = all)");
    ben->add_option("--K", ben_k, "forward Monte Carlo size per draw");
    ben->add_option("--truth-m", ben_truth_m, "Monte Carlo size for the truth");
    ben->add_option("--seed", ben_seed, "RNG seed");
    ben->add_option("--out", ben_out, "output directory")->required();

    // oracle
    auto* ora = app.add_subcommand("oracle", "nonparametric cross-checks");
    std::string ora_data, ora_schema, ora_dgp, ora_regime = "never";
    int ora_tstar = 1, ora_t = 2;
    double ora_alpha = 0.0, ora_psi = 3.0;
    std::size_t ora_m = 1000000;
    std::uint64_t ora_seed = 0;
    ora->add_option("--data", ora_data, "dataset CSV (plug-in g-formula)");
    ora->add_option("--schema", ora_schema, "covariate schema file");
    ora->add_option("--dgp", ora_dgp, "sim51 | toy | null (large-MC truth)");
    ora->add_option("--regime", ora_regime, "regime name");
    ora->add_option("--t-star", ora_tstar, "target period");
    ora->add_option("--T", ora_t, "horizon for DGP truth");
    ora->add_option("--psi-c", ora_psi, "censoring intercept (sim51)");
    ora->add_option("--smooth-alpha", ora_alpha, "additive smoothing for empirical cells");
    ora->add_option("--m", ora_m, "Monte Carlo size for DGP truth");
    ora->add_option("--seed", ora_seed, "RNG seed");

    // report
    auto* rep = app.add_subcommand("report", "pretty-print a benchmark table");
    std::string rep_csv;
    rep->add_option("--benchmark", rep_csv, "benchmark.csv path")->required();

    try {
        app.parse(argc, argv);
        if (sim->parsed())
            return cmd_simulate(sim_dgp, sim_n, sim_t, sim_psi, sim_seed, sim_out);
        if (est->parsed())
            return cmd_estimate(est_data, est_schema, est_specs, est_regimes, est_flags,
                                est_order, est_cumulate, est_r, est_k, est_level, est_seed,
                                est_out);
        if (ben->parsed())
            return cmd_benchmark(ben_reps, ben_n, ben_t, ben_psi, ben_estimators, ben_flags,
                                 ben_order, ben_cumulate, ben_r, ben_k, ben_truth_m, ben_seed,
                                 ben_out);
        if (ora->parsed())
            return cmd_oracle(ora_data, ora_schema, ora_dgp, ora_regime, ora_tstar, ora_alpha,
                              ora_m, ora_psi, ora_t, ora_seed);
        if (rep->parsed()) return cmd_report(rep_csv);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const bgf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const bgf::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const bgf::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
