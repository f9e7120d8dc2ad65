#include "bgf/gformula.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "bgf/design.hpp"
#include "bgf/errors.hpp"
#include "bgf/parallel.hpp"

namespace bgf {

void RiskDraws::write_csv(std::ostream& out) const {
    out << "regime_id,spec,t_star,draw_index,risk\n";
    out << std::setprecision(17);
    for (std::size_t r = 0; r < draws.size(); ++r)
        for (int t = 1; t <= horizon; ++t)
            out << regime_id << ',' << spec << ',' << t << ',' << r << ','
                << draws[r][static_cast<std::size_t>(t) - 1] << "\n";
}

namespace {
double interpolated_quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    return lo + 1 < v.size() ? v[lo] * (1.0 - frac) + v[lo + 1] * frac : v[lo];
}
} // namespace

std::vector<RiskSummaryRow> summarize(const RiskDraws& draws, double level) {
    if (draws.draws.empty()) throw EmptyData("summarize: no draws");
    const std::size_t r_count = draws.draws.size();
    std::vector<RiskSummaryRow> rows;
    rows.reserve(draws.horizon);
    for (int t = 1; t <= draws.horizon; ++t) {
        std::vector<double> v(r_count);
        for (std::size_t r = 0; r < r_count; ++r)
            v[r] = draws.draws[r][static_cast<std::size_t>(t) - 1];
        RiskSummaryRow row;
        row.t_star = t;
        double sum = 0.0;
        for (double x : v) sum += x;
        row.mean = sum / static_cast<double>(r_count);
        double ss = 0.0;
        for (double x : v) ss += (x - row.mean) * (x - row.mean);
        row.sd = r_count > 1 ? std::sqrt(ss / static_cast<double>(r_count - 1)) : 0.0;
        if (r_count >= 2) {
            const double tail = 0.5 * (1.0 - level);
            row.lo = interpolated_quantile(v, tail);
            row.hi = interpolated_quantile(v, 1.0 - tail);
        } else {
            row.lo = row.hi = row.mean;
        }
        rows.push_back(row);
    }
    return rows;
}

void write_summary_csv(std::ostream& out, const RiskDraws& draws,
                       const std::vector<RiskSummaryRow>& rows) {
    out << "regime_id,spec,t_star,mean,lo,hi,sd\n";
    out << std::setprecision(17);
    for (const auto& r : rows)
        out << draws.regime_id << ',' << draws.spec << ',' << r.t_star << ',' << r.mean << ','
            << r.lo << ',' << r.hi << ',' << r.sd << "\n";
}

RiskDraws paired_difference(const RiskDraws& a, const RiskDraws& b) {
    if (a.draws.size() != b.draws.size() || a.horizon != b.horizon)
        throw WidthMismatch("paired_difference: draw shapes differ");
    RiskDraws out;
    out.regime_id = a.regime_id + "-minus-" + b.regime_id;
    out.spec = a.spec;
    out.horizon = a.horizon;
    out.draws.resize(a.draws.size());
    for (std::size_t r = 0; r < a.draws.size(); ++r) {
        out.draws[r].resize(a.draws[r].size());
        for (std::size_t t = 0; t < a.draws[r].size(); ++t)
            out.draws[r][t] = a.draws[r][t] - b.draws[r][t];
    }
    return out;
}

// ---- component model fitting ----

PooledDesigns build_pooled_designs(const BalancingSeries& series, const HistoryFeaturizer& f) {
    PooledDesigns d;
    d.featurizer = f;
    d.featurizer.num_periods = series.horizon;
    const HistoryFeaturizer& cov_f = d.featurizer;
    const HistoryFeaturizer a_f = treatment_featurizer(cov_f);
    const std::size_t dim = series.schema.dim();
    const std::size_t base_width =
        history_row_width(series.schema.static_names.size(), dim, cov_f, a_f);

    // outcome rows: one per observed event indicator, history through t-1
    std::vector<std::vector<double>> out_rows;
    for (const auto& s : series.subjects) {
        for (std::size_t p = 0; p < s.b.size(); ++p) {
            if (!s.event_next[p].has_value()) continue;
            std::vector<double> row;
            row.reserve(base_width);
            std::vector<std::vector<double>> bh(s.b.begin(), s.b.begin() + p + 1);
            std::vector<std::vector<double>> ah;
            for (std::size_t q = 0; q <= p; ++q) ah.push_back({static_cast<double>(s.a[q])});
            append_history_row(row, s.statics, bh, dim, ah, cov_f, a_f);
            out_rows.push_back(std::move(row));
            d.outcome_y.push_back(*s.event_next[p]);
        }
    }
    if (out_rows.empty()) throw EmptyData("build_pooled_designs: no observed outcomes");

    d.outcome_binary =
        history_row_binary(series.schema.static_binary, series.schema.binary, cov_f, a_f);
    d.outcome_x = Matrix(out_rows.size(), base_width);
    for (std::size_t i = 0; i < out_rows.size(); ++i)
        std::copy(out_rows[i].begin(), out_rows[i].end(), d.outcome_x.row(i).begin());

    if (series.horizon <= 1 || dim == 0) return d;

    // generation order: binary elements before continuous ones, so each
    // continuous conditional is unimodal given the discrete state already
    // drawn (a lone Gaussian cannot carry a still-latent binary mixture)
    for (std::size_t j = 0; j < dim; ++j)
        if (series.schema.binary[j]) d.element_order.push_back(j);
    for (std::size_t j = 0; j < dim; ++j)
        if (!series.schema.binary[j]) d.element_order.push_back(j);

    // transition rows: every period t >= 1 a subject remains at risk
    std::vector<std::size_t> subj_idx;
    std::vector<std::size_t> period_idx;
    for (std::size_t si = 0; si < series.subjects.size(); ++si)
        for (std::size_t t = 1; t < series.subjects[si].b.size(); ++t) {
            subj_idx.push_back(si);
            period_idx.push_back(t);
        }
    if (subj_idx.empty())
        throw InsufficientTransitions("build_pooled_designs: no subject reaches period 1 at risk");

    for (std::size_t m = 0; m < d.element_order.size(); ++m) {
        const std::size_t j = d.element_order[m];
        Matrix xb(subj_idx.size(), base_width + m);
        std::vector<double> yb(subj_idx.size());
        std::vector<double> row;
        for (std::size_t i = 0; i < subj_idx.size(); ++i) {
            const auto& s = series.subjects[subj_idx[i]];
            const std::size_t t = period_idx[i];
            row.clear();
            std::vector<std::vector<double>> bh(s.b.begin(), s.b.begin() + t);
            std::vector<std::vector<double>> ah;
            for (std::size_t q = 0; q < t; ++q) ah.push_back({static_cast<double>(s.a[q])});
            append_history_row(row, s.statics, bh, dim, ah, cov_f, a_f);
            for (std::size_t mm = 0; mm < m; ++mm)
                row.push_back(s.b[t][d.element_order[mm]]);
            std::copy(row.begin(), row.end(), xb.row(i).begin());
            yb[i] = s.b[t][j];
        }
        std::vector<bool> flags = d.outcome_binary;
        for (std::size_t mm = 0; mm < m; ++mm)
            flags.push_back(series.schema.binary[d.element_order[mm]]);
        d.element_x.push_back(std::move(xb));
        d.element_y.push_back(std::move(yb));
        d.element_binary.push_back(std::move(flags));
    }
    return d;
}

ComponentModels fit_component_models(const BalancingSeries& series, ScoreVariant spec,
                                     const HistoryFeaturizer& f, const bart::BartHyper& hyper,
                                     const bart::McmcConfig& mcmc) {
    PooledDesigns d = build_pooled_designs(series, f);

    bart::McmcConfig mo = mcmc;
    mo.seed = derive_seed(mcmc.seed, 201);

    ComponentModels models{
        bart::fit_binary(d.outcome_x, d.outcome_y, bart::Link::probit, hyper, mo,
                         d.outcome_binary),
        {},
        d.element_order,
        series.schema,
        d.featurizer,
        spec,
        series.horizon,
    };

    for (std::size_t m = 0; m < d.element_order.size(); ++m) {
        const std::size_t j = d.element_order[m];
        bart::McmcConfig mb = mcmc;
        mb.seed = derive_seed(mcmc.seed, 300 + m);
        if (series.schema.binary[j]) {
            std::vector<int> ybin(d.element_y[m].size());
            for (std::size_t i = 0; i < ybin.size(); ++i)
                ybin[i] = d.element_y[m][i] > 0.5 ? 1 : 0;
            models.bs_models.push_back(bart::fit_binary(d.element_x[m], ybin, bart::Link::probit,
                                                        hyper, mb, d.element_binary[m]));
        } else {
            models.bs_models.push_back(bart::fit_continuous(d.element_x[m], d.element_y[m], hyper,
                                                            mb, d.element_binary[m]));
        }
    }
    return models;
}

BartEngine::BartEngine(const ComponentModels& models) : models_(models) {
    for (const auto& m : models.bs_models)
        if (m.num_draws() != models.outcome.num_draws())
            throw ConfigError("BartEngine: component models have unequal draw counts");
}

std::size_t BartEngine::num_draws() const { return models_.outcome.num_draws(); }

double BartEngine::outcome_prob(std::size_t r, std::span<const double> row) const {
    return models_.outcome.predict_one(r, row);
}

double BartEngine::draw_element(std::size_t r, std::size_t m, std::span<const double> row,
                                Rng& rng) const {
    const bart::BartPosterior& model = models_.bs_models[m];
    if (model.link() == bart::Link::identity)
        return rng.normal(model.predict_one(r, row), model.sigma(r));
    return rng.uniform() < model.predict_one(r, row) ? 1.0 : 0.0;
}

std::vector<BaselineRecord> baseline_pool(const BalancingSeries& series) {
    std::vector<BaselineRecord> pool;
    pool.reserve(series.subjects.size());
    for (const auto& s : series.subjects) {
        if (s.b.empty()) continue;
        pool.push_back(BaselineRecord{s.statics, s.b.front()});
    }
    return pool;
}

// ---- forward Monte Carlo ----

namespace {

std::vector<double> select_indices(const std::vector<double>& v,
                                   const std::vector<std::size_t>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (std::size_t j : idx) out.push_back(v[j]);
    return out;
}

struct SimulationContext {
    const GenerativeEngine& engine;
    const BalancingSchema& schema;
    HistoryFeaturizer cov_f;
    HistoryFeaturizer a_f;
    const std::vector<std::size_t>& element_order;
    std::vector<std::size_t> tailoring_idx;
    int horizon;
    bool analytic;
};

/// One counterfactual trajectory; adds its event-by-t* contribution to cum.
void run_trajectory(const SimulationContext& ctx, std::size_t r, const TreatmentRegime& regime,
                    const BaselineRecord& base, Rng& rng, std::vector<double>& cum) {
    const std::size_t dim = ctx.schema.dim();
    std::vector<std::vector<double>> b{base.b0};
    std::vector<std::vector<double>> a_series;
    std::vector<int> a_hist;
    TailoringHistory h_hist;
    h_hist.push_back(select_indices(base.b0, ctx.tailoring_idx));

    const int a0 = regime.assign(h_hist, a_hist, rng.uniform());
    a_hist.push_back(a0);
    a_series.push_back({static_cast<double>(a0)});

    double surv = 1.0;
    std::vector<double> row;
    for (int t = 1; t <= ctx.horizon; ++t) {
        row.clear();
        append_history_row(row, base.statics, b, dim, a_series, ctx.cov_f, ctx.a_f);
        const double p = ctx.engine.outcome_prob(r, row);
        if (ctx.analytic) {
            surv *= 1.0 - p;
            cum[static_cast<std::size_t>(t) - 1] += 1.0 - surv;
        } else if (rng.uniform() < p) {
            for (int s = t; s <= ctx.horizon; ++s) cum[static_cast<std::size_t>(s) - 1] += 1.0;
            return;
        }
        if (t == ctx.horizon) break;

        std::vector<double> state(dim, 0.0);
        for (std::size_t m = 0; m < ctx.element_order.size(); ++m) {
            const double v = ctx.engine.draw_element(r, m, row, rng);
            state[ctx.element_order[m]] = v;
            row.push_back(v); // earlier elements condition the next one
        }
        row.resize(row.size() - ctx.element_order.size());
        b.push_back(state);
        h_hist.push_back(select_indices(state, ctx.tailoring_idx));
        const int at = regime.assign(h_hist, a_hist, rng.uniform());
        a_hist.push_back(at);
        a_series.push_back({static_cast<double>(at)});
    }
}

} // namespace

RiskDraws estimate_with_engine(const GenerativeEngine& engine, const BalancingSchema& schema,
                               const HistoryFeaturizer& f,
                               const std::vector<std::size_t>& element_order, int horizon,
                               const TreatmentRegime& regime,
                               const std::vector<BaselineRecord>& pool,
                               const MonteCarloConfig& cfg, const std::string& spec_label) {
    if (pool.empty()) throw EmptyData("estimate: baseline pool is empty");
    if (cfg.K < 1 || cfg.K_b < 1 || cfg.K_a < 1)
        throw ConfigError("estimate: Monte Carlo sizes must be at least 1");
    if (regime.dynamic() && !schema.has_tailoring())
        throw MissingTailoring("estimate: dynamic regime but no tailoring variables in b_t");
    if (element_order.size() != engine.num_elements())
        throw WidthMismatch("estimate: element order does not match engine");

    const std::size_t total = engine.num_draws();
    std::size_t r_count = total;
    if (cfg.R > 0) {
        if (static_cast<std::size_t>(cfg.R) > total)
            throw ConfigError("estimate: R exceeds available draws");
        r_count = static_cast<std::size_t>(cfg.R);
    }
    if (r_count == 0) throw EmptyData("estimate: engine has no draws");

    HistoryFeaturizer cov_f = f;
    cov_f.num_periods = horizon;
    SimulationContext ctx{engine,
                          schema,
                          cov_f,
                          treatment_featurizer(cov_f),
                          element_order,
                          schema.tailoring_indices(),
                          horizon,
                          cfg.analytic_hazard};
    const bool random_kind = regime.kind() == TreatmentRegime::Kind::Random;

    RiskDraws out;
    out.regime_id = regime.id();
    out.spec = spec_label;
    out.horizon = horizon;
    out.draws.assign(r_count, std::vector<double>(static_cast<std::size_t>(horizon), 0.0));

    parallel_for(r_count, configured_threads(), [&](std::size_t r) {
        Rng rng(derive_seed(cfg.seed, 0xE5717A7E00ULL + r));
        std::vector<double>& cum = out.draws[r];
        double denom;
        if (random_kind) {
            for (int kb = 0; kb < cfg.K_b; ++kb) {
                const BaselineRecord& base = pool[rng.uniform_int(pool.size())];
                for (int ka = 0; ka < cfg.K_a; ++ka)
                    run_trajectory(ctx, r, regime, base, rng, cum);
            }
            denom = static_cast<double>(cfg.K_b) * static_cast<double>(cfg.K_a);
        } else {
            for (int k = 0; k < cfg.K; ++k) {
                const BaselineRecord& base = pool[rng.uniform_int(pool.size())];
                run_trajectory(ctx, r, regime, base, rng, cum);
            }
            denom = static_cast<double>(cfg.K);
        }
        for (double& v : cum) v /= denom;
    });
    return out;
}

RiskDraws estimate_deterministic(const ComponentModels& models, const TreatmentRegime& regime,
                                 const std::vector<BaselineRecord>& pool,
                                 const MonteCarloConfig& cfg) {
    if (!regime.deterministic())
        throw RegimeKindMismatch("estimate_deterministic: regime is random");
    BartEngine engine(models);
    return estimate_with_engine(engine, models.schema, models.featurizer, models.element_order,
                                models.horizon, regime, pool, cfg,
                                score_variant_name(models.spec));
}

RiskDraws estimate_random(const ComponentModels& models, const TreatmentRegime& regime,
                          const std::vector<BaselineRecord>& pool, const MonteCarloConfig& cfg) {
    if (regime.kind() != TreatmentRegime::Kind::Random)
        throw RegimeKindMismatch("estimate_random: regime is deterministic");
    BartEngine engine(models);
    return estimate_with_engine(engine, models.schema, models.featurizer, models.element_order,
                                models.horizon, regime, pool, cfg,
                                score_variant_name(models.spec));
}

} // namespace bgf
