#include "bgf/simulator.hpp"

#include <cmath>
#include <string>

#include "bgf/distributions.hpp"
#include "bgf/rng.hpp"

namespace bgf {

namespace {

double event_hazard_51(int a, double l1, double l2, double l3) {
    return logistic_cdf(-2.0 - 3.0 * a + l1 - 6.0 * l2 * l3 + 6.0 * l1 * l2 * l2);
}

double censor_hazard_51(double psi_c, int a, double l1, double l2, double l3) {
    return logistic_cdf(-psi_c - a + 0.75 * l1 * std::cos(-0.5 * l2) - 0.5 * l2 * l3);
}

struct State51 {
    double l1, l2, l3;
};

State51 draw_baseline_51(Rng& rng) {
    State51 s;
    s.l1 = rng.bernoulli(0.5) ? 1.0 : 0.0;
    s.l2 = rng.normal(0.0, 0.1);
    s.l3 = rng.normal(0.0, 0.1);
    return s;
}

State51 draw_transition_51(const State51& prev, int a, Rng& rng) {
    State51 s;
    s.l1 = prev.l1 == 1.0
               ? 1.0
               : (rng.bernoulli(logistic_cdf(-2.0 * a + 0.2 * prev.l1)) ? 1.0 : 0.0);
    const double shared = -2.0 * a + 0.2 * prev.l1 + prev.l2 * prev.l3;
    s.l2 = rng.normal(shared + std::sin(prev.l2), 0.1);
    s.l3 = rng.normal(shared + std::sin(prev.l3), 0.1);
    return s;
}

} // namespace

CovariateSchema sim51_schema() {
    CovariateSchema schema;
    schema.covariates.push_back({"l1", true, false, false});
    schema.covariates.push_back({"l2", false, true, false});
    schema.covariates.push_back({"l3", false, false, false});
    return schema;
}

TreatmentRegime sim51_natural_regime() {
    return TreatmentRegime::deterministic_dynamic(
        [](const TailoringHistory& h, const std::vector<int>& a_hist) {
            if (!a_hist.empty() && a_hist.back() == 1) return 1;
            return h.back()[0] > 0.2 ? 1 : 0;
        },
        "natural");
}

LongitudinalDataset generate_sim51(const Sim51Config& cfg) {
    std::vector<SubjectRecord> subjects;
    subjects.reserve(cfg.n);
    for (int i = 0; i < cfg.n; ++i) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        SubjectRecord subj;
        subj.id = std::to_string(i);

        State51 l = draw_baseline_51(rng);
        int a = l.l2 > 0.2 ? 1 : 0;
        for (int t = 1; t <= cfg.T; ++t) {
            PersonPeriodRecord rec;
            rec.t = t - 1;
            rec.covariates = {l.l1, l.l2, l.l3};
            rec.treatment = a;
            if (rng.bernoulli(censor_hazard_51(cfg.psi_c, a, l.l1, l.l2, l.l3))) {
                rec.censored_next = 1;
                subj.periods.push_back(rec);
                break;
            }
            rec.censored_next = 0;
            if (rng.bernoulli(event_hazard_51(a, l.l1, l.l2, l.l3))) {
                rec.event_next = 1;
                subj.periods.push_back(rec);
                break;
            }
            rec.event_next = 0;
            subj.periods.push_back(rec);
            if (t == cfg.T) break;
            l = draw_transition_51(l, a, rng);
            a = (a == 1 || l.l2 > 0.2) ? 1 : 0;
        }
        subjects.push_back(std::move(subj));
    }
    return LongitudinalDataset(sim51_schema(), std::move(subjects), cfg.T);
}

TrueRiskResult true_risk(const Sim51Config&, const TreatmentRegime& regime, int t_star,
                         std::size_t m_samples, std::uint64_t seed) {
    // censoring is disabled and the horizon is t_star, so only the structural
    // equations matter; the config selects the process
    std::size_t events = 0;
    for (std::size_t i = 0; i < m_samples; ++i) {
        Rng rng(derive_seed(seed, i));
        State51 l = draw_baseline_51(rng);
        TailoringHistory h{{l.l2}};
        std::vector<int> a_hist;
        int a = regime.assign(h, a_hist, rng.uniform());
        a_hist.push_back(a);
        for (int t = 1; t <= t_star; ++t) {
            if (rng.bernoulli(event_hazard_51(a, l.l1, l.l2, l.l3))) {
                ++events;
                break;
            }
            if (t == t_star) break;
            l = draw_transition_51(l, a, rng);
            h.push_back({l.l2});
            a = regime.assign(h, a_hist, rng.uniform());
            a_hist.push_back(a);
        }
    }
    TrueRiskResult out;
    out.risk = static_cast<double>(events) / static_cast<double>(m_samples);
    out.mc_se = std::sqrt(out.risk * (1.0 - out.risk) / static_cast<double>(m_samples));
    return out;
}

CovariateSchema toy_schema() {
    CovariateSchema schema;
    schema.covariates.push_back({"l", true, true, false});
    return schema;
}

LongitudinalDataset generate_toy(const ToyDgpConfig& cfg) {
    std::vector<SubjectRecord> subjects;
    subjects.reserve(cfg.n);
    for (int i = 0; i < cfg.n; ++i) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        SubjectRecord subj;
        subj.id = std::to_string(i);

        int l = rng.bernoulli(cfg.p_l0) ? 1 : 0;
        int a_prev = 0;
        int a = rng.bernoulli(cfg.p_a[l][a_prev]) ? 1 : 0;
        for (int t = 1; t <= cfg.T; ++t) {
            PersonPeriodRecord rec;
            rec.t = t - 1;
            rec.covariates = {static_cast<double>(l)};
            rec.treatment = a;
            if (rng.bernoulli(cfg.p_c[l][a])) {
                rec.censored_next = 1;
                subj.periods.push_back(rec);
                break;
            }
            rec.censored_next = 0;
            if (rng.bernoulli(cfg.p_y[l][a])) {
                rec.event_next = 1;
                subj.periods.push_back(rec);
                break;
            }
            rec.event_next = 0;
            subj.periods.push_back(rec);
            if (t == cfg.T) break;
            const int l_next = rng.bernoulli(cfg.p_l_next[l][a]) ? 1 : 0;
            a_prev = a;
            l = l_next;
            a = rng.bernoulli(cfg.p_a[l][a_prev]) ? 1 : 0;
        }
        subjects.push_back(std::move(subj));
    }
    return LongitudinalDataset(toy_schema(), std::move(subjects), cfg.T);
}

ToyDgpConfig toy_null_config() {
    ToyDgpConfig cfg;
    cfg.p_l_next[0][0] = cfg.p_l_next[0][1] = 0.35;
    cfg.p_l_next[1][0] = cfg.p_l_next[1][1] = 0.75;
    cfg.p_y[0][0] = cfg.p_y[0][1] = 0.12;
    cfg.p_y[1][0] = cfg.p_y[1][1] = 0.22;
    cfg.p_c[0][0] = cfg.p_c[0][1] = 0.10;
    cfg.p_c[1][0] = cfg.p_c[1][1] = 0.10;
    return cfg;
}

TrueRiskResult true_risk(const ToyDgpConfig& cfg, const TreatmentRegime& regime, int t_star,
                         std::size_t m_samples, std::uint64_t seed) {
    std::size_t events = 0;
    for (std::size_t i = 0; i < m_samples; ++i) {
        Rng rng(derive_seed(seed, i));
        int l = rng.bernoulli(cfg.p_l0) ? 1 : 0;
        TailoringHistory h{{static_cast<double>(l)}};
        std::vector<int> a_hist;
        int a = regime.assign(h, a_hist, rng.uniform());
        a_hist.push_back(a);
        for (int t = 1; t <= t_star; ++t) {
            if (rng.bernoulli(cfg.p_y[l][a])) {
                ++events;
                break;
            }
            if (t == t_star) break;
            l = rng.bernoulli(cfg.p_l_next[l][a]) ? 1 : 0;
            h.push_back({static_cast<double>(l)});
            a = regime.assign(h, a_hist, rng.uniform());
            a_hist.push_back(a);
        }
    }
    TrueRiskResult out;
    out.risk = static_cast<double>(events) / static_cast<double>(m_samples);
    out.mc_se = std::sqrt(out.risk * (1.0 - out.risk) / static_cast<double>(m_samples));
    return out;
}

std::vector<ScoreDgpRecord> generate_score_dgp(std::size_t n, std::uint64_t seed) {
    std::vector<ScoreDgpRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, i));
        ScoreDgpRecord r;
        r.x1 = rng.bernoulli(0.6) ? 1.0 : 0.0;
        r.x2 = rng.normal();
        r.x3 = rng.normal();
        const double p_treat = logistic_cdf(kScoreDgpPropCoef[0] * r.x1 +
                                            kScoreDgpPropCoef[1] * r.x2 +
                                            kScoreDgpPropCoef[2] * r.x3);
        const double p_uncens = logistic_cdf(kScoreDgpCensIntercept + kScoreDgpCensCoef[0] * r.x1 +
                                             kScoreDgpCensCoef[1] * r.x2 +
                                             kScoreDgpCensCoef[2] * r.x3);
        r.e = p_treat * p_uncens;
        r.logit_e = logit(r.e);
        r.a = rng.bernoulli(p_treat) ? 1 : 0;
        r.c_next = rng.bernoulli(p_uncens) ? 0 : 1;
        const double p_y = logistic_cdf(kScoreDgpIntercept + kScoreDgpScoreSlope * r.logit_e +
                                        kScoreDgpTreatEffect * r.a);
        r.y = rng.bernoulli(p_y) ? 1 : 0;
        out.push_back(r);
    }
    return out;
}

} // namespace bgf
