#include "bgf/scores.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "bgf/design.hpp"
#include "bgf/distributions.hpp"
#include "bgf/errors.hpp"
#include "bgf/rng.hpp"

namespace bgf {

namespace {

struct DesignPieces {
    HistoryFeaturizer cov_f;
    HistoryFeaturizer a_f;
    std::vector<std::size_t> tv;        // time-varying covariate indices
    std::vector<std::size_t> bl;        // baseline-only covariate indices
    std::vector<bool> static_binary;
    std::vector<bool> cov_binary;
};

DesignPieces make_pieces(const LongitudinalDataset& data, const HistoryFeaturizer& f) {
    DesignPieces p;
    p.cov_f = f;
    p.cov_f.num_periods = data.horizon();
    p.a_f = treatment_featurizer(p.cov_f);
    p.tv = data.schema().time_varying_indices();
    p.bl = data.schema().baseline_only_indices();
    for (std::size_t j : p.bl) p.static_binary.push_back(data.schema().covariates[j].binary);
    for (std::size_t j : p.tv) p.cov_binary.push_back(data.schema().covariates[j].binary);
    return p;
}

/// Covariate vectors L_0..L_t for one subject (time-varying columns only).
std::vector<std::vector<double>> cov_series_upto(const SubjectRecord& s, std::size_t t_incl) {
    std::vector<std::vector<double>> out;
    out.reserve(t_incl + 1);
    for (std::size_t p = 0; p <= t_incl; ++p) out.push_back(s.periods[p].covariates);
    return out;
}

std::vector<std::vector<double>> a_series_upto(const SubjectRecord& s, std::size_t t_excl) {
    std::vector<std::vector<double>> out;
    out.reserve(t_excl);
    for (std::size_t p = 0; p < t_excl; ++p)
        out.push_back({static_cast<double>(s.periods[p].treatment)});
    return out;
}

Matrix assignment_design(const LongitudinalDataset& data, const DesignPieces& p,
                         bool append_treatment) {
    const std::size_t base_width =
        history_row_width(p.bl.size(), p.tv.size(), p.cov_f, p.a_f);
    const std::size_t width = base_width + (append_treatment ? 1 : 0);
    Matrix x(data.num_person_periods(), width);
    std::size_t i = 0;
    std::vector<double> row;
    for (const auto& s : data.subjects()) {
        for (std::size_t t = 0; t < s.periods.size(); ++t) {
            row.clear();
            append_history_row(row, s.baseline_extra, cov_series_upto(s, t), p.tv.size(),
                               a_series_upto(s, t), p.cov_f, p.a_f);
            if (append_treatment) row.push_back(static_cast<double>(s.periods[t].treatment));
            std::copy(row.begin(), row.end(), x.row(i).begin());
            ++i;
        }
    }
    return x;
}

} // namespace

AssignmentModels fit_assignment_models(const LongitudinalDataset& data,
                                       const HistoryFeaturizer& f, const bart::BartHyper& hyper,
                                       const bart::McmcConfig& mcmc) {
    if (data.num_person_periods() == 0)
        throw EmptyRiskSet("fit_assignment_models: no at-risk person-periods");
    const DesignPieces p = make_pieces(data, f);

    std::vector<int> a_resp, u_resp;
    a_resp.reserve(data.num_person_periods());
    u_resp.reserve(data.num_person_periods());
    for (const auto& s : data.subjects()) {
        for (const auto& rec : s.periods) {
            a_resp.push_back(rec.treatment);
            u_resp.push_back(rec.censored_next == 0 ? 1 : 0);
        }
    }

    const Matrix xt = assignment_design(data, p, false);
    const Matrix xc = assignment_design(data, p, true);
    std::vector<bool> bt = history_row_binary(p.static_binary, p.cov_binary, p.cov_f, p.a_f);
    std::vector<bool> bc = bt;
    bc.push_back(true);

    bart::McmcConfig mt = mcmc;
    mt.seed = derive_seed(mcmc.seed, 101);
    bart::McmcConfig mc = mcmc;
    mc.seed = derive_seed(mcmc.seed, 102);

    return AssignmentModels{
        bart::fit_binary(xt, a_resp, bart::Link::probit, hyper, mt, bt),
        bart::fit_binary(xc, u_resp, bart::Link::probit, hyper, mc, bc),
    };
}

ScoreSeries compute_scores(const AssignmentModels& models, const LongitudinalDataset& data,
                           const HistoryFeaturizer& f, ScoreCensoringAt at) {
    const DesignPieces p = make_pieces(data, f);
    Matrix xt = assignment_design(data, p, false);
    Matrix xc = assignment_design(data, p, true);
    if (at == ScoreCensoringAt::treated)
        for (std::size_t i = 0; i < xc.rows; ++i) xc.at(i, xc.cols - 1) = 1.0;

    const std::vector<double> p_treat = models.treatment.posterior_mean(xt);
    const std::vector<double> p_uncens = models.censoring.posterior_mean(xc);

    ScoreSeries out;
    out.per_subject.reserve(data.subjects().size());
    std::size_t i = 0;
    for (const auto& s : data.subjects()) {
        std::vector<ScoreRecord> recs;
        recs.reserve(s.periods.size());
        for (std::size_t t = 0; t < s.periods.size(); ++t, ++i) {
            ScoreRecord r;
            r.t = static_cast<int>(t);
            r.p_treat = p_treat[i];
            r.p_uncens = p_uncens[i];
            r.e = r.p_treat * r.p_uncens;
            r.logit_e = logit(r.e);
            if (r.e <= 0.001 || r.e >= 0.999) ++out.positivity_violations;
            recs.push_back(r);
        }
        out.per_subject.push_back(std::move(recs));
    }
    return out;
}

void ScoreSeries::write_csv(std::ostream& out, const LongitudinalDataset& data) const {
    out << "id,t,p_treat,p_uncens,e,logit_e\n";
    out << std::setprecision(17);
    for (std::size_t s = 0; s < per_subject.size(); ++s) {
        for (const auto& r : per_subject[s]) {
            out << data.subjects()[s].id << ',' << r.t << ',' << r.p_treat << ',' << r.p_uncens
                << ',' << r.e << ',' << r.logit_e << "\n";
        }
    }
}

std::string score_variant_name(ScoreVariant v) {
    switch (v) {
        case ScoreVariant::JointScorePlusTailoring: return "bart-bs";
        case ScoreVariant::FullConfounders: return "bart-cov";
        case ScoreVariant::Augmented: return "bart-cov-bs";
    }
    return "unknown";
}

std::optional<ScoreVariant> parse_score_variant(const std::string& name) {
    if (name == "bart-bs") return ScoreVariant::JointScorePlusTailoring;
    if (name == "bart-cov") return ScoreVariant::FullConfounders;
    if (name == "bart-cov-bs") return ScoreVariant::Augmented;
    return std::nullopt;
}

bool BalancingSchema::has_tailoring() const {
    for (bool t : tailoring)
        if (t) return true;
    return false;
}

std::vector<std::size_t> BalancingSchema::tailoring_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < tailoring.size(); ++j)
        if (tailoring[j]) out.push_back(j);
    return out;
}

BalancingSeries build_balancing_series(const LongitudinalDataset& data, ScoreVariant variant,
                                       const ScoreSeries* scores) {
    const bool uses_score = variant != ScoreVariant::FullConfounders;
    if (uses_score && scores == nullptr)
        throw MissingScores("build_balancing_series: variant requires computed scores");
    if (uses_score && scores->per_subject.size() != data.subjects().size())
        throw WidthMismatch("build_balancing_series: score series does not match dataset");

    const auto tv = data.schema().time_varying_indices();
    const auto bl = data.schema().baseline_only_indices();

    BalancingSeries series;
    series.horizon = data.horizon();
    for (std::size_t j : bl) {
        series.schema.static_names.push_back(data.schema().covariates[j].name);
        series.schema.static_binary.push_back(data.schema().covariates[j].binary);
    }

    // which time-varying covariates enter b_t
    std::vector<std::size_t> kept; // positions within the time-varying block
    if (uses_score) {
        series.schema.names.push_back("logit_e");
        series.schema.binary.push_back(false);
        series.schema.tailoring.push_back(false);
    }
    for (std::size_t k = 0; k < tv.size(); ++k) {
        const auto& spec = data.schema().covariates[tv[k]];
        const bool include =
            variant != ScoreVariant::JointScorePlusTailoring || spec.tailoring;
        if (!include) continue;
        kept.push_back(k);
        series.schema.names.push_back(spec.name);
        series.schema.binary.push_back(spec.binary);
        series.schema.tailoring.push_back(spec.tailoring);
    }

    series.subjects.reserve(data.subjects().size());
    for (std::size_t s = 0; s < data.subjects().size(); ++s) {
        const auto& subj = data.subjects()[s];
        BalancingSubject b;
        b.id = subj.id;
        b.statics = subj.baseline_extra;
        for (std::size_t t = 0; t < subj.periods.size(); ++t) {
            const auto& rec = subj.periods[t];
            std::vector<double> state;
            state.reserve(series.schema.dim());
            if (uses_score) state.push_back(scores->per_subject[s][t].logit_e);
            for (std::size_t k : kept) state.push_back(rec.covariates[k]);
            b.b.push_back(std::move(state));
            b.a.push_back(rec.treatment);
            b.cens_next.push_back(rec.censored_next);
            b.event_next.push_back(rec.event_next);
        }
        series.subjects.push_back(std::move(b));
    }
    return series;
}

TreatmentRegime make_natural_course_regime(const bart::BartPosterior& treat_model,
                                           const HistoryFeaturizer& f) {
    const HistoryFeaturizer cov_f = f;
    const HistoryFeaturizer a_f = treatment_featurizer(f);
    const bart::BartPosterior model = treat_model; // captured by value
    auto dist = [model, cov_f, a_f](const TailoringHistory& h_hist,
                                    const std::vector<int>& a_hist) -> double {
        if (h_hist.empty()) throw WidthMismatch("natural-course regime: empty history");
        const std::size_t cov_dim = h_hist.front().size();
        std::vector<double> row;
        std::vector<std::vector<double>> a_series;
        a_series.reserve(a_hist.size());
        for (int a : a_hist) a_series.push_back({static_cast<double>(a)});
        append_history_row(row, {}, h_hist, cov_dim, a_series, cov_f, a_f);
        if (row.size() != model.width())
            throw WidthMismatch("natural-course regime: history width does not match model");
        Matrix x(1, row.size());
        std::copy(row.begin(), row.end(), x.row(0).begin());
        return model.posterior_mean(x)[0];
    };
    return TreatmentRegime::random(dist, "natural-course");
}

} // namespace bgf
