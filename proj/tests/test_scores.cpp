#include <doctest.h>

#include <cmath>

#include "bgf/design.hpp"
#include "bgf/distributions.hpp"
#include "bgf/errors.hpp"
#include "bgf/glm.hpp"
#include "bgf/scores.hpp"
#include "bgf/simulator.hpp"

using namespace bgf;

namespace {

bart::BartHyper small_hyper() {
    bart::BartHyper h;
    h.num_trees = 40;
    return h;
}

bart::McmcConfig small_mcmc(std::uint64_t seed) {
    bart::McmcConfig m;
    m.n_iter = 300;
    m.n_burn = 150;
    m.thin = 3;
    m.seed = seed;
    return m;
}

} // namespace

TEST_CASE("score variant names round trip") {
    for (const auto v : {ScoreVariant::JointScorePlusTailoring, ScoreVariant::FullConfounders,
                         ScoreVariant::Augmented})
        CHECK(parse_score_variant(score_variant_name(v)) == v);
    CHECK(!parse_score_variant("glm").has_value());
}

TEST_CASE("score records are the product of the two factors") {
    // coin-flip assignment: p_a = 0.5 everywhere, so the fitted treatment
    // probability should hover near 0.5
    ToyDgpConfig cfg;
    cfg.n = 1500;
    cfg.T = 2;
    cfg.seed = 5;
    cfg.p_a[0][0] = cfg.p_a[0][1] = cfg.p_a[1][0] = cfg.p_a[1][1] = 0.5;
    const LongitudinalDataset data = generate_toy(cfg);

    HistoryFeaturizer f;
    const AssignmentModels models =
        fit_assignment_models(data, f, small_hyper(), small_mcmc(77));
    const ScoreSeries scores = compute_scores(models, data, f);

    REQUIRE(scores.per_subject.size() == data.subjects().size());
    double p_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < scores.per_subject.size(); ++s) {
        REQUIRE(scores.per_subject[s].size() == data.subjects()[s].periods.size());
        for (const auto& r : scores.per_subject[s]) {
            CHECK(r.e == r.p_treat * r.p_uncens);
            CHECK(r.logit_e == logit(r.e));
            CHECK(r.e > 0.0);
            CHECK(r.e < 1.0);
            p_sum += r.p_treat;
            ++count;
        }
    }
    CHECK(p_sum / static_cast<double>(count) > 0.45);
    CHECK(p_sum / static_cast<double>(count) < 0.55);
}

TEST_CASE("balancing series layout follows the variant") {
    const LongitudinalDataset data = generate_sim51({200, 3, 3.0, 3});
    // stand-in scores with known values
    ScoreSeries scores;
    for (const auto& s : data.subjects()) {
        std::vector<ScoreRecord> recs;
        for (std::size_t t = 0; t < s.periods.size(); ++t) {
            ScoreRecord r;
            r.t = static_cast<int>(t);
            r.p_treat = 0.6;
            r.p_uncens = 0.9;
            r.e = 0.54;
            r.logit_e = logit(0.54);
            recs.push_back(r);
        }
        scores.per_subject.push_back(std::move(recs));
    }

    const BalancingSeries bs =
        build_balancing_series(data, ScoreVariant::JointScorePlusTailoring, &scores);
    CHECK(bs.schema.names == std::vector<std::string>{"logit_e", "l2"});
    CHECK(bs.schema.binary == std::vector<bool>{false, false});
    CHECK(bs.schema.tailoring == std::vector<bool>{false, true});
    CHECK(bs.subjects[0].b[0][0] == logit(0.54));
    CHECK(bs.subjects[0].b[0][1] == data.subjects()[0].periods[0].covariates[1]);

    const BalancingSeries cov = build_balancing_series(data, ScoreVariant::FullConfounders, nullptr);
    CHECK(cov.schema.names == std::vector<std::string>{"l1", "l2", "l3"});
    CHECK(cov.schema.binary == std::vector<bool>{true, false, false});

    const BalancingSeries aug = build_balancing_series(data, ScoreVariant::Augmented, &scores);
    CHECK(aug.schema.names == std::vector<std::string>{"logit_e", "l1", "l2", "l3"});

    CHECK_THROWS_AS(build_balancing_series(data, ScoreVariant::Augmented, nullptr),
                    MissingScores);
}

TEST_CASE("fitted scores track the true assignment probabilities") {
    // single-period process with an analytically known score
    const std::size_t n = 4000;
    const auto recs = generate_score_dgp(n, 13);

    CovariateSchema schema;
    schema.covariates.push_back({"x1", true, false, false});
    schema.covariates.push_back({"x2", false, false, false});
    schema.covariates.push_back({"x3", false, false, false});
    std::vector<SubjectRecord> subjects;
    for (std::size_t i = 0; i < n; ++i) {
        SubjectRecord s;
        s.id = std::to_string(i);
        PersonPeriodRecord p;
        p.t = 0;
        p.covariates = {recs[i].x1, recs[i].x2, recs[i].x3};
        p.treatment = recs[i].a;
        p.censored_next = recs[i].c_next;
        if (recs[i].c_next == 0) p.event_next = recs[i].y;
        s.periods.push_back(p);
        subjects.push_back(std::move(s));
    }
    const LongitudinalDataset data(schema, std::move(subjects), 1);

    HistoryFeaturizer f;
    bart::McmcConfig mcmc = small_mcmc(29);
    mcmc.n_iter = 500;
    mcmc.n_burn = 250;
    const AssignmentModels models = fit_assignment_models(data, f, small_hyper(), mcmc);
    const ScoreSeries scores = compute_scores(models, data, f);

    double mae = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        mae += std::abs(scores.per_subject[i][0].e - recs[i].e);
    mae /= static_cast<double>(n);
    CHECK(mae < 0.08);
}

TEST_CASE("positivity violations are counted, not clipped") {
    const LongitudinalDataset data = generate_sim51({100, 2, 3.0, 17});
    HistoryFeaturizer f;
    f.num_periods = data.horizon();
    const HistoryFeaturizer a_f = treatment_featurizer(f);
    const std::size_t wt = history_row_width(0, 3, f, a_f);

    // stub posteriors: a single root-leaf ensemble whose probit offset pins
    // the predicted probability
    auto stub = [](std::size_t width, double offset) {
        std::vector<bart::EnsembleDraw> draws(1);
        draws[0].trees.emplace_back();
        return bart::BartPosterior(bart::Link::probit, width, std::vector<bool>(width, false),
                                   std::move(draws), offset, 0.0, 1.0);
    };
    const AssignmentModels models{stub(wt, -8.0), stub(wt + 1, 0.0)};
    const ScoreSeries scores = compute_scores(models, data, f);
    // every record has e ~ 0 < 0.001
    CHECK(scores.positivity_violations == data.num_person_periods());
    for (const auto& subj : scores.per_subject)
        for (const auto& r : subj) {
            CHECK(r.e > 0.0); // flagged, never clipped to zero
            CHECK(r.e < 0.001);
        }
}

TEST_CASE("natural-course regime consumes the full covariate history") {
    // the fitted random regime featurizes h_hist itself, so histories of the
    // wrong width must be rejected
    const LongitudinalDataset data = generate_sim51({150, 2, 3.0, 19});
    HistoryFeaturizer f;
    f.num_periods = data.horizon();
    const AssignmentModels models =
        fit_assignment_models(data, f, small_hyper(), small_mcmc(3));
    const TreatmentRegime natural = make_natural_course_regime(models.treatment, f);
    CHECK(natural.kind() == TreatmentRegime::Kind::Random);

    const TailoringHistory good{{1.0, 0.05, -0.02}};
    const int a = natural.assign(good, {}, 0.0);
    CHECK((a == 0 || a == 1));
    const TailoringHistory bad{{0.05}};
    CHECK_THROWS_AS(natural.assign(bad, {}, 0.0), WidthMismatch);
}
