#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "bgf/bart/bart.hpp"
#include "bgf/distributions.hpp"
#include "bgf/errors.hpp"
#include "bgf/glm.hpp"

using namespace bgf;
using namespace bgf::bart;

namespace {

/// Log density of r ~ N(0, diag(1/w) + sigma_mu2 * 11^T), keeping only the
/// partition-dependent terms (Woodbury / matrix determinant lemma). Serves as
/// an independent derivation of the leaf marginal used by the sampler.
double woodbury_leaf_marginal(const std::vector<double>& r, const std::vector<double>& w,
                              double sigma_mu2) {
    double w_sum = 0.0, s_sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        w_sum += w[i];
        s_sum += w[i] * r[i];
    }
    // log det(D + s 11^T) = log det(D) + log(1 + s * sum w); the det(D) and
    // sum w_i r_i^2 terms are partition-invariant and dropped
    return -0.5 * std::log(1.0 + sigma_mu2 * w_sum) +
           0.5 * s_sum * s_sum / (w_sum + 1.0 / sigma_mu2);
}

Matrix column(const std::vector<double>& v) {
    Matrix x(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) x.at(i, 0) = v[i];
    return x;
}

} // namespace

TEST_CASE("leaf conjugate posterior matches the closed form") {
    // N(0, sigma_mu2) prior, heteroscedastic normal likelihood: posterior
    // precision W + 1/sigma_mu2, mean S / (W + 1/sigma_mu2)
    const double sigma_mu2 = 1.0 / (4.0 * 4.0 * 200.0);
    const std::vector<double> r{0.31, -0.12, 0.55, 0.02};
    const std::vector<double> w{2.0, 0.5, 1.25, 3.0};
    double w_sum = 0.0, s_sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        w_sum += w[i];
        s_sum += w[i] * r[i];
    }
    const auto [mean, var] = leaf_posterior(w_sum, s_sum, sigma_mu2);
    const double var_want = 1.0 / (w_sum + 1.0 / sigma_mu2);
    CHECK(std::abs(var - var_want) < 1e-10);
    CHECK(std::abs(mean - s_sum * var_want) < 1e-10);
}

TEST_CASE("leaf log marginal agrees with the Woodbury derivation across partitions") {
    const double sigma_mu2 = 0.04;
    const std::vector<double> r{0.7, -0.3, 0.2, 0.9, -0.6};
    const std::vector<double> w{1.0, 2.0, 0.5, 1.5, 1.0};
    // split {0,1} | {2,3,4} versus merged
    auto slice = [&](std::initializer_list<std::size_t> idx, double& ws, double& ss,
                     std::vector<double>& rr, std::vector<double>& ww) {
        ws = ss = 0.0;
        for (std::size_t i : idx) {
            ws += w[i];
            ss += w[i] * r[i];
            rr.push_back(r[i]);
            ww.push_back(w[i]);
        }
    };
    double wl, sl, wr, sr, wm, sm;
    std::vector<double> rl, wl_v, rr_, wr_v, rm, wm_v;
    slice({0, 1}, wl, sl, rl, wl_v);
    slice({2, 3, 4}, wr, sr, rr_, wr_v);
    slice({0, 1, 2, 3, 4}, wm, sm, rm, wm_v);

    const double sampler_diff = leaf_log_marginal(wl, sl, sigma_mu2) +
                                leaf_log_marginal(wr, sr, sigma_mu2) -
                                leaf_log_marginal(wm, sm, sigma_mu2);
    const double oracle_diff = woodbury_leaf_marginal(rl, wl_v, sigma_mu2) +
                               woodbury_leaf_marginal(rr_, wr_v, sigma_mu2) -
                               woodbury_leaf_marginal(rm, wm_v, sigma_mu2);
    CHECK(std::abs(sampler_diff - oracle_diff) < 1e-10);
}

TEST_CASE("prior split frequency matches tau (1+d)^-alpha") {
    const double tau = 0.95, alpha = 2.0;
    Matrix x(64, 1);
    for (std::size_t i = 0; i < 64; ++i) x.at(i, 0) = static_cast<double>(i);
    const CutpointTable cuts = CutpointTable::from_data(x, {false}, 100);

    Rng rng(2024);
    const int n = 40000;
    int root_split = 0, d1_nodes = 0, d1_split = 0;
    for (int i = 0; i < n; ++i) {
        const Tree t = sample_tree_from_prior(tau, alpha, cuts, rng);
        const bool split = !t.node(t.root()).is_leaf();
        root_split += split ? 1 : 0;
        if (split) {
            for (int c : {t.node(t.root()).left, t.node(t.root()).right}) {
                ++d1_nodes;
                d1_split += t.node(c).is_leaf() ? 0 : 1;
            }
        }
    }
    // 3 sigma MC bands around tau and tau/4
    const double p0 = static_cast<double>(root_split) / n;
    CHECK(std::abs(p0 - tau) < 3.0 * std::sqrt(tau * (1.0 - tau) / n));
    const double p1 = static_cast<double>(d1_split) / d1_nodes;
    const double want1 = tau * std::pow(2.0, -alpha);
    CHECK(std::abs(p1 - want1) < 3.0 * std::sqrt(want1 * (1.0 - want1) / d1_nodes));
}

TEST_CASE("grow and prune ratios are reciprocal on the same state pair") {
    // 1 binary feature, 2 observations: the proposal has no rule randomness,
    // so grow followed by prune on the grown tree must negate the log ratio
    Matrix x(2, 1);
    x.at(0, 0) = 0.0;
    x.at(1, 0) = 1.0;
    const CutpointTable cuts = CutpointTable::from_data(x, {true}, 100);
    REQUIRE(cuts.cuts[0].size() == 1);

    BartHyper hyper;
    hyper.num_trees = 1;
    const double sigma_mu2 = 0.1;
    const std::vector<double> resid{0.8, -0.5};
    const std::vector<double> weights{1.0, 1.0};

    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        TreeSampler sampler(x, cuts, hyper);
        double la_grow;
        do {
            la_grow = sampler.try_grow(resid, weights, sigma_mu2, rng);
        } while (sampler.tree.num_active() == 1); // retry until accepted
        REQUIRE(std::isfinite(la_grow));
        const double la_prune = sampler.try_prune(resid, weights, sigma_mu2, rng);
        REQUIRE(std::isfinite(la_prune));
        CHECK(std::abs(la_grow + la_prune) < 1e-12);
    }
}

TEST_CASE("grow then matching prune restores the tree structure") {
    Matrix x(8, 2);
    Rng gen(3);
    for (std::size_t i = 0; i < 8; ++i) {
        x.at(i, 0) = gen.uniform();
        x.at(i, 1) = gen.uniform();
    }
    const CutpointTable cuts = CutpointTable::from_data(x, {false, false}, 10);
    Rng rng(9);
    Tree t = sample_tree_from_prior(0.95, 2.0, cuts, rng);
    Tree before = t;
    const auto leaves = t.leaves();
    const int leaf = leaves[rng.uniform_int(leaves.size())];
    t.grow(leaf, 0, 3, cuts.cuts[0][3]);
    CHECK(!t.same_structure(before));
    t.prune(leaf);
    CHECK(t.same_structure(before));
}

TEST_CASE("continuous fit beats OLS on a nonlinear function") {
    // held-out RMSE on a Friedman-style surface
    Rng gen(17);
    const std::size_t n = 500, n_test = 300, p = 5;
    auto f_true = [](std::span<const double> z) {
        return 10.0 * std::sin(3.14159265358979 * z[0] * z[1]) + 20.0 * (z[2] - 0.5) * (z[2] - 0.5) +
               10.0 * z[3] + 5.0 * z[4];
    };
    Matrix x(n, p), xt(n_test, p);
    std::vector<double> y(n), yt(n_test);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) x.at(i, j) = gen.uniform();
        y[i] = f_true(x.row(i)) + gen.normal(0.0, 1.0);
    }
    for (std::size_t i = 0; i < n_test; ++i) {
        for (std::size_t j = 0; j < p; ++j) xt.at(i, j) = gen.uniform();
        yt[i] = f_true(xt.row(i));
    }

    BartHyper hyper;
    hyper.num_trees = 50;
    McmcConfig mcmc;
    mcmc.n_iter = 600;
    mcmc.n_burn = 300;
    mcmc.thin = 3;
    mcmc.seed = 99;
    const BartPosterior post = fit_continuous(x, y, hyper, mcmc, std::vector<bool>(p, false));
    const std::vector<double> bart_pred = post.posterior_mean(xt);

    Matrix xa(n, p + 1, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) xa.at(i, j + 1) = x.at(i, j);
    const auto beta = least_squares(xa, y);

    double rmse_bart = 0.0, rmse_ols = 0.0;
    for (std::size_t i = 0; i < n_test; ++i) {
        double ols = beta[0];
        for (std::size_t j = 0; j < p; ++j) ols += beta[j + 1] * xt.at(i, j);
        rmse_bart += (bart_pred[i] - yt[i]) * (bart_pred[i] - yt[i]);
        rmse_ols += (ols - yt[i]) * (ols - yt[i]);
    }
    rmse_bart = std::sqrt(rmse_bart / n_test);
    rmse_ols = std::sqrt(rmse_ols / n_test);
    CHECK(rmse_bart < rmse_ols);
    // sigma draws are on the raw response scale
    double sig = 0.0;
    for (std::size_t r = 0; r < post.num_draws(); ++r) sig += post.sigma(r);
    sig /= static_cast<double>(post.num_draws());
    CHECK(sig > 0.5);
    CHECK(sig < 2.5);
}

TEST_CASE("binary links recover a step function") {
    Rng gen(23);
    const std::size_t n = 1500;
    Matrix x(n, 1);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x.at(i, 0) = gen.uniform();
        const double pr = x.at(i, 0) > 0.5 ? 0.8 : 0.2;
        y[i] = gen.uniform() < pr ? 1 : 0;
    }
    BartHyper hyper;
    hyper.num_trees = 50;
    McmcConfig mcmc;
    mcmc.n_iter = 500;
    mcmc.n_burn = 250;
    mcmc.seed = 4;
    Matrix probe(2, 1);
    probe.at(0, 0) = 0.25;
    probe.at(1, 0) = 0.75;
    for (const Link link : {Link::probit, Link::logistic}) {
        const BartPosterior post = fit_binary(x, y, link, hyper, mcmc, {false});
        const std::vector<double> pr = post.posterior_mean(probe);
        CHECK(std::abs(pr[0] - 0.2) < 0.08);
        CHECK(std::abs(pr[1] - 0.8) < 0.08);
    }
}

TEST_CASE("polya-gamma sampler matches the known mean") {
    Rng rng(31);
    for (const double z : {0.3, 1.5, 4.0}) {
        const int n = 30000;
        double sum = 0.0, ss = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = sample_polya_gamma(z, rng);
            sum += v;
            ss += v * v;
        }
        const double mean = sum / n;
        const double want = std::tanh(z / 2.0) / (2.0 * z);
        const double se = std::sqrt((ss / n - mean * mean) / n);
        CHECK(std::abs(mean - want) < 4.0 * se);
    }
}

TEST_CASE("truncated normal samplers respect their support and mean") {
    Rng rng(37);
    const int n = 50000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rtnorm_lower(0.0, 1.0, rng);
        CHECK(v > 1.0);
        sum += v;
    }
    // E[Z | Z > 1] = phi(1) / (1 - Phi(1))
    const double phi1 = std::exp(-0.5) / std::sqrt(2.0 * 3.14159265358979);
    const double want = phi1 / (1.0 - normal_cdf(1.0));
    CHECK(std::abs(sum / n - want) < 0.01);

    double sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rtnorm_upper(0.0, -1.0, rng);
        CHECK(v < -1.0);
        sum2 += v;
    }
    CHECK(std::abs(sum2 / n + want) < 0.01);
}

TEST_CASE("normal quantile inverts the normal cdf") {
    for (double p = 0.0005; p < 1.0; p += 0.007)
        CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-9);
}

TEST_CASE("fitting is bit-deterministic in the seed") {
    Rng gen(41);
    const std::size_t n = 200;
    Matrix x(n, 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x.at(i, 0) = gen.uniform();
        x.at(i, 1) = gen.uniform();
        y[i] = gen.uniform() < 0.3 + 0.4 * x.at(i, 0) ? 1 : 0;
    }
    BartHyper hyper;
    hyper.num_trees = 20;
    McmcConfig mcmc;
    mcmc.n_iter = 120;
    mcmc.n_burn = 60;
    mcmc.seed = 1234;
    const BartPosterior a = fit_binary(x, y, Link::logistic, hyper, mcmc, {false, false});
    const BartPosterior b = fit_binary(x, y, Link::logistic, hyper, mcmc, {false, false});
    mcmc.seed = 1235;
    const BartPosterior c = fit_binary(x, y, Link::logistic, hyper, mcmc, {false, false});
    const auto pa = a.posterior_mean(x);
    const auto pb = b.posterior_mean(x);
    const auto pc = c.posterior_mean(x);
    CHECK(pa == pb);
    CHECK(pa != pc);
}

TEST_CASE("save/load round trip reproduces predictions exactly") {
    Rng gen(43);
    const std::size_t n = 150;
    Matrix x(n, 2);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x.at(i, 0) = gen.uniform();
        x.at(i, 1) = gen.uniform() < 0.5 ? 1.0 : 0.0;
        y[i] = 2.0 * x.at(i, 0) + x.at(i, 1) + gen.normal(0.0, 0.2);
    }
    BartHyper hyper;
    hyper.num_trees = 15;
    McmcConfig mcmc;
    mcmc.n_iter = 100;
    mcmc.n_burn = 50;
    mcmc.seed = 7;
    const BartPosterior post = fit_continuous(x, y, hyper, mcmc, {false, true});
    std::stringstream buf;
    post.save(buf);
    const BartPosterior back = BartPosterior::load(buf);
    CHECK(back.link() == post.link());
    CHECK(back.width() == post.width());
    CHECK(back.num_draws() == post.num_draws());
    for (std::size_t r = 0; r < post.num_draws(); ++r) {
        CHECK(back.sigma(r) == post.sigma(r));
        for (std::size_t i = 0; i < 10; ++i)
            CHECK(back.predict_one(r, x.row(i)) == post.predict_one(r, x.row(i)));
    }
}

TEST_CASE("degenerate inputs produce warnings, not crashes") {
    Matrix x(20, 1);
    for (std::size_t i = 0; i < 20; ++i) x.at(i, 0) = static_cast<double>(i);
    BartHyper hyper;
    hyper.num_trees = 5;
    McmcConfig mcmc;
    mcmc.n_iter = 40;
    mcmc.n_burn = 20;

    const std::vector<double> y_const(20, 3.5);
    const BartPosterior a = fit_continuous(x, y_const, hyper, mcmc, {false});
    REQUIRE(!a.warnings().empty());
    CHECK(a.warnings()[0].find("DegenerateResponse") != std::string::npos);
    CHECK(std::isfinite(a.predict_one(0, x.row(0))));

    const std::vector<int> y_one(20, 1);
    const BartPosterior b = fit_binary(x, y_one, Link::probit, hyper, mcmc, {false});
    REQUIRE(!b.warnings().empty());
    CHECK(b.warnings()[0].find("AllOneClass") != std::string::npos);

    CHECK_THROWS_AS(fit_binary(x, y_one, Link::identity, hyper, mcmc, {false}), ConfigError);
    CHECK_THROWS_AS(fit_continuous(Matrix(0, 1), std::vector<double>{}, hyper, mcmc, {false}),
                    EmptyData);
    CHECK_THROWS_AS(a.sigma(10000), DrawOutOfRange);
    const std::vector<double> wrong{1.0, 2.0};
    CHECK_THROWS_AS(a.predict_one(0, wrong), WidthMismatch);
}

TEST_CASE("tree text serialization is exact") {
    Matrix x(30, 2);
    Rng gen(51);
    for (std::size_t i = 0; i < 30; ++i) {
        x.at(i, 0) = gen.normal();
        x.at(i, 1) = gen.normal();
    }
    const CutpointTable cuts = CutpointTable::from_data(x, {false, false}, 25);
    Rng rng(53);
    for (int trial = 0; trial < 30; ++trial) {
        Tree t = sample_tree_from_prior(0.95, 1.0, cuts, rng);
        for (int leaf : t.leaves()) t.set_leaf(leaf, rng.normal());
        std::stringstream buf;
        t.write(buf);
        const Tree back = Tree::read(buf);
        CHECK(back.same_structure(t));
        for (std::size_t i = 0; i < 30; ++i) CHECK(back.evaluate(x.row(i)) == t.evaluate(x.row(i)));
    }
}
