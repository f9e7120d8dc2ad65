#include "bgf/bart/bart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "bgf/distributions.hpp"
#include "bgf/errors.hpp"

namespace bgf::bart {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string hex_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_hex_double(std::istream& in) {
    std::string s;
    in >> s;
    return std::strtod(s.c_str(), nullptr);
}
} // namespace

double BartHyper::split_prob(int depth) const {
    return tau * std::pow(1.0 + depth, -alpha);
}

std::pair<double, double> leaf_posterior(double w_sum, double s_sum, double sigma_mu2) {
    const double var = 1.0 / (w_sum + 1.0 / sigma_mu2);
    return {s_sum * var, var};
}

double leaf_log_marginal(double w_sum, double s_sum, double sigma_mu2) {
    // terms that depend only on the pooled observations (not the partition)
    // are dropped; every Metropolis ratio compares partitions of one set
    return -0.5 * std::log1p(sigma_mu2 * w_sum) +
           0.5 * s_sum * s_sum / (w_sum + 1.0 / sigma_mu2);
}

TreeSampler::TreeSampler(const Matrix& x, const CutpointTable& cuts, const BartHyper& hyper)
    : x_(x), cuts_(cuts), hyper_(hyper), assign_(x.rows, 0) {}

void TreeSampler::refresh_assignments() {
    for (std::size_t i = 0; i < x_.rows; ++i) assign_[i] = tree.assign(x_.row(i));
}

TreeSampler::LeafStats TreeSampler::stats_for(int leaf_slot, std::span<const double> resid,
                                              std::span<const double> weights) const {
    LeafStats st;
    for (std::size_t i = 0; i < assign_.size(); ++i) {
        if (assign_[i] != leaf_slot) continue;
        st.w += weights[i];
        st.s += weights[i] * resid[i];
        ++st.n;
    }
    return st;
}

double TreeSampler::try_grow(std::span<const double> resid, std::span<const double> weights,
                             double sigma_mu2, Rng& rng) {
    const auto leaves = tree.leaves();
    const int node = leaves[rng.uniform_int(leaves.size())];
    const int depth = tree.node(node).depth;
    if (depth >= hyper_.max_depth) return kNaN;
    const int var = static_cast<int>(rng.uniform_int(cuts_.num_features()));
    const int cut = static_cast<int>(rng.uniform_int(cuts_.cuts[var].size()));
    const double cv = cuts_.cuts[var][cut];

    LeafStats left, right;
    for (std::size_t i = 0; i < assign_.size(); ++i) {
        if (assign_[i] != node) continue;
        LeafStats& st = x_.at(i, var) <= cv ? left : right;
        st.w += weights[i];
        st.s += weights[i] * resid[i];
        ++st.n;
    }
    if (left.n == 0 || right.n == 0) return kNaN; // empty leaf: auto-reject

    const double ll_new = leaf_log_marginal(left.w, left.s, sigma_mu2) +
                          leaf_log_marginal(right.w, right.s, sigma_mu2);
    const double ll_old = leaf_log_marginal(left.w + right.w, left.s + right.s, sigma_mu2);

    const double pd = hyper_.split_prob(depth);
    const double pd1 = hyper_.split_prob(depth + 1);
    const std::size_t b = leaves.size();

    const auto [l, r] = tree.grow(node, var, cut, cv);
    const std::size_t nog_new = tree.nog_nodes().size();

    // uniform rule proposal cancels against the uniform rule prior
    const double log_alpha = std::log(hyper_.p_prune * static_cast<double>(b)) -
                             std::log(hyper_.p_grow * static_cast<double>(nog_new)) +
                             std::log(pd) + 2.0 * std::log1p(-pd1) - std::log1p(-pd) +
                             ll_new - ll_old;

    if (std::log(rng.uniform()) < log_alpha) {
        for (std::size_t i = 0; i < assign_.size(); ++i)
            if (assign_[i] == node) assign_[i] = x_.at(i, var) <= cv ? l : r;
    } else {
        tree.prune(node);
    }
    return log_alpha;
}

double TreeSampler::try_prune(std::span<const double> resid, std::span<const double> weights,
                              double sigma_mu2, Rng& rng) {
    const auto nogs = tree.nog_nodes();
    if (nogs.empty()) return kNaN;
    const int node = nogs[rng.uniform_int(nogs.size())];
    const int l = tree.node(node).left;
    const int r = tree.node(node).right;
    const int depth = tree.node(node).depth;

    const LeafStats left = stats_for(l, resid, weights);
    const LeafStats right = stats_for(r, resid, weights);
    const double ll_split = leaf_log_marginal(left.w, left.s, sigma_mu2) +
                            leaf_log_marginal(right.w, right.s, sigma_mu2);
    const double ll_merged = leaf_log_marginal(left.w + right.w, left.s + right.s, sigma_mu2);

    const double pd = hyper_.split_prob(depth);
    const double pd1 = hyper_.split_prob(depth + 1);
    const std::size_t b_after = tree.leaves().size() - 1;

    const double log_alpha = std::log(hyper_.p_grow * static_cast<double>(nogs.size())) -
                             std::log(hyper_.p_prune * static_cast<double>(b_after)) +
                             std::log1p(-pd) - std::log(pd) - 2.0 * std::log1p(-pd1) +
                             ll_merged - ll_split;

    if (std::log(rng.uniform()) < log_alpha) {
        tree.prune(node);
        for (std::size_t i = 0; i < assign_.size(); ++i)
            if (assign_[i] == l || assign_[i] == r) assign_[i] = node;
    }
    return log_alpha;
}

namespace {
bool is_under(const Tree& tree, int leaf, int node) {
    for (int i = leaf; i >= 0; i = tree.node(i).parent)
        if (i == node) return true;
    return false;
}

void leaves_under(const Tree& tree, int node, std::vector<int>& out) {
    if (tree.node(node).is_leaf()) {
        out.push_back(node);
        return;
    }
    leaves_under(tree, tree.node(node).left, out);
    leaves_under(tree, tree.node(node).right, out);
}

int descend(const Tree& tree, int node, std::span<const double> x) {
    int i = node;
    while (!tree.node(i).is_leaf())
        i = x[tree.node(i).var] <= tree.node(i).cut_value ? tree.node(i).left : tree.node(i).right;
    return i;
}
} // namespace

double TreeSampler::try_change(std::span<const double> resid, std::span<const double> weights,
                               double sigma_mu2, Rng& rng) {
    const auto inner = tree.interior();
    if (inner.empty()) return kNaN;
    const int node = inner[rng.uniform_int(inner.size())];
    const int var = static_cast<int>(rng.uniform_int(cuts_.num_features()));
    const int cut = static_cast<int>(rng.uniform_int(cuts_.cuts[var].size()));

    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < assign_.size(); ++i)
        if (is_under(tree, assign_[i], node)) ids.push_back(i);

    std::vector<int> subtree_leaves;
    leaves_under(tree, node, subtree_leaves);

    double ll_old = 0.0;
    for (int leaf : subtree_leaves) {
        LeafStats st;
        for (std::size_t i : ids) {
            if (assign_[i] != leaf) continue;
            st.w += weights[i];
            st.s += weights[i] * resid[i];
        }
        ll_old += leaf_log_marginal(st.w, st.s, sigma_mu2);
    }

    const TreeNode saved = tree.node(node);
    tree.set_rule(node, var, cut, cuts_.cuts[var][cut]);

    std::vector<int> new_assign(ids.size());
    bool empty = false;
    for (std::size_t k = 0; k < ids.size(); ++k)
        new_assign[k] = descend(tree, node, x_.row(ids[k]));
    double ll_new = 0.0;
    for (int leaf : subtree_leaves) {
        LeafStats st;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (new_assign[k] != leaf) continue;
            st.w += weights[ids[k]];
            st.s += weights[ids[k]] * resid[ids[k]];
            ++st.n;
        }
        if (st.n == 0) empty = true;
        ll_new += leaf_log_marginal(st.w, st.s, sigma_mu2);
    }
    if (empty) {
        tree.set_rule(node, saved.var, saved.cut, saved.cut_value);
        return kNaN;
    }

    // symmetric proposal over rules; the uniform rule prior cancels too
    const double log_alpha = ll_new - ll_old;
    if (std::log(rng.uniform()) < log_alpha) {
        for (std::size_t k = 0; k < ids.size(); ++k) assign_[ids[k]] = new_assign[k];
    } else {
        tree.set_rule(node, saved.var, saved.cut, saved.cut_value);
    }
    return log_alpha;
}

double TreeSampler::try_swap(std::span<const double> resid, std::span<const double> weights,
                             double sigma_mu2, Rng& rng) {
    const auto pairs = tree.interior_pairs();
    if (pairs.empty()) return kNaN;
    const auto [parent, child] = pairs[rng.uniform_int(pairs.size())];

    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < assign_.size(); ++i)
        if (is_under(tree, assign_[i], parent)) ids.push_back(i);

    std::vector<int> subtree_leaves;
    leaves_under(tree, parent, subtree_leaves);

    double ll_old = 0.0;
    for (int leaf : subtree_leaves) {
        LeafStats st;
        for (std::size_t i : ids) {
            if (assign_[i] != leaf) continue;
            st.w += weights[i];
            st.s += weights[i] * resid[i];
        }
        ll_old += leaf_log_marginal(st.w, st.s, sigma_mu2);
    }

    const TreeNode sp = tree.node(parent);
    const TreeNode sc = tree.node(child);
    tree.set_rule(parent, sc.var, sc.cut, sc.cut_value);
    tree.set_rule(child, sp.var, sp.cut, sp.cut_value);

    std::vector<int> new_assign(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k)
        new_assign[k] = descend(tree, parent, x_.row(ids[k]));
    bool empty = false;
    double ll_new = 0.0;
    for (int leaf : subtree_leaves) {
        LeafStats st;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (new_assign[k] != leaf) continue;
            st.w += weights[ids[k]];
            st.s += weights[ids[k]] * resid[ids[k]];
            ++st.n;
        }
        if (st.n == 0) empty = true;
        ll_new += leaf_log_marginal(st.w, st.s, sigma_mu2);
    }
    if (empty) {
        tree.set_rule(parent, sp.var, sp.cut, sp.cut_value);
        tree.set_rule(child, sc.var, sc.cut, sc.cut_value);
        return kNaN;
    }

    const double log_alpha = ll_new - ll_old;
    if (std::log(rng.uniform()) < log_alpha) {
        for (std::size_t k = 0; k < ids.size(); ++k) assign_[ids[k]] = new_assign[k];
    } else {
        tree.set_rule(parent, sp.var, sp.cut, sp.cut_value);
        tree.set_rule(child, sc.var, sc.cut, sc.cut_value);
    }
    return log_alpha;
}

void TreeSampler::update(std::span<const double> resid, std::span<const double> weights,
                         double sigma_mu2, Rng& rng) {
    const double u = rng.uniform();
    if (u < hyper_.p_grow) {
        try_grow(resid, weights, sigma_mu2, rng);
    } else if (u < hyper_.p_grow + hyper_.p_prune) {
        try_prune(resid, weights, sigma_mu2, rng);
    } else if (u < hyper_.p_grow + hyper_.p_prune + hyper_.p_change) {
        try_change(resid, weights, sigma_mu2, rng);
    } else {
        try_swap(resid, weights, sigma_mu2, rng);
    }
    draw_leaves(resid, weights, sigma_mu2, rng);
}

void TreeSampler::draw_leaves(std::span<const double> resid, std::span<const double> weights,
                              double sigma_mu2, Rng& rng) {
    for (int leaf : tree.leaves()) {
        const LeafStats st = stats_for(leaf, resid, weights);
        const auto [mean, var] = leaf_posterior(st.w, st.s, sigma_mu2);
        tree.set_leaf(leaf, rng.normal(mean, std::sqrt(var)));
    }
}

void TreeSampler::fitted(std::vector<double>& out) const {
    for (std::size_t i = 0; i < assign_.size(); ++i) out[i] = tree.node(assign_[i]).leaf;
}

// ---- posterior container ----

BartPosterior::BartPosterior(Link link, std::size_t width, std::vector<bool> binary_features,
                             std::vector<EnsembleDraw> draws, double offset, double y_center,
                             double y_scale)
    : link_(link),
      width_(width),
      binary_features_(std::move(binary_features)),
      draws_(std::move(draws)),
      offset_(offset),
      y_center_(y_center),
      y_scale_(y_scale) {}

double BartPosterior::sigma(std::size_t r) const {
    if (r >= draws_.size()) throw DrawOutOfRange("BartPosterior::sigma: draw index out of range");
    return draws_[r].sigma;
}

double BartPosterior::sum_trees(std::size_t r, std::span<const double> x) const {
    if (r >= draws_.size())
        throw DrawOutOfRange("BartPosterior::predict: draw index out of range");
    if (x.size() != width_) throw WidthMismatch("BartPosterior::predict: feature width mismatch");
    double f = 0.0;
    for (const Tree& t : draws_[r].trees) f += t.evaluate(x);
    return f;
}

double BartPosterior::predict_one(std::size_t r, std::span<const double> x) const {
    const double f = sum_trees(r, x);
    switch (link_) {
        case Link::identity:
            return y_center_ + y_scale_ * f;
        case Link::probit:
            return std::clamp(normal_cdf(offset_ + f), 1e-12, 1.0 - 1e-12);
        case Link::logistic:
            return std::clamp(logistic_cdf(offset_ + f), 1e-12, 1.0 - 1e-12);
    }
    return 0.0;
}

std::vector<double> BartPosterior::predict(std::size_t r, const Matrix& x) const {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict_one(r, x.row(i));
    return out;
}

std::vector<double> BartPosterior::posterior_mean(const Matrix& x) const {
    std::vector<double> out(x.rows, 0.0);
    for (std::size_t r = 0; r < draws_.size(); ++r)
        for (std::size_t i = 0; i < x.rows; ++i) out[i] += predict_one(r, x.row(i));
    for (double& v : out) v /= static_cast<double>(draws_.size());
    return out;
}

void BartPosterior::save(std::ostream& out) const {
    out << "bart " << static_cast<int>(link_) << ' ' << width_ << ' ' << draws_.size() << ' '
        << hex_double(offset_) << ' ' << hex_double(y_center_) << ' ' << hex_double(y_scale_)
        << "\n";
    for (bool b : binary_features_) out << (b ? 1 : 0) << ' ';
    out << "\n";
    for (const auto& d : draws_) {
        out << "draw " << hex_double(d.sigma) << ' ' << d.trees.size() << "\n";
        for (const Tree& t : d.trees) t.write(out);
    }
    out << "warnings " << warnings_.size() << "\n";
    for (const auto& w : warnings_) out << w << "\n";
}

BartPosterior BartPosterior::load(std::istream& in) {
    std::string tag;
    in >> tag;
    if (tag != "bart") throw DataError("BartPosterior::load: bad header");
    int link_i = 0;
    std::size_t width = 0, ndraws = 0;
    in >> link_i >> width >> ndraws;
    const double offset = parse_hex_double(in);
    const double center = parse_hex_double(in);
    const double scale = parse_hex_double(in);
    std::vector<bool> binary(width);
    for (std::size_t j = 0; j < width; ++j) {
        int b = 0;
        in >> b;
        binary[j] = b != 0;
    }
    std::vector<EnsembleDraw> draws;
    draws.reserve(ndraws);
    for (std::size_t r = 0; r < ndraws; ++r) {
        in >> tag;
        if (tag != "draw") throw DataError("BartPosterior::load: bad draw header");
        EnsembleDraw d;
        d.sigma = parse_hex_double(in);
        std::size_t ntrees = 0;
        in >> ntrees;
        d.trees.reserve(ntrees);
        for (std::size_t j = 0; j < ntrees; ++j) d.trees.push_back(Tree::read(in));
        draws.push_back(std::move(d));
    }
    BartPosterior post(static_cast<Link>(link_i), width, std::move(binary), std::move(draws),
                       offset, center, scale);
    in >> tag;
    if (tag == "warnings") {
        std::size_t nw = 0;
        in >> nw;
        std::string line;
        std::getline(in, line);
        for (std::size_t j = 0; j < nw; ++j) {
            std::getline(in, line);
            post.add_warning(line);
        }
    }
    return post;
}

// ---- fitting ----

namespace {

struct ChainSetup {
    std::vector<double> z;     // working response on the sampler scale
    double offset = 0.0;
    double y_center = 0.0;
    double y_scale = 1.0;
    std::vector<std::string> warnings;
};

double residual_sd_estimate(const Matrix& x, std::span<const double> z) {
    // intercept-augmented least squares; falls back to the marginal sd when
    // the design is rank deficient
    const std::size_t n = x.rows;
    double mean = 0.0;
    for (double v : z) mean += v;
    mean /= static_cast<double>(n);
    double tss = 0.0;
    for (double v : z) tss += (v - mean) * (v - mean);
    const double marginal = std::sqrt(tss / static_cast<double>(n > 1 ? n - 1 : 1));
    if (n <= x.cols + 1) return marginal > 0.0 ? marginal : 1.0;
    try {
        Matrix xa(n, x.cols + 1, 1.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < x.cols; ++j) xa.at(i, j + 1) = x.at(i, j);
        const auto beta = least_squares(xa, z);
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double fit = 0.0;
            for (std::size_t j = 0; j < xa.cols; ++j) fit += xa.at(i, j) * beta[j];
            rss += (z[i] - fit) * (z[i] - fit);
        }
        const double dof = static_cast<double>(n - xa.cols);
        const double s = std::sqrt(rss / dof);
        return s > 0.0 ? s : (marginal > 0.0 ? marginal : 1.0);
    } catch (const SingularDesign&) {
        return marginal > 0.0 ? marginal : 1.0;
    }
}

BartPosterior run_chain(const Matrix& x, Link link, ChainSetup setup,
                        std::span<const int> y_binary, const BartHyper& hyper,
                        const McmcConfig& mcmc, const std::vector<bool>& binary_features) {
    const std::size_t n = x.rows;
    const int num_trees = hyper.num_trees;
    const double sigma_mu2 = hyper.leaf_prior_variance();
    Rng rng(derive_seed(mcmc.seed, 0x6261727475ULL));

    const CutpointTable cuts = CutpointTable::from_data(x, binary_features, hyper.num_cutpoints);

    std::vector<TreeSampler> samplers;
    samplers.reserve(num_trees);
    for (int j = 0; j < num_trees; ++j) samplers.emplace_back(x, cuts, hyper);

    std::vector<double> total(n, 0.0);
    std::vector<std::vector<double>> fits(num_trees, std::vector<double>(n, 0.0));
    std::vector<double> resid(n), weights(n, 1.0), pseudo(n);

    double sigma2 = 1.0;
    double nu_lambda = 0.0;
    if (link == Link::identity) {
        const double shat = residual_sd_estimate(x, setup.z);
        sigma2 = shat * shat;
        // calibrated so the rough residual estimate sits at the chosen prior
        // quantile of nu*lambda / chi^2_nu
        nu_lambda = shat * shat * kChiSq3Quantile10;
    }

    std::vector<EnsembleDraw> draws;
    draws.reserve(static_cast<std::size_t>(std::max(0, mcmc.num_draws())));

    for (int iter = 0; iter < mcmc.n_iter; ++iter) {
        if (link == Link::identity) {
            const double w = 1.0 / sigma2;
            std::fill(weights.begin(), weights.end(), w);
            pseudo = setup.z;
        } else if (link == Link::probit) {
            for (std::size_t i = 0; i < n; ++i) {
                const double mu = setup.offset + total[i];
                const double g = y_binary[i] == 1 ? rtnorm_lower(mu, 0.0, rng)
                                                  : rtnorm_upper(mu, 0.0, rng);
                pseudo[i] = g - setup.offset;
            }
            std::fill(weights.begin(), weights.end(), 1.0);
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const double f = setup.offset + total[i];
                const double omega = sample_polya_gamma(f, rng);
                weights[i] = omega;
                pseudo[i] = (static_cast<double>(y_binary[i]) - 0.5) / omega - setup.offset;
            }
        }

        for (int j = 0; j < num_trees; ++j) {
            for (std::size_t i = 0; i < n; ++i) resid[i] = pseudo[i] - (total[i] - fits[j][i]);
            samplers[j].update(resid, weights, sigma_mu2, rng);
            for (std::size_t i = 0; i < n; ++i) total[i] -= fits[j][i];
            samplers[j].fitted(fits[j]);
            for (std::size_t i = 0; i < n; ++i) total[i] += fits[j][i];
        }

        if (link == Link::identity) {
            double rss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = setup.z[i] - total[i];
                rss += e * e;
            }
            sigma2 = (nu_lambda + rss) / rng.chi_squared(hyper.sigma_nu + static_cast<double>(n));
        }

        const int thin = mcmc.thin > 0 ? mcmc.thin : 1;
        if (iter >= mcmc.n_burn && (iter - mcmc.n_burn) % thin == 0) {
            EnsembleDraw d;
            d.trees.reserve(num_trees);
            for (int j = 0; j < num_trees; ++j) d.trees.push_back(samplers[j].tree);
            d.sigma = link == Link::identity ? std::sqrt(sigma2) * setup.y_scale : 1.0;
            draws.push_back(std::move(d));
        }
    }

    BartPosterior post(link, x.cols, binary_features, std::move(draws), setup.offset,
                       setup.y_center, setup.y_scale);
    for (auto& w : setup.warnings) post.add_warning(std::move(w));
    return post;
}

} // namespace

BartPosterior fit_continuous(const Matrix& x, std::span<const double> y, const BartHyper& hyper,
                             const McmcConfig& mcmc, const std::vector<bool>& binary_features) {
    if (x.rows == 0) throw EmptyData("fit_continuous: no observations");
    if (y.size() != x.rows) throw WidthMismatch("fit_continuous: response length mismatch");
    if (binary_features.size() != x.cols)
        throw WidthMismatch("fit_continuous: binary flag width mismatch");

    ChainSetup setup;
    const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
    const double lo = *lo_it, hi = *hi_it;
    setup.y_center = 0.5 * (lo + hi);
    setup.y_scale = hi - lo;
    if (setup.y_scale <= 0.0) {
        setup.warnings.push_back("DegenerateResponse: constant response");
        setup.y_scale = 1.0;
    }
    setup.z.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) setup.z[i] = (y[i] - setup.y_center) / setup.y_scale;

    return run_chain(x, Link::identity, std::move(setup), {}, hyper, mcmc, binary_features);
}

BartPosterior fit_binary(const Matrix& x, std::span<const int> y, Link link,
                         const BartHyper& hyper, const McmcConfig& mcmc,
                         const std::vector<bool>& binary_features) {
    if (x.rows == 0) throw EmptyData("fit_binary: no observations");
    if (y.size() != x.rows) throw WidthMismatch("fit_binary: response length mismatch");
    if (binary_features.size() != x.cols)
        throw WidthMismatch("fit_binary: binary flag width mismatch");
    if (link == Link::identity) throw ConfigError("fit_binary: identity link is not binary");

    ChainSetup setup;
    double ybar = 0.0;
    for (int v : y) ybar += static_cast<double>(v);
    ybar /= static_cast<double>(y.size());
    if (ybar <= 0.0 || ybar >= 1.0) {
        setup.warnings.push_back("AllOneClass: response has a single level");
        ybar = std::clamp(ybar, 1e-3, 1.0 - 1e-3);
    }
    setup.offset = link == Link::probit ? normal_quantile(ybar) : logit(ybar);
    setup.y_center = 0.0;
    setup.y_scale = 1.0;

    return run_chain(x, link, std::move(setup), y, hyper, mcmc, binary_features);
}

} // namespace bgf::bart
