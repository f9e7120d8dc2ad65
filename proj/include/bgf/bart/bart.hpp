#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bgf/bart/tree.hpp"
#include "bgf/linalg.hpp"
#include "bgf/rng.hpp"

namespace bgf::bart {

/// Sum-of-trees prior hyperparameters. The split probability at depth d is
/// tau * (1+d)^(-alpha); leaf values are N(0, (4 w^2 J)^(-1)) on the
/// standardized response scale.
struct BartHyper {
    double tau = 0.95;
    double alpha = 2.0;
    double w = 2.0;
    int num_trees = 200;
    double sigma_nu = 3.0;        // residual-variance prior degrees of freedom
    double sigma_quantile = 0.9;  // prior mass below the rough residual estimate
    double p_grow = 0.25;
    double p_prune = 0.25;
    double p_change = 0.40;
    double p_swap = 0.10;
    int num_cutpoints = 100;
    int max_depth = 64;

    double leaf_prior_variance() const { return 1.0 / (4.0 * w * w * num_trees); }
    double split_prob(int depth) const;
};

struct McmcConfig {
    int n_iter = 1000;
    int n_burn = 500;
    int thin = 1;
    std::uint64_t seed = 0;

    int num_draws() const { return (n_iter - n_burn) / (thin > 0 ? thin : 1); }
};

enum class Link { identity, probit, logistic };

struct EnsembleDraw {
    std::vector<Tree> trees;
    double sigma = 0.0; // residual sd on the raw response scale (identity link)
};

/// Posterior draws of a fitted sum-of-trees model. Immutable after fitting.
class BartPosterior {
public:
    BartPosterior(Link link, std::size_t width, std::vector<bool> binary_features,
                  std::vector<EnsembleDraw> draws, double offset, double y_center,
                  double y_scale);

    Link link() const { return link_; }
    std::size_t width() const { return width_; }
    std::size_t num_draws() const { return draws_.size(); }
    double sigma(std::size_t r) const;
    const std::vector<std::string>& warnings() const { return warnings_; }
    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

    /// Single-draw prediction: mean on identity link, probability on
    /// probit/logistic links (strictly inside (0,1)).
    double predict_one(std::size_t r, std::span<const double> x) const;
    std::vector<double> predict(std::size_t r, const Matrix& x) const;
    /// Mean of predict over all retained draws.
    std::vector<double> posterior_mean(const Matrix& x) const;

    void save(std::ostream& out) const;
    static BartPosterior load(std::istream& in);

private:
    double sum_trees(std::size_t r, std::span<const double> x) const;

    Link link_;
    std::size_t width_;
    std::vector<bool> binary_features_;
    std::vector<EnsembleDraw> draws_;
    double offset_;   // link-scale offset (binary links)
    double y_center_; // identity-link destandardization
    double y_scale_;
    std::vector<std::string> warnings_;
};

BartPosterior fit_continuous(const Matrix& x, std::span<const double> y, const BartHyper& hyper,
                             const McmcConfig& mcmc, const std::vector<bool>& binary_features);

BartPosterior fit_binary(const Matrix& x, std::span<const int> y, Link link,
                         const BartHyper& hyper, const McmcConfig& mcmc,
                         const std::vector<bool>& binary_features);

// ---- sampler internals exposed for the unit suite ----

/// Conjugate posterior (mean, variance) of a leaf value with prior
/// N(0, sigma_mu2) given precision-weighted sufficient statistics
/// W = sum(w_i) and S = sum(w_i r_i).
std::pair<double, double> leaf_posterior(double w_sum, double s_sum, double sigma_mu2);

/// Log marginal likelihood contribution of one leaf (terms that are constant
/// across partitions of the same data are dropped).
double leaf_log_marginal(double w_sum, double s_sum, double sigma_mu2);

/// Mutable per-tree sampling state over a fixed design.
class TreeSampler {
public:
    TreeSampler(const Matrix& x, const CutpointTable& cuts, const BartHyper& hyper);

    Tree tree; // current structure (leaf values set by draw_leaves)

    /// Per-observation leaf slot for the current tree.
    const std::vector<int>& assignments() const { return assign_; }

    /// One Metropolis-Hastings structure update given partial residuals and
    /// per-observation precisions, followed by a conjugate leaf draw.
    void update(std::span<const double> resid, std::span<const double> weights, double sigma_mu2,
                Rng& rng);

    // individual moves, returning the log acceptance ratio actually used
    // (quiet NaN when the proposal was structurally invalid / auto-rejected)
    double try_grow(std::span<const double> resid, std::span<const double> weights,
                    double sigma_mu2, Rng& rng);
    double try_prune(std::span<const double> resid, std::span<const double> weights,
                     double sigma_mu2, Rng& rng);
    double try_change(std::span<const double> resid, std::span<const double> weights,
                      double sigma_mu2, Rng& rng);
    double try_swap(std::span<const double> resid, std::span<const double> weights,
                    double sigma_mu2, Rng& rng);

    void draw_leaves(std::span<const double> resid, std::span<const double> weights,
                     double sigma_mu2, Rng& rng);

    /// Writes the current tree's fitted value for each observation into out.
    void fitted(std::vector<double>& out) const;

private:
    struct LeafStats {
        double w = 0.0;
        double s = 0.0;
        std::size_t n = 0;
    };
    void refresh_assignments();
    LeafStats stats_for(int leaf_slot, std::span<const double> resid,
                        std::span<const double> weights) const;

    const Matrix& x_;
    const CutpointTable& cuts_;
    const BartHyper& hyper_;
    std::vector<int> assign_;
};

} // namespace bgf::bart
