#pragma once

#include <span>
#include <vector>

#include "bgf/linalg.hpp"

namespace bgf {

struct GlmFit {
    std::vector<double> coef; // intercept first
    int iterations = 0;
    bool converged = false;

    double linear_predictor(std::span<const double> x) const;
    /// Fitted probability for a logistic fit.
    double predict_prob(std::span<const double> x) const;
};

/// Logistic regression by iteratively reweighted least squares. An intercept
/// column is prepended internally. With ridge = 0 throws SeparationDetected
/// when the coefficient norm diverges; a positive ridge penalizes the
/// non-intercept coefficients, which keeps perfectly predictive columns
/// (e.g. absorbing states) at a finite optimum instead. Throws EmptyData on
/// an empty design.
GlmFit fit_logistic(const Matrix& x, std::span<const int> y, double tol = 1e-8,
                    int max_iter = 100, double ridge = 0.0);

/// Ordinary least squares with an internal intercept column. residual_sd uses
/// the n - p denominator.
struct LinearFit {
    std::vector<double> coef;
    double residual_sd = 0.0;

    double predict(std::span<const double> x) const;
};

LinearFit fit_linear(const Matrix& x, std::span<const double> y);

} // namespace bgf
