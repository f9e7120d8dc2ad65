#include "bgf/glm.hpp"

#include <cmath>

#include "bgf/distributions.hpp"
#include "bgf/errors.hpp"

namespace bgf {

namespace {
Matrix with_intercept(const Matrix& x) {
    Matrix xa(x.rows, x.cols + 1, 1.0);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) xa.at(i, j + 1) = x.at(i, j);
    return xa;
}
} // namespace

double GlmFit::linear_predictor(std::span<const double> x) const {
    if (x.size() + 1 != coef.size())
        throw WidthMismatch("GlmFit: feature width mismatch");
    double eta = coef[0];
    for (std::size_t j = 0; j < x.size(); ++j) eta += coef[j + 1] * x[j];
    return eta;
}

double GlmFit::predict_prob(std::span<const double> x) const {
    return logistic_cdf(linear_predictor(x));
}

GlmFit fit_logistic(const Matrix& x, std::span<const int> y, double tol, int max_iter,
                    double ridge) {
    if (x.rows == 0) throw EmptyData("fit_logistic: no observations");
    if (y.size() != x.rows) throw WidthMismatch("fit_logistic: response length mismatch");
    const Matrix xa = with_intercept(x);
    const std::size_t n = xa.rows, p = xa.cols;

    GlmFit fit;
    fit.coef.assign(p, 0.0);

    for (int iter = 0; iter < max_iter; ++iter) {
        // one Newton step via the weighted normal equations
        Matrix xtwx(p, p);
        std::vector<double> xtz(p, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = xa.row(i);
            double eta = 0.0;
            for (std::size_t j = 0; j < p; ++j) eta += row[j] * fit.coef[j];
            const double mu = logistic_cdf(eta);
            const double w = mu * (1.0 - mu);
            const double r = static_cast<double>(y[i]) - mu;
            for (std::size_t j = 0; j < p; ++j) {
                xtz[j] += row[j] * (w * eta + r);
                for (std::size_t k = j; k < p; ++k) xtwx.at(j, k) += w * row[j] * row[k];
            }
        }
        for (std::size_t j = 1; j < p; ++j) xtwx.at(j, j) += ridge; // intercept unpenalized
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k < j; ++k) xtwx.at(j, k) = xtwx.at(k, j);

        const std::vector<double> next = solve_normal_equations(std::move(xtwx), std::move(xtz));

        double norm2 = 0.0, delta2 = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            norm2 += next[j] * next[j];
            const double d = next[j] - fit.coef[j];
            delta2 += d * d;
        }
        fit.coef = next;
        fit.iterations = iter + 1;
        if (ridge == 0.0 && std::sqrt(norm2) > 1e3)
            throw SeparationDetected("fit_logistic: coefficients diverged");
        if (std::sqrt(delta2) < tol * (1.0 + std::sqrt(norm2))) {
            fit.converged = true;
            return fit;
        }
    }
    return fit;
}

double LinearFit::predict(std::span<const double> x) const {
    if (x.size() + 1 != coef.size())
        throw WidthMismatch("LinearFit: feature width mismatch");
    double eta = coef[0];
    for (std::size_t j = 0; j < x.size(); ++j) eta += coef[j + 1] * x[j];
    return eta;
}

LinearFit fit_linear(const Matrix& x, std::span<const double> y) {
    if (x.rows == 0) throw EmptyData("fit_linear: no observations");
    if (y.size() != x.rows) throw WidthMismatch("fit_linear: response length mismatch");
    const Matrix xa = with_intercept(x);

    LinearFit fit;
    fit.coef = least_squares(xa, y);
    double rss = 0.0;
    for (std::size_t i = 0; i < xa.rows; ++i) {
        const auto row = xa.row(i);
        double eta = 0.0;
        for (std::size_t j = 0; j < xa.cols; ++j) eta += row[j] * fit.coef[j];
        rss += (y[i] - eta) * (y[i] - eta);
    }
    const std::size_t dof = xa.rows > xa.cols ? xa.rows - xa.cols : 1;
    fit.residual_sd = std::sqrt(rss / static_cast<double>(dof));
    return fit;
}

} // namespace bgf
