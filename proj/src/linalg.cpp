#include "bgf/linalg.hpp"

#include <cmath>

#include "bgf/errors.hpp"

namespace bgf {

std::vector<double> cholesky_solve(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows;
    if (a.cols != n || b.size() != n) throw WidthMismatch("cholesky_solve: shape mismatch");
    // in-place lower Cholesky
    double diag_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag_scale += std::fabs(a.at(i, i));
    diag_scale = diag_scale > 0.0 ? diag_scale / static_cast<double>(n) : 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        double d = a.at(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a.at(j, k) * a.at(j, k);
        if (d <= 1e-12 * diag_scale) throw SingularDesign("cholesky_solve: matrix not positive definite");
        const double l = std::sqrt(d);
        a.at(j, j) = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a.at(i, k) * a.at(j, k);
            a.at(i, j) = s / l;
        }
    }
    // forward solve L z = b
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a.at(i, k) * b[k];
        b[i] = s / a.at(i, i);
    }
    // back solve L^T x = z
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a.at(k, ii) * b[k];
        b[ii] = s / a.at(ii, ii);
    }
    return b;
}

std::vector<double> solve_normal_equations(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows;
    if (a.cols != n || b.size() != n) throw WidthMismatch("solve_normal_equations: shape mismatch");
    double diag_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag_scale += std::fabs(a.at(i, i));
    diag_scale = diag_scale > 0.0 ? diag_scale / static_cast<double>(n) : 1.0;

    // lower Cholesky with pivot dropping: a dependent column contributes a
    // unit pivot, a zeroed row and a zeroed solution component
    std::vector<bool> dropped(n, false);
    std::size_t kept = 0;
    for (std::size_t j = 0; j < n; ++j) {
        double d = a.at(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a.at(j, k) * a.at(j, k);
        if (d <= 1e-10 * diag_scale) {
            dropped[j] = true;
            a.at(j, j) = 1.0;
            for (std::size_t k = 0; k < j; ++k) a.at(j, k) = 0.0;
            for (std::size_t i = j + 1; i < n; ++i) a.at(i, j) = 0.0;
            continue;
        }
        ++kept;
        const double l = std::sqrt(d);
        a.at(j, j) = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a.at(i, k) * a.at(j, k);
            a.at(i, j) = s / l;
        }
    }
    if (kept == 0) throw SingularDesign("solve_normal_equations: matrix has no usable pivot");

    for (std::size_t i = 0; i < n; ++i) {
        if (dropped[i]) {
            b[i] = 0.0;
            continue;
        }
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a.at(i, k) * b[k];
        b[i] = s / a.at(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        if (dropped[ii]) {
            b[ii] = 0.0;
            continue;
        }
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a.at(k, ii) * b[k];
        b[ii] = s / a.at(ii, ii);
    }
    return b;
}

std::vector<double> least_squares(const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows, p = x.cols;
    if (y.size() != n) throw WidthMismatch("least_squares: row count mismatch");
    Matrix xtx(p, p);
    std::vector<double> xty(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = x.row(i);
        for (std::size_t a = 0; a < p; ++a) {
            xty[a] += r[a] * y[i];
            for (std::size_t b = a; b < p; ++b) xtx.at(a, b) += r[a] * r[b];
        }
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) xtx.at(a, b) = xtx.at(b, a);
    return solve_normal_equations(std::move(xtx), std::move(xty));
}

} // namespace bgf
