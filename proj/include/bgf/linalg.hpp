#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bgf {

/// Dense row-major matrix of doubles. Minimal on purpose: the numerical
/// kernels in this project only need storage, indexing and a Cholesky solve.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }
    std::span<double> row(std::size_t r) {
        return {data.data() + r * cols, cols};
    }
};

/// Solves the symmetric positive definite system A x = b in place via
/// Cholesky. Throws SingularDesign if A is not (numerically) SPD.
std::vector<double> cholesky_solve(Matrix a, std::vector<double> b);

/// Solves the normal-equation system A x = b where A may be rank deficient.
/// Dependent pivots are dropped and their solution components pinned to 0,
/// matching the aliased-coefficient convention of standard regression
/// software. Throws SingularDesign only if every pivot collapses.
std::vector<double> solve_normal_equations(Matrix a, std::vector<double> b);

/// Least squares fit of y on X (no intercept column added).
/// Returns coefficients; aliased (linearly dependent) columns get 0.
std::vector<double> least_squares(const Matrix& x, std::span<const double> y);

} // namespace bgf
