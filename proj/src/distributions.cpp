#include "bgf/distributions.hpp"

#include <cmath>
#include <limits>

namespace bgf {

double normal_quantile(double p) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();

    // Acklam's rational approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Halley refinement step
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

double rtnorm_lower(double mu, double lower, Rng& rng) {
    const double a = lower - mu; // truncation on the standard scale
    if (a < 0.45) {
        for (;;) {
            const double z = rng.normal();
            if (z > a) return mu + z;
        }
    }
    // translated-exponential rejection for far tails
    const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
        const double z = a + rng.exponential() / alpha;
        const double d = z - alpha;
        if (rng.uniform() <= std::exp(-0.5 * d * d)) return mu + z;
    }
}

double rtnorm_upper(double mu, double upper, Rng& rng) {
    return -rtnorm_lower(-mu, -upper, rng);
}

namespace {

constexpr double kPgTrunc = 0.64;

// piecewise coefficients a_n(x) of the J*(1, 0) density series
double pg_a_coef(int n, double x) {
    const double h = n + 0.5;
    if (x <= kPgTrunc) {
        return M_PI * h * std::pow(2.0 / (M_PI * x), 1.5) * std::exp(-2.0 * h * h / x);
    }
    return M_PI * h * std::exp(-0.5 * h * h * M_PI * M_PI * x);
}

// inverse-Gaussian CDF with parameters (mu, lambda = 1)
double pg_igauss_cdf(double x, double mu) {
    const double z = 1.0 / mu;
    const double b = std::sqrt(1.0 / x) * (x * z - 1.0);
    const double a = std::sqrt(1.0 / x) * (x * z + 1.0);
    return normal_cdf(b) + std::exp(2.0 * z + std::log(normal_cdf(-a)));
}

// inverse-Gaussian(mu = 1/z, lambda = 1) truncated to (0, kPgTrunc]
double pg_rtigauss(double z, Rng& rng) {
    z = std::fabs(z);
    const double t = kPgTrunc;
    double x = t + 1.0;
    if (z < 1.0 / t) { // mu > t: chi-squared style rejection
        for (;;) {
            double e1, e2;
            do {
                e1 = rng.exponential();
                e2 = rng.exponential();
            } while (e1 * e1 > 2.0 * e2 / t);
            x = t / ((1.0 + t * e1) * (1.0 + t * e1));
            if (rng.uniform() <= std::exp(-0.5 * z * z * x)) return x;
        }
    }
    const double mu = 1.0 / z;
    while (x > t) {
        double y = rng.normal();
        y = y * y;
        const double mu_y = mu * y;
        x = mu + 0.5 * mu * mu_y - 0.5 * mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
        if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
    return x;
}

} // namespace

double sample_polya_gamma(double z, Rng& rng) {
    z = 0.5 * std::fabs(z);
    const double t = kPgTrunc;
    const double fz = 0.125 * M_PI * M_PI + 0.5 * z * z;
    // mixture weights of the exponential right piece and inverse-Gaussian left piece
    const double p = (0.5 * M_PI / fz) * std::exp(-fz * t);
    const double q = 2.0 * std::exp(-z) * pg_igauss_cdf(t, z > 0.0 ? 1.0 / z : std::numeric_limits<double>::infinity());
    for (;;) {
        double x;
        if (rng.uniform() < p / (p + q)) {
            x = t + rng.exponential() / fz;
        } else {
            x = pg_rtigauss(z, rng);
        }
        // alternating series accept/reject
        double s = pg_a_coef(0, x);
        const double y = rng.uniform() * s;
        int n = 0;
        for (;;) {
            ++n;
            if (n % 2 == 1) {
                s -= pg_a_coef(n, x);
                if (y <= s) return 0.25 * x;
            } else {
                s += pg_a_coef(n, x);
                if (y > s) break;
            }
        }
    }
}

} // namespace bgf
