#pragma once

#include <cmath>

#include "bgf/rng.hpp"

namespace bgf {

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline double logistic_cdf(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

inline double logit(double p) {
    return std::log(p) - std::log1p(-p);
}

/// Inverse standard normal CDF (Acklam's rational approximation, refined by
/// one Halley step; absolute error far below 1e-9 over (0,1)).
double normal_quantile(double p);

/// Sample from N(mu, 1) truncated to (lower, inf). Robert (1995) style:
/// naive rejection near the mode, translated-exponential rejection in the tail.
double rtnorm_lower(double mu, double lower, Rng& rng);

/// Sample from N(mu, 1) truncated to (-inf, upper).
double rtnorm_upper(double mu, double upper, Rng& rng);

/// Sample from the Polya-Gamma PG(1, z) distribution (Devroye-type exact
/// sampler of Polson, Scott & Windle). E[PG(1,z)] = tanh(z/2) / (2z).
double sample_polya_gamma(double z, Rng& rng);

/// 0.10 quantile of the chi-squared distribution with 3 degrees of freedom,
/// used to calibrate the residual-variance prior.
inline constexpr double kChiSq3Quantile10 = 0.5843744125611432;

} // namespace bgf
