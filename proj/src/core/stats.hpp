#pragma once

#include <cstddef>
#include <span>

namespace sgarch {

/// Upper tail 1 - F(x) of the chi-square distribution with df degrees of freedom.
double chi2_sf(double x, int df);

/// Upper alpha-quantile of chi-square(df).
double chi2_upper_quantile(double alpha, int df);

/// 2 * (1 - Phi(|z|)).
double normal_two_sided_p(double z);

double mean(std::span<const double> x);

/// Sample standard deviation with divisor n - 1.
double stddev(std::span<const double> x);

/// Kolmogorov-Smirnov statistic sup |F_n - F| against Uniform(0, 1).
double ks_uniform_statistic(std::span<const double> x);

/// Asymptotic p-value of the one-sample KS statistic for sample size n.
double ks_pvalue(double statistic, std::size_t n);

}  // namespace sgarch
