#pragma once

#include <cstddef>
#include <span>

namespace leadlag {

double mean(std::span<const double> v);

/// Variance with `ddof` delta degrees of freedom (0 = population, 1 = sample).
double variance(std::span<const double> v, int ddof = 0);

double std_dev(std::span<const double> v, int ddof = 0);

/// Pearson correlation coefficient, clamped to [-1, 1].
/// Throws DataError when either input has zero variance.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

/// Regularised incomplete beta function I_x(a, b), continued-fraction
/// evaluation (modified Lentz). Relative accuracy ~1e-13 for moderate a, b.
double regularized_incomplete_beta(double a, double b, double x);

/// Survival function P(F > f) of the F(d1, d2) distribution.
double f_distribution_sf(double f, double d1, double d2);

/// Two-sided p-value of a Student-t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

}  // namespace leadlag
