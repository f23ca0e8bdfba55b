#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "leadlag/market_data.hpp"

namespace leadlag {

enum class VolEstimator { Parkinson, GarmanKlass, RogersSatchell, YangZhang };

constexpr std::array<VolEstimator, 4> kAllEstimators = {
    VolEstimator::Parkinson, VolEstimator::GarmanKlass,
    VolEstimator::RogersSatchell, VolEstimator::YangZhang};

std::string to_string(VolEstimator e);

/// Rolling per-period volatility (sqrt of the estimator variance), stride 1.
/// values[i] is the window ending at bar index first_end_index + i.
struct VolSeries {
  std::string ticker;
  VolEstimator estimator = VolEstimator::Parkinson;
  std::size_t window = 0;
  std::size_t first_end_index = 0;
  std::vector<double> values;
};

/// sigma^2 = (1 / (4 N ln 2)) * sum (ln(h/l))^2 over the window.
VolSeries parkinson(const PriceSeries& series, std::size_t window);

/// sigma^2 = (1/N) * sum [ 0.5 (ln(h/l))^2 - (2 ln 2 - 1)(ln(c/o))^2 ];
/// negative composites floored at 0 before the square root.
VolSeries garman_klass(const PriceSeries& series, std::size_t window);

/// sigma^2 = (1/N) * sum [ ln(h/c) ln(h/o) + ln(l/c) ln(l/o) ].
VolSeries rogers_satchell(const PriceSeries& series, std::size_t window);

/// sigma^2 = sigma_o^2 + k sigma_c^2 + (1-k) sigma_rs^2 with
/// k = 0.34 / (1.34 + (N+1)/(N-1)). The overnight term consumes one extra
/// leading bar, so the first window ends at bar index `window` and the
/// series is one value shorter than the other estimators'. Requires N >= 2.
VolSeries yang_zhang(const PriceSeries& series, std::size_t window);

VolSeries compute_vol_series(const PriceSeries& series, VolEstimator e, std::size_t window);

/// The Yang-Zhang weight k for window length n.
double yang_zhang_weight(std::size_t n);

/// Per-ticker aggregate of all four estimators over a common date range.
struct VolatilityProfile {
  std::string ticker;
  std::array<double, 4> means{};     // indexed by kAllEstimators order
  std::array<VolSeries, 4> series{};

  double mean_of(VolEstimator e) const;
};

/// Aligns the series on their common dates and computes one profile per
/// ticker (sorted by ticker). Throws DataError when the date intersection
/// is empty or shorter than the window needs.
std::vector<VolatilityProfile> build_profiles(const std::vector<PriceSeries>& series_set,
                                              std::size_t window);

/// Reporting-time annualisation (per-period sigma times sqrt(periods/year)).
double annualize(double per_period_sigma, double periods_per_year = 252.0);

}  // namespace leadlag
