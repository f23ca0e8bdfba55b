#include "leadlag/volatility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "leadlag/errors.hpp"
#include "leadlag/stats.hpp"

namespace leadlag {

namespace {

constexpr double kLn2 = std::numbers::ln2;

void check_window(const PriceSeries& series, std::size_t window) {
  if (window < 1) throw ValidationError("volatility window must be >= 1");
  if (series.size() < window) {
    throw DataError(series.ticker() + ": window of " + std::to_string(window) +
                    " longer than the available " + std::to_string(series.size()) + " bars");
  }
}

// Rolling mean of a per-bar term, direct summation per window so results are
// independent of any prefix-sum rearrangement.
template <typename TermFn>
VolSeries rolling_estimator(const PriceSeries& series, VolEstimator est, std::size_t window,
                            double scale, TermFn term) {
  VolSeries out;
  out.ticker = series.ticker();
  out.estimator = est;
  out.window = window;
  out.first_end_index = window - 1;
  const std::size_t n = series.size();
  out.values.reserve(n - window + 1);
  for (std::size_t end = window - 1; end < n; ++end) {
    double sum = 0.0;
    for (std::size_t t = end + 1 - window; t <= end; ++t) sum += term(series[t]);
    const double var = sum * scale / static_cast<double>(window);
    out.values.push_back(std::sqrt(std::max(var, 0.0)));
  }
  return out;
}

}  // namespace

std::string to_string(VolEstimator e) {
  switch (e) {
    case VolEstimator::Parkinson: return "parkinson";
    case VolEstimator::GarmanKlass: return "garman_klass";
    case VolEstimator::RogersSatchell: return "rogers_satchell";
    case VolEstimator::YangZhang: return "yang_zhang";
  }
  return "unknown";
}

VolSeries parkinson(const PriceSeries& series, std::size_t window) {
  check_window(series, window);
  return rolling_estimator(series, VolEstimator::Parkinson, window, 1.0 / (4.0 * kLn2),
                           [](const OhlcBar& b) {
                             const double r = std::log(b.high / b.low);
                             return r * r;
                           });
}

VolSeries garman_klass(const PriceSeries& series, std::size_t window) {
  check_window(series, window);
  return rolling_estimator(series, VolEstimator::GarmanKlass, window, 1.0,
                           [](const OhlcBar& b) {
                             const double hl = std::log(b.high / b.low);
                             const double co = std::log(b.close / b.open);
                             return 0.5 * hl * hl - (2.0 * kLn2 - 1.0) * co * co;
                           });
}

VolSeries rogers_satchell(const PriceSeries& series, std::size_t window) {
  check_window(series, window);
  return rolling_estimator(series, VolEstimator::RogersSatchell, window, 1.0,
                           [](const OhlcBar& b) {
                             return std::log(b.high / b.close) * std::log(b.high / b.open) +
                                    std::log(b.low / b.close) * std::log(b.low / b.open);
                           });
}

double yang_zhang_weight(std::size_t n) {
  if (n < 2) throw ValidationError("yang_zhang weight needs window >= 2");
  const double nd = static_cast<double>(n);
  return 0.34 / (1.34 + (nd + 1.0) / (nd - 1.0));
}

VolSeries yang_zhang(const PriceSeries& series, std::size_t window) {
  if (window < 2) throw ValidationError("yang_zhang: window must be >= 2");
  // One extra leading bar supplies the previous close for the first
  // overnight return.
  if (series.size() < window + 1) {
    throw DataError(series.ticker() + ": yang_zhang window of " + std::to_string(window) +
                    " needs " + std::to_string(window + 1) + " bars, have " +
                    std::to_string(series.size()));
  }

  VolSeries out;
  out.ticker = series.ticker();
  out.estimator = VolEstimator::YangZhang;
  out.window = window;
  out.first_end_index = window;
  const std::size_t n = series.size();
  const double k = yang_zhang_weight(window);
  out.values.reserve(n - window);

  std::vector<double> overnight(window), open_close(window);
  for (std::size_t end = window; end < n; ++end) {
    const std::size_t start = end + 1 - window;
    double rs_sum = 0.0;
    for (std::size_t t = start; t <= end; ++t) {
      const OhlcBar& b = series[t];
      overnight[t - start] = std::log(b.open / series[t - 1].close);
      open_close[t - start] = std::log(b.close / b.open);
      rs_sum += std::log(b.high / b.close) * std::log(b.high / b.open) +
                std::log(b.low / b.close) * std::log(b.low / b.open);
    }
    const double var_o = variance(overnight, 1);
    const double var_c = variance(open_close, 1);
    const double var_rs = rs_sum / static_cast<double>(window);
    const double var = var_o + k * var_c + (1.0 - k) * var_rs;
    out.values.push_back(std::sqrt(std::max(var, 0.0)));
  }
  return out;
}

VolSeries compute_vol_series(const PriceSeries& series, VolEstimator e, std::size_t window) {
  switch (e) {
    case VolEstimator::Parkinson: return parkinson(series, window);
    case VolEstimator::GarmanKlass: return garman_klass(series, window);
    case VolEstimator::RogersSatchell: return rogers_satchell(series, window);
    case VolEstimator::YangZhang: return yang_zhang(series, window);
  }
  throw ValidationError("unknown estimator");
}

double VolatilityProfile::mean_of(VolEstimator e) const {
  return means[static_cast<std::size_t>(e)];
}

std::vector<VolatilityProfile> build_profiles(const std::vector<PriceSeries>& series_set,
                                              std::size_t window) {
  const std::vector<PriceSeries> aligned = align_common_dates(series_set);
  std::vector<VolatilityProfile> profiles;
  profiles.reserve(aligned.size());
  for (const auto& s : aligned) {
    VolatilityProfile p;
    p.ticker = s.ticker();
    for (std::size_t i = 0; i < kAllEstimators.size(); ++i) {
      p.series[i] = compute_vol_series(s, kAllEstimators[i], window);
      p.means[i] = mean(p.series[i].values);
    }
    profiles.push_back(std::move(p));
  }
  std::sort(profiles.begin(), profiles.end(),
            [](const VolatilityProfile& a, const VolatilityProfile& b) { return a.ticker < b.ticker; });
  return profiles;
}

double annualize(double per_period_sigma, double periods_per_year) {
  return per_period_sigma * std::sqrt(periods_per_year);
}

}  // namespace leadlag
