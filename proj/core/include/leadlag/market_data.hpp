#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "leadlag/date.hpp"

namespace leadlag {

/// One trading day of OHLC prices.
struct OhlcBar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;

  /// low > 0, low <= high, open and close within [low, high].
  bool valid() const;
};

/// Ordered, validated OHLC bars for one ticker. Immutable after construction;
/// safe to share across threads.
class PriceSeries {
 public:
  PriceSeries() = default;

  /// Validates bar invariants, strictly increasing dates, no duplicates.
  /// Throws DataError with the offending bar's date otherwise.
  PriceSeries(std::string ticker, std::vector<OhlcBar> bars);

  const std::string& ticker() const { return ticker_; }
  const std::vector<OhlcBar>& bars() const { return bars_; }
  std::size_t size() const { return bars_.size(); }
  bool empty() const { return bars_.empty(); }
  const OhlcBar& operator[](std::size_t i) const { return bars_[i]; }

  std::vector<double> closes() const;

  /// Sub-range [first, first + count).
  PriceSeries slice(std::size_t first, std::size_t count) const;

  /// Bars with from <= date <= to (either bound may be absent).
  PriceSeries filter_dates(std::optional<Date> from, std::optional<Date> to) const;

 private:
  std::string ticker_;
  std::vector<OhlcBar> bars_;
};

enum class ReturnKind { Log, Simple };

/// Price changes aligned to bars: values[i] is the change ending at bar
/// index i + lag of the originating series.
struct ReturnSeries {
  std::string ticker;
  ReturnKind kind = ReturnKind::Log;
  int lag = 1;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }

  /// The change ending at bar t; valid for lag <= t <= lag + size() - 1.
  double at_bar(std::size_t t) const;
};

/// Per-bar KNN anomaly scores with the mu + 3*sigma flagging threshold.
struct AnomalyReport {
  std::vector<double> scores;       // aligned to bars
  double score_mean = 0.0;          // mu
  double score_stddev = 0.0;        // sigma (population)
  double threshold = 0.0;           // mu + 3*sigma
  std::vector<std::size_t> flagged; // indices with score > threshold
  std::size_t k = 0;
};

/// Parses `date,open,high,low,close` CSV (extra columns ignored, ISO dates,
/// '.' decimal point). Rows may arrive unsorted; output is sorted by date.
/// Throws DataError naming the offending line.
PriceSeries parse_ohlc_csv(std::istream& source, std::string ticker);

/// Serialises a PriceSeries back to the CSV format accepted by
/// parse_ohlc_csv; prices round-trip exactly.
std::string to_csv(const PriceSeries& series);

/// values[i] = ln(close[i+1] / close[i]); needs >= 2 bars.
ReturnSeries log_returns(const PriceSeries& series);

/// values[i] = close[i+lag] / close[i] - 1; needs >= lag + 1 bars.
ReturnSeries pct_changes(const PriceSeries& series, int lag);

/// Anomaly score per bar: average absolute close distance to the k nearest
/// other closes (self excluded, distance ties broken by lower index).
/// Requires 1 <= k < series length.
AnomalyReport knn_anomaly_scores(const PriceSeries& series, std::size_t k);

/// Suffix of `series` strictly after the last flagged index; the whole
/// series when nothing is flagged. The result may be empty.
PriceSeries trim_after_anomaly(const PriceSeries& series, const AnomalyReport& report);

/// Restricts every series to the dates present in all of them (order
/// preserved, ascending). Throws DataError when the intersection is empty.
std::vector<PriceSeries> align_common_dates(const std::vector<PriceSeries>& series_set);

}  // namespace leadlag
