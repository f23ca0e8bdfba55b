#include "leadlag/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>

#include "leadlag/errors.hpp"
#include "leadlag/stats.hpp"

namespace leadlag {

bool OhlcBar::valid() const {
  if (!(low > 0.0)) return false;
  if (!(low <= high)) return false;
  if (open < low || open > high) return false;
  if (close < low || close > high) return false;
  return std::isfinite(open) && std::isfinite(high) && std::isfinite(low) &&
         std::isfinite(close);
}

PriceSeries::PriceSeries(std::string ticker, std::vector<OhlcBar> bars)
    : ticker_(std::move(ticker)), bars_(std::move(bars)) {
  for (std::size_t i = 0; i < bars_.size(); ++i) {
    if (!bars_[i].valid()) {
      throw DataError(ticker_ + ": invalid OHLC bar at " + bars_[i].date.to_string());
    }
    if (i > 0 && !(bars_[i - 1].date < bars_[i].date)) {
      throw DataError(ticker_ + ": dates not strictly increasing at " +
                      bars_[i].date.to_string());
    }
  }
}

std::vector<double> PriceSeries::closes() const {
  std::vector<double> out;
  out.reserve(bars_.size());
  for (const auto& b : bars_) out.push_back(b.close);
  return out;
}

PriceSeries PriceSeries::slice(std::size_t first, std::size_t count) const {
  first = std::min(first, bars_.size());
  count = std::min(count, bars_.size() - first);
  return PriceSeries(ticker_, std::vector<OhlcBar>(bars_.begin() + static_cast<std::ptrdiff_t>(first),
                                                   bars_.begin() + static_cast<std::ptrdiff_t>(first + count)));
}

PriceSeries PriceSeries::filter_dates(std::optional<Date> from, std::optional<Date> to) const {
  std::vector<OhlcBar> kept;
  for (const auto& b : bars_) {
    if (from && b.date < *from) continue;
    if (to && *to < b.date) continue;
    kept.push_back(b);
  }
  return PriceSeries(ticker_, std::move(kept));
}

double ReturnSeries::at_bar(std::size_t t) const {
  const std::size_t l = static_cast<std::size_t>(lag);
  if (t < l || t - l >= values.size()) {
    throw ValidationError("return lookup outside series range");
  }
  return values[t - l];
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double parse_price(const std::string& field, std::size_t line_no) {
  const std::string t = trim(field);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw DataError("line " + std::to_string(line_no) + ": malformed price '" + field + "'");
  }
  return out;
}

void format_price(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
  (void)ec;
}

}  // namespace

PriceSeries parse_ohlc_csv(std::istream& source, std::string ticker) {
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(source, line)) throw DataError(ticker + ": empty input");
  ++line_no;
  const auto header = split_csv_line(line);
  static constexpr const char* kExpected[5] = {"date", "open", "high", "low", "close"};
  if (header.size() < 5) throw DataError(ticker + ": CSV header must start with date,open,high,low,close");
  for (std::size_t i = 0; i < 5; ++i) {
    if (lower(trim(header[i])) != kExpected[i]) {
      throw DataError(ticker + ": CSV header must start with date,open,high,low,close (got '" +
                      trim(header[i]) + "' in column " + std::to_string(i + 1) + ")");
    }
  }

  std::vector<OhlcBar> bars;
  while (std::getline(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < 5) {
      throw DataError("line " + std::to_string(line_no) + ": expected at least 5 fields, got " +
                      std::to_string(fields.size()));
    }
    OhlcBar bar;
    try {
      bar.date = Date::parse(trim(fields[0]));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    bar.open = parse_price(fields[1], line_no);
    bar.high = parse_price(fields[2], line_no);
    bar.low = parse_price(fields[3], line_no);
    bar.close = parse_price(fields[4], line_no);
    if (!bar.valid()) {
      throw DataError("line " + std::to_string(line_no) + ": OHLC invariant violated (" +
                      bar.date.to_string() + ")");
    }
    bars.push_back(bar);
  }
  if (bars.empty()) throw DataError(ticker + ": no data rows");

  std::stable_sort(bars.begin(), bars.end(),
                   [](const OhlcBar& a, const OhlcBar& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < bars.size(); ++i) {
    if (bars[i].date == bars[i - 1].date) {
      throw DataError(ticker + ": duplicate date " + bars[i].date.to_string());
    }
  }
  return PriceSeries(std::move(ticker), std::move(bars));
}

std::string to_csv(const PriceSeries& series) {
  std::string out = "date,open,high,low,close\n";
  for (const auto& b : series.bars()) {
    out += b.date.to_string();
    out.push_back(',');
    format_price(out, b.open);
    out.push_back(',');
    format_price(out, b.high);
    out.push_back(',');
    format_price(out, b.low);
    out.push_back(',');
    format_price(out, b.close);
    out.push_back('\n');
  }
  return out;
}

ReturnSeries log_returns(const PriceSeries& series) {
  if (series.size() < 2) throw DataError(series.ticker() + ": log returns need at least 2 bars");
  ReturnSeries out;
  out.ticker = series.ticker();
  out.kind = ReturnKind::Log;
  out.lag = 1;
  out.values.reserve(series.size() - 1);
  for (std::size_t i = 1; i < series.size(); ++i) {
    out.values.push_back(std::log(series[i].close / series[i - 1].close));
  }
  return out;
}

ReturnSeries pct_changes(const PriceSeries& series, int lag) {
  if (lag < 1) throw ValidationError("pct_changes lag must be >= 1");
  const auto l = static_cast<std::size_t>(lag);
  if (series.size() < l + 1) {
    throw DataError(series.ticker() + ": pct_changes needs at least lag+1 bars");
  }
  ReturnSeries out;
  out.ticker = series.ticker();
  out.kind = ReturnKind::Simple;
  out.lag = lag;
  out.values.reserve(series.size() - l);
  for (std::size_t i = l; i < series.size(); ++i) {
    out.values.push_back(series[i].close / series[i - l].close - 1.0);
  }
  return out;
}

AnomalyReport knn_anomaly_scores(const PriceSeries& series, std::size_t k) {
  const std::size_t n = series.size();
  if (k == 0) throw ValidationError("anomaly neighbour count k must be >= 1");
  if (k >= n) throw ValidationError("anomaly neighbour count k must be below the series length");

  const std::vector<double> closes = series.closes();
  AnomalyReport report;
  report.k = k;
  report.scores.resize(n);

  std::vector<std::pair<double, std::size_t>> dists;
  dists.reserve(n - 1);
  for (std::size_t t = 0; t < n; ++t) {
    dists.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (i == t) continue;
      dists.emplace_back(std::fabs(closes[t] - closes[i]), i);
    }
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k - 1), dists.end());
    // Sum the k nearest in index order for a reproducible summation order.
    std::sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k));
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += dists[j].first;
    report.scores[t] = sum / static_cast<double>(k);
  }

  report.score_mean = mean(report.scores);
  report.score_stddev = std_dev(report.scores, 0);
  report.threshold = report.score_mean + 3.0 * report.score_stddev;
  for (std::size_t t = 0; t < n; ++t) {
    if (report.scores[t] > report.threshold) report.flagged.push_back(t);
  }
  return report;
}

PriceSeries trim_after_anomaly(const PriceSeries& series, const AnomalyReport& report) {
  if (report.scores.size() != series.size()) {
    throw ValidationError("anomaly report is not aligned to the series");
  }
  if (report.flagged.empty()) return series;
  const std::size_t last = *std::max_element(report.flagged.begin(), report.flagged.end());
  return series.slice(last + 1, series.size());
}

std::vector<PriceSeries> align_common_dates(const std::vector<PriceSeries>& series_set) {
  if (series_set.empty()) throw ValidationError("align_common_dates: no series given");
  std::map<Date, std::size_t> counts;
  for (const auto& s : series_set) {
    for (const auto& b : s.bars()) ++counts[b.date];
  }
  std::vector<PriceSeries> out;
  out.reserve(series_set.size());
  bool any = false;
  for (const auto& s : series_set) {
    std::vector<OhlcBar> kept;
    for (const auto& b : s.bars()) {
      if (counts[b.date] == series_set.size()) kept.push_back(b);
    }
    any = any || !kept.empty();
    out.emplace_back(s.ticker(), std::move(kept));
  }
  if (!any || out.front().empty()) throw DataError("empty intersection of dates across tickers");
  return out;
}

}  // namespace leadlag
