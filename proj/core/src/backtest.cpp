#include "leadlag/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "leadlag/errors.hpp"
#include "leadlag/stats.hpp"

namespace leadlag {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_capital(double capital, double commission) {
  if (commission < 0.0) throw ValidationError("commission must be >= 0");
  if (!(capital > commission)) {
    throw ValidationError("capital insufficient for one commission round-trip");
  }
}

// Single open position plus cash; quantity is signed (+long, -short).
struct Book {
  double cash = 0.0;
  double position = 0.0;
  TradeDirection direction = TradeDirection::Long;
  double entry_price = 0.0;
  Date entry_date;

  bool flat() const { return position == 0.0; }
  double equity(double price) const { return cash + position * price; }

  // Sizes the position from the full current cash minus one commission.
  bool open(TradeDirection dir, double price, Date date, double commission) {
    const double allocatable = cash - commission;
    if (!(allocatable > 0.0)) return false;
    const double qty = allocatable / price;
    if (dir == TradeDirection::Long) {
      cash -= commission + qty * price;  // -> 0
      position = qty;
    } else {
      cash += qty * price - commission;
      position = -qty;
    }
    direction = dir;
    entry_price = price;
    entry_date = date;
    return true;
  }

  TradeRecord close(double price, Date date, double commission) {
    TradeRecord trade;
    trade.direction = direction;
    trade.entry_date = entry_date;
    trade.exit_date = date;
    trade.entry_price = entry_price;
    trade.exit_price = price;
    trade.quantity = std::fabs(position);
    trade.commission = 2.0 * commission;
    const double sign = direction == TradeDirection::Long ? 1.0 : -1.0;
    trade.pnl = sign * trade.quantity * (price - entry_price) - trade.commission;
    cash += position * price - commission;
    position = 0.0;
    return trade;
  }
};

}  // namespace

std::string to_string(TradeDirection d) {
  return d == TradeDirection::Long ? "long" : "short";
}

BacktestResult buy_and_hold(const PriceSeries& series, double capital, double commission,
                            double risk_free_rate, double periods_per_year) {
  if (series.size() < 2) throw DataError("buy_and_hold: need at least 2 bars");
  check_capital(capital, commission);

  BacktestResult res;
  res.strategy = series.ticker() + " B&H";
  res.config = BacktestConfig{capital, commission, 0, risk_free_rate, periods_per_year};

  Book book;
  book.cash = capital;
  book.open(TradeDirection::Long, series[0].close, series[0].date, commission);

  res.curve.dates.push_back(series[0].date);
  res.curve.values.push_back(capital);  // marked before costs at the start
  const std::size_t n = series.size();
  for (std::size_t t = 1; t + 1 < n; ++t) {
    res.curve.dates.push_back(series[t].date);
    res.curve.values.push_back(book.equity(series[t].close));
  }
  res.trades.push_back(book.close(series[n - 1].close, series[n - 1].date, commission));
  res.curve.dates.push_back(series[n - 1].date);
  res.curve.values.push_back(book.cash);

  res.metrics = compute_metrics(res.curve, res.trades, risk_free_rate, periods_per_year);
  return res;
}

BacktestResult lead_lag_trend_follow(const PriceSeries& leader, const PriceSeries& target,
                                     int lag, const BacktestConfig& config,
                                     std::size_t start_index) {
  if (lag < 1) throw ValidationError("lead_lag_trend_follow: lag must be >= 1");
  if (config.ma_window < 1) throw ValidationError("lead_lag_trend_follow: ma_window must be >= 1");
  check_capital(config.capital, config.commission);
  if (leader.size() != target.size()) {
    throw ValidationError("lead_lag_trend_follow: leader and target are not aligned");
  }
  const std::size_t n = target.size();
  const std::size_t d = static_cast<std::size_t>(lag);
  const std::size_t w = static_cast<std::size_t>(config.ma_window);

  // Signal at bar t compares the leader's close at t-d with the mean of the
  // w closes before it, so it needs t >= d + w.
  const std::size_t first_signal = std::max(start_index, d + w);
  if (first_signal + 1 >= n) {
    throw DataError("lead_lag_trend_follow: lag and warm-up exceed the available history");
  }
  auto signal_at = [&](std::size_t t) {
    const std::size_t s = t - d;
    double ma = 0.0;
    for (std::size_t i = s - w; i < s; ++i) ma += leader[i].close;
    ma /= static_cast<double>(w);
    return leader[s].close > ma ? TradeDirection::Long : TradeDirection::Short;
  };

  BacktestResult res;
  res.strategy = leader.ticker() + "->" + target.ticker();
  res.config = config;
  res.lag = lag;

  Book book;
  book.cash = config.capital;

  for (std::size_t t = first_signal; t < n; ++t) {
    if (t > first_signal) {
      const TradeDirection desired = signal_at(t - 1);  // fills one bar after the signal
      const double price = target[t].close;
      if (t + 1 == n) {
        if (!book.flat()) res.trades.push_back(book.close(price, target[t].date, config.commission));
      } else if (book.flat()) {
        if (!book.open(desired, price, target[t].date, config.commission)) {
          res.ruined = true;
        }
      } else if (book.direction != desired) {
        res.trades.push_back(book.close(price, target[t].date, config.commission));
        if (!book.open(desired, price, target[t].date, config.commission)) {
          res.ruined = true;
        }
      }
    }
    const double equity = book.equity(target[t].close);
    res.curve.dates.push_back(target[t].date);
    res.curve.values.push_back(equity);
    if (equity <= 0.0 || res.ruined) {
      res.ruined = true;
      break;
    }
  }

  res.metrics = compute_metrics(res.curve, res.trades, config.risk_free_rate,
                                config.periods_per_year);
  return res;
}

Metrics compute_metrics(const EquityCurve& curve, const std::vector<TradeRecord>& trades,
                        double risk_free_rate, double periods_per_year) {
  if (curve.size() < 2) throw ValidationError("compute_metrics: curve needs at least 2 points");

  Metrics m;
  m.risk_free_rate = risk_free_rate;
  m.trade_count = trades.size();
  m.total_return = curve.values.back() / curve.values.front() - 1.0;

  double peak = curve.values.front();
  double mdd = 0.0;
  for (double v : curve.values) {
    peak = std::max(peak, v);
    if (peak > 0.0) mdd = std::max(mdd, (peak - v) / peak);
  }
  m.max_drawdown = mdd;

  std::vector<double> returns;
  returns.reserve(curve.size() - 1);
  for (std::size_t t = 1; t < curve.size(); ++t) {
    returns.push_back(curve.values[t] / curve.values[t - 1] - 1.0);
  }
  const double rf_per_period = risk_free_rate / periods_per_year;
  const double mean_excess = mean(returns) - rf_per_period;
  const double ann = std::sqrt(periods_per_year);

  const double vol = returns.size() >= 2 ? std_dev(returns, 1) : 0.0;
  if (vol > 0.0) {
    m.sharpe = mean_excess / vol * ann;
    m.sharpe_defined = true;
  } else {
    m.sharpe = kNaN;
  }

  std::vector<double> losses;
  for (double r : returns) {
    if (r < 0.0) losses.push_back(r);
  }
  const double downside = losses.empty() ? 0.0 : std_dev(losses, 0);
  if (downside > 0.0) {
    m.sortino = mean_excess / downside * ann;
    m.sortino_defined = true;
  } else {
    m.sortino = kNaN;
  }

  if (mdd > 0.0) {
    const double years = static_cast<double>(returns.size()) / periods_per_year;
    const double annual_return = std::pow(1.0 + m.total_return, 1.0 / years) - 1.0;
    m.calmar = annual_return / mdd;
    m.calmar_defined = true;
  } else {
    m.calmar = kNaN;
  }

  if (!trades.empty()) {
    std::size_t wins = 0;
    for (const auto& t : trades) {
      if (t.pnl > 0.0) ++wins;
    }
    m.win_rate = static_cast<double>(wins) / static_cast<double>(trades.size());
  }
  return m;
}

PortfolioSummary portfolio_aggregate(const std::vector<BacktestResult>& results) {
  if (results.empty()) throw ValidationError("portfolio_aggregate: empty input");

  std::map<Date, double> combined;
  for (const auto& r : results) {
    for (const auto& d : r.curve.dates) combined[d] = 0.0;
  }
  for (const auto& r : results) {
    const auto& dates = r.curve.dates;
    const auto& values = r.curve.values;
    std::size_t i = 0;
    for (auto& [date, total] : combined) {
      while (i + 1 < dates.size() && dates[i + 1] <= date) ++i;
      // Before the strategy starts its capital sits in cash; after it ends
      // the last value carries forward.
      const double v = date < dates.front() ? values.front() : values[i];
      total += v;
    }
    (void)values;
  }

  PortfolioSummary summary;
  for (const auto& [date, total] : combined) {
    summary.combined.dates.push_back(date);
    summary.combined.values.push_back(total);
  }
  std::vector<TradeRecord> all_trades;
  for (const auto& r : results) {
    all_trades.insert(all_trades.end(), r.trades.begin(), r.trades.end());
  }
  summary.total_profit = summary.combined.values.back() - summary.combined.values.front();
  summary.total_return = summary.combined.values.back() / summary.combined.values.front() - 1.0;
  summary.metrics = compute_metrics(summary.combined, all_trades,
                                    results.front().config.risk_free_rate,
                                    results.front().config.periods_per_year);
  return summary;
}

}  // namespace leadlag
