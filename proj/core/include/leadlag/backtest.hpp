#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "leadlag/market_data.hpp"

namespace leadlag {

enum class TradeDirection { Long, Short };

std::string to_string(TradeDirection d);

/// One round trip. Commission is the total paid on both sides; PnL already
/// includes it: pnl = sign * quantity * (exit - entry) - commission.
struct TradeRecord {
  TradeDirection direction = TradeDirection::Long;
  Date entry_date;
  Date exit_date;
  double entry_price = 0.0;
  double exit_price = 0.0;
  double quantity = 0.0;  // fractional shares
  double commission = 0.0;
  double pnl = 0.0;
};

/// Portfolio value marked to market at each close. values[0] is the initial
/// capital at the strategy's first bar.
struct EquityCurve {
  std::vector<Date> dates;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// Performance block. Ratios that are undefined on the given curve (zero
/// volatility, no losing days, no drawdown) carry NaN and a false flag.
struct Metrics {
  double total_return = 0.0;  // V_T / V_0 - 1
  double max_drawdown = 0.0;  // peak-to-trough fraction
  double sharpe = 0.0;
  double sortino = 0.0;
  double calmar = 0.0;
  double win_rate = 0.0;
  std::size_t trade_count = 0;
  double risk_free_rate = 0.0;  // annual, as configured
  bool sharpe_defined = false;
  bool sortino_defined = false;
  bool calmar_defined = false;
};

struct BacktestConfig {
  double capital = 1000.0;
  double commission = 9.0;  // per execution side
  int ma_window = 5;
  double risk_free_rate = 0.0;
  double periods_per_year = 252.0;
};

struct BacktestResult {
  std::string strategy;
  std::vector<TradeRecord> trades;
  EquityCurve curve;
  Metrics metrics;
  BacktestConfig config;
  int lag = 0;          // signal lag (lead-lag strategy only)
  bool ruined = false;  // equity hit zero; the run halted there
};

/// Buys (capital - commission)/close_0 shares at the first close, sells at
/// the last close minus commission. Needs >= 2 bars and capital > commission.
BacktestResult buy_and_hold(const PriceSeries& series, double capital, double commission,
                            double risk_free_rate = 0.0, double periods_per_year = 252.0);

/// Long when the leader's close at t-lag is above the moving average of its
/// `ma_window` preceding closes, short otherwise. Signals use information up
/// to bar t; fills happen at the target's next close. Position size is the
/// full current equity minus one commission (fully compounded); the final
/// open position is force-closed on the last bar.
/// `start_index` defers trading to a later target bar (signal history may
/// still reach further back).
BacktestResult lead_lag_trend_follow(const PriceSeries& leader, const PriceSeries& target,
                                     int lag, const BacktestConfig& config,
                                     std::size_t start_index = 0);

Metrics compute_metrics(const EquityCurve& curve, const std::vector<TradeRecord>& trades,
                        double risk_free_rate = 0.0, double periods_per_year = 252.0);

struct PortfolioSummary {
  double total_profit = 0.0;
  double total_return = 0.0;
  EquityCurve combined;
  Metrics metrics;
};

/// Sums the equity curves by date (front-padded with each strategy's initial
/// value, back-padded with its last) and recomputes the metric block on the
/// combined curve.
PortfolioSummary portfolio_aggregate(const std::vector<BacktestResult>& results);

}  // namespace leadlag
