#include "leadlag/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "leadlag/errors.hpp"
#include "leadlag/rng.hpp"

namespace leadlag {

std::vector<PriceSeries> generate_synthetic_universe(const SyntheticSpec& spec) {
  if (spec.tickers.empty()) throw ValidationError("synthetic universe: no tickers");
  {
    std::set<std::string> unique(spec.tickers.begin(), spec.tickers.end());
    if (unique.size() != spec.tickers.size()) {
      throw ValidationError("synthetic universe: duplicate tickers");
    }
  }
  if (spec.bars < 20) throw ValidationError("synthetic universe: bars must be >= 20");
  if (!(spec.start_price > 0.0)) throw ValidationError("synthetic universe: start price must be > 0");
  if (!(spec.default_vol > 0.0)) throw ValidationError("synthetic universe: vol must be > 0");

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < spec.tickers.size(); ++i) index[spec.tickers[i]] = i;

  for (const auto& e : spec.edges) {
    if (!index.count(e.from) || !index.count(e.to)) {
      throw ValidationError("synthetic universe: edge references unknown ticker " + e.from + "->" +
                            e.to);
    }
    if (e.from == e.to) throw ValidationError("synthetic universe: self-loop edge");
    if (e.lag < 1 || static_cast<std::size_t>(e.lag) >= spec.bars / 10) {
      throw ValidationError("synthetic universe: edge lag must satisfy 1 <= lag < bars/10");
    }
    if (!(e.strength > 0.0 && e.strength < 1.0)) {
      throw ValidationError("synthetic universe: edge strength must be in (0, 1)");
    }
  }

  const std::size_t n_tickers = spec.tickers.size();
  const std::size_t n_bars = spec.bars;

  std::vector<double> vols(n_tickers, spec.default_vol);
  for (const auto& [ticker, vol] : spec.per_ticker_vol) {
    auto it = index.find(ticker);
    if (it == index.end()) {
      throw ValidationError("synthetic universe: vol override for unknown ticker " + ticker);
    }
    if (!(vol > 0.0)) throw ValidationError("synthetic universe: vol must be > 0");
    vols[it->second] = vol;
  }

  // One RNG stream per ticker; draws per bar are fixed (1 return + 3 bar
  // shape draws) so streams never interleave.
  std::vector<Rng> rngs;
  rngs.reserve(n_tickers);
  for (std::size_t i = 0; i < n_tickers; ++i) {
    rngs.emplace_back(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
  }

  if (spec.shock_bar >= 0) {
    if (spec.shock_bar < 1) throw ValidationError("synthetic universe: shock_bar must be >= 1");
    if (spec.shock_length < 1) throw ValidationError("synthetic universe: shock_length must be >= 1");
    if (!(spec.shock_depth > 0.0)) throw ValidationError("synthetic universe: shock_depth must be > 0");
    if (static_cast<std::size_t>(spec.shock_bar) + static_cast<std::size_t>(spec.shock_length) + 1 >=
        n_bars) {
      throw ValidationError("synthetic universe: shock must end before the last bar");
    }
  }

  // Log-returns for bars 1..n-1 (bar 0 sits at the start price).
  std::vector<std::vector<double>> returns(n_tickers, std::vector<double>(n_bars, 0.0));
  for (std::size_t t = 1; t < n_bars; ++t) {
    for (std::size_t i = 0; i < n_tickers; ++i) {
      returns[i][t] = vols[i] * normal(rngs[i]);
    }
    for (const auto& e : spec.edges) {
      const std::size_t lag = static_cast<std::size_t>(e.lag);
      if (t >= lag + 1) {
        returns[index[e.to]][t] += e.strength * returns[index[e.from]][t - lag];
      }
    }
  }
  if (spec.shock_bar >= 1) {
    const std::size_t s = static_cast<std::size_t>(spec.shock_bar);
    const std::size_t len = static_cast<std::size_t>(spec.shock_length);
    for (std::size_t i = 0; i < n_tickers; ++i) {
      returns[i][s] -= spec.shock_depth;        // crash
      returns[i][s + len] += spec.shock_depth;  // recovery
    }
  }

  std::vector<PriceSeries> out;
  out.reserve(n_tickers);
  for (std::size_t i = 0; i < n_tickers; ++i) {
    std::vector<OhlcBar> bars(n_bars);
    double log_close = std::log(spec.start_price);
    Date date = spec.start_date;
    if (date.weekday() == 0 || date.weekday() == 6) date = date.next_weekday();
    for (std::size_t t = 0; t < n_bars; ++t) {
      log_close += returns[i][t];
      const double close = std::exp(log_close);
      const double u = std::fabs(normal(rngs[i])) * vols[i] * 0.5;
      const double v = std::fabs(normal(rngs[i])) * vols[i] * 0.5;
      OhlcBar& bar = bars[t];
      bar.date = date;
      bar.close = close;
      bar.high = close * std::exp(u);
      bar.low = close * std::exp(-v);
      bar.open = bar.low + uniform01(rngs[i]) * (bar.high - bar.low);
      date = date.next_weekday();
    }
    out.emplace_back(spec.tickers[i], std::move(bars));
  }
  return out;
}

}  // namespace leadlag
