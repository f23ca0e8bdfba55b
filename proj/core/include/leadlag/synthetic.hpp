#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "leadlag/date.hpp"
#include "leadlag/market_data.hpp"

namespace leadlag {

struct PlantedEdge {
  std::string from;
  std::string to;
  int lag = 1;
  double strength = 0.5;  // in (0, 1)
};

/// Test-fixture generator: geometric price paths whose log-returns follow a
/// planted VAR structure plus independent noise. An optional market-wide
/// shock carves a crash-and-recovery into every ticker (a deep, briefly
/// visited price level for the anomaly filter to find).
struct SyntheticSpec {
  std::vector<std::string> tickers;
  std::size_t bars = 1000;
  std::vector<PlantedEdge> edges;
  std::uint64_t seed = 0;
  double default_vol = 0.02;                     // per-step log-return sigma
  std::map<std::string, double> per_ticker_vol;  // overrides default_vol
  Date start_date{2020, 1, 2};
  double start_price = 100.0;
  int shock_bar = -1;         // bar index of the crash; -1 disables it
  double shock_depth = 0.5;   // log drop at the crash bar
  int shock_length = 2;       // bars spent at the bottom before recovery
};

/// Deterministic for a given spec + seed. OHLC bars are synthesised around
/// each close (high = close*e^|u|, low = close*e^-|v|, open uniform within
/// [low, high]) and satisfy the bar invariants by construction. Trading
/// dates skip weekends.
std::vector<PriceSeries> generate_synthetic_universe(const SyntheticSpec& spec);

}  // namespace leadlag
