#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "leadlag/market_data.hpp"

namespace leadlag {

/// Ordered ticker pair (from leads, to lags).
struct PairKey {
  std::string from;
  std::string to;

  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

struct OlsFit {
  std::vector<double> coefficients;
  double rss = 0.0;
};

/// Least squares on a row-major design matrix (include the intercept column
/// yourself). Throws DataError on rank deficiency, ValidationError when
/// rows < columns.
OlsFit ols_fit(const std::vector<std::vector<double>>& design, std::span<const double> target);

struct GrangerResult {
  std::string from;
  std::string to;
  int lag = 0;                   // lookback window l
  double rss_restricted = 0.0;   // intercept + l lags of the target
  double rss_unrestricted = 0.0; // ... + l lags of the source
  double f_stat = 0.0;
  double p_value = 1.0;
  std::size_t usable_samples = 0;
};

/// F-test of the null "past x adds nothing to predicting y" with lookback l.
/// F = ((RSS1-RSS2)/l) / (RSS2/(T-2l-1)), T the usable sample (length - l);
/// requires T >= 2l + 2.
GrangerResult granger_test(std::span<const double> x, std::span<const double> y, int lag);
GrangerResult granger_test(const ReturnSeries& x, const ReturnSeries& y, int lag);

struct SkippedLag {
  int lag = 0;
  std::string reason;
};

struct GrangerScanResult {
  std::vector<std::string> tickers;
  std::vector<PairKey> pairs;                  // all ordered pairs
  std::vector<int> lags;                       // evaluated lookbacks
  std::vector<SkippedLag> skipped;             // infeasible lookbacks
  std::vector<std::vector<double>> p_values;   // [pair][lag index]
  std::vector<double> mean_p_values;           // [lag index], across pairs
  int optimal_lag = 0;                         // argmin of mean p-value
  double significance = 0.01;
  std::vector<std::size_t> candidate_indices;  // pairs with p < significance at optimal_lag

  const std::vector<double>& pair_p_values(const PairKey& pair) const;
  double p_at(std::size_t pair_index, int lag) const;
};

/// Scans every ordered pair over lookbacks [lag_min, lag_max]; infeasible
/// lookbacks are skipped with a reason. Candidates are the pairs significant
/// at the optimal lookback, ordered by ascending p-value.
GrangerScanResult granger_scan(const std::vector<std::string>& tickers,
                               const std::vector<std::vector<double>>& series, int lag_min,
                               int lag_max, double significance);

/// Pearson correlation of the residuals of x and y after regressing each on
/// (intercept, z...). With an empty conditioning set this is exactly the
/// plain Pearson correlation.
double partial_correlation(std::span<const double> x, std::span<const double> y,
                           const std::vector<std::span<const double>>& z_set);

struct CausalEdge {
  std::string from;
  std::string to;
  double partial_corr = 0.0;
  double p_value = 1.0;    // t-test of the partial correlation
  int lag = 0;             // source lag with the strongest partial correlation
  double gct_p_value = 1.0;
  double ete = 0.0;        // filled by the ETE confirmation step
  double ete_z = 0.0;
};

struct CausalGraph {
  std::vector<std::string> nodes;
  std::vector<CausalEdge> edges;  // acyclic by construction
  double threshold = 0.15;
  double alpha = 0.05;
};

struct GctCandidate {
  PairKey pair;
  double p_value = 1.0;
};

/// Partial-correlation refinement of the GCT candidates. For a candidate
/// X -> Y the link strength is PartCorr(X_{t-L}, Y_t | Z_{t-1}) maximised
/// over source lags L = 1..max_source_lag, with Z the remaining series at
/// one bar before the target (the linear-VAR parent proxy; this is what
/// blocks mediated paths such as X -> M -> Y). Edges need |r| >= threshold
/// and a t-test p-value < alpha; cycles are resolved by dropping the
/// weakest |r| edge per cycle.
CausalGraph pcmci_graph(const std::vector<std::string>& tickers,
                        const std::vector<std::vector<double>>& series,
                        const std::vector<GctCandidate>& candidates, double threshold,
                        double alpha, int max_source_lag = 5);

/// Plug-in transfer entropy in bits with equal-frequency binning:
/// H(Y_t | Y-past) - H(Y_t | Y-past, X-past) over `history` lagged values,
/// clamped at 0. Requires length >= history + 50 and bins >= 2.
double transfer_entropy(std::span<const double> x, std::span<const double> y, int history,
                        int bins);

struct EteResult {
  std::string from;
  std::string to;
  double te_raw = 0.0;
  double shuffle_mean = 0.0;
  double shuffle_std = 0.0;  // sample std over shuffles
  double ete = 0.0;          // te_raw - shuffle_mean
  int history = 1;
  int bins = 6;
  int n_shuffles = 0;
  std::uint64_t seed = 0;

  double z_score() const;
};

/// Shuffle-corrected transfer entropy: subtracts the mean TE over
/// `n_shuffles` seeded time-permutations of x. Requires n_shuffles >= 20.
EteResult effective_transfer_entropy(std::span<const double> x, std::span<const double> y,
                                     int history, int bins, int n_shuffles, std::uint64_t seed);

/// Edges whose ETE z-score clears z_min, ordered by descending ETE.
/// `ete_results` must cover every edge of the graph.
std::vector<CausalEdge> select_final_pairs(const CausalGraph& graph,
                                           const std::vector<EteResult>& ete_results,
                                           double z_min = 2.0);

/// Graphviz DOT rendering of the causal graph.
std::string to_dot(const CausalGraph& graph);

}  // namespace leadlag
