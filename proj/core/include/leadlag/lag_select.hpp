#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leadlag/market_data.hpp"

namespace leadlag {

struct DtwResult {
  double distance = 0.0;
  std::size_t path_length = 0;
  std::optional<std::size_t> band;  // Sakoe-Chiba width, when constrained
};

/// Dynamic-programming DTW with squared pointwise cost and a final square
/// root. An optional Sakoe-Chiba band restricts |i - j| <= band and must be
/// at least |len(a) - len(b)|.
DtwResult dtw_distance(std::span<const double> a, std::span<const double> b,
                       std::optional<std::size_t> band = std::nullopt);

enum class Direction { Down = 0, Up = 1 };

/// Supervised dataset for the lag search: the leader's returns at lags
/// d..d+m-1 predict the lagging stock's next-day direction.
struct LagDataset {
  std::vector<std::vector<double>> features;  // [row][m], row order chronological
  std::vector<Direction> labels;              // direction of the lagger at the row's bar
  std::size_t first_bar = 0;                  // lagger bar index of row 0
};

/// Rows pair feature (leader change ending at t-d, ..., t-d-m+1) with the
/// label sign(lagger close_t - close_{t-1}); zero change labels Down.
LagDataset build_lag_dataset(const ReturnSeries& leader, const PriceSeries& lagger, int lag,
                             int feature_width);

/// Euclidean k-NN majority vote. Vote ties resolve to Down; distance ties
/// resolve to the lower training index.
Direction knn_predict(const LagDataset& train, const std::vector<double>& query, int k);

struct LagAccuracy {
  int lag = 0;
  double accuracy = 0.0;
  bool degenerate = false;  // skipped: single-class training split or too little data
  std::string reason;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// Chronological train/test evaluation of the KNN at one lag. `split` is the
/// training fraction. Degenerate splits are reported, not thrown.
LagAccuracy lag_accuracy(const ReturnSeries& leader, const PriceSeries& lagger, int lag, int k,
                         int feature_width, double split);

struct LagSearchResult {
  std::string leader;
  std::string lagger;
  std::vector<LagAccuracy> per_lag;
  int optimal_lag = 0;           // argmax accuracy, ties -> smallest lag
  double best_accuracy = 0.0;
  int k = 7;
  int feature_width = 3;
  double split = 0.8;
};

/// Evaluates lag_accuracy over [lag_min, lag_max] and picks the accuracy
/// argmax. Throws DataError when every lag is degenerate.
LagSearchResult optimal_lag(const ReturnSeries& leader, const PriceSeries& lagger, int lag_min,
                            int lag_max, int k = 7, int feature_width = 3, double split = 0.8);

}  // namespace leadlag
