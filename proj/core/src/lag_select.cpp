#include "leadlag/lag_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "leadlag/errors.hpp"

namespace leadlag {

DtwResult dtw_distance(std::span<const double> a, std::span<const double> b,
                       std::optional<std::size_t> band) {
  if (a.empty() || b.empty()) throw ValidationError("dtw_distance: empty input");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t len_gap = n > m ? n - m : m - n;
  if (band && *band < len_gap) {
    throw ValidationError("dtw_distance: band narrower than the length difference");
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto in_band = [&](std::size_t i, std::size_t j) {
    if (!band) return true;
    const std::size_t diff = i > j ? i - j : j - i;
    return diff <= *band;
  };
  auto cost = [&](std::size_t i, std::size_t j) {
    const double d = a[i] - b[j];
    return d * d;
  };

  std::vector<double> dp(n * m, kInf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return dp[i * m + j]; };

  at(0, 0) = cost(0, 0);
  for (std::size_t i = 1; i < n; ++i) {
    if (in_band(i, 0) && at(i - 1, 0) < kInf) at(i, 0) = at(i - 1, 0) + cost(i, 0);
  }
  for (std::size_t j = 1; j < m; ++j) {
    if (in_band(0, j) && at(0, j - 1) < kInf) at(0, j) = at(0, j - 1) + cost(0, j);
  }
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 1; j < m; ++j) {
      if (!in_band(i, j)) continue;
      const double prev = std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
      if (prev < kInf) at(i, j) = prev + cost(i, j);
    }
  }

  const double total = at(n - 1, m - 1);
  if (!(total < kInf)) throw ValidationError("dtw_distance: band leaves no feasible path");

  // Backtrack for the path length; ties prefer the diagonal, then up.
  std::size_t i = n - 1, j = m - 1, path_len = 1;
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = at(i - 1, j - 1);
      const double up = at(i - 1, j);
      const double left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    ++path_len;
  }

  DtwResult res;
  res.distance = std::sqrt(total);
  res.path_length = path_len;
  res.band = band;
  return res;
}

LagDataset build_lag_dataset(const ReturnSeries& leader, const PriceSeries& lagger, int lag,
                             int feature_width) {
  if (lag < 1) throw ValidationError("build_lag_dataset: lag must be >= 1");
  if (feature_width < 1) throw ValidationError("build_lag_dataset: feature width must be >= 1");

  const std::size_t n = lagger.size();
  const std::size_t d = static_cast<std::size_t>(lag);
  const std::size_t m = static_cast<std::size_t>(feature_width);
  const std::size_t rl = static_cast<std::size_t>(leader.lag);

  // Oldest feature is the leader change ending at bar t - d - m + 1, which
  // must exist in the return series (earliest bar = rl); the label needs t >= 1.
  const std::size_t t_min = std::max<std::size_t>(d + m - 1 + rl, 1);
  const std::size_t leader_last_bar = rl + leader.size() - 1;
  if (t_min >= n) throw DataError("build_lag_dataset: insufficient history for lag " +
                                  std::to_string(lag));

  LagDataset ds;
  ds.first_bar = t_min;
  for (std::size_t t = t_min; t < n; ++t) {
    if (t - d > leader_last_bar) {
      throw DataError("build_lag_dataset: leader returns do not cover bar " + std::to_string(t - d));
    }
    std::vector<double> feat(m);
    for (std::size_t j = 0; j < m; ++j) feat[j] = leader.at_bar(t - d - j);
    ds.features.push_back(std::move(feat));
    const double change = lagger[t].close - lagger[t - 1].close;
    ds.labels.push_back(change > 0.0 ? Direction::Up : Direction::Down);
  }
  return ds;
}

Direction knn_predict(const LagDataset& train, const std::vector<double>& query, int k) {
  if (train.features.empty()) throw ValidationError("knn_predict: empty training set");
  if (k < 1) throw ValidationError("knn_predict: k must be >= 1");
  if (static_cast<std::size_t>(k) > train.features.size()) {
    throw ValidationError("knn_predict: k exceeds the training-set size");
  }
  const std::size_t dim = query.size();

  std::vector<std::pair<double, std::size_t>> dists;
  dists.reserve(train.features.size());
  for (std::size_t i = 0; i < train.features.size(); ++i) {
    const auto& f = train.features[i];
    if (f.size() != dim) throw ValidationError("knn_predict: feature dimension mismatch");
    double d2 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double diff = f[j] - query[j];
      d2 += diff * diff;
    }
    dists.emplace_back(d2, i);
  }
  // pair ordering = (distance, index): distance ties go to the lower index.
  std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());

  int up_votes = 0;
  for (int j = 0; j < k; ++j) {
    if (train.labels[dists[static_cast<std::size_t>(j)].second] == Direction::Up) ++up_votes;
  }
  return 2 * up_votes > k ? Direction::Up : Direction::Down;  // vote ties -> Down
}

LagAccuracy lag_accuracy(const ReturnSeries& leader, const PriceSeries& lagger, int lag, int k,
                         int feature_width, double split) {
  if (!(split > 0.0 && split < 1.0)) throw ValidationError("lag_accuracy: split must be in (0, 1)");
  if (k < 1) throw ValidationError("lag_accuracy: k must be >= 1");

  LagAccuracy acc;
  acc.lag = lag;

  LagDataset ds;
  try {
    ds = build_lag_dataset(leader, lagger, lag, feature_width);
  } catch (const DataError& e) {
    acc.degenerate = true;
    acc.reason = e.what();
    acc.accuracy = std::numeric_limits<double>::quiet_NaN();
    return acc;
  }

  const std::size_t n = ds.features.size();
  const std::size_t n_train = static_cast<std::size_t>(std::floor(split * static_cast<double>(n)));
  const std::size_t n_test = n - n_train;
  acc.n_train = n_train;
  acc.n_test = n_test;

  auto degenerate = [&](const std::string& why) {
    acc.degenerate = true;
    acc.reason = why;
    acc.accuracy = std::numeric_limits<double>::quiet_NaN();
    return acc;
  };
  if (n_train < static_cast<std::size_t>(k)) return degenerate("training split smaller than k");
  if (n_test == 0) return degenerate("empty test split");

  LagDataset train;
  train.features.assign(ds.features.begin(), ds.features.begin() + static_cast<std::ptrdiff_t>(n_train));
  train.labels.assign(ds.labels.begin(), ds.labels.begin() + static_cast<std::ptrdiff_t>(n_train));
  const bool has_up = std::find(train.labels.begin(), train.labels.end(), Direction::Up) != train.labels.end();
  const bool has_down = std::find(train.labels.begin(), train.labels.end(), Direction::Down) != train.labels.end();
  if (!has_up || !has_down) return degenerate("single-class training split");

  std::size_t correct = 0;
  for (std::size_t i = n_train; i < n; ++i) {
    if (knn_predict(train, ds.features[i], k) == ds.labels[i]) ++correct;
  }
  acc.accuracy = static_cast<double>(correct) / static_cast<double>(n_test);
  return acc;
}

LagSearchResult optimal_lag(const ReturnSeries& leader, const PriceSeries& lagger, int lag_min,
                            int lag_max, int k, int feature_width, double split) {
  if (lag_min < 1 || lag_max < lag_min) throw ValidationError("optimal_lag: bad lag grid");

  LagSearchResult res;
  res.leader = leader.ticker;
  res.lagger = lagger.ticker();
  res.k = k;
  res.feature_width = feature_width;
  res.split = split;

  int best_lag = 0;
  double best_acc = -1.0;
  for (int d = lag_min; d <= lag_max; ++d) {
    LagAccuracy a = lag_accuracy(leader, lagger, d, k, feature_width, split);
    if (!a.degenerate && a.accuracy > best_acc) {
      best_acc = a.accuracy;
      best_lag = d;  // strict > keeps the smallest lag on ties
    }
    res.per_lag.push_back(std::move(a));
  }
  if (best_lag == 0) throw DataError("optimal_lag: every lag in the grid was degenerate");
  res.optimal_lag = best_lag;
  res.best_accuracy = best_acc;
  return res;
}

}  // namespace leadlag
