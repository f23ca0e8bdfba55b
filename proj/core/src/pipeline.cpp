#include "leadlag/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <span>
#include <sstream>

#include <json.hpp>

#include "leadlag/backtest.hpp"
#include "leadlag/causality.hpp"
#include "leadlag/clustering.hpp"
#include "leadlag/errors.hpp"
#include "leadlag/lag_select.hpp"
#include "leadlag/market_data.hpp"
#include "leadlag/rng.hpp"
#include "leadlag/volatility.hpp"

namespace leadlag {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kToolVersion = "leadlag 0.1.0";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

json load_artifact(const fs::path& out_dir, const std::string& file, const std::string& producer) {
  const fs::path path = out_dir / file;
  if (!fs::exists(path)) {
    throw ValidationError("missing prerequisite artifact " + file + "; run the '" + producer +
                          "' stage first");
  }
  return json::parse(read_file(path));
}

// ---------------------------------------------------------------------------
// JSON (de)serialisation of the domain types
// ---------------------------------------------------------------------------

json bar_to_json(const OhlcBar& b) {
  return json{{"date", b.date.to_string()}, {"open", b.open},   {"high", b.high},
              {"low", b.low},               {"close", b.close}};
}

OhlcBar bar_from_json(const json& j) {
  OhlcBar b;
  b.date = Date::parse(j.at("date").get<std::string>());
  b.open = j.at("open").get<double>();
  b.high = j.at("high").get<double>();
  b.low = j.at("low").get<double>();
  b.close = j.at("close").get<double>();
  return b;
}

json curve_to_json(const EquityCurve& c) {
  json dates = json::array();
  for (const auto& d : c.dates) dates.push_back(d.to_string());
  return json{{"dates", dates}, {"values", c.values}};
}

json metrics_to_json(const Metrics& m) {
  auto opt = [](double v, bool defined) { return defined ? json(v) : json(); };
  return json{{"total_return", m.total_return},
              {"max_drawdown", m.max_drawdown},
              {"sharpe", opt(m.sharpe, m.sharpe_defined)},
              {"sortino", opt(m.sortino, m.sortino_defined)},
              {"calmar", opt(m.calmar, m.calmar_defined)},
              {"win_rate", m.win_rate},
              {"trade_count", m.trade_count},
              {"risk_free_rate", m.risk_free_rate}};
}

json trade_to_json(const TradeRecord& t) {
  return json{{"direction", to_string(t.direction)},
              {"entry_date", t.entry_date.to_string()},
              {"exit_date", t.exit_date.to_string()},
              {"entry_price", t.entry_price},
              {"exit_price", t.exit_price},
              {"quantity", t.quantity},
              {"commission", t.commission},
              {"pnl", t.pnl}};
}

json backtest_to_json(const BacktestResult& r) {
  json trades = json::array();
  for (const auto& t : r.trades) trades.push_back(trade_to_json(t));
  return json{{"id", r.strategy},      {"lag", r.lag},
              {"ruined", r.ruined},    {"trades", trades},
              {"equity", curve_to_json(r.curve)}, {"metrics", metrics_to_json(r.metrics)}};
}

// ---------------------------------------------------------------------------
// Shared stage plumbing
// ---------------------------------------------------------------------------

struct StageTimer {
  std::chrono::steady_clock::time_point begin = std::chrono::steady_clock::now();

  std::int64_t millis() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - begin)
        .count();
  }
};

void update_manifest(const fs::path& out_dir, const PipelineConfig& config,
                     const std::string& stage, const std::vector<fs::path>& artifacts,
                     std::int64_t millis, const std::map<std::string, std::string>& inputs = {}) {
  const fs::path path = out_dir / "manifest.json";
  json manifest;
  if (fs::exists(path)) {
    manifest = json::parse(read_file(path));
  }
  manifest["tool_version"] = kToolVersion;
  manifest["config_hash"] = config.hash();
  manifest["seed"] = config.seed;
  for (const auto& [file, digest] : inputs) manifest["inputs"][file] = digest;
  json names = json::array();
  for (const auto& a : artifacts) names.push_back(a.filename().string());
  manifest["stages"][stage] = json{{"artifacts", names}, {"millis", millis}};
  write_json(path, manifest);
}

/// Bars the fitting stages may see: everything up to train_end (when set).
PriceSeries training_slice(const PriceSeries& series, const PipelineConfig& config) {
  if (!config.train_end) return series;
  PriceSeries sliced = series.filter_dates(std::nullopt, config.train_end);
  for (const auto& b : sliced.bars()) {
    if (*config.train_end < b.date) {
      throw std::logic_error("training slice leaked a bar beyond train_end");
    }
  }
  return sliced;
}

std::vector<PriceSeries> load_prices(const fs::path& out_dir) {
  const json artifact = load_artifact(out_dir, "prices.json", "ingest");
  std::vector<PriceSeries> out;
  for (const auto& [ticker, entry] : artifact.at("tickers").items()) {
    std::vector<OhlcBar> bars;
    for (const auto& jb : entry.at("bars")) bars.push_back(bar_from_json(jb));
    out.emplace_back(ticker, std::move(bars));
  }
  if (out.empty()) throw DataError("prices.json holds no tickers");
  return out;
}

const PriceSeries& series_by_ticker(const std::vector<PriceSeries>& all, const std::string& ticker) {
  for (const auto& s : all) {
    if (s.ticker() == ticker) return s;
  }
  throw DataError("no price series for ticker " + ticker);
}

PairKey parse_pair(const std::string& s) {
  const auto arrow = s.find("->");
  if (arrow == std::string::npos) {
    throw ValidationError("pair '" + s + "' must look like FROM->TO");
  }
  PairKey pair;
  pair.from = s.substr(0, arrow);
  pair.to = s.substr(arrow + 2);
  if (pair.from.empty() || pair.to.empty() || pair.from == pair.to) {
    throw ValidationError("pair '" + s + "' must name two distinct tickers");
  }
  return pair;
}

std::vector<PairKey> final_pairs_from_causal(const json& causal) {
  std::vector<PairKey> out;
  for (const auto& e : causal.at("final_pairs")) {
    out.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

std::vector<fs::path> stage_ingest(const PipelineConfig& config, const fs::path& out_dir) {
  if (config.tickers.empty()) throw ValidationError("config field 'tickers' must not be empty");
  if (config.data_dir.empty()) throw ValidationError("config field 'data_dir' must not be empty");

  StageTimer timer;
  json tickers_json;
  std::map<std::string, std::string> digests;
  for (const auto& ticker : config.tickers) {
    const fs::path csv_path = fs::path(config.data_dir) / (ticker + ".csv");
    if (!fs::exists(csv_path)) throw DataError("missing input file " + csv_path.string());
    const std::string bytes = read_file(csv_path);
    digests[csv_path.filename().string()] = fnv1a_hex(bytes);

    std::istringstream in(bytes);
    PriceSeries parsed = parse_ohlc_csv(in, ticker);
    PriceSeries ranged = parsed.filter_dates(config.start_date, config.end_date);
    if (ranged.empty()) throw DataError(ticker + ": no bars in the configured date range");

    // Score anomalies on the training range only, so the threshold never
    // peeks at trade-period bars; the trim point is always a prefix.
    const PriceSeries scored = training_slice(ranged, config);
    if (scored.size() <= config.anomaly_k) {
      throw DataError(ticker + ": too few training bars (" + std::to_string(scored.size()) +
                      ") for anomaly_k = " + std::to_string(config.anomaly_k));
    }
    const AnomalyReport report = knn_anomaly_scores(scored, config.anomaly_k);
    const PriceSeries trimmed_training = trim_after_anomaly(scored, report);
    const std::size_t removed = scored.size() - trimmed_training.size();
    const PriceSeries kept = ranged.slice(removed, ranged.size());
    if (kept.size() < 2) throw DataError(ticker + ": fewer than 2 bars survive the anomaly trim");

    json bars = json::array();
    for (const auto& b : kept.bars()) bars.push_back(bar_to_json(b));
    json flagged = json::array();
    for (std::size_t f : report.flagged) flagged.push_back(f);
    tickers_json[ticker] = json{
        {"bars", bars},
        {"anomaly", json{{"k", report.k},
                         {"mean", report.score_mean},
                         {"stddev", report.score_stddev},
                         {"threshold", report.threshold},
                         {"flagged", flagged},
                         {"scores", report.scores},
                         {"removed_prefix_bars", removed}}}};
  }

  const json artifact = {{"stage", "ingest"},
                         {"config_hash", config.hash()},
                         {"seed", config.seed},
                         {"tickers", tickers_json}};
  write_json(out_dir / "prices.json", artifact);
  update_manifest(out_dir, config, "ingest", {out_dir / "prices.json"}, timer.millis(), digests);
  return {out_dir / "prices.json"};
}

std::vector<fs::path> stage_volatility(const PipelineConfig& config, const fs::path& out_dir) {
  StageTimer timer;
  const std::vector<PriceSeries> prices = load_prices(out_dir);
  std::vector<PriceSeries> training;
  training.reserve(prices.size());
  for (const auto& s : prices) training.push_back(training_slice(s, config));

  const std::vector<VolatilityProfile> profiles = build_profiles(training, config.vol_window);

  json profiles_json;
  for (const auto& p : profiles) {
    json series_json;
    json means_json;
    for (std::size_t i = 0; i < kAllEstimators.size(); ++i) {
      const auto& vs = p.series[i];
      means_json[to_string(kAllEstimators[i])] = p.means[i];
      series_json[to_string(kAllEstimators[i])] = json{{"window", vs.window},
                                                       {"first_end_index", vs.first_end_index},
                                                       {"values", vs.values}};
    }
    profiles_json[p.ticker] = json{{"means", means_json}, {"series", series_json}};
  }
  const json artifact = {{"stage", "volatility"},
                         {"config_hash", config.hash()},
                         {"window", config.vol_window},
                         {"profiles", profiles_json}};
  write_json(out_dir / "volatility.json", artifact);
  update_manifest(out_dir, config, "volatility", {out_dir / "volatility.json"}, timer.millis());
  return {out_dir / "volatility.json"};
}

FeatureMode feature_mode_from_config(const PipelineConfig& config) {
  FeatureMode mode;
  if (config.gmm_feature_mode == "all") return mode;
  mode.all_estimators = false;
  for (VolEstimator e : kAllEstimators) {
    if (to_string(e) == config.gmm_feature_mode) {
      mode.single = e;
      return mode;
    }
  }
  throw ValidationError("unknown gmm_feature_mode '" + config.gmm_feature_mode + "'");
}

std::vector<fs::path> stage_cluster(const PipelineConfig& config, const fs::path& out_dir) {
  StageTimer timer;
  const json vol = load_artifact(out_dir, "volatility.json", "volatility");

  std::vector<VolatilityProfile> profiles;
  for (const auto& [ticker, entry] : vol.at("profiles").items()) {
    VolatilityProfile p;
    p.ticker = ticker;
    for (std::size_t i = 0; i < kAllEstimators.size(); ++i) {
      p.means[i] = entry.at("means").at(to_string(kAllEstimators[i])).get<double>();
    }
    profiles.push_back(std::move(p));
  }

  GmmConfig gmm_config;
  gmm_config.max_iter = config.gmm_max_iter;
  gmm_config.tol = config.gmm_tol;
  gmm_config.n_restarts = config.gmm_restarts;
  gmm_config.seed = stage_seed(config, Stage::Cluster);

  const ClusterResult result =
      cluster_profiles(profiles, feature_mode_from_config(config), config.gmm_components, gmm_config);

  json assignments = json::array();
  for (const auto& a : result.assignments) {
    assignments.push_back(json{{"ticker", a.ticker},
                               {"component", a.component},
                               {"rank", a.rank},
                               {"tier", a.tier ? json(to_string(*a.tier)) : json()},
                               {"responsibilities", a.responsibilities}});
  }
  json tiers;
  for (VolTier tier : {VolTier::Low, VolTier::Medium, VolTier::High}) {
    tiers[to_string(tier)] = select_tier(result.assignments, tier);
  }
  const json artifact = {{"stage", "cluster"},
                         {"config_hash", config.hash()},
                         {"feature_mode", config.gmm_feature_mode},
                         {"model", json{{"components", result.model.components},
                                        {"weights", result.model.weights},
                                        {"means", result.model.means},
                                        {"variances", result.model.variances},
                                        {"final_log_likelihood", result.model.final_log_likelihood},
                                        {"em_iterations", result.model.log_likelihood_trace.size()},
                                        {"converged", result.model.converged},
                                        {"seed", result.model.seed}}},
                         {"assignments", assignments},
                         {"tiers", tiers}};
  write_json(out_dir / "clusters.json", artifact);
  update_manifest(out_dir, config, "cluster", {out_dir / "clusters.json"}, timer.millis());
  return {out_dir / "clusters.json"};
}

std::vector<fs::path> stage_causal(const PipelineConfig& config, const fs::path& out_dir) {
  StageTimer timer;
  const std::vector<PriceSeries> prices = load_prices(out_dir);

  json artifact = {{"stage", "causal"},
                   {"config_hash", config.hash()},
                   {"on", config.causal_on_prices ? "prices" : "log_returns"}};

  json final_pairs = json::array();
  if (!config.final_pairs_override.empty()) {
    for (const auto& s : config.final_pairs_override) {
      const PairKey pair = parse_pair(s);
      series_by_ticker(prices, pair.from);
      series_by_ticker(prices, pair.to);
      final_pairs.push_back(json{{"from", pair.from}, {"to", pair.to}});
    }
    artifact["overridden"] = true;
    artifact["final_pairs"] = final_pairs;
    write_json(out_dir / "causal.json", artifact);
    CausalGraph empty_graph;
    write_file(out_dir / "graph.dot", to_dot(empty_graph));
    update_manifest(out_dir, config, "causal", {out_dir / "causal.json", out_dir / "graph.dot"},
                    timer.millis());
    return {out_dir / "causal.json", out_dir / "graph.dot"};
  }

  const json clusters = load_artifact(out_dir, "clusters.json", "cluster");
  const std::vector<std::string> medium =
      clusters.at("tiers").at("medium").get<std::vector<std::string>>();
  if (medium.size() < 2) {
    throw DataError("medium volatility tier has " + std::to_string(medium.size()) +
                    " tickers; need at least 2 for the causal stage");
  }

  // Aligned training series of the medium tier, as log-returns by default.
  std::vector<PriceSeries> medium_training;
  for (const auto& ticker : medium) {
    medium_training.push_back(training_slice(series_by_ticker(prices, ticker), config));
  }
  medium_training = align_common_dates(medium_training);

  std::vector<std::vector<double>> series;
  for (const auto& s : medium_training) {
    if (config.causal_on_prices) {
      series.push_back(s.closes());
    } else {
      series.push_back(log_returns(s).values);
    }
  }

  const GrangerScanResult scan =
      granger_scan(medium, series, config.gct_min_lag, config.gct_max_lag, config.gct_significance);

  json scan_json;
  scan_json["lags"] = scan.lags;
  json skipped = json::array();
  for (const auto& s : scan.skipped) skipped.push_back(json{{"lag", s.lag}, {"reason", s.reason}});
  scan_json["skipped"] = skipped;
  json pair_rows = json::array();
  for (std::size_t p = 0; p < scan.pairs.size(); ++p) {
    pair_rows.push_back(json{{"from", scan.pairs[p].from},
                             {"to", scan.pairs[p].to},
                             {"p_values", scan.p_values[p]}});
  }
  scan_json["pairs"] = pair_rows;
  scan_json["mean_p_values"] = scan.mean_p_values;
  scan_json["optimal_lag"] = scan.optimal_lag;
  scan_json["significance"] = scan.significance;
  json candidates_json = json::array();
  std::vector<GctCandidate> candidates;
  for (std::size_t idx : scan.candidate_indices) {
    GctCandidate c;
    c.pair = scan.pairs[idx];
    c.p_value = scan.p_at(idx, scan.optimal_lag);
    candidates_json.push_back(json{{"from", c.pair.from}, {"to", c.pair.to}, {"p_value", c.p_value}});
    candidates.push_back(std::move(c));
  }
  scan_json["candidates"] = candidates_json;
  artifact["scan"] = scan_json;

  const CausalGraph graph = pcmci_graph(medium, series, candidates, config.pcmci_threshold,
                                        config.pcmci_alpha, config.pcmci_max_lag);
  json edges = json::array();
  for (const auto& e : graph.edges) {
    edges.push_back(json{{"from", e.from},
                         {"to", e.to},
                         {"partial_corr", e.partial_corr},
                         {"p_value", e.p_value},
                         {"lag", e.lag},
                         {"gct_p_value", e.gct_p_value}});
  }
  artifact["graph"] = json{{"threshold", graph.threshold},
                           {"alpha", graph.alpha},
                           {"nodes", graph.nodes},
                           {"edges", edges}};

  // ETE confirmation. The source series is shifted to the edge's lag so the
  // one-step TE history covers the causally relevant past.
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < medium.size(); ++i) index[medium[i]] = i;
  const std::uint64_t ete_seed = stage_seed(config, Stage::Causal);
  std::vector<EteResult> ete_results;
  json ete_json = json::array();
  std::uint64_t edge_counter = 0;
  for (const auto& e : graph.edges) {
    const auto& xs = series[index[e.from]];
    const auto& ys = series[index[e.to]];
    const std::size_t shift = static_cast<std::size_t>(e.lag - 1);
    std::vector<double> x_aligned(xs.begin(), xs.end() - static_cast<std::ptrdiff_t>(shift));
    std::vector<double> y_aligned(ys.begin() + static_cast<std::ptrdiff_t>(shift), ys.end());
    EteResult r = effective_transfer_entropy(x_aligned, y_aligned, config.ete_history,
                                             config.ete_bins, config.ete_shuffles,
                                             derive_seed(ete_seed, edge_counter++));
    r.from = e.from;
    r.to = e.to;
    ete_json.push_back(json{{"from", r.from},
                            {"to", r.to},
                            {"te_raw", r.te_raw},
                            {"shuffle_mean", r.shuffle_mean},
                            {"shuffle_std", r.shuffle_std},
                            {"ete", r.ete},
                            {"z", std::isfinite(r.z_score()) ? json(r.z_score()) : json()},
                            {"history", r.history},
                            {"bins", r.bins},
                            {"n_shuffles", r.n_shuffles}});
    ete_results.push_back(std::move(r));
  }
  artifact["ete"] = ete_json;

  const std::vector<CausalEdge> selected = select_final_pairs(graph, ete_results, config.ete_z_min);
  for (const auto& e : selected) {
    final_pairs.push_back(json{{"from", e.from},
                               {"to", e.to},
                               {"partial_corr", e.partial_corr},
                               {"lag", e.lag},
                               {"gct_p_value", e.gct_p_value},
                               {"ete", e.ete},
                               {"ete_z", std::isfinite(e.ete_z) ? json(e.ete_z) : json()}});
  }
  artifact["overridden"] = false;
  artifact["final_pairs"] = final_pairs;

  write_json(out_dir / "causal.json", artifact);
  write_file(out_dir / "graph.dot", to_dot(graph));
  update_manifest(out_dir, config, "causal", {out_dir / "causal.json", out_dir / "graph.dot"},
                  timer.millis());
  return {out_dir / "causal.json", out_dir / "graph.dot"};
}

std::vector<fs::path> stage_lags(const PipelineConfig& config, const fs::path& out_dir) {
  StageTimer timer;
  const std::vector<PriceSeries> prices = load_prices(out_dir);
  const json causal = load_artifact(out_dir, "causal.json", "causal");
  const std::vector<PairKey> pairs = final_pairs_from_causal(causal);

  json pairs_json = json::array();
  for (const auto& pair : pairs) {
    std::vector<PriceSeries> aligned = align_common_dates(
        {training_slice(series_by_ticker(prices, pair.from), config),
         training_slice(series_by_ticker(prices, pair.to), config)});
    const ReturnSeries leader_changes = pct_changes(aligned[0], 1);
    const LagSearchResult search =
        optimal_lag(leader_changes, aligned[1], 1, config.lag_grid_max, config.knn_k,
                    config.knn_feature_width, config.train_split);

    // DTW similarity per candidate shift: the leader's closes displaced by
    // the lag against the lagger's, as supporting evidence for the search.
    const std::vector<double> leader_closes = aligned[0].closes();
    const std::vector<double> lagger_closes = aligned[1].closes();
    json per_lag = json::array();
    for (const auto& a : search.per_lag) {
      const std::size_t d = static_cast<std::size_t>(a.lag);
      json shifted_dtw;
      if (lagger_closes.size() > d + 1) {
        const std::span<const double> head(leader_closes.data(), leader_closes.size() - d);
        const std::span<const double> tail(lagger_closes.data() + d, lagger_closes.size() - d);
        shifted_dtw = dtw_distance(head, tail).distance;
      }
      per_lag.push_back(json{{"lag", a.lag},
                             {"accuracy", a.degenerate ? json() : json(a.accuracy)},
                             {"degenerate", a.degenerate},
                             {"reason", a.reason},
                             {"n_train", a.n_train},
                             {"n_test", a.n_test},
                             {"dtw_shifted", shifted_dtw}});
    }
    const DtwResult dtw = dtw_distance(leader_closes, lagger_closes);
    pairs_json.push_back(json{{"leader", pair.from},
                              {"lagger", pair.to},
                              {"per_lag", per_lag},
                              {"optimal_lag", search.optimal_lag},
                              {"best_accuracy", search.best_accuracy},
                              {"dtw_distance", dtw.distance},
                              {"dtw_path_length", dtw.path_length}});
  }
  const json artifact = {{"stage", "lags"},
                         {"config_hash", config.hash()},
                         {"k", config.knn_k},
                         {"feature_width", config.knn_feature_width},
                         {"split", config.train_split},
                         {"grid_max", config.lag_grid_max},
                         {"pairs", pairs_json}};
  write_json(out_dir / "lags.json", artifact);
  update_manifest(out_dir, config, "lags", {out_dir / "lags.json"}, timer.millis());
  return {out_dir / "lags.json"};
}

std::vector<fs::path> stage_backtest(const PipelineConfig& config, const fs::path& out_dir) {
  StageTimer timer;
  const std::vector<PriceSeries> prices = load_prices(out_dir);
  const json lags = load_artifact(out_dir, "lags.json", "lags");

  BacktestConfig bt;
  bt.capital = config.capital;
  bt.commission = config.commission;
  bt.ma_window = config.ma_window;
  bt.risk_free_rate = config.risk_free_rate;
  bt.periods_per_year = config.periods_per_year;

  json strategies = json::array();
  std::vector<BacktestResult> results;
  std::string trades_csv =
      "strategy,direction,entry_date,entry_price,exit_date,exit_price,quantity,commission,pnl\n";

  for (const auto& entry : lags.at("pairs")) {
    const std::string leader_ticker = entry.at("leader").get<std::string>();
    const std::string lagger_ticker = entry.at("lagger").get<std::string>();
    const int lag = entry.at("optimal_lag").get<int>();

    std::vector<PriceSeries> aligned = align_common_dates(
        {series_by_ticker(prices, leader_ticker), series_by_ticker(prices, lagger_ticker)});
    const PriceSeries& leader = aligned[0];
    const PriceSeries& target = aligned[1];

    // Trading starts after train_end; signal history may reach further back.
    std::size_t start_index = 0;
    if (config.train_end) {
      while (start_index < target.size() && !(*config.train_end < target[start_index].date)) {
        ++start_index;
      }
      if (start_index + 1 >= target.size()) {
        throw DataError(lagger_ticker + ": no bars after train_end to trade on");
      }
    }

    BacktestResult strat = lead_lag_trend_follow(leader, target, lag, bt, start_index);
    const std::size_t bench_start = std::max(start_index, static_cast<std::size_t>(lag) +
                                                              static_cast<std::size_t>(bt.ma_window));
    BacktestResult bench = buy_and_hold(target.slice(bench_start, target.size()), bt.capital,
                                        bt.commission, bt.risk_free_rate, bt.periods_per_year);

    for (const auto& t : strat.trades) {
      trades_csv += strat.strategy + "," + to_string(t.direction) + "," +
                    t.entry_date.to_string() + "," + std::to_string(t.entry_price) + "," +
                    t.exit_date.to_string() + "," + std::to_string(t.exit_price) + "," +
                    std::to_string(t.quantity) + "," + std::to_string(t.commission) + "," +
                    std::to_string(t.pnl) + "\n";
    }
    strategies.push_back(json{{"pair", leader_ticker + "->" + lagger_ticker},
                              {"lag", lag},
                              {"strategy", backtest_to_json(strat)},
                              {"benchmark", backtest_to_json(bench)}});
    results.push_back(std::move(strat));
  }

  json artifact = {{"stage", "backtest"},
                   {"config_hash", config.hash()},
                   {"config", json{{"capital", bt.capital},
                                   {"commission", bt.commission},
                                   {"ma_window", bt.ma_window},
                                   {"risk_free_rate", bt.risk_free_rate},
                                   {"periods_per_year", bt.periods_per_year}}},
                   {"trade_start", config.train_end ? json(config.train_end->to_string()) : json()},
                   {"strategies", strategies}};
  if (!results.empty()) {
    const PortfolioSummary portfolio = portfolio_aggregate(results);
    artifact["portfolio"] = json{{"total_profit", portfolio.total_profit},
                                 {"total_return", portfolio.total_return},
                                 {"metrics", metrics_to_json(portfolio.metrics)},
                                 {"equity", curve_to_json(portfolio.combined)}};
  } else {
    artifact["portfolio"] = json();
  }

  write_json(out_dir / "backtest.json", artifact);
  write_file(out_dir / "trades.csv", trades_csv);
  update_manifest(out_dir, config, "backtest", {out_dir / "backtest.json", out_dir / "trades.csv"},
                  timer.millis());
  return {out_dir / "backtest.json", out_dir / "trades.csv"};
}

}  // namespace

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::Ingest: return "ingest";
    case Stage::Volatility: return "volatility";
    case Stage::Cluster: return "cluster";
    case Stage::Causal: return "causal";
    case Stage::Lags: return "lags";
    case Stage::Backtest: return "backtest";
  }
  return "unknown";
}

Stage stage_from_string(const std::string& name) {
  for (Stage s : kPipelineStages) {
    if (to_string(s) == name) return s;
  }
  throw ValidationError("unknown stage '" + name + "'");
}

std::uint64_t stage_seed(const PipelineConfig& config, Stage stage) {
  return derive_seed(config.seed, static_cast<std::uint64_t>(stage));
}

std::vector<std::filesystem::path> run_stage(Stage stage, const PipelineConfig& config,
                                             const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  switch (stage) {
    case Stage::Ingest: return stage_ingest(config, out_dir);
    case Stage::Volatility: return stage_volatility(config, out_dir);
    case Stage::Cluster: return stage_cluster(config, out_dir);
    case Stage::Causal: return stage_causal(config, out_dir);
    case Stage::Lags: return stage_lags(config, out_dir);
    case Stage::Backtest: return stage_backtest(config, out_dir);
  }
  throw ValidationError("unknown stage");
}

std::filesystem::path run_pipeline(const PipelineConfig& config,
                                   const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  // A failing stage aborts with its name and cause; artifacts written by the
  // stages before it stay on disk for inspection.
  for (Stage stage : kPipelineStages) {
    try {
      run_stage(stage, config, out_dir);
    } catch (const ValidationError& e) {
      throw ValidationError("stage '" + to_string(stage) + "' failed: " + e.what());
    } catch (const DataError& e) {
      throw DataError("stage '" + to_string(stage) + "' failed: " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("stage '" + to_string(stage) + "' failed: " + e.what());
    }
  }

  // Aggregate report from the stage artifacts; everything in it is
  // deterministic for a fixed config + inputs + seed.
  const json clusters = load_artifact(out_dir, "clusters.json", "cluster");
  const json causal = load_artifact(out_dir, "causal.json", "causal");
  const json lags = load_artifact(out_dir, "lags.json", "lags");
  const json backtest = load_artifact(out_dir, "backtest.json", "backtest");

  json report;
  report["tool_version"] = kToolVersion;
  report["config_hash"] = config.hash();
  report["seed"] = config.seed;
  report["tickers"] = config.tickers;
  report["tiers"] = clusters.at("tiers");
  report["optimal_lookback"] =
      causal.contains("scan") ? causal.at("scan").at("optimal_lag") : json();
  report["gct_candidates"] =
      causal.contains("scan") ? causal.at("scan").at("candidates") : json::array();
  report["dag_edges"] = causal.contains("graph") ? causal.at("graph").at("edges") : json::array();
  report["final_pairs"] = causal.at("final_pairs");

  json optimal_lags;
  for (const auto& p : lags.at("pairs")) {
    optimal_lags[p.at("leader").get<std::string>() + "->" + p.at("lagger").get<std::string>()] =
        p.at("optimal_lag");
  }
  report["optimal_lags"] = optimal_lags;

  json strategy_summaries = json::array();
  for (const auto& s : backtest.at("strategies")) {
    const json& strat = s.at("strategy");
    const json& bench = s.at("benchmark");
    strategy_summaries.push_back(json{{"pair", s.at("pair")},
                                      {"lag", s.at("lag")},
                                      {"trades", strat.at("trades").size()},
                                      {"metrics", strat.at("metrics")},
                                      {"final_equity", strat.at("equity").at("values").back()},
                                      {"benchmark_metrics", bench.at("metrics")},
                                      {"benchmark_final_equity",
                                       bench.at("equity").at("values").back()},
                                      {"ruined", strat.at("ruined")}});
  }
  report["strategies"] = strategy_summaries;
  report["portfolio"] = backtest.at("portfolio");

  const std::filesystem::path report_path = out_dir / "report.json";
  write_json(report_path, report);
  update_manifest(out_dir, config, "report", {report_path}, 0);
  return report_path;
}

std::vector<std::filesystem::path> run_synth(const PipelineConfig& config,
                                             const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  StageTimer timer;
  SyntheticSpec spec = config.synthetic_spec();
  spec.seed = derive_seed(config.seed, 6);  // the synth stage's own stream
  const std::vector<PriceSeries> universe = generate_synthetic_universe(spec);

  std::vector<std::filesystem::path> written;
  for (const auto& s : universe) {
    const std::filesystem::path path = out_dir / (s.ticker() + ".csv");
    write_file(path, to_csv(s));
    written.push_back(path);
  }
  json edges = json::array();
  for (const auto& e : spec.edges) {
    edges.push_back(json{{"from", e.from}, {"to", e.to}, {"lag", e.lag}, {"strength", e.strength}});
  }
  const json echo = {{"stage", "synth"},
                     {"tickers", spec.tickers},
                     {"bars", spec.bars},
                     {"edges", edges},
                     {"seed", spec.seed},
                     {"default_vol", spec.default_vol},
                     {"start_date", spec.start_date.to_string()}};
  const std::filesystem::path echo_path = out_dir / "synth_spec.json";
  write_json(echo_path, echo);
  written.push_back(echo_path);
  update_manifest(out_dir, config, "synth", written, timer.millis());
  return written;
}

void export_csv_artifacts(const PipelineConfig& config, const std::filesystem::path& out_dir) {
  (void)config;
  // Volatility profiles as CSV.
  if (fs::exists(out_dir / "volatility.json")) {
    const json vol = json::parse(read_file(out_dir / "volatility.json"));
    std::string csv = "ticker,estimator,mean,mean_annualized\n";
    for (const auto& [ticker, entry] : vol.at("profiles").items()) {
      for (VolEstimator e : kAllEstimators) {
        const double m = entry.at("means").at(to_string(e)).get<double>();
        csv += ticker + "," + to_string(e) + "," + std::to_string(m) + "," +
               std::to_string(annualize(m)) + "\n";
      }
    }
    write_file(out_dir / "volatility.csv", csv);
  }
  // Per-lag accuracy curves as CSV.
  if (fs::exists(out_dir / "lags.json")) {
    const json lags = json::parse(read_file(out_dir / "lags.json"));
    std::string csv = "leader,lagger,lag,accuracy,degenerate\n";
    for (const auto& p : lags.at("pairs")) {
      for (const auto& a : p.at("per_lag")) {
        csv += p.at("leader").get<std::string>() + "," + p.at("lagger").get<std::string>() + "," +
               std::to_string(a.at("lag").get<int>()) + ",";
        csv += a.at("accuracy").is_null() ? "" : std::to_string(a.at("accuracy").get<double>());
        csv += std::string(",") + (a.at("degenerate").get<bool>() ? "true" : "false") + "\n";
      }
    }
    write_file(out_dir / "lag_curves.csv", csv);
  }
}

}  // namespace leadlag
