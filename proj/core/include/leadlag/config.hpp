#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "leadlag/date.hpp"
#include "leadlag/synthetic.hpp"

namespace leadlag {

/// Every knob of the pipeline, with the documented defaults. Loaded from a
/// key = value file; any field can be overridden from the command line.
struct PipelineConfig {
  // data
  std::string data_dir;
  std::vector<std::string> tickers;
  std::optional<Date> start_date;
  std::optional<Date> end_date;
  std::optional<Date> train_end;  // model fitting never reads bars after this

  // anomaly filter
  std::size_t anomaly_k = 5;

  // volatility
  std::size_t vol_window = 20;

  // clustering
  int gmm_components = 3;
  int gmm_restarts = 10;
  int gmm_max_iter = 500;
  double gmm_tol = 1e-8;
  std::string gmm_feature_mode = "all";  // all | parkinson | garman_klass | rogers_satchell | yang_zhang

  // Granger scan
  int gct_min_lag = 2;
  int gct_max_lag = 48;
  double gct_significance = 0.01;
  bool causal_on_prices = false;  // literal-reading escape hatch: raw closes instead of log-returns

  // PCMCI refinement
  double pcmci_threshold = 0.15;
  double pcmci_alpha = 0.05;
  int pcmci_max_lag = 5;

  // effective transfer entropy
  int ete_history = 1;
  int ete_bins = 6;
  int ete_shuffles = 50;
  double ete_z_min = 2.0;

  // lag search
  int lag_grid_max = 10;
  int knn_k = 7;
  int knn_feature_width = 3;
  double train_split = 0.8;

  // backtest
  double capital = 1000.0;
  double commission = 9.0;
  int ma_window = 5;
  double risk_free_rate = 0.0;
  double periods_per_year = 252.0;

  // pins the causal stage's output ("A->B,B->C"), bypassing selection
  std::vector<std::string> final_pairs_override;

  std::uint64_t seed = 42;

  // synthetic-universe generation (the `synth` subcommand)
  std::vector<std::string> synth_tickers;
  std::size_t synth_bars = 1000;
  std::vector<std::string> synth_edges;  // "FROM->TO:lag:strength"
  std::vector<std::string> synth_vols;   // "TICKER:sigma"
  double synth_default_vol = 0.02;
  std::string synth_start_date = "2020-01-02";
  int synth_shock_bar = -1;  // -1 disables the planted crash
  double synth_shock_depth = 0.5;
  int synth_shock_length = 2;

  /// Throws ValidationError naming the field and the violated bound.
  void validate() const;

  /// Sets one field by its config-file key; throws ValidationError on an
  /// unknown key or an unparsable value.
  void set(const std::string& key, const std::string& value);

  /// Every field as sorted `key = value` lines (the hashing input).
  std::string canonical_dump() const;

  /// FNV-1a 64-bit hash of canonical_dump(), as 16 hex digits.
  std::string hash() const;

  SyntheticSpec synthetic_spec() const;
};

/// Parses a key = value file ('#' comments, blank lines ignored) on top of
/// the defaults.
PipelineConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64-bit over arbitrary bytes, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace leadlag
