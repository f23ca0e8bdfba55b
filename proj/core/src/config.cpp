#include "leadlag/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "leadlag/errors.hpp"

namespace leadlag {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      const std::string t = trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  const std::string t = trim(cur);
  if (!t.empty()) out.push_back(t);
  return out;
}

std::string join_list(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    out += v[i];
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  T out{};
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ValidationError("config field '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ValidationError("config field '" + key + "': expected a boolean, got '" + value + "'");
}

std::optional<Date> parse_opt_date(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  if (t.empty() || t == "none") return std::nullopt;
  try {
    return Date::parse(t);
  } catch (const DataError& e) {
    throw ValidationError("config field '" + key + "': " + e.what());
  }
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (key == "data_dir") data_dir = trim(value);
  else if (key == "tickers") tickers = split_list(value);
  else if (key == "start_date") start_date = parse_opt_date(key, value);
  else if (key == "end_date") end_date = parse_opt_date(key, value);
  else if (key == "train_end") train_end = parse_opt_date(key, value);
  else if (key == "anomaly_k") anomaly_k = parse_number<std::size_t>(key, value);
  else if (key == "vol_window") vol_window = parse_number<std::size_t>(key, value);
  else if (key == "gmm_components") gmm_components = parse_number<int>(key, value);
  else if (key == "gmm_restarts") gmm_restarts = parse_number<int>(key, value);
  else if (key == "gmm_max_iter") gmm_max_iter = parse_number<int>(key, value);
  else if (key == "gmm_tol") gmm_tol = parse_number<double>(key, value);
  else if (key == "gmm_feature_mode") gmm_feature_mode = trim(value);
  else if (key == "gct_min_lag") gct_min_lag = parse_number<int>(key, value);
  else if (key == "gct_max_lag") gct_max_lag = parse_number<int>(key, value);
  else if (key == "gct_significance") gct_significance = parse_number<double>(key, value);
  else if (key == "causal_on_prices") causal_on_prices = parse_bool(key, value);
  else if (key == "pcmci_threshold") pcmci_threshold = parse_number<double>(key, value);
  else if (key == "pcmci_alpha") pcmci_alpha = parse_number<double>(key, value);
  else if (key == "pcmci_max_lag") pcmci_max_lag = parse_number<int>(key, value);
  else if (key == "ete_history") ete_history = parse_number<int>(key, value);
  else if (key == "ete_bins") ete_bins = parse_number<int>(key, value);
  else if (key == "ete_shuffles") ete_shuffles = parse_number<int>(key, value);
  else if (key == "ete_z_min") ete_z_min = parse_number<double>(key, value);
  else if (key == "lag_grid_max") lag_grid_max = parse_number<int>(key, value);
  else if (key == "knn_k") knn_k = parse_number<int>(key, value);
  else if (key == "knn_feature_width") knn_feature_width = parse_number<int>(key, value);
  else if (key == "train_split") train_split = parse_number<double>(key, value);
  else if (key == "capital") capital = parse_number<double>(key, value);
  else if (key == "commission") commission = parse_number<double>(key, value);
  else if (key == "ma_window") ma_window = parse_number<int>(key, value);
  else if (key == "risk_free_rate") risk_free_rate = parse_number<double>(key, value);
  else if (key == "periods_per_year") periods_per_year = parse_number<double>(key, value);
  else if (key == "final_pairs_override") final_pairs_override = split_list(value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "synth_tickers") synth_tickers = split_list(value);
  else if (key == "synth_bars") synth_bars = parse_number<std::size_t>(key, value);
  else if (key == "synth_edges") synth_edges = split_list(value);
  else if (key == "synth_vols") synth_vols = split_list(value);
  else if (key == "synth_default_vol") synth_default_vol = parse_number<double>(key, value);
  else if (key == "synth_start_date") synth_start_date = trim(value);
  else if (key == "synth_shock_bar") synth_shock_bar = parse_number<int>(key, value);
  else if (key == "synth_shock_depth") synth_shock_depth = parse_number<double>(key, value);
  else if (key == "synth_shock_length") synth_shock_length = parse_number<int>(key, value);
  else throw ValidationError("unknown config key '" + key + "'");
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& bound) {
    throw ValidationError("config field '" + field + "' " + bound);
  };
  if (anomaly_k < 1) fail("anomaly_k", "must be >= 1");
  if (vol_window < 2) fail("vol_window", "must be >= 2");
  if (gmm_components < 1) fail("gmm_components", "must be >= 1");
  if (gmm_restarts < 1) fail("gmm_restarts", "must be >= 1");
  if (gmm_max_iter < 1) fail("gmm_max_iter", "must be >= 1");
  if (!(gmm_tol > 0.0)) fail("gmm_tol", "must be > 0");
  if (gmm_feature_mode != "all" && gmm_feature_mode != "parkinson" &&
      gmm_feature_mode != "garman_klass" && gmm_feature_mode != "rogers_satchell" &&
      gmm_feature_mode != "yang_zhang") {
    fail("gmm_feature_mode", "must be one of all|parkinson|garman_klass|rogers_satchell|yang_zhang");
  }
  if (gct_min_lag < 1) fail("gct_min_lag", "must be >= 1");
  if (gct_max_lag < gct_min_lag) fail("gct_max_lag", "must be >= gct_min_lag");
  if (!(gct_significance > 0.0 && gct_significance < 1.0)) fail("gct_significance", "must be in (0, 1)");
  if (!(pcmci_threshold >= 0.0 && pcmci_threshold <= 1.0)) fail("pcmci_threshold", "must be in [0, 1]");
  if (!(pcmci_alpha > 0.0 && pcmci_alpha < 1.0)) fail("pcmci_alpha", "must be in (0, 1)");
  if (pcmci_max_lag < 1) fail("pcmci_max_lag", "must be >= 1");
  if (ete_history < 1) fail("ete_history", "must be >= 1");
  if (ete_bins < 2) fail("ete_bins", "must be >= 2");
  if (ete_shuffles < 20) fail("ete_shuffles", "must be >= 20");
  if (!(ete_z_min >= 0.0)) fail("ete_z_min", "must be >= 0");
  if (lag_grid_max < 1) fail("lag_grid_max", "must be >= 1");
  if (knn_k < 1) fail("knn_k", "must be >= 1");
  if (knn_feature_width < 1) fail("knn_feature_width", "must be >= 1");
  if (!(train_split > 0.0 && train_split < 1.0)) fail("train_split", "must be in (0, 1)");
  if (commission < 0.0) fail("commission", "must be >= 0");
  if (!(capital > commission)) fail("capital", "must exceed the commission");
  if (ma_window < 1) fail("ma_window", "must be >= 1");
  if (!(periods_per_year > 0.0)) fail("periods_per_year", "must be > 0");
  if (start_date && end_date && *end_date < *start_date) fail("end_date", "must be >= start_date");
  if (synth_bars < 20) fail("synth_bars", "must be >= 20");
  if (!(synth_default_vol > 0.0)) fail("synth_default_vol", "must be > 0");
  if (synth_shock_bar >= 0 && synth_shock_length < 1) fail("synth_shock_length", "must be >= 1");
  if (synth_shock_bar >= 0 && !(synth_shock_depth > 0.0)) fail("synth_shock_depth", "must be > 0");
}

std::string PipelineConfig::canonical_dump() const {
  std::map<std::string, std::string> kv;
  kv["data_dir"] = data_dir;
  kv["tickers"] = join_list(tickers);
  kv["start_date"] = start_date ? start_date->to_string() : "none";
  kv["end_date"] = end_date ? end_date->to_string() : "none";
  kv["train_end"] = train_end ? train_end->to_string() : "none";
  kv["anomaly_k"] = std::to_string(anomaly_k);
  kv["vol_window"] = std::to_string(vol_window);
  kv["gmm_components"] = std::to_string(gmm_components);
  kv["gmm_restarts"] = std::to_string(gmm_restarts);
  kv["gmm_max_iter"] = std::to_string(gmm_max_iter);
  kv["gmm_tol"] = format_double(gmm_tol);
  kv["gmm_feature_mode"] = gmm_feature_mode;
  kv["gct_min_lag"] = std::to_string(gct_min_lag);
  kv["gct_max_lag"] = std::to_string(gct_max_lag);
  kv["gct_significance"] = format_double(gct_significance);
  kv["causal_on_prices"] = causal_on_prices ? "true" : "false";
  kv["pcmci_threshold"] = format_double(pcmci_threshold);
  kv["pcmci_alpha"] = format_double(pcmci_alpha);
  kv["pcmci_max_lag"] = std::to_string(pcmci_max_lag);
  kv["ete_history"] = std::to_string(ete_history);
  kv["ete_bins"] = std::to_string(ete_bins);
  kv["ete_shuffles"] = std::to_string(ete_shuffles);
  kv["ete_z_min"] = format_double(ete_z_min);
  kv["lag_grid_max"] = std::to_string(lag_grid_max);
  kv["knn_k"] = std::to_string(knn_k);
  kv["knn_feature_width"] = std::to_string(knn_feature_width);
  kv["train_split"] = format_double(train_split);
  kv["capital"] = format_double(capital);
  kv["commission"] = format_double(commission);
  kv["ma_window"] = std::to_string(ma_window);
  kv["risk_free_rate"] = format_double(risk_free_rate);
  kv["periods_per_year"] = format_double(periods_per_year);
  kv["final_pairs_override"] = join_list(final_pairs_override);
  kv["seed"] = std::to_string(seed);
  kv["synth_tickers"] = join_list(synth_tickers);
  kv["synth_bars"] = std::to_string(synth_bars);
  kv["synth_edges"] = join_list(synth_edges);
  kv["synth_vols"] = join_list(synth_vols);
  kv["synth_default_vol"] = format_double(synth_default_vol);
  kv["synth_start_date"] = synth_start_date;
  kv["synth_shock_bar"] = std::to_string(synth_shock_bar);
  kv["synth_shock_depth"] = format_double(synth_shock_depth);
  kv["synth_shock_length"] = std::to_string(synth_shock_length);

  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += " = ";
    out += v;
    out.push_back('\n');
  }
  return out;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string PipelineConfig::hash() const { return fnv1a_hex(canonical_dump()); }

SyntheticSpec PipelineConfig::synthetic_spec() const {
  SyntheticSpec spec;
  spec.tickers = synth_tickers.empty() ? tickers : synth_tickers;
  spec.bars = synth_bars;
  spec.seed = seed;
  spec.default_vol = synth_default_vol;
  spec.start_date = Date::parse(synth_start_date);
  spec.shock_bar = synth_shock_bar;
  spec.shock_depth = synth_shock_depth;
  spec.shock_length = synth_shock_length;

  for (const auto& s : synth_edges) {
    // FROM->TO:lag:strength
    const auto arrow = s.find("->");
    const auto colon1 = s.find(':', arrow == std::string::npos ? 0 : arrow);
    const auto colon2 = colon1 == std::string::npos ? std::string::npos : s.find(':', colon1 + 1);
    if (arrow == std::string::npos || colon1 == std::string::npos || colon2 == std::string::npos) {
      throw ValidationError("config field 'synth_edges': expected FROM->TO:lag:strength, got '" + s + "'");
    }
    PlantedEdge e;
    e.from = trim(s.substr(0, arrow));
    e.to = trim(s.substr(arrow + 2, colon1 - arrow - 2));
    e.lag = parse_number<int>("synth_edges", s.substr(colon1 + 1, colon2 - colon1 - 1));
    e.strength = parse_number<double>("synth_edges", s.substr(colon2 + 1));
    spec.edges.push_back(std::move(e));
  }
  for (const auto& s : synth_vols) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) {
      throw ValidationError("config field 'synth_vols': expected TICKER:sigma, got '" + s + "'");
    }
    spec.per_ticker_vol[trim(s.substr(0, colon))] =
        parse_number<double>("synth_vols", s.substr(colon + 1));
  }
  return spec;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  PipelineConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": expected key = value");
    }
    try {
      cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

}  // namespace leadlag
