#include "leadlag/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "leadlag/errors.hpp"
#include "leadlag/rng.hpp"

namespace leadlag {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

double log_gaussian_diag(const std::vector<double>& x, const std::vector<double>& mu,
                         const std::vector<double>& var) {
  double lp = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - mu[d];
    lp += -0.5 * (kLog2Pi + std::log(var[d])) - 0.5 * diff * diff / var[d];
  }
  return lp;
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

struct EmState {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> vars;
};

EmState init_state(const std::vector<std::vector<double>>& pts, int k, double floor, Rng& rng) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts[0].size();
  EmState st;
  st.weights.assign(static_cast<std::size_t>(k), 1.0 / k);

  // Farthest-point seeding: random first centre, then repeatedly the point
  // with the largest distance to its nearest chosen centre.
  std::vector<std::size_t> centre_idx;
  centre_idx.push_back(static_cast<std::size_t>(rng() % n));
  while (centre_idx.size() < static_cast<std::size_t>(k)) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t c : centre_idx) nearest = std::min(nearest, sq_dist(pts[i], pts[c]));
      if (nearest > best_d) {
        best_d = nearest;
        best = i;
      }
    }
    centre_idx.push_back(best);
  }
  for (std::size_t c : centre_idx) st.means.push_back(pts[c]);

  std::vector<double> global_var(dim, 0.0), global_mean(dim, 0.0);
  for (const auto& p : pts)
    for (std::size_t d = 0; d < dim; ++d) global_mean[d] += p[d];
  for (std::size_t d = 0; d < dim; ++d) global_mean[d] /= static_cast<double>(n);
  for (const auto& p : pts)
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = p[d] - global_mean[d];
      global_var[d] += diff * diff;
    }
  for (std::size_t d = 0; d < dim; ++d) {
    global_var[d] = std::max(global_var[d] / static_cast<double>(n), floor);
  }
  st.vars.assign(static_cast<std::size_t>(k), global_var);
  return st;
}

struct EmRun {
  EmState state;
  std::vector<double> trace;
  bool converged = false;
};

EmRun run_em(const std::vector<std::vector<double>>& pts, int k, const GmmConfig& cfg, Rng& rng) {
  const std::size_t n = pts.size();
  const std::size_t kk = static_cast<std::size_t>(k);
  EmRun run;
  run.state = init_state(pts, k, cfg.variance_floor, rng);
  EmState& st = run.state;

  std::vector<std::vector<double>> resp(n, std::vector<double>(kk));
  std::vector<double> logp(kk);
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    // E-step
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < kk; ++c) {
        logp[c] = std::log(st.weights[c]) + log_gaussian_diag(pts[i], st.means[c], st.vars[c]);
      }
      const double lse = log_sum_exp(logp);
      ll += lse;
      for (std::size_t c = 0; c < kk; ++c) resp[i][c] = std::exp(logp[c] - lse);
    }
    if (ll + 1e-9 < prev_ll) {
      throw std::logic_error("EM log-likelihood decreased");
    }
    run.trace.push_back(ll);
    if (std::isfinite(prev_ll) && ll - prev_ll < cfg.tol) {
      run.converged = true;
      break;
    }
    prev_ll = ll;

    // M-step
    for (std::size_t c = 0; c < kk; ++c) {
      double rsum = 0.0;
      for (std::size_t i = 0; i < n; ++i) rsum += resp[i][c];
      if (rsum < 1e-12) continue;  // starved component keeps its parameters
      std::vector<double> mu(pts[0].size(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < mu.size(); ++d) mu[d] += resp[i][c] * pts[i][d];
      for (double& m : mu) m /= rsum;
      std::vector<double> var(mu.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < mu.size(); ++d) {
          const double diff = pts[i][d] - mu[d];
          var[d] += resp[i][c] * diff * diff;
        }
      for (double& v : var) v = std::max(v / rsum, cfg.variance_floor);
      st.means[c] = std::move(mu);
      st.vars[c] = std::move(var);
      st.weights[c] = rsum / static_cast<double>(n);
    }
    // Keep the weight simplex exact after any starvation guard.
    double wsum = std::accumulate(st.weights.begin(), st.weights.end(), 0.0);
    for (double& w : st.weights) w /= wsum;
  }
  return run;
}

}  // namespace

double GmmModel::mean_norm(int component) const {
  double s = 0.0;
  for (double m : means[static_cast<std::size_t>(component)]) s += m * m;
  return std::sqrt(s);
}

GmmModel gmm_fit(const std::vector<std::vector<double>>& points, int components,
                 const GmmConfig& config) {
  if (components < 1) throw ValidationError("gmm_fit: components must be >= 1");
  if (points.empty()) throw ValidationError("gmm_fit: no points");
  const std::size_t dim = points[0].size();
  if (dim < 1) throw ValidationError("gmm_fit: feature dimension must be >= 1");
  for (const auto& p : points) {
    if (p.size() != dim) throw ValidationError("gmm_fit: inconsistent feature dimensions");
    for (double v : p) {
      if (!std::isfinite(v)) throw ValidationError("gmm_fit: non-finite feature value");
    }
  }
  std::set<std::vector<double>> distinct(points.begin(), points.end());
  if (distinct.size() < static_cast<std::size_t>(components)) {
    throw ValidationError("gmm_fit: fewer distinct points (" + std::to_string(distinct.size()) +
                          ") than components (" + std::to_string(components) + ")");
  }
  if (config.n_restarts < 1) throw ValidationError("gmm_fit: n_restarts must be >= 1");

  EmRun best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < config.n_restarts; ++r) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(r)));
    EmRun run = run_em(points, components, config, rng);
    const double ll = run.trace.back();
    if (ll > best_ll) {
      best_ll = ll;
      best = std::move(run);
    }
  }

  GmmModel model;
  model.components = components;
  model.dim = dim;
  model.weights = best.state.weights;
  model.means = best.state.means;
  model.variances = best.state.vars;
  model.log_likelihood_trace = best.trace;
  model.converged = best.converged;
  model.seed = config.seed;
  model.final_log_likelihood = best_ll;
  return model;
}

std::vector<double> gmm_responsibilities(const GmmModel& model, const std::vector<double>& point) {
  if (point.size() != model.dim) throw ValidationError("gmm: feature dimension mismatch");
  const std::size_t k = static_cast<std::size_t>(model.components);
  std::vector<double> logp(k);
  for (std::size_t c = 0; c < k; ++c) {
    logp[c] = std::log(model.weights[c]) + log_gaussian_diag(point, model.means[c], model.variances[c]);
  }
  const double lse = log_sum_exp(logp);
  std::vector<double> resp(k);
  for (std::size_t c = 0; c < k; ++c) resp[c] = std::exp(logp[c] - lse);
  return resp;
}

std::string to_string(VolTier tier) {
  switch (tier) {
    case VolTier::Low: return "low";
    case VolTier::Medium: return "medium";
    case VolTier::High: return "high";
  }
  return "unknown";
}

std::optional<VolTier> tier_from_string(const std::string& s) {
  if (s == "low") return VolTier::Low;
  if (s == "medium") return VolTier::Medium;
  if (s == "high") return VolTier::High;
  return std::nullopt;
}

std::vector<ClusterAssignment> gmm_assign(const GmmModel& model,
                                          const std::vector<std::string>& tickers,
                                          const std::vector<std::vector<double>>& points) {
  if (tickers.size() != points.size()) {
    throw ValidationError("gmm_assign: tickers and points differ in length");
  }
  // Rank components by ascending mean magnitude; ties keep the lower id.
  const std::size_t k = static_cast<std::size_t>(model.components);
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return model.mean_norm(a) < model.mean_norm(b);
  });
  std::vector<int> rank_of(k);
  for (std::size_t r = 0; r < k; ++r) rank_of[static_cast<std::size_t>(order[r])] = static_cast<int>(r);

  std::vector<ClusterAssignment> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    ClusterAssignment a;
    a.ticker = tickers[i];
    a.responsibilities = gmm_responsibilities(model, points[i]);
    a.component = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (a.responsibilities[c] > a.responsibilities[static_cast<std::size_t>(a.component)]) {
        a.component = static_cast<int>(c);
      }
    }
    a.rank = rank_of[static_cast<std::size_t>(a.component)];
    if (model.components == 3) {
      a.tier = static_cast<VolTier>(a.rank);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<std::string> select_tier(const std::vector<ClusterAssignment>& assignments,
                                     VolTier tier) {
  std::vector<std::string> out;
  for (const auto& a : assignments) {
    if (a.tier && *a.tier == tier) out.push_back(a.ticker);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<double>> profile_features(const std::vector<VolatilityProfile>& profiles,
                                                  const FeatureMode& mode) {
  std::vector<std::vector<double>> features;
  features.reserve(profiles.size());
  for (const auto& p : profiles) {
    if (mode.all_estimators) {
      features.emplace_back(p.means.begin(), p.means.end());
    } else {
      features.push_back({p.mean_of(mode.single)});
    }
  }
  return features;
}

ClusterResult cluster_profiles(const std::vector<VolatilityProfile>& profiles,
                               const FeatureMode& mode, int components, const GmmConfig& config) {
  std::vector<const VolatilityProfile*> sorted;
  sorted.reserve(profiles.size());
  for (const auto& p : profiles) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const VolatilityProfile* a, const VolatilityProfile* b) { return a->ticker < b->ticker; });

  std::vector<VolatilityProfile> canonical;
  std::vector<std::string> tickers;
  canonical.reserve(sorted.size());
  for (const auto* p : sorted) {
    canonical.push_back(*p);
    tickers.push_back(p->ticker);
  }
  const auto features = profile_features(canonical, mode);
  ClusterResult result;
  result.model = gmm_fit(features, components, config);
  result.assignments = gmm_assign(result.model, tickers, features);
  return result;
}

}  // namespace leadlag
