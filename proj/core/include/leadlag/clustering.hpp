#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "leadlag/volatility.hpp"

namespace leadlag {

struct GmmConfig {
  int max_iter = 500;
  double tol = 1e-8;          // log-likelihood improvement threshold
  std::uint64_t seed = 0;
  int n_restarts = 10;
  double variance_floor = 1e-10;
};

/// Fitted Gaussian mixture with diagonal covariances.
struct GmmModel {
  int components = 0;
  std::size_t dim = 0;
  std::vector<double> weights;                  // sums to 1
  std::vector<std::vector<double>> means;       // [component][dim]
  std::vector<std::vector<double>> variances;   // [component][dim], floored
  std::vector<double> log_likelihood_trace;     // winning restart, non-decreasing
  bool converged = false;
  std::uint64_t seed = 0;
  double final_log_likelihood = 0.0;

  /// L2 norm of a component's mean vector (the tier-ordering key).
  double mean_norm(int component) const;
};

/// Fits by EM with farthest-point seeding; best of n_restarts by final
/// log-likelihood. Deterministic for a given point order and seed.
GmmModel gmm_fit(const std::vector<std::vector<double>>& points, int components,
                 const GmmConfig& config);

/// Posterior responsibilities of one point (non-negative, sums to 1).
std::vector<double> gmm_responsibilities(const GmmModel& model, const std::vector<double>& point);

enum class VolTier { Low, Medium, High };

std::string to_string(VolTier tier);
std::optional<VolTier> tier_from_string(const std::string& s);

struct ClusterAssignment {
  std::string ticker;
  int component = 0;                   // argmax responsibility, ties -> lower id
  std::vector<double> responsibilities;
  int rank = 0;                        // components ordered by ascending mean norm
  std::optional<VolTier> tier;         // set when the model has 3 components
};

/// Assigns every ticker to its argmax-responsibility component and labels
/// tiers low/medium/high by ascending component mean norm (3-component
/// models only; tier is empty otherwise).
std::vector<ClusterAssignment> gmm_assign(const GmmModel& model,
                                          const std::vector<std::string>& tickers,
                                          const std::vector<std::vector<double>>& points);

/// Tickers assigned to `tier`, sorted lexicographically.
std::vector<std::string> select_tier(const std::vector<ClusterAssignment>& assignments,
                                     VolTier tier);

/// Feature extraction for clustering: either the 4 estimator means or a
/// single estimator's mean per ticker.
struct FeatureMode {
  bool all_estimators = true;
  VolEstimator single = VolEstimator::Parkinson;  // used when !all_estimators
};

std::vector<std::vector<double>> profile_features(const std::vector<VolatilityProfile>& profiles,
                                                  const FeatureMode& mode);

/// Convenience wrapper: canonicalises ticker order (lexicographic), builds
/// features, fits, and assigns. Ticker permutation therefore cannot change
/// any result bit.
struct ClusterResult {
  GmmModel model;
  std::vector<ClusterAssignment> assignments;
};

ClusterResult cluster_profiles(const std::vector<VolatilityProfile>& profiles,
                               const FeatureMode& mode, int components, const GmmConfig& config);

}  // namespace leadlag
