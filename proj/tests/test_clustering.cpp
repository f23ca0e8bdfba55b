#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "leadlag/clustering.hpp"
#include "leadlag/errors.hpp"
#include "leadlag/rng.hpp"

using namespace leadlag;

namespace {

// Three tight 1-D clusters; returns points plus their true cluster rank.
std::pair<std::vector<std::vector<double>>, std::vector<int>> three_clusters(
    std::uint64_t seed, int per_cluster, double spread = 0.001) {
  const double centres[3] = {0.01, 0.05, 0.20};
  Rng rng(seed);
  std::vector<std::vector<double>> pts;
  std::vector<int> truth;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_cluster; ++i) {
      pts.push_back({centres[c] + spread * normal(rng)});
      truth.push_back(c);
    }
  }
  return {pts, truth};
}

}  // namespace

TEST_CASE("gmm_fit with K = 1 recovers the sample moments") {
  const std::vector<std::vector<double>> pts = {{1.0}, {2.0}, {3.0}, {6.0}};
  GmmConfig cfg;
  cfg.n_restarts = 1;
  const GmmModel m = gmm_fit(pts, 1, cfg);
  CHECK(m.weights[0] == doctest::Approx(1.0));
  CHECK(m.means[0][0] == doctest::Approx(3.0).epsilon(1e-9));
  // Biased (1/N) variance: mean 3, squared deviations 4+1+0+9 = 14, /4 = 3.5.
  CHECK(m.variances[0][0] == doctest::Approx(3.5).epsilon(1e-9));
}

TEST_CASE("gmm_fit validation") {
  GmmConfig cfg;
  CHECK_THROWS_AS(gmm_fit({}, 1, cfg), ValidationError);
  CHECK_THROWS_AS(gmm_fit({{1.0}, {2.0}}, 3, cfg), ValidationError);
  CHECK_THROWS_AS(gmm_fit({{1.0}, {1.0}, {1.0}}, 2, cfg), ValidationError);  // not distinct
  CHECK_THROWS_AS(gmm_fit({{1.0}, {std::nan("")}}, 1, cfg), ValidationError);
  CHECK_THROWS_AS(gmm_fit({{1.0}, {1.0, 2.0}}, 1, cfg), ValidationError);
}

TEST_CASE("gmm_fit recovers three separated 1-D clusters") {
  const auto [pts, truth] = three_clusters(20250807, 20);
  GmmConfig cfg;
  cfg.seed = 1;
  const GmmModel m = gmm_fit(pts, 3, cfg);
  CHECK(m.converged);

  std::vector<double> centres = {m.means[0][0], m.means[1][0], m.means[2][0]};
  std::sort(centres.begin(), centres.end());
  CHECK(centres[0] == doctest::Approx(0.01).epsilon(0.5));
  CHECK(std::fabs(centres[0] - 0.01) < 0.005);
  CHECK(std::fabs(centres[1] - 0.05) < 0.005);
  CHECK(std::fabs(centres[2] - 0.20) < 0.005);

  // Log-likelihood trace is non-decreasing within tolerance.
  for (std::size_t i = 1; i < m.log_likelihood_trace.size(); ++i) {
    CHECK(m.log_likelihood_trace[i] >= m.log_likelihood_trace[i - 1] - 1e-9);
  }

  // Weight simplex.
  double wsum = 0.0;
  for (double w : m.weights) {
    CHECK(w > 0.0);
    wsum += w;
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("assignment accuracy over 50 seeds on well-separated clusters") {
  int correct = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto [pts, truth] = three_clusters(1000 + seed, 20);
    GmmConfig cfg;
    cfg.seed = seed;
    const GmmModel m = gmm_fit(pts, 3, cfg);

    std::vector<std::string> names(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) names[i] = "P" + std::to_string(i);
    const auto assignments = gmm_assign(m, names, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      correct += assignments[i].rank == truth[i];
      ++total;
    }
  }
  CHECK(static_cast<double>(correct) / total >= 0.99);
}

TEST_CASE("gmm_assign details") {
  GmmModel m;
  m.components = 2;
  m.dim = 1;
  m.weights = {0.5, 0.5};
  m.means = {{1.0}, {3.0}};
  m.variances = {{0.25}, {0.25}};

  SUBCASE("point at a component mean of a well-separated model") {
    const auto resp = gmm_responsibilities(m, {1.0});
    CHECK(resp[0] > 0.99);
    CHECK(resp[0] + resp[1] == doctest::Approx(1.0).epsilon(1e-9));
    for (double r : resp) CHECK(r >= 0.0);
  }
  SUBCASE("equidistant point splits 0.5/0.5 and ties break to the lower id") {
    const auto a = gmm_assign(m, {"X"}, {{2.0}});
    CHECK(a[0].responsibilities[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a[0].responsibilities[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a[0].component == 0);
    CHECK(!a[0].tier);  // tiers need 3 components
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(gmm_assign(m, {"X"}, {{1.0, 2.0}}), ValidationError);
  }
}

TEST_CASE("tier labels follow the component mean ordering") {
  const auto [pts, truth] = three_clusters(7, 12);
  GmmConfig cfg;
  cfg.seed = 3;
  const GmmModel m = gmm_fit(pts, 3, cfg);
  std::vector<std::string> names(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) names[i] = "T" + std::to_string(i);
  const auto assignments = gmm_assign(m, names, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    REQUIRE(assignments[i].tier.has_value());
    const VolTier expected =
        truth[i] == 0 ? VolTier::Low : (truth[i] == 1 ? VolTier::Medium : VolTier::High);
    CHECK(*assignments[i].tier == expected);
  }

  const auto medium = select_tier(assignments, VolTier::Medium);
  CHECK(medium.size() == 12);
  CHECK(std::is_sorted(medium.begin(), medium.end()));
  CHECK(select_tier({}, VolTier::Low).empty());
}

TEST_CASE("ticker permutation cannot change any responsibility bit") {
  const auto [pts, truth] = three_clusters(99, 6);
  (void)truth;
  std::vector<VolatilityProfile> profiles(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    profiles[i].ticker = "T" + std::to_string(i);
    profiles[i].means = {pts[i][0], pts[i][0] * 1.1, pts[i][0] * 0.9, pts[i][0]};
  }
  GmmConfig cfg;
  cfg.seed = 5;
  FeatureMode mode;
  const ClusterResult base = cluster_profiles(profiles, mode, 3, cfg);

  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    shuffle_inplace(profiles, rng);
    const ClusterResult shuffled = cluster_profiles(profiles, mode, 3, cfg);
    REQUIRE(shuffled.assignments.size() == base.assignments.size());
    for (std::size_t i = 0; i < base.assignments.size(); ++i) {
      CHECK(shuffled.assignments[i].ticker == base.assignments[i].ticker);
      CHECK(shuffled.assignments[i].component == base.assignments[i].component);
      CHECK(shuffled.assignments[i].responsibilities == base.assignments[i].responsibilities);
    }
  }
}

TEST_CASE("feature scaling rescales means and keeps assignments") {
  const auto [pts, truth] = three_clusters(31, 15);
  GmmConfig cfg;
  cfg.seed = 11;
  const GmmModel base = gmm_fit(pts, 3, cfg);
  std::vector<std::string> names(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) names[i] = "N" + std::to_string(i);
  const auto base_assign = gmm_assign(base, names, pts);

  const double c = 100.0;
  std::vector<std::vector<double>> scaled = pts;
  for (auto& p : scaled) p[0] *= c;
  const GmmModel scaled_model = gmm_fit(scaled, 3, cfg);
  const auto scaled_assign = gmm_assign(scaled_model, names, scaled);

  std::vector<double> base_means = {base.means[0][0], base.means[1][0], base.means[2][0]};
  std::vector<double> scaled_means = {scaled_model.means[0][0], scaled_model.means[1][0],
                                      scaled_model.means[2][0]};
  std::sort(base_means.begin(), base_means.end());
  std::sort(scaled_means.begin(), scaled_means.end());
  for (int i = 0; i < 3; ++i) {
    CHECK(scaled_means[static_cast<std::size_t>(i)] ==
          doctest::Approx(c * base_means[static_cast<std::size_t>(i)]).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(scaled_assign[i].rank == base_assign[i].rank);
  }
  (void)truth;
}

TEST_CASE("single-estimator feature mode produces 1-D features") {
  VolatilityProfile p;
  p.ticker = "A";
  p.means = {0.01, 0.02, 0.03, 0.04};
  FeatureMode mode;
  mode.all_estimators = false;
  mode.single = VolEstimator::RogersSatchell;
  const auto f = profile_features({p}, mode);
  REQUIRE(f.size() == 1);
  REQUIRE(f[0].size() == 1);
  CHECK(f[0][0] == 0.03);
  const auto f4 = profile_features({p}, FeatureMode{});
  CHECK(f4[0].size() == 4);
}
