#pragma once

#include <map>
#include <string>
#include <vector>

#include "drjcc/features.hpp"
#include "drjcc/types.hpp"

namespace drjcc {

struct ClusterModel {
  int k = 0;
  Mat centroids;                    // k x dims, in normalized feature space
  std::vector<int> assignment;      // point index -> cluster
  double wcss = 0;
  std::vector<std::string> labels;  // cluster -> archetype name (after labeling)
  Vec norm_min, norm_max;           // per-feature normalization used

  /// Recomputes the sum of squared normalized distances to assigned centroids.
  double recompute_wcss(const std::vector<FeatureVector>& features) const;
};

/// Best-of-restarts Lloyd k-means on min-max normalized features.
/// Deterministic for a fixed seed; restarts may run in parallel and are merged
/// by (wcss, restart index).
ClusterModel kmeans(const std::vector<FeatureVector>& features, int k,
                    int restarts, unsigned seed);

/// Serial reference path; must produce the same model as kmeans().
ClusterModel kmeans_serial(const std::vector<FeatureVector>& features, int k,
                           int restarts, unsigned seed);

struct ElbowResult {
  int k_star = 0;
  std::vector<int> ks;
  std::vector<double> wcss;
  bool low_confidence = false;  // max second difference < 5% of the first wcss
};

/// Knee rule on a given wcss curve: maximum discrete second difference over
/// interior points, ties to the smallest k.
ElbowResult elbow_rule(const std::vector<int>& ks, const std::vector<double>& wcss);

/// Runs kmeans over the range and applies the knee rule. The range must
/// contain at least one interior point.
ElbowResult elbow_select_k(const std::vector<FeatureVector>& features, int k_lo,
                           int k_hi, int restarts, unsigned seed);

/// Assigns archetype names by minimum-cost injective matching between cluster
/// mean features and the reference archetype rows (k <= 4).
ClusterModel label_clusters(ClusterModel model,
                            const std::vector<FeatureVector>& features);

/// Per-cluster radius: the rho minimizing that cluster's out-of-sample cost;
/// ties prefer the larger (more conservative) radius.
std::map<int, double> assign_cluster_radius(
    const ClusterModel& model,
    const std::map<int, std::map<double, double>>& cost_by_cluster_and_rho);

}  // namespace drjcc
