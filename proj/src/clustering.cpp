#include "drjcc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "drjcc/io_util.hpp"
#include "drjcc/synthetic.hpp"

namespace drjcc {

namespace {

constexpr int kDims = FeatureVector::kDims;
constexpr int kMaxLloydIters = 300;

Mat normalize_features(const std::vector<FeatureVector>& features, Vec& lo, Vec& hi) {
  const int n = static_cast<int>(features.size());
  Mat raw(n, kDims);
  for (int i = 0; i < n; ++i) raw.row(i) = features[i].as_vector().transpose();
  lo = raw.colwise().minCoeff();
  hi = raw.colwise().maxCoeff();
  Mat out(n, kDims);
  for (int d = 0; d < kDims; ++d) {
    const double span = hi[d] - lo[d];
    if (span > 0)
      out.col(d) = (raw.col(d).array() - lo[d]) / span;
    else
      out.col(d).setZero();
  }
  return out;
}

struct RestartResult {
  Mat centroids;
  std::vector<int> assignment;
  double wcss = std::numeric_limits<double>::infinity();
  std::vector<double> history;
};

double assign_points(const Mat& pts, const Mat& centroids, std::vector<int>& out) {
  double wcss = 0;
  for (int i = 0; i < pts.rows(); ++i) {
    int best = 0;
    double best_d = (pts.row(i) - centroids.row(0)).squaredNorm();
    for (int c = 1; c < centroids.rows(); ++c) {
      const double d = (pts.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    out[static_cast<size_t>(i)] = best;
    wcss += best_d;
  }
  return wcss;
}

RestartResult lloyd_restart(const Mat& pts, int k, unsigned seed) {
  const int n = static_cast<int>(pts.rows());
  std::mt19937 rng(seed);

  // k-means++ seeding.
  Mat centroids(k, kDims);
  std::uniform_int_distribution<int> first(0, n - 1);
  centroids.row(0) = pts.row(first(rng));
  Vec dist2(n);
  for (int i = 0; i < n; ++i)
    dist2[i] = (pts.row(i) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    int pick = 0;
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      double acc = 0;
      for (int i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centroids.row(c) = pts.row(pick);
    for (int i = 0; i < n; ++i)
      dist2[i] = std::min(dist2[i], (pts.row(i) - centroids.row(c)).squaredNorm());
  }

  RestartResult res;
  res.assignment.resize(n);
  std::vector<int> prev(n, -1);
  double prev_wcss = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kMaxLloydIters; ++iter) {
    const double wcss = assign_points(pts, centroids, res.assignment);
    if (wcss > prev_wcss * (1.0 + 1e-12) + 1e-15)
      throw NumericError("kmeans: wcss increased within a restart");
    res.history.push_back(wcss);
    prev_wcss = wcss;
    if (res.assignment == prev) break;
    prev = res.assignment;

    Mat sums = Mat::Zero(k, kDims);
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(res.assignment[i]) += pts.row(i);
      counts[res.assignment[i]] += 1;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) = sums.row(c) / counts[c];
      } else {
        // Re-seed an empty cluster at the point farthest from its centroid.
        int far = 0;
        double far_d = -1;
        for (int i = 0; i < n; ++i) {
          const double d =
              (pts.row(i) - centroids.row(res.assignment[i])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids.row(c) = pts.row(far);
      }
    }
  }
  res.wcss = assign_points(pts, centroids, res.assignment);
  res.history.push_back(res.wcss);
  res.centroids = centroids;
  return res;
}

}  // namespace

double ClusterModel::recompute_wcss(const std::vector<FeatureVector>& features) const {
  double total = 0;
  for (size_t i = 0; i < features.size(); ++i) {
    Vec v = features[i].as_vector();
    for (int d = 0; d < kDims; ++d) {
      const double span = norm_max[d] - norm_min[d];
      v[d] = span > 0 ? (v[d] - norm_min[d]) / span : 0.0;
    }
    total += (v.transpose() - centroids.row(assignment[i])).squaredNorm();
  }
  return total;
}

namespace {

ClusterModel kmeans_impl(const std::vector<FeatureVector>& features, int k,
                         int restarts, unsigned seed, bool parallel) {
  const int n = static_cast<int>(features.size());
  if (n == 0) throw ValidationError("kmeans: empty feature list");
  if (k < 1 || k > n)
    throw ValidationError("kmeans: k must lie in [1, point count]");
  if (restarts < 1) throw ValidationError("kmeans: restarts must be >= 1");

  Vec lo, hi;
  const Mat pts = normalize_features(features, lo, hi);

  std::vector<RestartResult> results(restarts);
  const int threads = resolve_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (parallel)
  for (int r = 0; r < restarts; ++r)
    results[r] = lloyd_restart(pts, k, seed + 7919u * static_cast<unsigned>(r));

  // Merge deterministically: best wcss, ties to the lowest restart index.
  int best = 0;
  for (int r = 1; r < restarts; ++r)
    if (results[r].wcss < results[best].wcss) best = r;

  ClusterModel model;
  model.k = k;
  model.centroids = results[best].centroids;
  model.assignment = results[best].assignment;
  model.wcss = results[best].wcss;
  model.norm_min = lo;
  model.norm_max = hi;
  return model;
}

}  // namespace

ClusterModel kmeans(const std::vector<FeatureVector>& features, int k,
                    int restarts, unsigned seed) {
  return kmeans_impl(features, k, restarts, seed, true);
}

ClusterModel kmeans_serial(const std::vector<FeatureVector>& features, int k,
                           int restarts, unsigned seed) {
  return kmeans_impl(features, k, restarts, seed, false);
}

ElbowResult elbow_rule(const std::vector<int>& ks, const std::vector<double>& wcss) {
  if (ks.size() != wcss.size() || ks.size() < 3)
    throw ValidationError("elbow: curve needs at least 3 points");
  ElbowResult res;
  res.ks = ks;
  res.wcss = wcss;
  double best_dd = -std::numeric_limits<double>::infinity();
  for (size_t i = 1; i + 1 < wcss.size(); ++i) {
    const double dd = wcss[i - 1] - 2.0 * wcss[i] + wcss[i + 1];
    if (dd > best_dd) {  // strict: ties keep the smallest k
      best_dd = dd;
      res.k_star = ks[i];
    }
  }
  res.low_confidence = best_dd < 0.05 * wcss.front();
  return res;
}

ElbowResult elbow_select_k(const std::vector<FeatureVector>& features, int k_lo,
                           int k_hi, int restarts, unsigned seed) {
  const int n = static_cast<int>(features.size());
  if (k_lo < 1 || k_hi > n || k_lo > k_hi)
    throw ValidationError("elbow: k range must lie within [1, point count]");
  if (k_hi - k_lo + 1 < 3)
    throw ValidationError("elbow: range must contain at least 3 values");

  std::vector<int> ks;
  std::vector<double> wcss;
  for (int k = k_lo; k <= k_hi; ++k) {
    ks.push_back(k);
    wcss.push_back(kmeans(features, k, restarts, seed).wcss);
  }
  return elbow_rule(ks, wcss);
}

ClusterModel label_clusters(ClusterModel model,
                            const std::vector<FeatureVector>& features) {
  if (model.k > kArchetypeCount)
    throw ValidationError("label_clusters: more clusters than archetypes");

  // Cluster means of the six features compared against the archetype rows.
  const int kLabelDims = 6;  // papr, ncr, bhr, lf, dtc, peak_hour
  Mat cluster_mean = Mat::Zero(model.k, kLabelDims);
  std::vector<int> counts(model.k, 0);
  for (size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    const int c = model.assignment[i];
    cluster_mean.row(c) += Eigen::RowVectorXd{
        {f.papr, f.ncr, f.bhr, f.lf, f.dtc, static_cast<double>(f.peak_hour)}};
    counts[c] += 1;
  }
  for (int c = 0; c < model.k; ++c)
    if (counts[c] > 0) cluster_mean.row(c) /= counts[c];

  Mat rows(kArchetypeCount, kLabelDims);
  for (int a = 0; a < kArchetypeCount; ++a) {
    const auto& s = archetype_stats()[a];
    rows.row(a) << s.papr, s.ncr, s.bhr, s.lf, s.dtc, static_cast<double>(s.peak_hour);
  }

  // Min-max over archetype rows and cluster means together keeps both sides
  // inside [0,1] even when the data scale differs from the reference table.
  Vec lo(kLabelDims), hi(kLabelDims);
  for (int d = 0; d < kLabelDims; ++d) {
    lo[d] = std::min(rows.col(d).minCoeff(), cluster_mean.col(d).minCoeff());
    hi[d] = std::max(rows.col(d).maxCoeff(), cluster_mean.col(d).maxCoeff());
  }
  auto normalized = [&](const Mat& m) {
    Mat out = m;
    for (int d = 0; d < kLabelDims; ++d) {
      const double span = hi[d] - lo[d];
      if (span > 0)
        out.col(d) = (m.col(d).array() - lo[d]) / span;
      else
        out.col(d).setZero();
    }
    return out;
  };
  const Mat nm_rows = normalized(rows);
  const Mat nm_clusters = normalized(cluster_mean);

  Mat cost(model.k, kArchetypeCount);
  for (int c = 0; c < model.k; ++c)
    for (int a = 0; a < kArchetypeCount; ++a)
      cost(c, a) = (nm_clusters.row(c) - nm_rows.row(a)).squaredNorm();

  // Exact injective matching by enumeration (at most 4P4 = 24 arrangements).
  std::vector<int> arche(kArchetypeCount);
  std::iota(arche.begin(), arche.end(), 0);
  std::vector<int> best_pick(model.k, 0);
  double best_cost = std::numeric_limits<double>::infinity();
  std::sort(arche.begin(), arche.end());
  do {
    double total = 0;
    for (int c = 0; c < model.k; ++c) total += cost(c, arche[c]);
    if (total < best_cost) {
      best_cost = total;
      for (int c = 0; c < model.k; ++c) best_pick[c] = arche[c];
    }
  } while (std::next_permutation(arche.begin(), arche.end()));

  model.labels.resize(model.k);
  for (int c = 0; c < model.k; ++c)
    model.labels[c] = archetype_names()[best_pick[c]];
  return model;
}

std::map<int, double> assign_cluster_radius(
    const ClusterModel& model,
    const std::map<int, std::map<double, double>>& cost_by_cluster_and_rho) {
  std::map<int, double> out;
  for (int c = 0; c < model.k; ++c) {
    auto it = cost_by_cluster_and_rho.find(c);
    if (it == cost_by_cluster_and_rho.end() || it->second.size() < 2)
      throw ValidationError("cluster radius: sweep must cover >= 2 radii per cluster");
    double best_rho = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& [rho, cost] : it->second) {  // ascending rho
      if (cost <= best_cost) {  // ties keep the larger radius
        best_cost = cost;
        best_rho = rho;
      }
    }
    out[c] = best_rho;
  }
  return out;
}

}  // namespace drjcc
