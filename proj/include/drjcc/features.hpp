#pragma once

#include "drjcc/types.hpp"

namespace drjcc {

/// Load-profile indicators extracted from an average 24-hour consumption
/// series. lf and papr are stored as an exactly reciprocal pair.
struct FeatureVector {
  double ncr = 0;       // night share of energy (10PM-6AM)
  double bhr = 0;       // business-hours share (8AM-6PM) over the uniform 10/24
  double lf = 0;        // mean/peak
  double cv = 0;        // population variance of hourly kW
  int peak_hour = 0;    // argmax, lowest index on ties
  double papr = 0;      // peak/mean
  double dtc = 0;       // total daily consumption, kWh

  /// Flat view in a fixed dimension order, used by the clustering code.
  static constexpr int kDims = 7;
  Eigen::Matrix<double, kDims, 1> as_vector() const;
};

FeatureVector extract_features(const Vec& profile);

/// Representable (lf, papr) pair closest to (mean/peak, peak/mean) whose
/// product is exactly 1.0; raw IEEE quotients can each be off by an ulp.
std::pair<double, double> reciprocal_pair(double mean, double peak);

}  // namespace drjcc
