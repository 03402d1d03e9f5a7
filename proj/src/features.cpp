#include "drjcc/features.hpp"

#include <cmath>

namespace drjcc {

Eigen::Matrix<double, FeatureVector::kDims, 1> FeatureVector::as_vector() const {
  Eigen::Matrix<double, kDims, 1> v;
  v << ncr, bhr, lf, cv, static_cast<double>(peak_hour), papr, dtc;
  return v;
}

std::pair<double, double> reciprocal_pair(double mean, double peak) {
  const double papr0 = peak / mean;
  for (int dp = 0; dp <= 6; ++dp) {
    // Walk papr outward by ulps: 0, +1, -1, +2, -2, ...
    double papr = papr0;
    const int steps = (dp + 1) / 2;
    for (int s = 0; s < steps; ++s)
      papr = std::nextafter(papr, dp % 2 == 1 ? HUGE_VAL : -HUGE_VAL);
    const double lf0 = 1.0 / papr;
    for (double lf : {lf0, std::nextafter(lf0, HUGE_VAL), std::nextafter(lf0, 0.0)}) {
      if (lf * papr == 1.0) return {lf, papr};
    }
  }
  return {mean / peak, papr0};  // unreachable in practice
}

FeatureVector extract_features(const Vec& profile) {
  if (profile.size() != 24)
    throw ValidationError("features: profile must have 24 hours");
  if ((profile.array() < 0).any())
    throw ValidationError("features: profile must be nonnegative");
  const double total = profile.sum();
  if (total <= 0.0)
    throw ValidationError("features: all-zero profile (peak undefined)");

  FeatureVector f;
  f.dtc = total;
  double night = 0, business = 0;
  for (int h = 22; h <= 23; ++h) night += profile[h];
  for (int h = 0; h <= 5; ++h) night += profile[h];
  for (int h = 8; h <= 17; ++h) business += profile[h];
  f.ncr = night / total;
  f.bhr = (business / total) / (10.0 / 24.0);

  const double mean = total / 24.0;
  int peak_hour = 0;
  double peak = profile[0];
  for (int h = 1; h < 24; ++h) {
    if (profile[h] > peak) {
      peak = profile[h];
      peak_hour = h;
    }
  }
  f.peak_hour = peak_hour;
  auto [lf, papr] = reciprocal_pair(mean, peak);
  f.lf = lf;
  f.papr = papr;
  f.cv = (profile.array() - mean).square().sum() / 24.0;
  return f;
}

}  // namespace drjcc
