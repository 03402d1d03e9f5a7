#include "drjcc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace drjcc {

namespace {

// Relative 24-hour shapes: evening-peaked residential, business-hours
// commercial peaking before noon, flat night-heavy industrial, daytime public
// buildings with an early-evening peak. The four feature centroids are kept
// roughly equidistant after min-max normalization so the cluster structure is
// recoverable at k = 4.
const double kResidential[24] = {1.20, 1.20, 1.20, 1.20, 1.20, 1.20,  //
                                 0.90, 0.82, 0.28, 0.28, 0.28, 0.28,  //
                                 0.28, 0.28, 0.28, 0.28, 0.55, 1.35,  //
                                 3.05, 2.30, 1.70, 1.40, 1.35, 1.25};
const double kCommercial[24] = {0.42, 0.42, 0.42, 0.42, 0.42, 0.42,  //
                                0.60, 0.85, 1.45, 1.65, 1.85, 2.05,  //
                                1.85, 1.75, 1.70, 1.60, 1.50, 1.25,  //
                                0.80, 0.62, 0.55, 0.48, 0.44, 0.43};
const double kIndustrial[24] = {1.25, 1.25, 1.25, 1.25, 1.25, 1.25,  //
                                0.94, 0.85, 0.80, 0.85, 0.87, 0.85,  //
                                0.83, 0.85, 0.87, 0.89, 0.94, 1.48,  //
                                0.80, 0.76, 0.74, 0.73, 1.23, 1.25};
const double kPublic[24] = {0.51, 0.51, 0.51, 0.51, 0.51, 0.51,  //
                            0.74, 1.08, 1.07, 1.15, 1.19, 1.15,  //
                            1.11, 1.15, 1.19, 1.15, 1.11, 1.10,  //
                            2.55, 1.70, 1.05, 0.76, 0.61, 0.56};

// Daily energy bands (kWh/day) per archetype; ordering mirrors the reference
// statistics (industrial highest, then commercial, public, residential).
// Scaled so industrial peaks press against the grid-exchange limits, which is
// what gives bilateral trading its value.
const double kDtcLo[4] = {210.0, 260.0, 565.0, 220.0};
const double kDtcHi[4] = {270.0, 315.0, 625.0, 280.0};

double uniform(std::mt19937& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec shape_of(Archetype a, int T) {
  const double* raw = nullptr;
  switch (a) {
    case Archetype::Residential: raw = kResidential; break;
    case Archetype::Commercial: raw = kCommercial; break;
    case Archetype::Industrial: raw = kIndustrial; break;
    case Archetype::Public: raw = kPublic; break;
  }
  Vec s(T);
  for (int t = 0; t < T; ++t) s[t] = raw[t % 24];
  s *= static_cast<double>(T) / s.sum();  // mean 1
  return s;
}

}  // namespace

const std::array<std::string, kArchetypeCount>& archetype_names() {
  static const std::array<std::string, kArchetypeCount> names = {
      "Residential", "Commercial", "Industrial", "Public"};
  return names;
}

const std::array<ArchetypeStats, kArchetypeCount>& archetype_stats() {
  static const std::array<ArchetypeStats, kArchetypeCount> stats = {{
      {"Residential", 6.99, 3.32, 0.49, 1.06, 0.31, 18},
      {"Commercial", 16.61, 2.43, 0.25, 1.73, 0.42, 11},
      {"Industrial", 28.24, 1.76, 0.53, 1.36, 0.57, 17},
      {"Public", 7.52, 2.51, 0.32, 1.37, 0.40, 18},
  }};
  return stats;
}

Vec archetype_shape(Archetype a) { return shape_of(a, 24); }

void GeneratorSpec::validate() const {
  if (prosumers < 1) throw ValidationError("generator: prosumer count must be >= 1");
  if (samples < 1) throw ValidationError("generator: sample count must be >= 1");
  if (horizon < 1) throw ValidationError("generator: horizon must be >= 1");
  double total = 0.0;
  for (double s : shares) {
    if (s < 0.0) throw ValidationError("generator: shares must be nonnegative");
    total += s;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ValidationError("generator: shares must sum to 1");
  if (!(40.0 <= p_cap_lo && p_cap_lo <= p_cap_hi && p_cap_hi <= 60.0))
    throw ValidationError("generator: grid cap window must lie inside [40,60]");
  if (!(10.0 <= pb_cap_lo && pb_cap_lo <= pb_cap_hi && pb_cap_hi <= 40.0))
    throw ValidationError("generator: battery cap window must lie inside [10,40]");
}

std::pair<CommunityConfig, ScenarioSet> generate_synthetic_community(
    const GeneratorSpec& spec, unsigned seed) {
  spec.validate();
  std::mt19937 rng(seed);
  const int N = spec.prosumers;
  const int T = spec.horizon;
  const int I = spec.samples;

  // Largest-remainder allocation of prosumers to archetypes.
  std::array<int, kArchetypeCount> counts{};
  {
    std::array<double, kArchetypeCount> exact{};
    int assigned = 0;
    for (int a = 0; a < kArchetypeCount; ++a) {
      exact[a] = spec.shares[a] * N;
      counts[a] = static_cast<int>(std::floor(exact[a]));
      assigned += counts[a];
    }
    std::array<int, kArchetypeCount> order = {0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
      return exact[x] - std::floor(exact[x]) > exact[y] - std::floor(exact[y]);
    });
    for (int r = 0; assigned < N; ++r, ++assigned) counts[order[r % 4]] += 1;
  }

  CommunityConfig config;
  config.horizon = T;
  config.dt = 1.0;
  config.ambiguity.rho = spec.rho;
  config.ambiguity.support_C = Mat(0, T);
  config.ambiguity.support_d = Vec(0);
  config.risk.epsilon = spec.epsilon;

  // TOU price schedules: peak 17-21, shoulder 7-16, off-peak otherwise.
  const double p_off = uniform(rng, 0.062, 0.075);
  const double p_mid = uniform(rng, 0.082, 0.095);
  const double p_peak = uniform(rng, 0.105, 0.118);
  Vec c_p(T), c_q(T);
  for (int t = 0; t < T; ++t) {
    const int h = t % 24;
    double base = (h >= 17 && h <= 21) ? p_peak : (h >= 7 && h <= 16) ? p_mid : p_off;
    c_p[t] = base;
    c_q[t] = std::min(0.25, base * uniform(rng, 1.5, 1.9));  // c_q >= c_p
  }
  config.prices.c_p = c_p;
  config.prices.c_q = c_q;

  ScenarioSet scenarios;
  std::vector<Archetype> kind(N);
  {
    int n = 0;
    for (int a = 0; a < kArchetypeCount; ++a)
      for (int c = 0; c < counts[a]; ++c) kind[n++] = static_cast<Archetype>(a);
  }

  for (int n = 0; n < N; ++n) {
    const int a = static_cast<int>(kind[n]);
    ProsumerConfig p;
    p.id = "p" + std::to_string(n + 1);
    p.p_max = uniform(rng, spec.p_cap_lo, spec.p_cap_hi);
    p.p_min = -p.p_max;
    p.q_max = uniform(rng, 20.0, 40.0);
    p.q_min = -p.q_max;
    p.pe_max = 5.0;
    p.pe_min = -5.0;
    p.pb_max = uniform(rng, spec.pb_cap_lo, spec.pb_cap_hi);
    p.pb_min = -p.pb_max;
    p.ps_max = uniform(rng, 10.0, 40.0);
    p.E_min = -200.0;
    p.E_max = 200.0;
    p.E_init = 0.0;
    p.S_min = 0.0;
    p.S_max = 200.0;
    p.S_init = 0.0;
    p.eta = uniform(rng, 0.90, 0.98);
    p.gamma_b = uniform(rng, 0.001, 0.006);
    p.gamma_s = uniform(rng, 0.002, 0.01);

    const Vec shape = shape_of(kind[n], T);
    const double band_lo = spec.dtc_lo[a] > 0 ? spec.dtc_lo[a] : kDtcLo[a];
    const double band_hi = spec.dtc_hi[a] > 0 ? spec.dtc_hi[a] : kDtcHi[a];
    const double mean_load = uniform(rng, band_lo, band_hi) / 24.0;
    Vec nominal_shape = shape * mean_load;
    p.ps_ref = (nominal_shape * 0.25).cwiseMin(p.ps_max);

    // PV: daylight bell centered on 12.5 with prosumer-specific amplitude.
    const double pv_amp = mean_load * uniform(rng, 0.6, 1.6);
    Vec pv_shape(T);
    for (int t = 0; t < T; ++t) {
      const int h = t % 24;
      const double g = std::exp(-std::pow(h - 12.5, 2) / (2.0 * 2.8 * 2.8));
      pv_shape[t] = g > 0.02 ? pv_amp * g : 0.0;
    }

    Mat load(I, T), pv(I, T);
    for (int i = 0; i < I; ++i) {
      const double day_factor = uniform(rng, 0.55, 1.10);
      for (int t = 0; t < T; ++t) {
        std::normal_distribution<double> z(0.0, 1.0);
        load(i, t) = std::max(0.0, nominal_shape[t] * (1.0 + spec.load_noise * z(rng)));
        pv(i, t) = std::max(0.0, pv_shape[t] * day_factor * (1.0 + spec.pv_noise * z(rng)));
      }
    }

    config.prosumers.push_back(p);
    scenarios.prosumers.push_back(make_scenario_prosumer(p.id, load, pv));
  }

  // Ring plus random chords; N = 2 collapses to a single edge.
  std::vector<std::pair<int, int>> edges;
  if (N == 2) edges.push_back({0, 1});
  if (N >= 3)
    for (int n = 0; n < N; ++n) edges.push_back({n, (n + 1) % N});
  for (int n = 0; n + 2 < N; ++n)
    for (int m = n + 2; m < N; ++m) {
      if (n == 0 && m == N - 1) continue;  // ring edge
      if (uniform(rng, 0.0, 1.0) < spec.chord_probability) edges.push_back({n, m});
    }
  for (auto [n, m] : edges) {
    config.prosumers[n].neighbors.push_back(config.prosumers[m].id);
    config.prosumers[m].neighbors.push_back(config.prosumers[n].id);
    Vec price(T);
    for (int t = 0; t < T; ++t)
      price[t] = std::clamp(c_p[t] * uniform(rng, 0.5, 0.9), 0.04, 0.16);
    config.prices.c_nm[{config.prosumers[n].id, config.prosumers[m].id}] = price;
    config.prices.c_nm[{config.prosumers[m].id, config.prosumers[n].id}] = price;
  }

  config.validate();
  scenarios.validate(config);
  return {config, scenarios};
}

}  // namespace drjcc
