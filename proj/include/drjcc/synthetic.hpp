#pragma once

#include <array>
#include <string>
#include <utility>

#include "drjcc/types.hpp"

namespace drjcc {

/// Consumption archetypes used by the generator and the cluster labeler.
enum class Archetype { Residential, Commercial, Industrial, Public };
constexpr int kArchetypeCount = 4;
const std::array<std::string, kArchetypeCount>& archetype_names();

/// Reference per-archetype statistics used to label clusters:
/// (dtc kWh, papr, ncr, bhr, lf, peak hour).
struct ArchetypeStats {
  std::string name;
  double dtc, papr, ncr, bhr, lf;
  int peak_hour;
};
const std::array<ArchetypeStats, kArchetypeCount>& archetype_stats();

/// 24-hour relative load shape of an archetype (mean 1).
Vec archetype_shape(Archetype a);

struct GeneratorSpec {
  int prosumers = 10;
  std::array<double, kArchetypeCount> shares = {0.4, 0.2, 0.2, 0.2};
  int samples = 30;  // scenario days
  int horizon = 24;
  double rho = 0.03;
  double epsilon = 0.05;
  double chord_probability = 0.3;  // extra edges beyond the base ring
  double load_noise = 0.08;        // per-cell multiplicative noise
  double pv_noise = 0.10;

  // Sampling windows, clamped to the documented parameter ranges. Narrower
  // windows make capacity scarce, which is what gives trading value.
  double p_cap_lo = 40.0, p_cap_hi = 60.0;    // |grid exchange| in [40,60]
  double pb_cap_lo = 10.0, pb_cap_hi = 40.0;  // |battery power| in [10,40]
  std::array<double, kArchetypeCount> dtc_lo{}, dtc_hi{};  // 0 = default band

  void validate() const;
};

/// Deterministic synthetic community: bounds drawn inside the documented
/// parameter ranges, archetype-shaped loads, daylight-bell PV with
/// multiplicative noise, TOU prices with c_q >= c_p per hour.
std::pair<CommunityConfig, ScenarioSet> generate_synthetic_community(
    const GeneratorSpec& spec, unsigned seed);

}  // namespace drjcc
