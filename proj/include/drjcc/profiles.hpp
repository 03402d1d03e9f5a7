#pragma once

#include <string>
#include <utility>

#include "drjcc/types.hpp"

namespace drjcc {

/// Reads a profile CSV (header: prosumer_id,day,hour,load_kw,pv_kw) and builds
/// per-prosumer nominal profiles and deviation samples. Every prosumer in the
/// config must be covered, every day must span exactly the horizon.
ScenarioSet load_profiles(const std::string& path, const CommunityConfig& config);

ScenarioSet profiles_from_csv_text(const std::string& text,
                                   const CommunityConfig& config);

std::string profiles_to_csv_text(const ScenarioSet& scenarios);
void save_profiles(const ScenarioSet& scenarios, const std::string& path);

/// Disjoint seeded partition of the sample days. Nominals and d_scale are
/// recomputed from the training half; the test half keeps the training
/// nominals so its deviations stay comparable.
std::pair<ScenarioSet, ScenarioSet> split_train_test(const ScenarioSet& s,
                                                     double train_fraction,
                                                     unsigned seed);

}  // namespace drjcc
