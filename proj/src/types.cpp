#include "drjcc/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace drjcc {

namespace {

bool finite(double v) { return std::isfinite(v); }

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(msg); }

void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

}  // namespace

void AmbiguitySpec::validate(int horizon) const {
  require(rho >= 0.0, "ambiguity: rho must be >= 0");
  require(support_C.rows() == support_d.size(),
          "ambiguity: support C row count must equal d length");
  if (support_C.rows() > 0) {
    require(support_C.cols() == horizon,
            "ambiguity: support C column count must equal the horizon");
  }
  require(support_C.allFinite() && support_d.allFinite(),
          "ambiguity: support entries must be finite");
}

void RiskSpec::validate(int n_prosumers) const {
  require(epsilon > 0.0 && epsilon < 1.0, "risk: epsilon must lie in (0,1)");
  if (!weights.empty()) {
    require(static_cast<int>(weights.size()) == n_prosumers,
            "risk: weights length must equal the prosumer count");
    for (double w : weights) require(w > 0.0, "risk: weights must be positive");
  }
}

void AdmmConfig::validate() const {
  require(sigma > 0.0, "admm: sigma must be > 0");
  require(tol_primal > 0.0 && tol_dual > 0.0, "admm: tolerances must be > 0");
  require(max_iter >= 1, "admm: max_iter must be >= 1");
}

RecourseStructure recourse_structure_from_string(const std::string& s) {
  if (s == "diagonal") return RecourseStructure::Diagonal;
  if (s == "lower_triangular") return RecourseStructure::LowerTriangular;
  if (s == "full") return RecourseStructure::Full;
  fail("recourse: unknown structure '" + s +
       "' (expected diagonal, lower_triangular or full)");
}

std::string to_string(RecourseStructure s) {
  switch (s) {
    case RecourseStructure::Diagonal: return "diagonal";
    case RecourseStructure::LowerTriangular: return "lower_triangular";
    case RecourseStructure::Full: return "full";
  }
  return "diagonal";
}

void ProsumerConfig::validate(int horizon) const {
  auto ctx = [this](const std::string& what) {
    return "prosumer '" + id + "': " + what;
  };
  require(!id.empty(), "prosumer with empty id");
  require(p_min <= p_max, ctx("p_min must be <= p_max"));
  require(q_min <= q_max, ctx("q_min must be <= q_max"));
  require(pe_min <= pe_max, ctx("pe_min must be <= pe_max"));
  require(pb_min <= pb_max, ctx("pb_min must be <= pb_max"));
  require(ps_max >= 0.0, ctx("ps_max must be >= 0"));
  require(E_min <= E_max, ctx("E_min must be <= E_max"));
  require(S_min <= S_max, ctx("S_min must be <= S_max"));
  require(gamma_b > 0.0, ctx("gamma_b must be positive"));
  require(gamma_s > 0.0, ctx("gamma_s must be positive"));
  require(eta > 0.0 && eta <= 1.0, ctx("eta must lie in (0,1]"));
  require(E_min <= E_init && E_init <= E_max,
          ctx("E_init must lie within [E_min, E_max]"));
  require(S_min <= S_init && S_init <= S_max,
          ctx("S_init must lie within [S_min, S_max]"));
  require(ps_ref.size() == horizon, ctx("ps_ref length must equal the horizon"));
  for (int t = 0; t < ps_ref.size(); ++t) {
    require(finite(ps_ref[t]) && ps_ref[t] >= 0.0 && ps_ref[t] <= ps_max,
            ctx("ps_ref must lie within [0, ps_max] elementwise"));
  }
  std::set<std::string> seen;
  for (const auto& m : neighbors) {
    require(m != id, ctx("cannot neighbor itself"));
    require(seen.insert(m).second, ctx("duplicate neighbor '" + m + "'"));
  }
}

const Vec& PriceSchedule::pair_price(const std::string& from,
                                     const std::string& to) const {
  auto it = c_nm.find({from, to});
  if (it == c_nm.end())
    fail("prices: missing c_nm entry for pair " + from + " -> " + to);
  return it->second;
}

void PriceSchedule::validate(int horizon) const {
  require(c_p.size() == horizon, "prices: c_p length must equal the horizon");
  require(c_q.size() == horizon, "prices: c_q length must equal the horizon");
  require((c_p.array() > 0).all(), "prices: c_p entries must be positive");
  require((c_q.array() > 0).all(), "prices: c_q entries must be positive");
  for (const auto& [pair, v] : c_nm) {
    require(v.size() == horizon, "prices: c_nm length must equal the horizon (" +
                                     pair.first + " -> " + pair.second + ")");
    require((v.array() > 0).all(), "prices: c_nm entries must be positive (" +
                                       pair.first + " -> " + pair.second + ")");
  }
}

int CommunityConfig::index_of(const std::string& id) const {
  for (int i = 0; i < size(); ++i)
    if (prosumers[i].id == id) return i;
  return -1;
}

std::vector<std::vector<int>> CommunityConfig::neighbor_indices() const {
  std::vector<std::vector<int>> out(prosumers.size());
  for (int n = 0; n < size(); ++n) {
    for (const auto& m : prosumers[n].neighbors) out[n].push_back(index_of(m));
  }
  return out;
}

void CommunityConfig::validate() const {
  require(horizon >= 1, "community: horizon must be >= 1");
  require(dt > 0.0, "community: dt must be > 0");
  require(!prosumers.empty(), "community: at least one prosumer required");
  std::set<std::string> ids;
  for (const auto& p : prosumers)
    require(ids.insert(p.id).second, "community: duplicate prosumer id '" + p.id + "'");
  for (const auto& p : prosumers) {
    p.validate(horizon);
    for (const auto& m : p.neighbors) {
      int j = index_of(m);
      require(j >= 0, "prosumer '" + p.id + "': unknown neighbor '" + m + "'");
      const auto& back = prosumers[j].neighbors;
      require(std::find(back.begin(), back.end(), p.id) != back.end(),
              "prosumer '" + p.id + "': neighbor relation with '" + m +
                  "' is not symmetric");
    }
  }
  prices.validate(horizon);
  for (const auto& p : prosumers)
    for (const auto& m : p.neighbors) prices.pair_price(p.id, m);
  admm.validate();
  risk.validate(size());
  ambiguity.validate(horizon);
}

Vec ScenarioProsumer::mu() const {
  return nominal_net().cwiseQuotient(d_scale);
}

Mat ScenarioProsumer::relative_deviations() const {
  return deviations.array().rowwise() / d_scale.transpose().array();
}

int ScenarioSet::sample_count() const {
  return prosumers.empty() ? 0 : static_cast<int>(prosumers[0].deviations.rows());
}

int ScenarioSet::horizon() const {
  return prosumers.empty() ? 0 : static_cast<int>(prosumers[0].deviations.cols());
}

void ScenarioSet::validate(const CommunityConfig& config) const {
  require(static_cast<int>(prosumers.size()) == config.size(),
          "scenario set: prosumer count must match the community");
  for (const auto& s : prosumers) {
    require(config.index_of(s.id) >= 0,
            "scenario set: unknown prosumer '" + s.id + "'");
    require(s.deviations.rows() >= 1,
            "scenario set: prosumer '" + s.id + "' needs at least one sample");
    require(s.deviations.cols() == config.horizon,
            "scenario set: sample length must equal the horizon ('" + s.id + "')");
    require(s.d_scale.size() == config.horizon,
            "scenario set: d_scale length must equal the horizon ('" + s.id + "')");
    require(s.d_scale.allFinite() && (s.d_scale.array() > 0).all(),
            "scenario set: d_scale entries must be positive and finite ('" +
                s.id + "')");
  }
}

ScenarioProsumer make_scenario_prosumer(std::string id, Mat load, Mat pv,
                                        const Vec* fixed_nominal_load,
                                        const Vec* fixed_nominal_pv) {
  if (load.rows() != pv.rows() || load.cols() != pv.cols())
    fail("scenario: load and pv sample shapes differ for '" + id + "'");
  if (load.rows() < 1) fail("scenario: no samples for '" + id + "'");
  ScenarioProsumer out;
  out.id = std::move(id);
  out.load_samples = std::move(load);
  out.pv_samples = std::move(pv);
  if (fixed_nominal_load && fixed_nominal_pv) {
    out.nominal_load = *fixed_nominal_load;
    out.nominal_pv = *fixed_nominal_pv;
  } else {
    out.nominal_load = out.load_samples.colwise().mean();
    out.nominal_pv = out.pv_samples.colwise().mean();
  }
  const Mat net = out.load_samples - out.pv_samples;
  out.deviations = net.rowwise() - out.nominal_net().transpose();
  out.d_scale = out.nominal_net().cwiseAbs().cwiseMax(kScaleFloor);
  return out;
}

}  // namespace drjcc
