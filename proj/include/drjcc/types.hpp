#pragma once

#include <Eigen/Dense>

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace drjcc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Wasserstein ball of radius rho around the empirical distribution, with a
/// polytopic support {xi : C xi <= d}. Zero support rows encode an unbounded
/// support. The ground metric is the 1-norm, so every dual-norm constraint
/// becomes a set of inf-norm coordinate inequalities.
struct AmbiguitySpec {
  double rho = 0.0;
  Mat support_C;  // R x T
  Vec support_d;  // R

  int support_rows() const { return static_cast<int>(support_C.rows()); }
  void validate(int horizon) const;
};

struct RiskSpec {
  double epsilon = 0.05;        // joint violation tolerance
  std::vector<double> weights;  // per-prosumer split weights; empty = uniform

  void validate(int n_prosumers) const;
};

struct AdmmConfig {
  double sigma = 0.1;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  int max_iter = 500;
  bool parallel = true;

  void validate() const;
};

enum class RecourseStructure { Diagonal, LowerTriangular, Full };

RecourseStructure recourse_structure_from_string(const std::string& s);
std::string to_string(RecourseStructure s);

struct ProsumerConfig {
  std::string id;
  std::vector<std::string> neighbors;
  double p_min = 0, p_max = 0;    // day-ahead grid exchange bounds (kW)
  double q_min = 0, q_max = 0;    // real-time recourse bounds (kW)
  double pe_min = 0, pe_max = 0;  // per-neighbor trade bounds (kW)
  double pb_min = 0, pb_max = 0;  // battery power bounds (kW)
  double ps_max = 0;              // shiftable load upper bound (kW), lower is 0
  double E_min = 0, E_max = 0;    // state-of-charge bounds (kWh)
  double S_min = 0, S_max = 0;    // shift-state bounds (kWh)
  double E_init = 0, S_init = 0;
  double eta = 1.0;               // battery coefficient
  double gamma_b = 0;             // battery degradation cost ($/kW^2)
  double gamma_s = 0;             // shift disutility cost ($/kWh^2)
  Vec ps_ref;                     // desired shiftable power profile, length T

  void validate(int horizon) const;
};

struct PriceSchedule {
  Vec c_p;  // day-ahead grid price, $/kWh, length T
  Vec c_q;  // real-time grid price, $/kWh, length T
  std::map<std::pair<std::string, std::string>, Vec> c_nm;  // directed pair

  const Vec& pair_price(const std::string& from, const std::string& to) const;
  void validate(int horizon) const;
};

struct CommunityConfig {
  int horizon = 24;
  double dt = 1.0;
  std::vector<ProsumerConfig> prosumers;
  PriceSchedule prices;
  AdmmConfig admm;
  RiskSpec risk;
  AmbiguitySpec ambiguity;
  RecourseStructure recourse = RecourseStructure::Diagonal;

  int size() const { return static_cast<int>(prosumers.size()); }
  int index_of(const std::string& id) const;  // -1 if unknown
  std::vector<std::vector<int>> neighbor_indices() const;
  void validate() const;
};

/// Uncertainty data for one prosumer. Deviations are kept in kW against the
/// nominal net load; mu() and relative_deviations() give the scaled view the
/// reformulation consumes (net power modeled as D (mu + xi)).
struct ScenarioProsumer {
  std::string id;
  Mat load_samples;  // I x T (kW)
  Mat pv_samples;    // I x T (kW)
  Vec nominal_load;  // length T
  Vec nominal_pv;    // length T
  Mat deviations;    // I x T, (load - pv) minus nominal net
  Vec d_scale;       // length T, diagonal of D_n

  Vec nominal_net() const { return nominal_load - nominal_pv; }
  Vec mu() const;
  Mat relative_deviations() const;
};

struct ScenarioSet {
  std::vector<ScenarioProsumer> prosumers;

  int sample_count() const;
  int horizon() const;
  void validate(const CommunityConfig& config) const;
};

/// Floor for D_n diagonal entries; keeps the dual-norm rows meaningful when
/// the nominal net power crosses zero.
constexpr double kScaleFloor = 0.1;

/// Builds the derived fields from raw day samples. When fixed nominals are
/// passed (train/test splits) they are kept and only deviations recompute.
ScenarioProsumer make_scenario_prosumer(std::string id, Mat load, Mat pv,
                                        const Vec* fixed_nominal_load = nullptr,
                                        const Vec* fixed_nominal_pv = nullptr);

}  // namespace drjcc
