#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drjcc/admm.hpp"
#include "drjcc/clustering.hpp"
#include "drjcc/reformulation.hpp"
#include "drjcc/types.hpp"

namespace drjcc {

struct ProsumerCostBreakdown {
  double da = 0;       // day-ahead grid cost
  double trade = 0;    // bilateral trade cost
  double battery = 0;  // gamma_b ||pb||^2
  double shift = 0;    // gamma_s ||S||^2
  double wc_rt = 0;    // worst-case real-time term on the evaluation samples
  double saa_rt = 0;   // realized mean real-time cost on the evaluation samples

  double total_wc() const { return da + trade + battery + shift + wc_rt; }
  double total_saa() const { return da + trade + battery + shift + saa_rt; }
};

struct BaselineResult {
  std::vector<DecisionSchedule> schedules;
  double objective = 0;  // training objective (sum of local optima)
};

/// Standalone optimization: every trade pinned to zero, no consensus terms,
/// same uncertainty machinery otherwise.
BaselineResult run_baseline(const CommunityConfig& config,
                            const ScenarioSet& train, const AmbiguitySpec& amb,
                            const RiskSpec& risk);

/// First-stage costs plus the worst-case and realized (SAA) real-time terms,
/// evaluated on the given sample set.
std::vector<ProsumerCostBreakdown> out_of_sample_cost(
    const CommunityConfig& config, const std::vector<DecisionSchedule>& schedules,
    const ScenarioSet& eval, const AmbiguitySpec& amb);

struct ViolationReport {
  double overall = 0;  // fraction of (prosumer, sample) pairs violating
  std::vector<double> per_prosumer;
  int violating_pairs = 0;
  int total_pairs = 0;
};

/// A pair counts once when realized net demand exceeds supplied power at any
/// hour (1e-6 slack absorbs solver tolerance).
ViolationReport out_of_sample_violation(const CommunityConfig& config,
                                        const std::vector<DecisionSchedule>& schedules,
                                        const ScenarioSet& eval);
/// Scalar-loop route of the same indicator, kept as a cross-check.
ViolationReport out_of_sample_violation_naive(const CommunityConfig& config,
                                              const std::vector<DecisionSchedule>& schedules,
                                              const ScenarioSet& eval);

/// Aggregate community draw per hour: sum over prosumers of max(0, p_n).
Vec aggregate_demand(const std::vector<DecisionSchedule>& schedules, int horizon);
double compute_par(const Vec& aggregate);

struct SweepRow {
  double rho = 0;
  double in_sample_objective = 0;
  double oos_cost_saa = 0;
  double oos_cost_wc = 0;
  double violation = 0;
  int iterations = 0;
  bool converged = false;
  std::map<std::string, double> cluster_cost;  // label -> SAA cost
};

struct EvaluationReport {
  double total_cost_baseline = 0;  // SAA totals on the evaluation set
  double total_cost_proposed = 0;
  double cost_reduction = 0;  // 1 - proposed/baseline
  double par_baseline = 0;
  double par_proposed = 0;
  double par_reduction = 0;
  double violation_probability = 0;
  int train_samples = 0;
  int test_samples = 0;
  unsigned seed = 0;
  std::vector<SweepRow> sweep;
  std::map<std::string, double> cluster_rho;  // label -> cost-minimizing radius
};

/// Baseline-vs-proposed comparison at the configured radius.
EvaluationReport evaluate_instance(const CommunityConfig& config,
                                   const ScenarioSet& train,
                                   const ScenarioSet& test,
                                   const AmbiguitySpec& amb, const RiskSpec& risk,
                                   const AdmmConfig& admm);

/// Trains at every radius (descending, duplicates dropped with a warning) and
/// evaluates out-of-sample cost and violation; per-cluster columns are filled
/// when a cluster model is given.
std::vector<SweepRow> sweep_rho(const CommunityConfig& config,
                                const ScenarioSet& train, const ScenarioSet& test,
                                std::vector<double> rho_list, const RiskSpec& risk,
                                const AdmmConfig& admm,
                                const ClusterModel* clusters = nullptr);

std::string evaluation_report_to_json(const EvaluationReport& report);

}  // namespace drjcc
