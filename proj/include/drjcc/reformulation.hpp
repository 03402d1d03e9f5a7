#pragma once

#include <map>
#include <string>
#include <vector>

#include "drjcc/qp_builder.hpp"
#include "drjcc/types.hpp"

namespace drjcc {

/// Splits the joint risk budget into per-prosumer tolerances proportional to
/// the weights; the last entry absorbs rounding so the sum is exact.
std::vector<double> bonferroni_split(const RiskSpec& risk, int n);

/// Exact empirical CVaR at level eps in (0,1]: the minimum over beta of
/// beta + 1/(eps I) sum [x_i - beta]_+, computed by sorting.
double empirical_cvar(std::vector<double> losses, double eps);

/// Variable offsets of a worst-case expectation fragment.
struct WceFragment {
  int lambda = -1;
  int s = -1;
  int gamma = -1;  // -1 when the support is unbounded
};

/// Emits the dual reformulation of sup over the ambiguity ball of E[l' xi],
/// where l_t is given by the affine expressions qc[t] (typically (Q' c_q)_t).
/// Adds rho * lambda + (1/I) sum s_i to the objective. Products of qc with
/// sample data stay linear, so qc may reference decision variables.
WceFragment build_worst_case_expectation(qp::Builder& b,
                                         const std::vector<qp::Affine>& qc,
                                         const Mat& xi, const AmbiguitySpec& amb,
                                         const std::string& prefix);

enum class CvarMode {
  Constraint,  // emit "worst-case CVaR <= 0"
  Value,       // add the worst-case CVaR value to the objective (oracle use)
};

struct CvarFragment {
  int tau = -1;
  int lambda = -1;
  int s = -1;
  int gamma1 = -1;  // support duals of the constant piece
  int gamma2 = -1;  // support duals of the loss piece
};

/// Worst-case CVaR_eps of the affine loss a' xi + b over the ambiguity ball,
/// for one hour. a[j] and b may reference decision variables.
CvarFragment build_cvar_hour(qp::Builder& b, const std::vector<qp::Affine>& a,
                             const qp::Affine& b_term, const Mat& xi,
                             const AmbiguitySpec& amb, double eps,
                             CvarMode mode, const std::string& prefix);

/// Fixed-data helpers used by the evaluation pipeline and as test oracles.
double worst_case_expectation_value(const Vec& loss_coeff, const Mat& xi,
                                    const AmbiguitySpec& amb);
double worst_case_cvar_value(const Vec& a, double b, const Mat& xi,
                             const AmbiguitySpec& amb, double eps);

/// Offsets of one prosumer's decision block inside a builder.
struct ProsumerVars {
  int T = 0;
  int p = -1;
  std::vector<int> pe;  // per neighbor, each a block of T
  int pb = -1;
  int ps = -1;
  int E = -1;  // T+1 entries
  int S = -1;  // T+1 entries
  int Q = -1;  // packed by structure
  RecourseStructure structure = RecourseStructure::Diagonal;

  qp::Affine q_entry(int t, int j) const;  // Q_{t,j} (zero outside structure)
  qp::Affine total_trade(int t) const;     // sum over neighbors of pe[m][t]
};

ProsumerVars add_prosumer_variables(qp::Builder& b, const ProsumerConfig& cfg,
                                    int T, RecourseStructure structure,
                                    int n_neighbors, const std::string& prefix);

/// Shift/state recursions as equalities, initial states pinned, box bounds as
/// inequalities. Reciprocity is not emitted here; the coordinator owns it.
void build_deterministic_constraints(qp::Builder& b, const ProsumerVars& v,
                                     const ProsumerConfig& cfg, double dt);

/// Battery energy closure E_T = E_init: the battery shifts energy across the
/// horizon instead of acting as a net source. Applied by both problem
/// assemblies.
void add_battery_cycling(qp::Builder& b, const ProsumerVars& v,
                         const ProsumerConfig& cfg);

/// Recourse box bounds enforced at every training sample.
void add_recourse_sample_bounds(qp::Builder& b, const ProsumerVars& v,
                                const ProsumerConfig& cfg, const Mat& xi_rel);

struct LocalProblem {
  qp::StandardQP qp;
  ProsumerVars vars;
  std::vector<int> neighbors;  // community indices aligned with vars.pe
  int prosumer = -1;
  double sigma = 0.0;
};

/// Per-prosumer problem with deterministic, recourse, worst-case expectation
/// and CVaR fragments. sigma > 0 adds the quadratic consensus penalty on the
/// trade variables; the linear consensus terms are applied per iteration via
/// consensus_linear_cost. with_trades = false builds the standalone variant
/// with every trade pinned to zero (no pe variables).
LocalProblem assemble_local_problem(const CommunityConfig& config,
                                    const ScenarioSet& train, int n,
                                    const AmbiguitySpec& amb, double eps_n,
                                    double sigma, bool with_trades);

/// Linear cost of the local problem for given auxiliaries and multipliers:
/// adds (lambda - sigma * hat_p) on each trade block; the matching constant
/// sigma/2 ||hat_p||^2 is returned through constant_out.
Vec consensus_linear_cost(const LocalProblem& lp,
                          const std::map<int, Vec>& hat_p,
                          const std::map<int, Vec>& lambda, double sigma,
                          double* constant_out);

/// The local QP with consensus terms folded in (one-shot form).
qp::StandardQP local_qp_with_consensus(const LocalProblem& lp,
                                       const std::map<int, Vec>& hat_p,
                                       const std::map<int, Vec>& lambda,
                                       double sigma);

struct CentralizedProblem {
  qp::StandardQP qp;
  std::vector<ProsumerVars> vars;
  std::vector<std::vector<int>> neighbors;
};

/// All prosumers stacked, reciprocity imposed as explicit equalities, no
/// consensus terms. Serves as the convergence oracle for the coordinator.
CentralizedProblem assemble_centralized_problem(const CommunityConfig& config,
                                                const ScenarioSet& train,
                                                const AmbiguitySpec& amb,
                                                const RiskSpec& risk);

/// First-stage decisions with derived states.
struct DecisionSchedule {
  Vec p, pb, ps;        // length T
  std::vector<Vec> pe;  // aligned with `neighbors`
  std::vector<int> neighbors;
  Mat Q;                // T x T
  Vec E, S;             // length T+1, recomputed from the recursions
  Vec Pe;               // length T

  double feasibility_violation(const ProsumerConfig& cfg) const;
};

DecisionSchedule extract_schedule(const ProsumerVars& vars,
                                  const std::vector<int>& neighbors,
                                  const Vec& x, const ProsumerConfig& cfg,
                                  double dt);

/// J_n evaluated at fixed decisions: day-ahead cost, trade cost, quadratic
/// flexibility costs and the worst-case real-time term on the given samples.
double prosumer_objective_value(const CommunityConfig& config, int n,
                                const DecisionSchedule& sched,
                                const ScenarioSet& scenarios,
                                const AmbiguitySpec& amb);

}  // namespace drjcc
