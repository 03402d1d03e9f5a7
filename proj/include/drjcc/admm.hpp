#pragma once

#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "drjcc/qp.hpp"
#include "drjcc/reformulation.hpp"
#include "drjcc/types.hpp"

namespace drjcc {

struct AdmmTraceRow {
  int iter = 0;
  double primal_residual = 0;  // sum over edges of ||p_nm - hat_p_nm||_2
  double aux_residual = 0;     // sigma * sum over edges of ||hat_p step||_2
  double dual_step_sum = 0;    // sum over edges of ||lambda step||_2
  double objective = 0;        // true objective at the current schedules
  double seconds = 0;
};

/// Per-edge mailboxes. Only trade proposals, auxiliaries and multipliers
/// cross this seam; loads, PV and internal states never leave a prosumer.
struct AdmmState {
  std::map<std::pair<int, int>, Vec> p;       // directed (n,m) -> length T
  std::map<std::pair<int, int>, Vec> p_hat;   // antisymmetric after updates
  std::map<std::pair<int, int>, Vec> lambda;  // multipliers
  int k = 0;
  std::vector<AdmmTraceRow> trace;
};

struct CoordinationResult {
  std::vector<DecisionSchedule> schedules;
  bool converged = false;
  int iterations = 0;
  double primal_residual = 0;
  double aux_residual = 0;
  double objective = 0;
  std::vector<AdmmTraceRow> trace;
};

/// Two-block consensus coordinator: parallel local solves, closed-form
/// antisymmetric auxiliary update, multiplier step, residual tracking.
class Coordinator {
 public:
  Coordinator(const CommunityConfig& config, const ScenarioSet& train,
              const AmbiguitySpec& amb, const RiskSpec& risk,
              const AdmmConfig& admm);
  ~Coordinator();
  Coordinator(Coordinator&&) noexcept;

  /// Solves every prosumer's local problem against the current auxiliaries
  /// and multipliers; updates trades and schedules. Throws NumericError with
  /// the prosumer id when a local problem fails.
  void primal_update();
  void auxiliary_update();
  void dual_update();
  /// (primal residual, auxiliary residual); requires at least one iteration.
  std::pair<double, double> compute_residuals() const;

  /// Full loop: primal -> auxiliary -> dual until both residuals fall below
  /// the (edge-scaled) tolerances or max_iter. Non-convergence is reported in
  /// the result, never thrown.
  CoordinationResult run();

  AdmmState& state();
  const std::vector<DecisionSchedule>& schedules() const;
  double current_objective() const;
  double tolerance_scale() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

CoordinationResult run_admm(const CommunityConfig& config,
                            const ScenarioSet& train, const AmbiguitySpec& amb,
                            const RiskSpec& risk, const AdmmConfig& admm);

}  // namespace drjcc
