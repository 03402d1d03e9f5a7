#include "drjcc/admm.hpp"

#include <chrono>
#include <cmath>

#include "drjcc/io_util.hpp"

namespace drjcc {

struct Coordinator::Impl {
  const CommunityConfig& config;
  const ScenarioSet& train;
  AmbiguitySpec amb;
  AdmmConfig admm;
  std::vector<std::vector<int>> neighbor_idx;
  std::vector<double> eps;

  std::vector<LocalProblem> locals;
  std::vector<qp::Workspace> workspaces;
  std::vector<DecisionSchedule> schedules;
  AdmmState state;
  std::map<std::pair<int, int>, Vec> prev_hat;
  int n_directed_edges = 0;

  Impl(const CommunityConfig& c, const ScenarioSet& tr, const AmbiguitySpec& a,
       const RiskSpec& risk, const AdmmConfig& ad)
      : config(c), train(tr), amb(a), admm(ad) {
    config.validate();
    train.validate(config);
    admm.validate();
    neighbor_idx = config.neighbor_indices();
    eps = bonferroni_split(risk, config.size());

    for (int n = 0; n < config.size(); ++n) {
      locals.push_back(assemble_local_problem(config, train, n, amb, eps[n],
                                              admm.sigma, true));
      workspaces.emplace_back(locals[n].qp);
      for (int m : neighbor_idx[n]) {
        state.p[{n, m}] = Vec::Zero(config.horizon);
        state.p_hat[{n, m}] = Vec::Zero(config.horizon);
        state.lambda[{n, m}] = Vec::Zero(config.horizon);
        ++n_directed_edges;
      }
    }
    prev_hat = state.p_hat;
    schedules.resize(config.size());
  }

  void primal_update() {
    const int N = config.size();
    std::vector<std::string> failures(N);
    const int threads = resolve_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (admm.parallel)
    for (int n = 0; n < N; ++n) {
      try {
        std::map<int, Vec> hat_n, lambda_n;
        for (int m : neighbor_idx[n]) {
          hat_n[m] = state.p_hat.at({n, m});
          lambda_n[m] = state.lambda.at({n, m});
        }
        double constant = 0.0;
        Vec q = consensus_linear_cost(locals[n], hat_n, lambda_n, admm.sigma,
                                      &constant);
        workspaces[n].update_linear_cost(q, constant);
        auto sol = workspaces[n].solve({1e-8, 200000});
        if (sol.status != qp::SolveStatus::Optimal &&
            !(sol.status == qp::SolveStatus::MaxIter && sol.kkt.max() <= 1e-6)) {
          failures[n] = "admm: local problem for prosumer '" +
                        config.prosumers[n].id + "' " + to_string(sol.status) +
                        " at iteration " + std::to_string(state.k + 1);
        } else {
          schedules[n] = extract_schedule(locals[n].vars, locals[n].neighbors,
                                          sol.x, config.prosumers[n], config.dt);
        }
      } catch (const std::exception& e) {
        failures[n] = "admm: prosumer '" + config.prosumers[n].id + "': " + e.what();
      }
    }
    for (const auto& f : failures)
      if (!f.empty()) throw NumericError(f);
    // Publish trade proposals to the edge mailboxes (serial, deterministic).
    for (int n = 0; n < N; ++n)
      for (size_t mi = 0; mi < neighbor_idx[n].size(); ++mi)
        state.p[{n, neighbor_idx[n][mi]}] = schedules[n].pe[mi];
  }

  void auxiliary_update() {
    prev_hat = state.p_hat;
    for (int n = 0; n < config.size(); ++n) {
      for (int m : neighbor_idx[n]) {
        if (m <= n) continue;
        const Vec& p_nm = state.p.at({n, m});
        const Vec& p_mn = state.p.at({m, n});
        const Vec& l_nm = state.lambda.at({n, m});
        const Vec& l_mn = state.lambda.at({m, n});
        Vec hat = 0.5 * (p_nm - p_mn) + (l_nm - l_mn) / (2.0 * admm.sigma);
        state.p_hat[{n, m}] = hat;
        state.p_hat[{m, n}] = -hat;
      }
    }
  }

  double dual_update() {
    double step_sum = 0.0;
    for (auto& [edge, l] : state.lambda) {
      const Vec delta = admm.sigma * (state.p.at(edge) - state.p_hat.at(edge));
      l += delta;
      step_sum += delta.norm();
    }
    return step_sum;
  }

  std::pair<double, double> compute_residuals() const {
    double primal = 0.0, aux = 0.0;
    for (const auto& [edge, p] : state.p) {
      primal += (p - state.p_hat.at(edge)).norm();
      aux += (state.p_hat.at(edge) - prev_hat.at(edge)).norm();
    }
    return {primal, admm.sigma * aux};
  }

  double current_objective() const {
    double total = 0.0;
    for (int n = 0; n < config.size(); ++n)
      total += prosumer_objective_value(config, n, schedules[n], train, amb);
    return total;
  }

  double tolerance_scale() const { return std::max(1, n_directed_edges); }

  CoordinationResult run() {
    CoordinationResult result;
    const double tol_p = admm.tol_primal * tolerance_scale();
    const double tol_d = admm.tol_dual * tolerance_scale();
    for (int k = 0; k < admm.max_iter; ++k) {
      const auto start = std::chrono::steady_clock::now();
      primal_update();
      auxiliary_update();
      const double dual_step = dual_update();
      state.k = k + 1;
      auto [primal, aux] = compute_residuals();
      const std::chrono::duration<double> elapsed =
          std::chrono::steady_clock::now() - start;

      AdmmTraceRow row;
      row.iter = state.k;
      row.primal_residual = primal;
      row.aux_residual = aux;
      row.dual_step_sum = dual_step;
      row.objective = current_objective();
      row.seconds = elapsed.count();
      state.trace.push_back(row);

      if (primal <= tol_p && aux <= tol_d) {
        result.converged = true;
        break;
      }
    }
    result.schedules = schedules;
    result.iterations = state.k;
    if (!state.trace.empty()) {
      result.primal_residual = state.trace.back().primal_residual;
      result.aux_residual = state.trace.back().aux_residual;
      result.objective = state.trace.back().objective;
    }
    result.trace = state.trace;
    return result;
  }
};

Coordinator::Coordinator(const CommunityConfig& config, const ScenarioSet& train,
                         const AmbiguitySpec& amb, const RiskSpec& risk,
                         const AdmmConfig& admm)
    : impl_(new Impl(config, train, amb, risk, admm)) {}
Coordinator::~Coordinator() = default;
Coordinator::Coordinator(Coordinator&&) noexcept = default;

void Coordinator::primal_update() { impl_->primal_update(); }
void Coordinator::auxiliary_update() { impl_->auxiliary_update(); }
void Coordinator::dual_update() { impl_->dual_update(); }
std::pair<double, double> Coordinator::compute_residuals() const {
  return impl_->compute_residuals();
}
CoordinationResult Coordinator::run() { return impl_->run(); }
AdmmState& Coordinator::state() { return impl_->state; }
const std::vector<DecisionSchedule>& Coordinator::schedules() const {
  return impl_->schedules;
}
double Coordinator::current_objective() const { return impl_->current_objective(); }
double Coordinator::tolerance_scale() const { return impl_->tolerance_scale(); }

CoordinationResult run_admm(const CommunityConfig& config,
                            const ScenarioSet& train, const AmbiguitySpec& amb,
                            const RiskSpec& risk, const AdmmConfig& admm) {
  Coordinator coord(config, train, amb, risk, admm);
  return coord.run();
}

}  // namespace drjcc
