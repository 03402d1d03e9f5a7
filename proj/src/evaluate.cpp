#include "drjcc/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "drjcc/io_util.hpp"
#include "json.hpp"

namespace drjcc {

namespace {

constexpr double kViolationSlack = 1e-6;

const ScenarioProsumer& scenario_for(const ScenarioSet& s, const std::string& id) {
  for (const auto& p : s.prosumers)
    if (p.id == id) return p;
  throw ValidationError("scenario set: missing prosumer '" + id + "'");
}

}  // namespace

BaselineResult run_baseline(const CommunityConfig& config,
                            const ScenarioSet& train, const AmbiguitySpec& amb,
                            const RiskSpec& risk) {
  const auto eps = bonferroni_split(risk, config.size());
  BaselineResult out;
  out.schedules.resize(config.size());
  std::vector<double> objectives(config.size(), 0.0);
  std::vector<std::string> failures(config.size());
  const int threads = resolve_threads();
  const int N = config.size();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int n = 0; n < N; ++n) {
    try {
      auto lp = assemble_local_problem(config, train, n, amb, eps[n], 0.0, false);
      auto sol = qp::solve_qp(lp.qp, 1e-8);
      if (sol.status != qp::SolveStatus::Optimal &&
          !(sol.status == qp::SolveStatus::MaxIter && sol.kkt.max() <= 1e-6)) {
        failures[n] = "baseline: prosumer '" + config.prosumers[n].id + "' " +
                      to_string(sol.status);
      } else {
        out.schedules[n] = extract_schedule(lp.vars, lp.neighbors, sol.x,
                                            config.prosumers[n], config.dt);
        objectives[n] = sol.objective;
      }
    } catch (const std::exception& e) {
      failures[n] = "baseline: prosumer '" + config.prosumers[n].id + "': " + e.what();
    }
  }
  for (const auto& f : failures)
    if (!f.empty()) throw NumericError(f);
  for (double o : objectives) out.objective += o;
  return out;
}

std::vector<ProsumerCostBreakdown> out_of_sample_cost(
    const CommunityConfig& config, const std::vector<DecisionSchedule>& schedules,
    const ScenarioSet& eval, const AmbiguitySpec& amb) {
  if (static_cast<int>(schedules.size()) != config.size())
    throw ValidationError("out_of_sample_cost: schedule count mismatch");
  std::vector<ProsumerCostBreakdown> out(config.size());
  for (int n = 0; n < config.size(); ++n) {
    const auto& cfg = config.prosumers[n];
    const auto& sched = schedules[n];
    const auto& sc = scenario_for(eval, cfg.id);
    ProsumerCostBreakdown c;
    c.da = config.prices.c_p.dot(sched.p);
    for (size_t m = 0; m < sched.neighbors.size(); ++m)
      c.trade += config.prices
                     .pair_price(cfg.id, config.prosumers[sched.neighbors[m]].id)
                     .dot(sched.pe[m]);
    c.battery = cfg.gamma_b * sched.pb.squaredNorm();
    c.shift = cfg.gamma_s * sched.S.tail(config.horizon).squaredNorm();
    const Mat xi = sc.relative_deviations();
    const Vec loss_coeff = sched.Q.transpose() * config.prices.c_q;
    c.wc_rt = worst_case_expectation_value(loss_coeff, xi, amb);
    c.saa_rt = (xi * loss_coeff).mean();
    out[n] = c;
  }
  return out;
}

ViolationReport out_of_sample_violation(const CommunityConfig& config,
                                        const std::vector<DecisionSchedule>& schedules,
                                        const ScenarioSet& eval) {
  ViolationReport rep;
  rep.per_prosumer.assign(config.size(), 0.0);
  for (int n = 0; n < config.size(); ++n) {
    const auto& sched = schedules[n];
    const auto& sc = scenario_for(eval, config.prosumers[n].id);
    const int I = static_cast<int>(sc.deviations.rows());
    // Realized net demand is nominal + deviation; supply adds the recourse.
    const Mat demand = sc.deviations.rowwise() + sc.nominal_net().transpose();
    const Vec base = sched.p + sched.pb - sched.ps + sched.Pe;
    const Mat recourse = sc.relative_deviations() * sched.Q.transpose();
    const Mat slack =
        demand - recourse - (Mat::Zero(I, config.horizon).rowwise() + base.transpose());
    int count = 0;
    for (int i = 0; i < I; ++i)
      if ((slack.row(i).array() > kViolationSlack).any()) ++count;
    rep.per_prosumer[n] = static_cast<double>(count) / I;
    rep.violating_pairs += count;
    rep.total_pairs += I;
  }
  rep.overall = rep.total_pairs ? static_cast<double>(rep.violating_pairs) /
                                      rep.total_pairs
                                : 0.0;
  return rep;
}

ViolationReport out_of_sample_violation_naive(
    const CommunityConfig& config, const std::vector<DecisionSchedule>& schedules,
    const ScenarioSet& eval) {
  ViolationReport rep;
  rep.per_prosumer.assign(config.size(), 0.0);
  for (int n = 0; n < config.size(); ++n) {
    const auto& sched = schedules[n];
    const auto& sc = scenario_for(eval, config.prosumers[n].id);
    const int I = static_cast<int>(sc.deviations.rows());
    int count = 0;
    for (int i = 0; i < I; ++i) {
      bool violated = false;
      for (int t = 0; t < config.horizon && !violated; ++t) {
        const double demand = sc.deviations(i, t) + sc.nominal_net()[t];
        double recourse = 0.0;
        for (int j = 0; j < config.horizon; ++j)
          recourse += sched.Q(t, j) * sc.relative_deviations()(i, j);
        const double supply =
            sched.p[t] + sched.pb[t] - sched.ps[t] + sched.Pe[t] + recourse;
        if (demand - supply > kViolationSlack) violated = true;
      }
      if (violated) ++count;
    }
    rep.per_prosumer[n] = static_cast<double>(count) / I;
    rep.violating_pairs += count;
    rep.total_pairs += I;
  }
  rep.overall = rep.total_pairs ? static_cast<double>(rep.violating_pairs) /
                                      rep.total_pairs
                                : 0.0;
  return rep;
}

Vec aggregate_demand(const std::vector<DecisionSchedule>& schedules, int horizon) {
  Vec agg = Vec::Zero(horizon);
  for (const auto& s : schedules)
    agg += s.p.cwiseMax(0.0);
  return agg;
}

double compute_par(const Vec& aggregate) {
  if ((aggregate.array() < 0).any())
    throw ValidationError("par: aggregate demand must be nonnegative");
  const double mean = aggregate.mean();
  if (mean <= 0.0) throw ValidationError("par: all-zero aggregate demand");
  return aggregate.maxCoeff() / mean;
}

EvaluationReport evaluate_instance(const CommunityConfig& config,
                                   const ScenarioSet& train,
                                   const ScenarioSet& test,
                                   const AmbiguitySpec& amb, const RiskSpec& risk,
                                   const AdmmConfig& admm) {
  EvaluationReport rep;
  rep.train_samples = train.sample_count();
  rep.test_samples = test.sample_count();

  auto baseline = run_baseline(config, train, amb, risk);
  auto proposed = run_admm(config, train, amb, risk, admm);
  if (!proposed.converged)
    std::cerr << "warning: coordination stopped at max_iter with residuals ("
              << proposed.primal_residual << ", " << proposed.aux_residual
              << ")\n";

  const auto base_costs = out_of_sample_cost(config, baseline.schedules, test, amb);
  const auto prop_costs = out_of_sample_cost(config, proposed.schedules, test, amb);
  for (int n = 0; n < config.size(); ++n) {
    rep.total_cost_baseline += base_costs[n].total_saa();
    rep.total_cost_proposed += prop_costs[n].total_saa();
  }
  rep.cost_reduction = 1.0 - rep.total_cost_proposed / rep.total_cost_baseline;
  rep.par_baseline =
      compute_par(aggregate_demand(baseline.schedules, config.horizon));
  rep.par_proposed =
      compute_par(aggregate_demand(proposed.schedules, config.horizon));
  rep.par_reduction = 1.0 - rep.par_proposed / rep.par_baseline;
  rep.violation_probability =
      out_of_sample_violation(config, proposed.schedules, test).overall;
  return rep;
}

std::vector<SweepRow> sweep_rho(const CommunityConfig& config,
                                const ScenarioSet& train, const ScenarioSet& test,
                                std::vector<double> rho_list, const RiskSpec& risk,
                                const AdmmConfig& admm,
                                const ClusterModel* clusters) {
  if (rho_list.size() < 2)
    throw ValidationError("sweep: at least two radii required");
  std::sort(rho_list.begin(), rho_list.end(), std::greater<double>());
  auto last = std::unique(rho_list.begin(), rho_list.end());
  if (last != rho_list.end()) {
    std::cerr << "warning: duplicate radii in sweep list dropped\n";
    rho_list.erase(last, rho_list.end());
  }

  std::vector<SweepRow> rows;
  for (double rho : rho_list) {
    AmbiguitySpec amb = config.ambiguity;
    amb.rho = rho;
    SweepRow row;
    row.rho = rho;
    auto result = run_admm(config, train, amb, risk, admm);
    row.iterations = result.iterations;
    row.converged = result.converged;
    row.in_sample_objective = result.objective;
    const auto costs = out_of_sample_cost(config, result.schedules, test, amb);
    for (int n = 0; n < config.size(); ++n) {
      row.oos_cost_saa += costs[n].total_saa();
      row.oos_cost_wc += costs[n].total_wc();
      if (clusters) {
        const int c = clusters->assignment[n];
        const std::string label = clusters->labels.empty()
                                      ? "cluster" + std::to_string(c)
                                      : clusters->labels[c];
        row.cluster_cost[label] += costs[n].total_saa();
      }
    }
    row.violation = out_of_sample_violation(config, result.schedules, test).overall;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string evaluation_report_to_json(const EvaluationReport& report) {
  nlohmann::json j;
  j["total_cost_baseline"] = report.total_cost_baseline;
  j["total_cost_proposed"] = report.total_cost_proposed;
  j["cost_reduction"] = report.cost_reduction;
  j["par_baseline"] = report.par_baseline;
  j["par_proposed"] = report.par_proposed;
  j["par_reduction"] = report.par_reduction;
  j["violation_probability"] = report.violation_probability;
  j["train_samples"] = report.train_samples;
  j["test_samples"] = report.test_samples;
  j["seed"] = report.seed;
  for (const auto& [label, rho] : report.cluster_rho) j["cluster_rho"][label] = rho;
  if (!report.sweep.empty()) {
    j["sweep"] = nlohmann::json::array();
    for (const auto& row : report.sweep) {
      nlohmann::json r;
      r["rho"] = row.rho;
      r["in_sample_objective"] = row.in_sample_objective;
      r["oos_cost_saa"] = row.oos_cost_saa;
      r["oos_cost_wc"] = row.oos_cost_wc;
      r["violation"] = row.violation;
      r["iterations"] = row.iterations;
      r["converged"] = row.converged;
      for (const auto& [label, cost] : row.cluster_cost)
        r["cluster_cost"][label] = cost;
      j["sweep"].push_back(r);
    }
  }
  return j.dump(2) + "\n";
}

}  // namespace drjcc
