#include "drjcc/reformulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace drjcc {

using qp::Affine;
using qp::Builder;

std::vector<double> bonferroni_split(const RiskSpec& risk, int n) {
  if (n < 1) throw ValidationError("bonferroni: prosumer count must be >= 1");
  risk.validate(n);
  std::vector<double> w = risk.weights;
  if (w.empty()) w.assign(n, 1.0);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> eps(n);
  double used = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    eps[i] = risk.epsilon * w[i] / total;
    used += eps[i];
  }
  eps[n - 1] = risk.epsilon - used;  // exact sum, last entry absorbs rounding
  for (double e : eps)
    if (!(e > 0.0 && e < 1.0))
      throw ValidationError("bonferroni: split tolerance outside (0,1)");
  return eps;
}

double empirical_cvar(std::vector<double> losses, double eps) {
  if (losses.empty()) throw ValidationError("cvar: empty sample set");
  if (!(eps > 0.0 && eps <= 1.0))
    throw ValidationError("cvar: level must lie in (0,1]");
  std::sort(losses.begin(), losses.end(), std::greater<double>());
  const double m = eps * static_cast<double>(losses.size());
  const int k = std::min(static_cast<int>(std::floor(m)),
                         static_cast<int>(losses.size()));
  double acc = 0.0;
  for (int i = 0; i < k; ++i) acc += losses[i];
  if (k < static_cast<int>(losses.size())) acc += (m - k) * losses[k];
  return acc / m;
}

namespace {

// d_r - C_r' xi_hat_i for support row r, sample i.
double support_slack(const AmbiguitySpec& amb, const Mat& xi, int i, int r) {
  return amb.support_d[r] - amb.support_C.row(r).dot(xi.row(i));
}

}  // namespace

WceFragment build_worst_case_expectation(Builder& b,
                                         const std::vector<Affine>& qc,
                                         const Mat& xi, const AmbiguitySpec& amb,
                                         const std::string& prefix) {
  const int I = static_cast<int>(xi.rows());
  const int T = static_cast<int>(xi.cols());
  if (static_cast<int>(qc.size()) != T)
    throw ValidationError("wce: coefficient count must equal the horizon");
  if (I < 1) throw ValidationError("wce: at least one sample required");
  const int R = amb.support_rows();

  WceFragment f;
  f.lambda = b.add_vars(prefix + ".lambda", 1);
  f.s = b.add_vars(prefix + ".s", I);
  if (R > 0) f.gamma = b.add_vars(prefix + ".gamma", I * R);
  b.add_bounds(f.lambda, 0.0, std::numeric_limits<double>::infinity());
  if (R > 0)
    for (int g = 0; g < I * R; ++g)
      b.add_bounds(f.gamma + g, 0.0, std::numeric_limits<double>::infinity());

  b.add_linear(f.lambda, amb.rho);
  for (int i = 0; i < I; ++i) b.add_linear(f.s + i, 1.0 / I);

  for (int i = 0; i < I; ++i) {
    Affine row;
    for (int t = 0; t < T; ++t) row.add(qc[t], xi(i, t));
    for (int r = 0; r < R; ++r)
      row.add(f.gamma + i * R + r, support_slack(amb, xi, i, r));
    row.add(f.s + i, -1.0);
    b.add_ineq(row, 0.0);
  }

  // Dual-norm rows: |(C' gamma_i - qc)_j| <= lambda. Sample-independent when
  // the support is unbounded, so emit once in that case.
  const int norm_reps = R > 0 ? I : 1;
  for (int i = 0; i < norm_reps; ++i) {
    for (int j = 0; j < T; ++j) {
      if (R == 0 && qc[j].is_constant() && qc[j].constant == 0.0) continue;
      Affine inner;
      for (int r = 0; r < R; ++r)
        inner.add(f.gamma + i * R + r, amb.support_C(r, j));
      inner.add(qc[j], -1.0);
      Affine up = inner;
      up.add(f.lambda, -1.0);
      b.add_ineq(up, 0.0);
      Affine down = inner * -1.0;
      down.add(f.lambda, -1.0);
      b.add_ineq(down, 0.0);
    }
  }
  return f;
}

CvarFragment build_cvar_hour(Builder& b, const std::vector<Affine>& a,
                             const Affine& b_term, const Mat& xi,
                             const AmbiguitySpec& amb, double eps,
                             CvarMode mode, const std::string& prefix) {
  if (!(eps > 0.0 && eps < 1.0))
    throw ValidationError("cvar constraint: epsilon must lie in (0,1)");
  const int I = static_cast<int>(xi.rows());
  const int T = static_cast<int>(xi.cols());
  if (static_cast<int>(a.size()) != T)
    throw ValidationError("cvar constraint: coefficient count must equal horizon");
  const int R = amb.support_rows();

  CvarFragment f;
  f.tau = b.add_vars(prefix + ".tau", 1);
  f.lambda = b.add_vars(prefix + ".lambda", 1);
  f.s = b.add_vars(prefix + ".s", I);
  if (R > 0) {
    f.gamma1 = b.add_vars(prefix + ".gamma1", I * R);
    f.gamma2 = b.add_vars(prefix + ".gamma2", I * R);
    for (int g = 0; g < I * R; ++g) {
      b.add_bounds(f.gamma1 + g, 0.0, std::numeric_limits<double>::infinity());
      b.add_bounds(f.gamma2 + g, 0.0, std::numeric_limits<double>::infinity());
    }
  }
  b.add_bounds(f.lambda, 0.0, std::numeric_limits<double>::infinity());

  // Epigraph rows of max{tau, (1/eps)(a'xi + b) + (1 - 1/eps) tau}.
  for (int i = 0; i < I; ++i) {
    Affine piece1;
    piece1.add(f.tau, 1.0);
    for (int r = 0; r < R; ++r)
      piece1.add(f.gamma1 + i * R + r, support_slack(amb, xi, i, r));
    piece1.add(f.s + i, -1.0);
    b.add_ineq(piece1, 0.0);

    Affine piece2;
    for (int t = 0; t < T; ++t) piece2.add(a[t], xi(i, t) / eps);
    piece2.add(b_term, 1.0 / eps);
    piece2.add(f.tau, 1.0 - 1.0 / eps);
    for (int r = 0; r < R; ++r)
      piece2.add(f.gamma2 + i * R + r, support_slack(amb, xi, i, r));
    piece2.add(f.s + i, -1.0);
    b.add_ineq(piece2, 0.0);
  }

  // Dual-norm rows for both pieces.
  if (R > 0) {
    for (int i = 0; i < I; ++i) {
      for (int j = 0; j < T; ++j) {
        Affine inner;
        for (int r = 0; r < R; ++r)
          inner.add(f.gamma1 + i * R + r, amb.support_C(r, j));
        Affine up = inner;
        up.add(f.lambda, -1.0);
        b.add_ineq(up, 0.0);
        Affine down = inner * -1.0;
        down.add(f.lambda, -1.0);
        b.add_ineq(down, 0.0);
      }
    }
  }
  const int norm_reps = R > 0 ? I : 1;
  for (int i = 0; i < norm_reps; ++i) {
    for (int j = 0; j < T; ++j) {
      if (R == 0 && a[j].is_constant() && a[j].constant == 0.0) continue;
      Affine inner;
      for (int r = 0; r < R; ++r)
        inner.add(f.gamma2 + i * R + r, amb.support_C(r, j));
      inner.add(a[j], -1.0 / eps);
      Affine up = inner;
      up.add(f.lambda, -1.0);
      b.add_ineq(up, 0.0);
      Affine down = inner * -1.0;
      down.add(f.lambda, -1.0);
      b.add_ineq(down, 0.0);
    }
  }

  Affine value;
  value.add(f.lambda, amb.rho);
  for (int i = 0; i < I; ++i) value.add(f.s + i, 1.0 / I);
  if (mode == CvarMode::Constraint)
    b.add_ineq(value, 0.0);
  else
    b.add_linear(value);
  return f;
}

double worst_case_expectation_value(const Vec& loss_coeff, const Mat& xi,
                                    const AmbiguitySpec& amb) {
  if (loss_coeff.size() != xi.cols())
    throw ValidationError("wce value: dimension mismatch");
  if (amb.support_rows() == 0) {
    const double mean = (xi * loss_coeff).mean();
    const double dual_norm = loss_coeff.size() ? loss_coeff.cwiseAbs().maxCoeff() : 0.0;
    return mean + amb.rho * dual_norm;
  }
  Builder b;
  std::vector<Affine> qc(loss_coeff.size());
  for (int t = 0; t < loss_coeff.size(); ++t) qc[t] = Affine(loss_coeff[t]);
  build_worst_case_expectation(b, qc, xi, amb, "wce");
  auto sol = qp::solve_qp(b.build(), 1e-9);
  if (sol.status != qp::SolveStatus::Optimal)
    throw NumericError("wce value: solve failed (" + to_string(sol.status) + ")");
  return sol.objective;
}

double worst_case_cvar_value(const Vec& a, double b_const, const Mat& xi,
                             const AmbiguitySpec& amb, double eps) {
  Builder b;
  std::vector<Affine> ac(a.size());
  for (int t = 0; t < a.size(); ++t) ac[t] = Affine(a[t]);
  build_cvar_hour(b, ac, Affine(b_const), xi, amb, eps, CvarMode::Value, "cvar");
  auto sol = qp::solve_qp(b.build(), 1e-9);
  if (sol.status != qp::SolveStatus::Optimal)
    throw NumericError("cvar value: solve failed (" + to_string(sol.status) + ")");
  return sol.objective;
}

Affine ProsumerVars::q_entry(int t, int j) const {
  switch (structure) {
    case RecourseStructure::Diagonal:
      return j == t ? Affine::variable(Q + t) : Affine();
    case RecourseStructure::LowerTriangular:
      return j <= t ? Affine::variable(Q + t * (t + 1) / 2 + j) : Affine();
    case RecourseStructure::Full:
      return Affine::variable(Q + t * T + j);
  }
  return Affine();
}

Affine ProsumerVars::total_trade(int t) const {
  Affine a;
  for (int block : pe) a.add(block + t, 1.0);
  return a;
}

namespace {

int recourse_size(RecourseStructure s, int T) {
  switch (s) {
    case RecourseStructure::Diagonal: return T;
    case RecourseStructure::LowerTriangular: return T * (T + 1) / 2;
    case RecourseStructure::Full: return T * T;
  }
  return T;
}

}  // namespace

ProsumerVars add_prosumer_variables(Builder& b, const ProsumerConfig& cfg, int T,
                                    RecourseStructure structure, int n_neighbors,
                                    const std::string& prefix) {
  ProsumerVars v;
  v.T = T;
  v.structure = structure;
  v.p = b.add_vars(prefix + "p", T);
  for (int m = 0; m < n_neighbors; ++m)
    v.pe.push_back(b.add_vars(prefix + "pe" + std::to_string(m), T));
  v.pb = b.add_vars(prefix + "pb", T);
  v.ps = b.add_vars(prefix + "ps", T);
  v.E = b.add_vars(prefix + "E", T + 1);
  v.S = b.add_vars(prefix + "S", T + 1);
  v.Q = b.add_vars(prefix + "Q", recourse_size(structure, T));

  for (int t = 0; t < T; ++t) {
    b.add_bounds(v.p + t, cfg.p_min, cfg.p_max);
    for (int block : v.pe) b.add_bounds(block + t, cfg.pe_min, cfg.pe_max);
    b.add_bounds(v.pb + t, cfg.pb_min, cfg.pb_max);
    b.add_bounds(v.ps + t, 0.0, cfg.ps_max);
    b.add_bounds(v.E + 1 + t, cfg.E_min, cfg.E_max);
    b.add_bounds(v.S + 1 + t, cfg.S_min, cfg.S_max);
  }
  return v;
}

void build_deterministic_constraints(Builder& b, const ProsumerVars& v,
                                     const ProsumerConfig& cfg, double dt) {
  b.add_eq(Affine::variable(v.E), cfg.E_init);
  b.add_eq(Affine::variable(v.S), cfg.S_init);
  for (int t = 0; t < v.T; ++t) {
    Affine e;
    e.add(v.E + t + 1, 1.0).add(v.E + t, -1.0).add(v.pb + t, -cfg.eta * dt);
    b.add_eq(e, 0.0);
    Affine s;
    s.add(v.S + t + 1, 1.0).add(v.S + t, -1.0).add(v.ps + t, -dt);
    b.add_eq(s, -dt * cfg.ps_ref[t]);
  }
}

void add_battery_cycling(Builder& b, const ProsumerVars& v,
                         const ProsumerConfig& cfg) {
  b.add_eq(Affine::variable(v.E + v.T), cfg.E_init);
}

void add_recourse_sample_bounds(Builder& b, const ProsumerVars& v,
                                const ProsumerConfig& cfg, const Mat& xi_rel) {
  const int I = static_cast<int>(xi_rel.rows());
  for (int i = 0; i < I; ++i) {
    for (int t = 0; t < v.T; ++t) {
      Affine expr;
      for (int j = 0; j < v.T; ++j) expr.add(v.q_entry(t, j), xi_rel(i, j));
      if (expr.terms.empty() && cfg.q_min <= 0.0 && 0.0 <= cfg.q_max) continue;
      b.add_ineq(expr, cfg.q_max);
      b.add_ineq(expr * -1.0, -cfg.q_min);
    }
  }
}

namespace {

const ScenarioProsumer& scenario_for(const ScenarioSet& s, const std::string& id) {
  for (const auto& p : s.prosumers)
    if (p.id == id) return p;
  throw ValidationError("scenario set: missing prosumer '" + id + "'");
}

void add_prosumer_objective(Builder& b, const CommunityConfig& config, int n,
                            const ProsumerVars& v,
                            const std::vector<int>& neighbors, double sigma) {
  const auto& cfg = config.prosumers[n];
  const int T = config.horizon;
  for (int t = 0; t < T; ++t) b.add_linear(v.p + t, config.prices.c_p[t]);
  for (size_t m = 0; m < neighbors.size(); ++m) {
    const Vec& price =
        config.prices.pair_price(cfg.id, config.prosumers[neighbors[m]].id);
    for (int t = 0; t < T; ++t) b.add_linear(v.pe[m] + t, price[t]);
  }
  for (int t = 0; t < T; ++t) b.add_quadratic(v.pb + t, cfg.gamma_b);
  for (int t = 1; t <= T; ++t) b.add_quadratic(v.S + t, cfg.gamma_s);
  if (sigma > 0.0)
    for (size_t m = 0; m < neighbors.size(); ++m)
      for (int t = 0; t < T; ++t) b.add_quadratic(v.pe[m] + t, sigma / 2.0);
}

void add_uncertainty_fragments(Builder& b, const CommunityConfig& config, int n,
                               const ProsumerVars& v, const ScenarioProsumer& sc,
                               const AmbiguitySpec& amb, double eps_n,
                               const std::string& prefix) {
  const int T = config.horizon;
  const Mat xi_rel = sc.relative_deviations();
  const Vec mu = sc.mu();

  std::vector<Affine> qc(T);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < T; ++j) qc[t].add(v.q_entry(j, t), config.prices.c_q[j]);
  build_worst_case_expectation(b, qc, xi_rel, amb, prefix + "wce");

  for (int t = 0; t < T; ++t) {
    std::vector<Affine> a(T);
    for (int j = 0; j < T; ++j) {
      if (j == t) a[j] = Affine(sc.d_scale[t]);
      a[j].add(v.q_entry(t, j), -1.0);
    }
    Affine b_term(sc.d_scale[t] * mu[t]);
    b_term.add(v.p + t, -1.0).add(v.pb + t, -1.0).add(v.ps + t, 1.0);
    b_term.add(v.total_trade(t), -1.0);
    build_cvar_hour(b, a, b_term, xi_rel, amb, eps_n, CvarMode::Constraint,
                    prefix + "cvar.t" + std::to_string(t));
  }
}

}  // namespace

LocalProblem assemble_local_problem(const CommunityConfig& config,
                                    const ScenarioSet& train, int n,
                                    const AmbiguitySpec& amb, double eps_n,
                                    double sigma, bool with_trades) {
  if (n < 0 || n >= config.size())
    throw ValidationError("assemble: prosumer index out of range");
  const auto& cfg = config.prosumers[n];
  const auto& sc = scenario_for(train, cfg.id);
  std::vector<int> neighbors =
      with_trades ? config.neighbor_indices()[n] : std::vector<int>{};

  Builder b;
  auto v = add_prosumer_variables(b, cfg, config.horizon, config.recourse,
                                  static_cast<int>(neighbors.size()), "");
  build_deterministic_constraints(b, v, cfg, config.dt);
  add_battery_cycling(b, v, cfg);
  add_recourse_sample_bounds(b, v, cfg, sc.relative_deviations());
  add_prosumer_objective(b, config, n, v, neighbors, sigma);
  add_uncertainty_fragments(b, config, n, v, sc, amb, eps_n, "");

  LocalProblem lp;
  lp.qp = b.build();
  lp.vars = v;
  lp.neighbors = neighbors;
  lp.prosumer = n;
  lp.sigma = sigma;
  return lp;
}

Vec consensus_linear_cost(const LocalProblem& lp,
                          const std::map<int, Vec>& hat_p,
                          const std::map<int, Vec>& lambda, double sigma,
                          double* constant_out) {
  Vec q = lp.qp.q;
  double constant = lp.qp.constant;
  for (size_t m = 0; m < lp.neighbors.size(); ++m) {
    const Vec& hp = hat_p.at(lp.neighbors[m]);
    const Vec& lm = lambda.at(lp.neighbors[m]);
    for (int t = 0; t < lp.vars.T; ++t)
      q[lp.vars.pe[m] + t] += lm[t] - sigma * hp[t];
    constant += 0.5 * sigma * hp.squaredNorm();
  }
  if (constant_out) *constant_out = constant;
  return q;
}

qp::StandardQP local_qp_with_consensus(const LocalProblem& lp,
                                       const std::map<int, Vec>& hat_p,
                                       const std::map<int, Vec>& lambda,
                                       double sigma) {
  if (sigma != lp.sigma)
    throw ValidationError("consensus: sigma differs from the assembled problem");
  qp::StandardQP out = lp.qp;
  double constant = out.constant;
  out.q = consensus_linear_cost(lp, hat_p, lambda, sigma, &constant);
  out.constant = constant;
  return out;
}

CentralizedProblem assemble_centralized_problem(const CommunityConfig& config,
                                                const ScenarioSet& train,
                                                const AmbiguitySpec& amb,
                                                const RiskSpec& risk) {
  const auto eps = bonferroni_split(risk, config.size());
  const auto neighbor_idx = config.neighbor_indices();

  Builder b;
  CentralizedProblem cp;
  cp.neighbors = neighbor_idx;
  for (int n = 0; n < config.size(); ++n) {
    const auto& cfg = config.prosumers[n];
    const std::string prefix = cfg.id + ".";
    auto v = add_prosumer_variables(b, cfg, config.horizon, config.recourse,
                                    static_cast<int>(neighbor_idx[n].size()),
                                    prefix);
    build_deterministic_constraints(b, v, cfg, config.dt);
    add_battery_cycling(b, v, cfg);
    const auto& sc = scenario_for(train, cfg.id);
    add_recourse_sample_bounds(b, v, cfg, sc.relative_deviations());
    add_prosumer_objective(b, config, n, v, neighbor_idx[n], 0.0);
    add_uncertainty_fragments(b, config, n, v, sc, amb, eps[n], prefix);
    cp.vars.push_back(v);
  }

  // Reciprocity p_nm + p_mn = 0, once per undirected edge.
  for (int n = 0; n < config.size(); ++n) {
    for (size_t mi = 0; mi < neighbor_idx[n].size(); ++mi) {
      const int m = neighbor_idx[n][mi];
      if (m <= n) continue;
      const auto& back = neighbor_idx[m];
      const auto pos = std::find(back.begin(), back.end(), n);
      const size_t ni = static_cast<size_t>(pos - back.begin());
      for (int t = 0; t < config.horizon; ++t) {
        Affine rec;
        rec.add(cp.vars[n].pe[mi] + t, 1.0);
        rec.add(cp.vars[m].pe[ni] + t, 1.0);
        b.add_eq(rec, 0.0);
      }
    }
  }
  cp.qp = b.build();
  return cp;
}

double DecisionSchedule::feasibility_violation(const ProsumerConfig& cfg) const {
  double v = 0.0;
  auto box = [&v](const Vec& x, double lo, double hi) {
    for (int i = 0; i < x.size(); ++i)
      v = std::max({v, lo - x[i], x[i] - hi});
  };
  box(p, cfg.p_min, cfg.p_max);
  for (const auto& t : pe) box(t, cfg.pe_min, cfg.pe_max);
  box(pb, cfg.pb_min, cfg.pb_max);
  box(ps, 0.0, cfg.ps_max);
  box(E.tail(E.size() - 1), cfg.E_min, cfg.E_max);
  box(S.tail(S.size() - 1), cfg.S_min, cfg.S_max);
  return v;
}

DecisionSchedule extract_schedule(const ProsumerVars& vars,
                                  const std::vector<int>& neighbors,
                                  const Vec& x, const ProsumerConfig& cfg,
                                  double dt) {
  const int T = vars.T;
  DecisionSchedule d;
  d.p = x.segment(vars.p, T);
  d.pb = x.segment(vars.pb, T);
  d.ps = x.segment(vars.ps, T);
  d.neighbors = neighbors;
  for (int block : vars.pe) d.pe.push_back(x.segment(block, T));
  d.Q = Mat::Zero(T, T);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < T; ++j) {
      const Affine entry = vars.q_entry(t, j);
      if (!entry.terms.empty()) d.Q(t, j) = x[entry.terms[0].first];
    }
  d.E = Vec(T + 1);
  d.S = Vec(T + 1);
  d.E[0] = cfg.E_init;
  d.S[0] = cfg.S_init;
  for (int t = 0; t < T; ++t) {
    d.E[t + 1] = d.E[t] + cfg.eta * dt * d.pb[t];
    d.S[t + 1] = d.S[t] + dt * (d.ps[t] - cfg.ps_ref[t]);
  }
  d.Pe = Vec::Zero(T);
  for (const auto& t : d.pe) d.Pe += t;
  return d;
}

double prosumer_objective_value(const CommunityConfig& config, int n,
                                const DecisionSchedule& sched,
                                const ScenarioSet& scenarios,
                                const AmbiguitySpec& amb) {
  const auto& cfg = config.prosumers[n];
  const auto& sc = scenario_for(scenarios, cfg.id);
  double value = config.prices.c_p.dot(sched.p);
  for (size_t m = 0; m < sched.neighbors.size(); ++m) {
    const Vec& price =
        config.prices.pair_price(cfg.id, config.prosumers[sched.neighbors[m]].id);
    value += price.dot(sched.pe[m]);
  }
  value += cfg.gamma_b * sched.pb.squaredNorm();
  value += cfg.gamma_s * sched.S.tail(config.horizon).squaredNorm();
  value += worst_case_expectation_value(sched.Q.transpose() * config.prices.c_q,
                                        sc.relative_deviations(), amb);
  return value;
}

}  // namespace drjcc
