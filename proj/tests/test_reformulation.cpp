#include <random>

#include "doctest.h"
#include "drjcc/config_io.hpp"
#include "drjcc/reformulation.hpp"

using namespace drjcc;
using qp::Affine;
using qp::Builder;

namespace {

AmbiguitySpec unbounded_support(int T, double rho) {
  AmbiguitySpec amb;
  amb.rho = rho;
  amb.support_C = Mat(0, T);
  amb.support_d = Vec(0);
  return amb;
}

// Fragment value with a fixed loss vector, going through the builder + solver
// path (worst_case_expectation_value short-circuits to the closed form).
double wce_fragment_value(const Vec& coeff, const Mat& xi, const AmbiguitySpec& amb) {
  Builder b;
  std::vector<Affine> qc(coeff.size());
  for (int t = 0; t < coeff.size(); ++t) qc[t] = Affine(coeff[t]);
  build_worst_case_expectation(b, qc, xi, amb, "wce");
  auto sol = qp::solve_qp(b.build(), 1e-9);
  REQUIRE(sol.status == qp::SolveStatus::Optimal);
  return sol.objective;
}

CommunityConfig one_prosumer_config(int T) {
  CommunityConfig c;
  c.horizon = T;
  c.dt = 1.0;
  ProsumerConfig p;
  p.id = "p1";
  p.p_min = -10;
  p.p_max = 10;
  p.q_min = -5;
  p.q_max = 5;
  p.pe_min = -5;
  p.pe_max = 5;
  p.pb_min = -5;
  p.pb_max = 5;
  p.ps_max = 3;
  p.E_min = -4;
  p.E_max = 4;
  p.S_min = -2;
  p.S_max = 2;
  p.E_init = 0;
  p.S_init = 0;
  p.eta = 0.9;
  p.gamma_b = 1e-8;
  p.gamma_s = 1e-8;
  p.ps_ref = Vec::Constant(T, 1.0);
  c.prosumers.push_back(p);
  c.prices.c_p = Vec::Constant(T, 1.0);
  c.prices.c_q = Vec::Constant(T, 2.0);
  c.ambiguity = unbounded_support(T, 0.0);
  return c;
}

ScenarioSet scenario_from_net(const std::string& id, const Mat& net_samples) {
  // Net load samples with zero PV.
  ScenarioSet s;
  s.prosumers.push_back(
      make_scenario_prosumer(id, net_samples, Mat::Zero(net_samples.rows(), net_samples.cols())));
  return s;
}

}  // namespace

TEST_CASE("bonferroni split") {
  RiskSpec risk;
  risk.epsilon = 0.05;
  auto eps = bonferroni_split(risk, 10);
  for (double e : eps) CHECK(e == doctest::Approx(0.005));
  double sum = 0;
  for (double e : eps) sum += e;
  CHECK(sum == 0.05);  // exact

  RiskSpec weighted;
  weighted.epsilon = 0.06;
  weighted.weights = {1.0, 2.0};
  auto w = bonferroni_split(weighted, 2);
  CHECK(w[0] == doctest::Approx(0.02));
  CHECK(w[1] == doctest::Approx(0.04));

  RiskSpec single;
  single.epsilon = 0.05;
  CHECK(bonferroni_split(single, 1)[0] == doctest::Approx(0.05));

  RiskSpec bad;
  bad.epsilon = 0.05;
  bad.weights = {1.0, -1.0};
  CHECK_THROWS_AS(bonferroni_split(bad, 2), ValidationError);
}

TEST_CASE("empirical cvar by sorting") {
  CHECK(empirical_cvar({1, 2, 3, 4}, 0.5) == doctest::Approx(3.5));
  CHECK(empirical_cvar({1, 2, 3, 4}, 1.0) == doctest::Approx(2.5));
  CHECK(empirical_cvar({1, 2, 3, 4}, 0.25) == doctest::Approx(4.0));
  CHECK_THROWS_AS(empirical_cvar({}, 0.5), ValidationError);
  CHECK_THROWS_AS(empirical_cvar({1.0}, 0.0), ValidationError);

  // Cross-check against direct minimization over beta (optimum at a sample).
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> losses(1 + rng() % 12);
    for (auto& l : losses) l = u(rng);
    const double eps = 0.05 + 0.9 * (rng() % 100) / 100.0;
    double direct = 1e300;
    for (double beta : losses) {
      double v = beta;
      for (double l : losses)
        v += std::max(0.0, l - beta) / (eps * losses.size());
      direct = std::min(direct, v);
    }
    CHECK(empirical_cvar(losses, eps) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("worst-case expectation fragment") {
  Mat xi(2, 1);
  xi << 1.0, 3.0;

  SUBCASE("rho 0 reduces to the sample mean") {
    CHECK(wce_fragment_value(Vec::Constant(1, 2.0), xi, unbounded_support(1, 0.0)) ==
          doctest::Approx(4.0).epsilon(1e-8));
  }
  SUBCASE("radius adds the dual-norm term") {
    CHECK(wce_fragment_value(Vec::Constant(1, 2.0), xi, unbounded_support(1, 0.5)) ==
          doctest::Approx(5.0).epsilon(1e-8));
  }
  SUBCASE("zero loss vector stays zero for every radius") {
    for (double rho : {0.0, 0.1, 1.0})
      CHECK(wce_fragment_value(Vec::Zero(1), xi, unbounded_support(1, rho)) ==
            doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("closed form matches the fragment") {
    std::mt19937 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      const int T = 1 + trial % 4;
      const int I = 2 + trial;
      Mat samples(I, T);
      for (int i = 0; i < I; ++i)
        for (int t = 0; t < T; ++t) samples(i, t) = g(rng);
      Vec coeff(T);
      for (int t = 0; t < T; ++t) coeff[t] = g(rng);
      auto amb = unbounded_support(T, 0.1 * trial);
      CHECK(wce_fragment_value(coeff, samples, amb) ==
            doctest::Approx(worst_case_expectation_value(coeff, samples, amb))
                .epsilon(1e-8));
    }
  }
  SUBCASE("box support caps the transport distance") {
    // One sample at zero, loss = xi, support |xi| <= m: the fragment value is
    // min(rho, m).
    Mat zero(1, 1);
    zero << 0.0;
    for (double m : {0.25, 2.0}) {
      AmbiguitySpec amb;
      amb.rho = 1.0;
      amb.support_C = Mat(2, 1);
      amb.support_C << 1.0, -1.0;
      amb.support_d = Vec(2);
      amb.support_d << m, m;
      CHECK(wce_fragment_value(Vec::Ones(1), zero, amb) ==
            doctest::Approx(std::min(1.0, m)).epsilon(1e-7));
      CHECK(worst_case_expectation_value(Vec::Ones(1), zero, amb) ==
            doctest::Approx(std::min(1.0, m)).epsilon(1e-7));
    }
  }
}

TEST_CASE("cvar fragment equals the sort oracle at rho 0") {
  std::mt19937 rng(29);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int T = 1 + trial % 3;
    const int I = 2 + static_cast<int>(rng() % 12);
    Mat xi(I, T);
    for (int i = 0; i < I; ++i)
      for (int t = 0; t < T; ++t) xi(i, t) = g(rng);
    Vec a(T);
    for (int t = 0; t < T; ++t) a[t] = g(rng);
    const double b = g(rng);
    const double eps = 0.1 + 0.8 * (rng() % 100) / 100.0;

    std::vector<double> losses(I);
    for (int i = 0; i < I; ++i) losses[i] = a.dot(xi.row(i)) + b;
    const double oracle = empirical_cvar(losses, eps);
    const double frag = worst_case_cvar_value(a, b, xi, unbounded_support(T, 0.0), eps);
    CHECK(frag == doctest::Approx(oracle).epsilon(1e-6).scale(std::abs(oracle) + 1.0));
  }
}

TEST_CASE("cvar fragment value for the worked example") {
  // Losses {1,2,3,4} at eps = 0.5 -> empirical CVaR 3.5.
  Mat xi(4, 1);
  xi << 1.0, 2.0, 3.0, 4.0;
  CHECK(worst_case_cvar_value(Vec::Ones(1), 0.0, xi, unbounded_support(1, 0.0), 0.5) ==
        doctest::Approx(3.5).epsilon(1e-7));
}

TEST_CASE("cvar constraint covers the worst sample in the exactness regime") {
  // rho = 0, eps = 1/I, I = 2, D = 1, mu = 0, Q = 0, samples {-1, +1}:
  // feasible iff the supply slack b <= -1. Maximize b subject to the fragment.
  Mat xi(2, 1);
  xi << -1.0, 1.0;
  Builder b;
  const int slack = b.add_vars("b", 1);
  std::vector<Affine> a = {Affine(1.0)};
  build_cvar_hour(b, a, Affine::variable(slack), xi, unbounded_support(1, 0.0),
                  0.5, CvarMode::Constraint, "cvar");
  b.add_linear(slack, -1.0);  // maximize b
  auto sol = qp::solve_qp(b.build(), 1e-9);
  REQUIRE(sol.status == qp::SolveStatus::Optimal);
  CHECK(sol.x[slack] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("degenerate distribution reduces to the deterministic balance") {
  Mat xi = Mat::Zero(3, 1);
  Builder b;
  const int slack = b.add_vars("b", 1);
  std::vector<Affine> a = {Affine(1.0)};
  build_cvar_hour(b, a, Affine::variable(slack), xi, unbounded_support(1, 0.0),
                  0.3, CvarMode::Constraint, "cvar");
  b.add_linear(slack, -1.0);
  auto sol = qp::solve_qp(b.build(), 1e-9);
  REQUIRE(sol.status == qp::SolveStatus::Optimal);
  CHECK(sol.x[slack] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("fragment values are non-decreasing in rho") {
  std::mt19937 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  const int T = 3, I = 6;
  Mat xi(I, T);
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t) xi(i, t) = g(rng);
  Vec a(T);
  for (int t = 0; t < T; ++t) a[t] = g(rng);

  double prev_wce = -1e300, prev_cvar = -1e300;
  for (double rho : {0.0, 0.01, 0.03, 0.1, 0.2}) {
    auto amb = unbounded_support(T, rho);
    const double wce = worst_case_expectation_value(a, xi, amb);
    const double cvar = worst_case_cvar_value(a, 0.5, xi, amb, 0.2);
    CHECK(wce >= prev_wce - 1e-9);
    CHECK(cvar >= prev_cvar - 1e-9);
    prev_wce = wce;
    prev_cvar = cvar;
  }
}

TEST_CASE("deterministic state recursions") {
  auto config = one_prosumer_config(4);
  const auto& cfg = config.prosumers[0];

  auto solve_with_pb_ps = [&](const Vec& pb_fix, const Vec& ps_fix) {
    Builder b;
    auto v = add_prosumer_variables(b, cfg, 4, RecourseStructure::Diagonal, 0, "");
    build_deterministic_constraints(b, v, cfg, config.dt);
    for (int t = 0; t < 4; ++t) {
      b.add_eq(Affine::variable(v.pb + t), pb_fix[t]);
      b.add_eq(Affine::variable(v.ps + t), ps_fix[t]);
    }
    for (int t = 0; t < 4; ++t) b.add_quadratic(v.p + t, 1.0);  // keep P nonzero
    auto sol = qp::solve_qp(b.build(), 1e-9);
    REQUIRE(sol.status == qp::SolveStatus::Optimal);
    return std::make_pair(sol.x.segment(v.E, 5), sol.x.segment(v.S, 5));
  };

  SUBCASE("zero battery power freezes the state of charge") {
    auto [E, S] = solve_with_pb_ps(Vec::Zero(4), cfg.ps_ref);
    for (int t = 0; t <= 4; ++t) CHECK(E[t] == doctest::Approx(0.0).epsilon(1e-7));
  }
  SUBCASE("reference shiftable power freezes the shift state") {
    auto [E, S] = solve_with_pb_ps(Vec::Zero(4), cfg.ps_ref);
    for (int t = 0; t <= 4; ++t) CHECK(S[t] == doctest::Approx(0.0).epsilon(1e-7));
  }
  SUBCASE("constant battery power telescopes") {
    auto [E, S] = solve_with_pb_ps(Vec::Constant(4, 1.0), cfg.ps_ref);
    CHECK(E[4] == doctest::Approx(0.9 * 1.0 * 4).epsilon(1e-7));
  }
}

TEST_CASE("standalone local problem matches a hand-solved program") {
  // T = 2, deterministic single sample with net load (0, 2), negligible
  // quadratic costs, prices (0.05, 0.2). The battery cycles: charge x at the
  // cheap hour, discharge x at the expensive one, E_1 = -0.9 x bound at -4,
  // so x = 4/0.9. Then p = (x, 2 - x) from the binding balances and the
  // objective is 0.05 x + 0.2 (2 - x).
  auto config = one_prosumer_config(2);
  config.prices.c_p = Vec(2);
  config.prices.c_p << 0.05, 0.2;
  Mat net(1, 2);
  net << 0.0, 2.0;
  auto scenarios = scenario_from_net("p1", net);
  auto lp = assemble_local_problem(config, scenarios, 0, config.ambiguity, 0.5,
                                   0.0, false);
  auto sol = qp::solve_qp(lp.qp, 1e-9);
  REQUIRE(sol.status == qp::SolveStatus::Optimal);
  const double x = 4.0 / 0.9;
  auto sched = extract_schedule(lp.vars, lp.neighbors, sol.x, config.prosumers[0],
                                config.dt);
  CHECK(sched.pb[0] == doctest::Approx(-x).epsilon(1e-5));
  CHECK(sched.pb[1] == doctest::Approx(x).epsilon(1e-5));
  CHECK(sched.p[0] == doctest::Approx(x).epsilon(1e-5));
  CHECK(sched.p[1] == doctest::Approx(2.0 - x).epsilon(1e-5));
  CHECK(sched.ps.cwiseAbs().maxCoeff() < 1e-5);
  CHECK(sched.E[2] == doctest::Approx(0.0).epsilon(1e-6).scale(1.0));
  CHECK(sol.objective ==
        doctest::Approx(0.05 * x + 0.2 * (2.0 - x)).epsilon(1e-4).scale(1.0));
}

TEST_CASE("zero consensus terms recover the standalone problem") {
  auto config = one_prosumer_config(2);
  Mat net(2, 2);
  net << 1.0, 2.0, 3.0, 2.0;
  auto scenarios = scenario_from_net("p1", net);
  auto standalone = assemble_local_problem(config, scenarios, 0, config.ambiguity,
                                           0.5, 0.0, false);
  auto with_sigma = assemble_local_problem(config, scenarios, 0, config.ambiguity,
                                           0.5, 0.0, true);
  // No neighbors: identical problems either way.
  auto a = qp::solve_qp(standalone.qp, 1e-9);
  auto b = qp::solve_qp(with_sigma.qp, 1e-9);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));
  // Assembled quadratic matrix is PSD by construction.
  CHECK_NOTHROW(standalone.qp.validate());
}

TEST_CASE("centralized assembly") {
  SUBCASE("single prosumer equals the standalone optimum") {
    auto config = one_prosumer_config(2);
    Mat net(2, 2);
    net << 1.0, 2.0, 2.0, 1.0;
    auto scenarios = scenario_from_net("p1", net);
    auto local = assemble_local_problem(config, scenarios, 0, config.ambiguity,
                                        config.risk.epsilon, 0.0, false);
    auto central = assemble_centralized_problem(config, scenarios, config.ambiguity,
                                                config.risk);
    auto a = qp::solve_qp(local.qp, 1e-9);
    auto b = qp::solve_qp(central.qp, 1e-9);
    REQUIRE(a.status == qp::SolveStatus::Optimal);
    REQUIRE(b.status == qp::SolveStatus::Optimal);
    CHECK(a.objective ==
          doctest::Approx(b.objective).epsilon(1e-6).scale(std::abs(a.objective) + 1));
  }

  SUBCASE("bound-pinned trade is antisymmetric") {
    auto config = one_prosumer_config(1);
    config.prosumers.push_back(config.prosumers[0]);
    config.prosumers[1].id = "p2";
    config.prosumers[0].neighbors = {"p2"};
    config.prosumers[1].neighbors = {"p1"};
    config.prosumers[0].pe_min = 2.0;
    config.prosumers[0].pe_max = 2.0;
    config.prosumers[1].pe_min = -2.0;
    config.prosumers[1].pe_max = -2.0;
    config.prices.c_nm[{"p1", "p2"}] = Vec::Constant(1, 0.05);
    config.prices.c_nm[{"p2", "p1"}] = Vec::Constant(1, 0.05);
    Mat net(1, 1);
    net << 1.0;
    ScenarioSet scenarios;
    scenarios.prosumers.push_back(make_scenario_prosumer("p1", net, Mat::Zero(1, 1)));
    scenarios.prosumers.push_back(make_scenario_prosumer("p2", net, Mat::Zero(1, 1)));
    auto central = assemble_centralized_problem(config, scenarios, config.ambiguity,
                                                config.risk);
    auto sol = qp::solve_qp(central.qp, 1e-9);
    REQUIRE(sol.status == qp::SolveStatus::Optimal);
    const Vec pe1 = central.qp.segment_of(sol.x, "p1.pe0");
    const Vec pe2 = central.qp.segment_of(sol.x, "p2.pe0");
    CHECK(pe1[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(pe2[0] == doctest::Approx(-2.0).epsilon(1e-6));
  }
}

TEST_CASE("local problem with consensus terms matches the one-shot form") {
  auto config = one_prosumer_config(2);
  config.prosumers.push_back(config.prosumers[0]);
  config.prosumers[1].id = "p2";
  config.prosumers[0].neighbors = {"p2"};
  config.prosumers[1].neighbors = {"p1"};
  config.prices.c_nm[{"p1", "p2"}] = Vec::Constant(2, 0.05);
  config.prices.c_nm[{"p2", "p1"}] = Vec::Constant(2, 0.05);
  Mat net(2, 2);
  net << 1.0, 2.0, 2.0, 1.0;
  ScenarioSet scenarios;
  scenarios.prosumers.push_back(make_scenario_prosumer("p1", net, Mat::Zero(2, 2)));
  scenarios.prosumers.push_back(make_scenario_prosumer("p2", net, Mat::Zero(2, 2)));

  const double sigma = 0.1;
  auto lp = assemble_local_problem(config, scenarios, 0, config.ambiguity, 0.025,
                                   sigma, true);
  std::map<int, Vec> hat{{1, Vec::Constant(2, 0.5)}};
  std::map<int, Vec> lam{{1, Vec::Constant(2, -0.2)}};
  auto direct = local_qp_with_consensus(lp, hat, lam, sigma);
  auto sol = qp::solve_qp(direct, 1e-9);
  REQUIRE(sol.status == qp::SolveStatus::Optimal);

  qp::Workspace ws(lp.qp);
  double constant = 0;
  Vec q = consensus_linear_cost(lp, hat, lam, sigma, &constant);
  ws.update_linear_cost(q, constant);
  auto warm = ws.solve({1e-9, 200000});
  CHECK(warm.objective == doctest::Approx(sol.objective).epsilon(1e-7));
}
