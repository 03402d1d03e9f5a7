#include <cmath>

#include "doctest.h"
#include "drjcc/evaluate.hpp"
#include "drjcc/profiles.hpp"
#include "drjcc/synthetic.hpp"

using namespace drjcc;

TEST_CASE("peak-to-average ratio") {
  CHECK(compute_par(Vec::Constant(24, 3.0)) == doctest::Approx(1.0));
  Vec spike = Vec::Zero(24);
  spike[10] = 5.0;
  CHECK(compute_par(spike) == doctest::Approx(24.0));
  CHECK_THROWS_AS(compute_par(Vec::Zero(24)), ValidationError);
}

namespace {

DecisionSchedule zero_schedule(int T) {
  DecisionSchedule s;
  s.p = Vec::Zero(T);
  s.pb = Vec::Zero(T);
  s.ps = Vec::Zero(T);
  s.Q = Mat::Zero(T, T);
  s.E = Vec::Zero(T + 1);
  s.S = Vec::Zero(T + 1);
  s.Pe = Vec::Zero(T);
  return s;
}

CommunityConfig tiny_config(int T) {
  CommunityConfig c;
  c.horizon = T;
  c.dt = 1.0;
  ProsumerConfig p;
  p.id = "p1";
  p.p_min = -50;
  p.p_max = 50;
  p.q_min = -20;
  p.q_max = 20;
  p.pe_min = -5;
  p.pe_max = 5;
  p.pb_min = -10;
  p.pb_max = 10;
  p.ps_max = 5;
  p.E_min = -20;
  p.E_max = 20;
  p.S_min = -10;
  p.S_max = 10;
  p.eta = 0.9;
  p.gamma_b = 0.01;
  p.gamma_s = 0.01;
  p.ps_ref = Vec::Zero(T);
  c.prosumers.push_back(p);
  c.prices.c_p = Vec::Constant(T, 0.1);
  c.prices.c_q = Vec::Constant(T, 0.2);
  c.ambiguity.rho = 0.0;
  c.ambiguity.support_C = Mat(0, T);
  c.ambiguity.support_d = Vec(0);
  c.risk.epsilon = 0.2;
  return c;
}

ScenarioSet net_scenarios(const std::string& id, const Mat& net) {
  ScenarioSet s;
  s.prosumers.push_back(
      make_scenario_prosumer(id, net, Mat::Zero(net.rows(), net.cols())));
  return s;
}

}  // namespace

TEST_CASE("violation probability constructions") {
  auto config = tiny_config(2);
  Mat net(4, 2);
  net << 1.0, 0.5, 2.0, 0.5, 1.0, 0.5, 3.0, 0.5;
  auto eval = net_scenarios("p1", net);

  SUBCASE("enormous supply never violates") {
    auto s = zero_schedule(2);
    s.p = Vec::Constant(2, 100.0);
    auto rep = out_of_sample_violation(config, {s}, eval);
    CHECK(rep.overall == 0.0);
  }

  SUBCASE("zero supply with positive demand always violates") {
    auto s = zero_schedule(2);
    auto rep = out_of_sample_violation(config, {s}, eval);
    CHECK(rep.overall == 1.0);
  }

  SUBCASE("a supply level separating the samples gives one half") {
    // Demand at hour 0: {1, 2, 1, 3}; supply 1.75 leaves exactly samples 1
    // and 3 uncovered.
    auto s = zero_schedule(2);
    s.p = Vec::Constant(2, 1.75);
    auto rep = out_of_sample_violation(config, {s}, eval);
    CHECK(rep.overall == doctest::Approx(0.5));
  }

  SUBCASE("vectorized and naive paths agree") {
    for (double level : {0.0, 1.0, 1.5, 1.75, 2.0, 3.5}) {
      auto s = zero_schedule(2);
      s.p = Vec::Constant(2, level);
      auto a = out_of_sample_violation(config, {s}, eval);
      auto b = out_of_sample_violation_naive(config, {s}, eval);
      CHECK(a.overall == b.overall);
      CHECK(a.violating_pairs == b.violating_pairs);
    }
  }
}

TEST_CASE("out-of-sample cost identities") {
  auto config = tiny_config(2);
  Mat net(3, 2);
  net << 1.0, 2.0, 2.0, 1.0, 1.5, 1.5;
  auto eval = net_scenarios("p1", net);

  SUBCASE("zero recourse and zero flexibility reduce to first-stage prices") {
    auto s = zero_schedule(2);
    s.p << 3.0, 4.0;
    auto costs = out_of_sample_cost(config, {s}, eval, config.ambiguity);
    CHECK(costs[0].da == doctest::Approx(0.1 * 7.0));
    CHECK(costs[0].trade == 0.0);
    CHECK(costs[0].battery == 0.0);
    CHECK(costs[0].shift == 0.0);
    CHECK(costs[0].wc_rt == doctest::Approx(0.0));
    CHECK(costs[0].saa_rt == doctest::Approx(0.0));
    CHECK(costs[0].total_saa() == doctest::Approx(0.7));
  }

  SUBCASE("with test = train and rho = 0 the mean realized cost matches") {
    auto s = zero_schedule(2);
    s.Q = Mat::Identity(2, 2) * 0.7;
    auto costs = out_of_sample_cost(config, {s}, eval, config.ambiguity);
    CHECK(costs[0].wc_rt == doctest::Approx(costs[0].saa_rt).epsilon(1e-10));
  }

  SUBCASE("two-sample hand instance") {
    Mat two(2, 1);
    two << 1.0, 3.0;
    auto cfg1 = tiny_config(1);
    auto ev = net_scenarios("p1", two);
    auto s = zero_schedule(1);
    s.p << 1.0;
    s.Q = Mat::Identity(1, 1);
    // Relative deviations are (-1, +1); d_scale = 2, mu = 1.
    // saa = mean(c_q * Q * xi) = 0.2 * mean(-1, 1)... exactly zero;
    // wc (rho 0.1) = 0 + 0.1 * |Q' c_q| = 0.1 * 0.2.
    AmbiguitySpec amb = cfg1.ambiguity;
    amb.rho = 0.1;
    auto costs = out_of_sample_cost(cfg1, {s}, ev, amb);
    CHECK(costs[0].da == doctest::Approx(0.1));
    CHECK(costs[0].saa_rt == doctest::Approx(0.0));
    CHECK(costs[0].wc_rt == doctest::Approx(0.02));
  }
}

TEST_CASE("baseline equals coordination when nobody has neighbors") {
  GeneratorSpec spec;
  spec.prosumers = 2;
  spec.samples = 4;
  spec.horizon = 6;
  spec.chord_probability = 0.0;
  auto [config, scenarios] = generate_synthetic_community(spec, 31);
  for (auto& p : config.prosumers) p.neighbors.clear();
  config.prices.c_nm.clear();

  auto baseline = run_baseline(config, scenarios, config.ambiguity, config.risk);
  auto coordinated = run_admm(config, scenarios, config.ambiguity, config.risk,
                              config.admm);
  CHECK(coordinated.converged);
  CHECK(coordinated.objective ==
        doctest::Approx(baseline.objective)
            .epsilon(1e-6)
            .scale(std::abs(baseline.objective) + 1.0));
}

TEST_CASE("trading can only improve the training objective") {
  GeneratorSpec spec;
  spec.prosumers = 3;
  spec.samples = 4;
  spec.horizon = 6;
  spec.rho = 0.02;
  auto [config, scenarios] = generate_synthetic_community(spec, 37);

  auto baseline = run_baseline(config, scenarios, config.ambiguity, config.risk);
  auto central = assemble_centralized_problem(config, scenarios, config.ambiguity,
                                              config.risk);
  auto oracle = qp::solve_qp(central.qp, 1e-9);
  REQUIRE(oracle.status == qp::SolveStatus::Optimal);
  CHECK(oracle.objective <=
        baseline.objective + 1e-6 * (std::abs(baseline.objective) + 1.0));
}

TEST_CASE("sweep rows are ordered and deduplicated") {
  GeneratorSpec spec;
  spec.prosumers = 2;
  spec.samples = 6;
  spec.horizon = 4;
  auto [config, scenarios] = generate_synthetic_community(spec, 41);
  config.admm.max_iter = 150;
  auto [train, test] = split_train_test(scenarios, 0.5, 3);
  auto rows = sweep_rho(config, train, test, {0.01, 0.1, 0.01}, config.risk,
                        config.admm, nullptr);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].rho == 0.1);
  CHECK(rows[1].rho == 0.01);
  CHECK(rows[0].in_sample_objective >= rows[1].in_sample_objective - 1e-6);
  CHECK_THROWS_AS(sweep_rho(config, train, test, {0.1}, config.risk, config.admm,
                            nullptr),
                  ValidationError);
}
