#include <cmath>

#include "doctest.h"
#include "drjcc/admm.hpp"
#include "drjcc/synthetic.hpp"

using namespace drjcc;

namespace {

// Two mirrored prosumers: p1 carries surplus PV, p2 the mirrored load, and
// the pair price is negligible so the mirror map (swap, negate trades) is an
// automorphism of the local problems.
CommunityConfig mirror_config(int T) {
  CommunityConfig c;
  c.horizon = T;
  c.dt = 1.0;
  for (int n = 0; n < 2; ++n) {
    ProsumerConfig p;
    p.id = "p" + std::to_string(n + 1);
    p.p_min = -20;
    p.p_max = 20;
    p.q_min = -10;
    p.q_max = 10;
    p.pe_min = -5;
    p.pe_max = 5;
    p.pb_min = -5;
    p.pb_max = 5;
    p.ps_max = 2;
    p.E_min = -10;
    p.E_max = 10;
    p.S_min = -5;
    p.S_max = 5;
    p.E_init = 0;
    p.S_init = 0;
    p.eta = 0.95;
    p.gamma_b = 0.01;
    p.gamma_s = 0.01;
    p.ps_ref = Vec::Zero(T);
    c.prosumers.push_back(p);
  }
  c.prosumers[0].neighbors = {"p2"};
  c.prosumers[1].neighbors = {"p1"};
  c.prices.c_p = Vec::Constant(T, 0.1);
  c.prices.c_q = Vec::Constant(T, 0.2);
  c.prices.c_nm[{"p1", "p2"}] = Vec::Constant(T, 1e-9);
  c.prices.c_nm[{"p2", "p1"}] = Vec::Constant(T, 1e-9);
  c.ambiguity.rho = 0.0;
  c.ambiguity.support_C = Mat(0, T);
  c.ambiguity.support_d = Vec(0);
  c.risk.epsilon = 0.1;
  return c;
}

ScenarioSet mirror_scenarios(int T) {
  ScenarioSet s;
  Mat load1 = Mat::Zero(2, T), pv1 = Mat::Zero(2, T);
  pv1.setConstant(3.0);
  pv1.row(1).setConstant(3.2);  // mild day-to-day variation
  Mat load2 = pv1, pv2 = load1;  // mirrored net position
  s.prosumers.push_back(make_scenario_prosumer("p1", load1, pv1));
  s.prosumers.push_back(make_scenario_prosumer("p2", load2, pv2));
  return s;
}

}  // namespace

TEST_CASE("auxiliary update closed form") {
  auto config = mirror_config(1);
  auto scenarios = mirror_scenarios(1);
  Coordinator coord(config, scenarios, config.ambiguity, config.risk, config.admm);
  auto& st = coord.state();

  SUBCASE("plugging in the worked numbers") {
    st.p[{0, 1}] = Vec::Constant(1, 4.0);
    st.p[{1, 0}] = Vec::Constant(1, -2.0);
    st.lambda[{0, 1}] = Vec::Constant(1, 0.3);
    st.lambda[{1, 0}] = Vec::Constant(1, 0.3);
    coord.auxiliary_update();
    CHECK(st.p_hat[{0, 1}][0] == doctest::Approx(3.0));
    CHECK(st.p_hat[{1, 0}][0] == doctest::Approx(-3.0));
  }

  SUBCASE("consensus is a fixed point") {
    st.p[{0, 1}] = Vec::Constant(1, 1.7);
    st.p[{1, 0}] = Vec::Constant(1, -1.7);
    st.lambda[{0, 1}] = Vec::Constant(1, 0.4);
    st.lambda[{1, 0}] = Vec::Constant(1, 0.4);
    coord.auxiliary_update();
    CHECK(st.p_hat[{0, 1}][0] == doctest::Approx(1.7));
  }

  SUBCASE("multiplier asymmetry shifts the auxiliary") {
    st.p[{0, 1}] = Vec::Zero(1);
    st.p[{1, 0}] = Vec::Zero(1);
    st.lambda[{0, 1}] = Vec::Constant(1, 0.2);
    st.lambda[{1, 0}] = Vec::Zero(1);
    coord.auxiliary_update();
    CHECK(st.p_hat[{0, 1}][0] == doctest::Approx(1.0));  // 0.2 / (2 * 0.1)
  }

  SUBCASE("antisymmetry holds exactly") {
    st.p[{0, 1}] = Vec::Constant(1, 0.123456);
    st.p[{1, 0}] = Vec::Constant(1, 0.654321);
    st.lambda[{0, 1}] = Vec::Constant(1, -0.11);
    st.lambda[{1, 0}] = Vec::Constant(1, 0.07);
    coord.auxiliary_update();
    CHECK(st.p_hat[{0, 1}][0] + st.p_hat[{1, 0}][0] == 0.0);
  }
}

TEST_CASE("dual update steps") {
  auto config = mirror_config(1);
  auto scenarios = mirror_scenarios(1);
  Coordinator coord(config, scenarios, config.ambiguity, config.risk, config.admm);
  auto& st = coord.state();

  SUBCASE("no gap leaves multipliers unchanged") {
    st.p[{0, 1}] = Vec::Constant(1, 1.0);
    st.p_hat[{0, 1}] = Vec::Constant(1, 1.0);
    st.p[{1, 0}] = Vec::Constant(1, -1.0);
    st.p_hat[{1, 0}] = Vec::Constant(1, -1.0);
    coord.dual_update();
    CHECK(st.lambda[{0, 1}][0] == doctest::Approx(0.0));
  }

  SUBCASE("one step with gap 2 at sigma 0.1") {
    st.p[{0, 1}] = Vec::Constant(1, 2.0);
    st.p_hat[{0, 1}] = Vec::Zero(1);
    coord.dual_update();
    CHECK(st.lambda[{0, 1}][0] == doctest::Approx(0.2));
  }

  SUBCASE("constant gap advances linearly") {
    st.p[{0, 1}] = Vec::Constant(1, 1.0);
    st.p_hat[{0, 1}] = Vec::Zero(1);
    coord.dual_update();
    coord.dual_update();
    CHECK(st.lambda[{0, 1}][0] == doctest::Approx(2.0 * 0.1 * 1.0));
  }
}

TEST_CASE("residual definitions") {
  auto config = mirror_config(1);
  auto scenarios = mirror_scenarios(1);
  Coordinator coord(config, scenarios, config.ambiguity, config.risk, config.admm);
  auto& st = coord.state();

  SUBCASE("perfect consensus gives zero residuals") {
    auto [p, d] = coord.compute_residuals();
    CHECK(p == 0.0);
    CHECK(d == 0.0);
  }

  SUBCASE("unit gap on one edge") {
    st.p[{0, 1}] = Vec::Constant(1, 1.0);
    auto [p, d] = coord.compute_residuals();
    CHECK(p == doctest::Approx(1.0));
    CHECK(d == doctest::Approx(0.0));
  }
}

TEST_CASE("single prosumer converges immediately") {
  auto config = mirror_config(2);
  config.prosumers.resize(1);
  config.prosumers[0].neighbors.clear();
  config.prices.c_nm.clear();
  auto scenarios = mirror_scenarios(2);
  scenarios.prosumers.resize(1);
  auto result = run_admm(config, scenarios, config.ambiguity, config.risk,
                         config.admm);
  CHECK(result.converged);
  CHECK(result.iterations == 1);
  CHECK(result.primal_residual == 0.0);
  CHECK(result.aux_residual == 0.0);
  CHECK(result.schedules.size() == 1);
}

TEST_CASE("symmetric seller and buyer propose antisymmetric trades") {
  // p1 holds PV surplus but cannot sell to the grid (p_min = 0); p2 covers
  // its load from the grid at c_p. With the pair price at c_p / 2 both
  // first-update optima are (price gap) / sigma = 0.5 in opposite directions.
  const int T = 4;
  auto config = mirror_config(T);
  for (auto& p : config.prosumers) {
    p.p_min = 0.0;
    p.pb_min = -0.5;
    p.pb_max = 0.5;
    p.gamma_b = 0.5;  // battery marginal cost above the grid price
  }
  config.prices.c_nm[{"p1", "p2"}] = Vec::Constant(T, 0.05);
  config.prices.c_nm[{"p2", "p1"}] = Vec::Constant(T, 0.05);
  auto scenarios = mirror_scenarios(T);
  Coordinator coord(config, scenarios, config.ambiguity, config.risk, config.admm);
  coord.primal_update();
  const auto& st = coord.state();
  const Vec& p12 = st.p.at({0, 1});
  const Vec& p21 = st.p.at({1, 0});
  CHECK((p12 + p21).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(p12[1] == doctest::Approx(-0.5).epsilon(1e-4));
  CHECK(p21[1] == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("large penalty pins trades near the zero auxiliary") {
  auto config = mirror_config(2);
  auto scenarios = mirror_scenarios(2);
  double norms[2];
  const double sigmas[2] = {1e3, 1e5};
  for (int i = 0; i < 2; ++i) {
    AdmmConfig admm = config.admm;
    admm.sigma = sigmas[i];
    Coordinator coord(config, scenarios, config.ambiguity, config.risk, admm);
    coord.primal_update();
    norms[i] = coord.state().p.at({0, 1}).cwiseAbs().maxCoeff();
  }
  CHECK(norms[0] < 1e-2);
  CHECK(norms[1] < 1e-4);
  // O(1/sigma) scaling within an order of magnitude.
  CHECK(norms[1] <= norms[0] * 1e-2 * 10.0);
}

TEST_CASE("coordination matches the centralized oracle on a small instance") {
  GeneratorSpec spec;
  spec.prosumers = 3;
  spec.samples = 4;
  spec.horizon = 6;
  spec.rho = 0.02;
  auto [config, scenarios] = generate_synthetic_community(spec, 13);
  config.admm.max_iter = 400;

  auto central = assemble_centralized_problem(config, scenarios, config.ambiguity,
                                              config.risk);
  auto oracle = qp::solve_qp(central.qp, 1e-9);
  REQUIRE(oracle.status == qp::SolveStatus::Optimal);

  auto result = run_admm(config, scenarios, config.ambiguity, config.risk,
                         config.admm);
  CHECK(result.converged);
  const double scale = std::abs(oracle.objective) + 1.0;
  CHECK(std::abs(result.objective - oracle.objective) / scale < 1e-3);

  // Reciprocity at the returned schedules.
  const auto idx = config.neighbor_indices();
  for (int n = 0; n < config.size(); ++n)
    for (size_t mi = 0; mi < idx[n].size(); ++mi) {
      const int m = idx[n][mi];
      const auto& back = idx[m];
      const size_t ni = std::find(back.begin(), back.end(), n) - back.begin();
      const Vec gap = result.schedules[n].pe[mi] + result.schedules[m].pe[ni];
      CHECK(gap.cwiseAbs().maxCoeff() < 1e-4);
    }
}

TEST_CASE("dual residual identity holds along the trace") {
  auto config = mirror_config(3);
  config.admm.max_iter = 25;
  auto scenarios = mirror_scenarios(3);
  auto result = run_admm(config, scenarios, config.ambiguity, config.risk,
                         config.admm);
  REQUIRE(!result.trace.empty());
  for (const auto& row : result.trace)
    CHECK(std::abs(row.dual_step_sum - config.admm.sigma * row.primal_residual) <=
          1e-12);
}

TEST_CASE("serial and parallel coordination agree bitwise") {
  GeneratorSpec spec;
  spec.prosumers = 4;
  spec.samples = 3;
  spec.horizon = 4;
  auto [config, scenarios] = generate_synthetic_community(spec, 23);
  config.admm.max_iter = 12;

  AdmmConfig serial = config.admm;
  serial.parallel = false;
  AdmmConfig parallel = config.admm;
  parallel.parallel = true;
  auto a = run_admm(config, scenarios, config.ambiguity, config.risk, serial);
  auto b = run_admm(config, scenarios, config.ambiguity, config.risk, parallel);
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].primal_residual == b.trace[i].primal_residual);
    CHECK(a.trace[i].aux_residual == b.trace[i].aux_residual);
    CHECK(a.trace[i].objective == b.trace[i].objective);
  }
  for (int n = 0; n < config.size(); ++n)
    CHECK((a.schedules[n].p - b.schedules[n].p).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feasible schedules on a converged run") {
  auto config = mirror_config(3);
  auto scenarios = mirror_scenarios(3);
  auto result = run_admm(config, scenarios, config.ambiguity, config.risk,
                         config.admm);
  REQUIRE(result.converged);
  for (int n = 0; n < config.size(); ++n)
    CHECK(result.schedules[n].feasibility_violation(config.prosumers[n]) < 1e-6);
}
