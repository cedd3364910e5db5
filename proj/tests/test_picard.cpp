#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "picard.hpp"
#include "rk4.hpp"

using namespace qkdv;

namespace {

LatticeIndex idx(std::vector<int> v) { return LatticeIndex(std::move(v)); }

CoeffField two_mode(double a, double kappa, int radius) {
  CoeffField c(1, radius);
  c.set(idx({1}), Complex{a, 0});
  c.set(idx({-1}), Complex{a, 0});
  c.set_envelope({a * std::exp(kappa), kappa});
  return c;
}

}  // namespace

TEST_CASE("horizon closed form and homogeneity") {
  FrequencyVector w({1.0});
  CHECK(horizon(1.0, 1.0, w, 2.0) == doctest::Approx(1.0 / 32.0));
  CHECK(horizon(2.0, 1.0, w, 2.0) == doctest::Approx(horizon(1.0, 1.0, w, 2.0) / 2));
  CHECK_THROWS_AS(horizon(0.0, 1.0, w, 2.0), Error);
  CHECK_THROWS_AS(horizon(1.0, -1.0, w, 2.0), Error);
}

TEST_CASE("picard_step: zero data, mode zero, closed form at n = 2") {
  FrequencyVector w({1.0});
  EpOptions opt;

  CoeffField zero(1, 4);
  std::map<LatticeIndex, ExpPoly> empty;
  auto z = picard_step(empty, zero, w, 4, opt);
  CHECK(z.empty());

  // Mode zero: the -i(nw)/2 prefactor vanishes, result(0) = c(0) for every k.
  CoeffField cst(1, 2);
  cst.set(idx({0}), Complex{0.4, 0});
  std::map<LatticeIndex, ExpPoly> prev;
  for (const auto& [n, v] : cst.entries())
    prev.emplace(n, ExpPoly::oscillation(v, phase_cube(n, w), opt));
  for (int k = 0; k < 3; ++k) {
    prev = picard_step(prev, cst, w, 2, opt);
    auto it = prev.find(idx({0}));
    REQUIRE(it != prev.end());
    REQUIRE(it->second.size() == 1);
    CHECK(it->second.terms()[0].coeff == Complex{0.4, 0});
    CHECK(it->second.terms()[0].power == 0);
    CHECK(it->second.terms()[0].phase == 0.0);
  }

  // Two-mode data, first iterate, n = 2: a^2 (e^{2it} - e^{8it}) / 6.
  const double a = 0.1;
  CoeffField tm = two_mode(a, std::log(10.0), 8);
  std::map<LatticeIndex, ExpPoly> c0;
  for (const auto& [n, v] : tm.entries())
    c0.emplace(n, ExpPoly::oscillation(v, phase_cube(n, w), opt));
  auto c1 = picard_step(c0, tm, w, 8, opt);
  REQUIRE(c1.count(idx({2})) == 1);
  for (double t : {0.01, 0.05, 0.2}) {
    Complex expect = a * a / 6.0 *
                     (Complex{std::cos(2 * t), std::sin(2 * t)} -
                      Complex{std::cos(8 * t), std::sin(8 * t)});
    CHECK(std::abs(ep_eval(c1.at(idx({2})), t) - expect) <= 1e-14);
  }
  // Time derivative at 0 must equal -i a^2 (from the ODE).
  auto d = ep_derivative_t(c1.at(idx({2})), opt);
  CHECK(std::abs(ep_eval(d, 0.0) - Complex{0, -a * a}) <= 1e-14);
}

TEST_CASE("solve: constant data solves the equation exactly") {
  FrequencyVector w({1.0});
  CoeffField c(1, 4);
  c.set(idx({0}), Complex{0.25, 0});
  c.set_envelope({0.25, 1.0});
  SolverConfig cfg;
  cfg.radius = 4;
  cfg.t_request = 0.01;
  auto traj = solve(c, w, cfg);
  CHECK(traj.converged);
  CHECK(traj.iterations >= 1);
  for (double t : {0.0, 0.005, 0.01})
    for (double x : {0.0, 1.3, 4.0})
      CHECK(evaluate_u(traj, t, x) == doctest::Approx(0.25).epsilon(1e-14));
  auto res = pde_residual(traj, std::vector<double>{0.0, 0.01},
                          std::vector<double>{0.0, 2.0});
  CHECK(res.max_residual <= 1e-14);
}

TEST_CASE("solve: zero data gives the zero trajectory") {
  FrequencyVector w({1.0});
  CoeffField c(1, 4);
  c.set_envelope({0.1, 1.0});
  SolverConfig cfg;
  cfg.radius = 4;
  cfg.t_request = 0.01;
  auto traj = solve(c, w, cfg);
  CHECK(traj.converged);
  CHECK(evaluate_u(traj, 0.01, 1.0) == 0.0);
  auto res = pde_residual(traj, std::vector<double>{0.01}, std::vector<double>{1.0});
  CHECK(res.max_residual == 0.0);
}

TEST_CASE("solve: initial condition reproduced exactly at t = 0") {
  FrequencyVector w({1.0});
  CoeffField c = two_mode(0.1, std::log(10.0), 8);
  SolverConfig cfg;
  cfg.radius = 8;
  cfg.t_request = 0.01;
  auto traj = solve(c, w, cfg);
  CHECK(traj.converged);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(-10, 10);
  for (int j = 0; j < 20; ++j) {
    double x = ux(rng);
    double expect = c.synthesize(w, x).real();
    CHECK(evaluate_u(traj, 0.0, x) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK_THROWS_AS(evaluate_u(traj, 0.02, 0.0), Error);

  // Mode zero stays structurally constant; weighted differences contract.
  for (std::size_t k = 1; k < traj.weighted_diffs.size(); ++k)
    CHECK(traj.weighted_diffs[k] < traj.weighted_diffs[k - 1]);
}

TEST_CASE("solve matches the reference integrator on the two-mode config") {
  FrequencyVector w({1.0});
  CoeffField c = two_mode(0.1, std::log(10.0), 8);
  SolverConfig cfg;
  cfg.radius = 8;
  cfg.t_request = 0.01;
  auto traj = solve(c, w, cfg);
  REQUIRE(traj.converged);

  std::vector<double> times = {0.002, 0.004, 0.006, 0.008, 0.01};
  auto trace = rk4_trace(c, w, times, 1e-4);
  double worst = 0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    CoeffField snap = traj.snapshot(times[j]);
    for (const auto& n : box_indices(1, 8))
      worst = std::max(worst, std::abs(snap.at(n) - trace[j].c.at(n)));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("pde residual small on the two-mode config") {
  FrequencyVector w({1.0});
  CoeffField c = two_mode(0.1, std::log(10.0), 8);
  SolverConfig cfg;
  cfg.radius = 8;
  cfg.t_request = 0.01;
  cfg.target_tol = 1e-10;
  auto traj = solve(c, w, cfg);
  std::vector<double> ts, xs;
  for (int j = 0; j < 5; ++j) ts.push_back(0.01 * j / 4.0);
  for (int j = 0; j < 5; ++j) xs.push_back(2 * M_PI * j / 5.0);
  auto res = pde_residual(traj, ts, xs, cfg.target_tol);
  CHECK(res.max_residual <= 1e-6);
  CHECK(res.max_residual <= res.reported_bound);
}

TEST_CASE("envelope certificate and momentum drift") {
  FrequencyVector w({1.0});
  CoeffField c = two_mode(0.1, std::log(10.0), 8);
  SolverConfig cfg;
  cfg.radius = 8;
  cfg.t_request = 0.01;
  auto traj = solve(c, w, cfg);
  auto env = check_solution_envelope(traj.coeffs, traj.initial_envelope, traj.t_max);
  CHECK(env.pass);
  CHECK(momentum_drift(traj) <= 1e-6);
}

TEST_CASE("re-truncation stability: R vs R + 2") {
  FrequencyVector w({1.0});
  const double kappa = std::log(10.0);
  SolverConfig cfg;
  cfg.radius = 8;
  cfg.t_request = 0.01;
  auto t1 = solve(two_mode(0.1, kappa, 8), w, cfg);
  SolverConfig cfg2 = cfg;
  cfg2.radius = 10;
  auto t2 = solve(two_mode(0.1, kappa, 10), w, cfg2);
  double worst = 0;
  for (double t : {0.0, 0.005, 0.01}) {
    CoeffField s1 = t1.snapshot(t);
    CoeffField s2 = t2.snapshot(t);
    for (const auto& n : box_indices(1, 8))
      worst = std::max(worst, std::abs(s1.at(n) - s2.at(n)));
  }
  // Tail bound C e^{-kappa R / 4} with a modest constant.
  CHECK(worst <= std::exp(-kappa * 8 / 4.0));
  CHECK(worst <= 1e-8);  // measured headroom on this config
}

TEST_CASE("error paths: horizon, envelope, contraction, term budget") {
  FrequencyVector w({1.0});
  CoeffField c = two_mode(0.1, std::log(10.0), 8);
  SolverConfig cfg;
  cfg.radius = 8;

  SUBCASE("horizon exceeded") {
    cfg.t_request = 10.0;
    CHECK_THROWS_AS(solve(c, w, cfg), Error);
  }
  SUBCASE("missing envelope") {
    CoeffField bare(1, 8);
    bare.set(idx({1}), Complex{0.1, 0});
    cfg.t_request = 0.01;
    CHECK_THROWS_AS(solve(bare, w, cfg), Error);
  }
  SUBCASE("violated envelope certificate") {
    CoeffField lying(1, 8);
    lying.set(idx({1}), Complex{0.5, 0});
    lying.set_envelope({0.01, 1.0});
    cfg.t_request = 0.001;
    CHECK_THROWS_AS(solve(lying, w, cfg), Error);
  }
  SUBCASE("no contraction when the supplied C0 lies about the horizon") {
    CoeffField big(1, 4);
    big.set(idx({1}), Complex{2.0, 0});
    big.set(idx({-1}), Complex{2.0, 0});
    big.set_envelope({2.0 * std::exp(0.5), 0.5});
    cfg.radius = 4;
    cfg.c0 = 1e-3;  // bypasses the certified horizon
    cfg.t_request = 2.0;
    cfg.max_iterations = 12;
    CHECK_THROWS_AS(solve(big, w, cfg), Error);
  }
  SUBCASE("term budget propagates") {
    cfg.t_request = 0.01;
    cfg.max_terms = 4;
    CHECK_THROWS_AS(solve(c, w, cfg), Error);
  }
}

TEST_CASE("shell counts") {
  CHECK(shell_count(1, 0) == 1);
  CHECK(shell_count(1, 5) == 2);
  CHECK(shell_count(2, 1) == 4);
  CHECK(shell_count(2, 3) == 12);  // 4s points on the l1 sphere in Z^2
  CHECK(shell_count(3, 2) == 18);  // 6 axis points + 12 mixed
  // Cross-check against explicit enumeration.
  for (int nu : {1, 2, 3})
    for (int s : {1, 2, 3, 4}) {
      std::uint64_t count = 0;
      for (const auto& n : box_indices(nu, s))
        if (n.l1() == s) ++count;
      CHECK(shell_count(nu, s) == count);
    }
}
