#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "rk4.hpp"

using namespace qkdv;

namespace {

LatticeIndex idx(std::vector<int> v) { return LatticeIndex(std::move(v)); }

CoeffField two_mode(double a, int radius) {
  CoeffField c(1, radius);
  c.set(idx({1}), Complex{a, 0});
  c.set(idx({-1}), Complex{a, 0});
  return c;
}

double sup_diff(const CoeffField& a, const CoeffField& b) {
  double worst = 0;
  for (const auto& n : box_indices(a.nu(), a.radius()))
    worst = std::max(worst, std::abs(a.at(n) - b.at(n)));
  return worst;
}

}  // namespace

TEST_CASE("linear part reproduces the free evolution") {
  FrequencyVector w({1.0});
  const double kappa = std::log(10.0);
  CoeffField c(1, 8);
  for (int n = -8; n <= 8; ++n)
    if (n != 0) c.set(idx({n}), std::exp(-kappa * std::abs(n)) * Complex{0.9, 0.3});
  Rk4Options opt;
  opt.nonlinear = false;
  const double t = 0.01;
  auto state = rk4_integrate(c, w, t, 1e-4, opt);
  double worst = 0;
  for (const auto& [n, v] : c.entries()) {
    double ph = phase_cube(n, w) * t;
    Complex expect = v * Complex{std::cos(ph), std::sin(ph)};
    worst = std::max(worst, std::abs(state.c.at(n) - expect));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("constant data is a fixed point") {
  FrequencyVector w({1.0});
  CoeffField c(1, 4);
  c.set(idx({0}), Complex{0.7, 0});
  auto state = rk4_integrate(c, w, 0.5, 1e-3);
  CHECK(state.c.at(idx({0})) == Complex{0.7, 0});
  CHECK(state.c.size() == 1);
}

TEST_CASE("stability bound is enforced") {
  FrequencyVector w({1.0});
  CoeffField c = two_mode(0.1, 8);  // max |(nw)^3| = 512
  CHECK_THROWS_AS(rk4_integrate(c, w, 0.1, 0.01), Error);
  CHECK_NOTHROW(rk4_integrate(c, w, 0.002, 1e-3));
}

TEST_CASE("mode zero is exactly constant") {
  FrequencyVector w({1.0});
  CoeffField c = two_mode(0.2, 6);
  c.set(idx({0}), Complex{0.05, 0});
  auto trace = rk4_trace(c, w, std::vector<double>{0.01, 0.02}, 1e-4);
  for (const auto& s : trace) CHECK(s.c.at(idx({0})) == Complex{0.05, 0});
}

TEST_CASE("observed convergence order is 4") {
  // A config with errors well above the double floor: larger amplitudes,
  // moderate stiffness, longer time.
  FrequencyVector w({1.0});
  CoeffField c(1, 6);
  const double kappa = std::log(2.0);
  for (int n = 1; n <= 3; ++n) {
    Complex v = 0.5 * std::exp(-kappa * n) * Complex{1.0, 0};
    c.set(idx({n}), v);
    c.set(idx({-n}), v);
  }
  const double t = 0.05;

  auto run = [&](double dt) { return rk4_integrate(c, w, t, dt).c; };
  CoeffField fine = run(2.5e-4);
  CoeffField finer = run(1.25e-4);
  // Richardson extrapolant from the two finest solutions.
  CoeffField ref(1, 6);
  for (const auto& n : box_indices(1, 6)) {
    Complex v = finer.at(n) + (finer.at(n) - fine.at(n)) / 15.0;
    if (std::abs(v) > 0) ref.set(n, v);
  }

  double e1 = sup_diff(run(2e-3), ref);
  double e2 = sup_diff(run(1e-3), ref);
  double e3 = sup_diff(run(5e-4), ref);
  double order1 = std::log2(e1 / e2);
  double order2 = std::log2(e2 / e3);
  CHECK(order1 == doctest::Approx(4.0).epsilon(0.05));
  CHECK(order2 == doctest::Approx(4.0).epsilon(0.05));
  // Halving dt cuts the error by ~16x.
  CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.25));
}

TEST_CASE("argument validation") {
  FrequencyVector w({1.0});
  CoeffField c = two_mode(0.1, 4);
  CHECK_THROWS_AS(rk4_integrate(c, w, -1.0, 1e-3), Error);
  CHECK_THROWS_AS(rk4_integrate(c, w, 0.1, 0.0), Error);
  CHECK_THROWS_AS(rk4_integrate(c, FrequencyVector({1.0, 2.0}), 0.1, 1e-3), Error);
}
