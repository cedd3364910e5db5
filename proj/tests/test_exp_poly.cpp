#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "exp_poly.hpp"

using namespace qkdv;

namespace {

// Independent oracles: plain term-by-term evaluation (no clustering) and
// adaptive Simpson quadrature for the Duhamel integral.

std::complex<long double> naive_eval(const std::vector<EpTerm>& terms, double t) {
  std::complex<long double> s{0, 0};
  for (const auto& term : terms) {
    long double tp = 1;
    for (int j = 0; j < term.power; ++j) tp *= t;
    long double ph = static_cast<long double>(term.phase) * t;
    s += std::complex<long double>(term.coeff.real(), term.coeff.imag()) * tp *
         std::complex<long double>(std::cos(ph), std::sin(ph));
  }
  return s;
}

Complex simpson(const std::function<Complex(double)>& f, double a, double b, int n) {
  Complex acc = f(a) + f(b);
  double h = (b - a) / n;
  for (int j = 1; j < n; ++j) acc += f(a + j * h) * ((j % 2) ? 4.0 : 2.0);
  return acc * (h / 3.0);
}

Complex adaptive_simpson(const std::function<Complex(double)>& f, double a, double b) {
  int n = 64;
  Complex prev = simpson(f, a, b, n);
  for (int it = 0; it < 14; ++it) {
    n *= 2;
    Complex cur = simpson(f, a, b, n);
    if (std::abs(cur - prev) < 1e-13) return cur;
    prev = cur;
  }
  return prev;
}

Complex duhamel_oracle(const std::vector<EpTerm>& f, double theta0, double t) {
  return adaptive_simpson(
      [&](double tau) {
        double ph = (t - tau) * theta0;
        return static_cast<Complex>(naive_eval(f, tau)) * Complex{std::cos(ph), std::sin(ph)};
      },
      0.0, t);
}

std::vector<EpTerm> random_terms(std::mt19937_64& rng, int count, double phase_scale = 5.0) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> p(0, 3);
  std::vector<EpTerm> out;
  for (int j = 0; j < count; ++j)
    out.push_back({Complex{u(rng), u(rng)}, p(rng), phase_scale * u(rng)});
  return out;
}

}  // namespace

TEST_CASE("canonical form merges and sorts") {
  ExpPoly f = ep_canonical({{Complex{1, 0}, 0, 2.0},
                            {Complex{2, 0}, 0, 2.0},
                            {Complex{1, 0}, 1, -1.0},
                            {Complex{-1, 0}, 1, -1.0}});
  REQUIRE(f.size() == 1);
  CHECK(f.terms()[0].coeff == Complex{3, 0});
  CHECK(f.terms()[0].phase == 2.0);
  CHECK(f.value_at_zero() == Complex{3, 0});
}

TEST_CASE("multiply: exponent laws and evaluation oracle") {
  ExpPoly e1 = ExpPoly::oscillation({1, 0}, 1.5);
  ExpPoly e2 = ExpPoly::oscillation({1, 0}, -0.25);
  auto prod = ep_multiply(e1, e2);
  REQUIRE(prod.size() == 1);
  CHECK(prod.terms()[0].phase == doctest::Approx(1.25));
  CHECK(prod.terms()[0].power == 0);

  ExpPoly tpoly = ExpPoly::monomial({1, 0}, 1, 0.0);
  auto t2 = ep_multiply(tpoly, tpoly);
  REQUIRE(t2.size() == 1);
  CHECK(t2.terms()[0].power == 2);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    auto fa = random_terms(rng, 5);
    auto fb = random_terms(rng, 5);
    ExpPoly pa(fa), pb(fb);
    auto pr = ep_multiply(pa, pb);
    for (int j = 0; j < 20; ++j) {
      double t = 0.1 * j;
      auto expect = naive_eval(fa, t) * naive_eval(fb, t);
      auto got = ep_eval(pr, t);
      CHECK(std::abs(got - static_cast<Complex>(expect)) <=
            1e-12 * std::max(1.0L, std::abs(expect)));
    }
  }
}

TEST_CASE("outer integral: resonant closed forms") {
  // f = e^{i theta0 tau} -> t e^{i theta0 t}
  ExpPoly f = ExpPoly::oscillation({1, 0}, 2.5);
  auto F = ep_outer_integral(f, 2.5);
  REQUIRE(F.size() == 1);
  CHECK(F.terms()[0].power == 1);
  CHECK(F.terms()[0].phase == 2.5);
  CHECK(F.terms()[0].coeff == Complex{1, 0});

  // f = 1, theta0 = 0 -> t
  auto G = ep_outer_integral(ExpPoly::oscillation({1, 0}, 0.0), 0.0);
  REQUIRE(G.size() == 1);
  CHECK(G.terms()[0].power == 1);
  CHECK(G.terms()[0].phase == 0.0);
}

TEST_CASE("outer integral vs quadrature oracle") {
  // f = tau^2 e^{3 i tau}, theta0 = -1
  std::vector<EpTerm> f = {{Complex{1, 0}, 2, 3.0}};
  auto F = ep_outer_integral(ExpPoly(f), -1.0);
  for (double t : {0.1, 0.7}) {
    Complex expect = duhamel_oracle(f, -1.0, t);
    CHECK(std::abs(ep_eval(F, t) - expect) <= 1e-10);
  }

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 4; ++trial) {
    auto terms = random_terms(rng, 4);
    double theta0 = 2.0 * (trial - 1.5);
    auto Fr = ep_outer_integral(ExpPoly(terms), theta0);
    for (double t : {0.05, 0.3, 0.9}) {
      Complex expect = duhamel_oracle(terms, theta0, t);
      CHECK(std::abs(ep_eval(Fr, t) - expect) <= 1e-10);
    }
  }
}

TEST_CASE("outer integral vanishes at t = 0") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    auto F = ep_outer_integral(ExpPoly(random_terms(rng, 6)), 3.0 * (trial - 5));
    // Exact per input term; merging boundary terms across inputs leaves only
    // summation rounding relative to the coefficient mass.
    double scale = 0;
    for (const auto& t : F.terms()) scale += std::abs(t.coeff);
    CHECK(std::abs(F.value_at_zero()) <= 1e-15 * std::max(1.0, scale));
    CHECK(std::abs(ep_eval(F, 0.0)) <= 1e-15 * std::max(1.0, scale));
  }
  // A single-term input cancels its boundary term exactly.
  auto F1 = ep_outer_integral(ExpPoly(std::vector<EpTerm>{{Complex{0.3, -0.7}, 2, 1.9}}), -0.6);
  CHECK(std::abs(F1.value_at_zero()) == 0.0);
}

TEST_CASE("evaluation basics") {
  CHECK(ep_eval(ExpPoly::zero(), 1.7) == Complex{0, 0});
  ExpPoly f = ExpPoly::monomial({2, 0}, 1, 0.0);
  CHECK(std::abs(ep_eval(f, 3.0) - Complex{6, 0}) <= 1e-15);
}

TEST_CASE("derivative: closed forms and finite differences") {
  auto dt = ep_derivative_t(ExpPoly::monomial({1, 0}, 1, 0.0));
  REQUIRE(dt.size() == 1);
  CHECK(dt.terms()[0].power == 0);
  CHECK(dt.terms()[0].coeff == Complex{1, 0});

  auto de = ep_derivative_t(ExpPoly::oscillation({1, 0}, 2.0));
  REQUIRE(de.size() == 1);
  CHECK(de.terms()[0].coeff == Complex{0, 2});

  std::mt19937_64 rng(41);
  auto terms = random_terms(rng, 6);
  ExpPoly f(terms);
  auto df = ep_derivative_t(f);
  const double h = 1e-5;
  for (int j = 1; j <= 10; ++j) {
    double t = 0.09 * j;
    Complex fd = (ep_eval(f, t + h) - ep_eval(f, t - h)) / (2 * h);
    CHECK(std::abs(ep_eval(df, t) - fd) <= 1e-6);
  }
}

TEST_CASE("fundamental theorem, termwise") {
  // d/dt F - i theta0 F = f after canonicalization.
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 6; ++trial) {
    auto terms = random_terms(rng, 5);
    double theta0 = 1.7 * (trial - 2);
    ExpPoly f(terms);
    auto F = ep_outer_integral(f, theta0);
    auto lhs = ep_sub(ep_derivative_t(F), ep_scale(F, Complex{0, theta0}));
    auto diff = ep_sub(lhs, f);
    double scale = 0;
    for (const auto& t : f.terms()) scale = std::max(scale, std::abs(t.coeff));
    for (const auto& t : diff.terms()) CHECK(std::abs(t.coeff) <= 1e-12 * scale);
  }

  // The numerical form of the same identity: d/dt F = f + i theta0 F by
  // central differences.
  auto terms = random_terms(rng, 5);
  ExpPoly f(terms);
  double theta0 = 2.3;
  auto F = ep_outer_integral(f, theta0);
  const double h = 1e-5;
  for (int j = 1; j <= 8; ++j) {
    double t = 0.1 * j;
    Complex fd = (ep_eval(F, t + h) - ep_eval(F, t - h)) / (2 * h);
    Complex expect = ep_eval(f, t) + Complex{0, theta0} * ep_eval(F, t);
    CHECK(std::abs(fd - expect) <= 1e-6);
  }
}

TEST_CASE("continuity across the resonance threshold") {
  const double tol = 1e-9;  // resonance_tol
  for (double t : {0.5, 1.0}) {
    const double theta0 = 2.0;
    const Complex a{0.7, -0.4};
    ExpPoly above(std::vector<EpTerm>{{a, 0, theta0 + 1.01 * tol}});
    ExpPoly below(std::vector<EpTerm>{{a, 0, theta0 + 0.99 * tol}});
    Complex va = ep_eval(ep_outer_integral(above, theta0), t);
    Complex vb = ep_eval(ep_outer_integral(below, theta0), t);
    CHECK(std::abs(va - vb) <= 10.0 * tol * std::abs(a));
  }

  // p >= 1 terms store coefficients of size 1/Delta^{p+1}; their double
  // rounding re-enters scaled by Delta t, so the branch gap there is bounded
  // by ~ eps |a| t / Delta instead.
  for (double t : {0.5, 1.0}) {
    const double theta0 = 2.0;
    const Complex a{0.7, -0.4};
    ExpPoly above(std::vector<EpTerm>{{a, 1, theta0 + 1.01 * tol}});
    ExpPoly below(std::vector<EpTerm>{{a, 1, theta0 + 0.99 * tol}});
    Complex va = ep_eval(ep_outer_integral(above, theta0), t);
    Complex vb = ep_eval(ep_outer_integral(below, theta0), t);
    CHECK(std::abs(va - vb) <= 8.0 * 2.3e-16 / (1.01 * tol) * t * std::abs(a));
  }
}

TEST_CASE("near-resonant expansion stays accurate at evaluation") {
  // Delta slightly above threshold: the expanded coefficients are ~1/Delta
  // but clustered evaluation recovers the integral of the stored term to
  // near machine accuracy.
  const double theta0 = 1.0;
  for (double delta_req : {2e-9, 1e-7, 1e-4}) {
    const double phi = theta0 + delta_req;  // the phase the term actually holds
    std::vector<EpTerm> f = {{Complex{1, 0}, 0, phi}};
    auto F = ep_outer_integral(ExpPoly(f), theta0);
    for (double t : {0.3, 1.0}) {
      // Exact for the stored phase: e^{i theta0 t} (e^{i d t} - 1)/(i d).
      const long double d = static_cast<long double>(phi) - theta0;
      std::complex<long double> num =
          std::exp(std::complex<long double>(0.0L, static_cast<long double>(phi) * t)) -
          std::exp(std::complex<long double>(0.0L, static_cast<long double>(theta0) * t));
      Complex expect = static_cast<Complex>(num / std::complex<long double>(0.0L, d));
      CHECK(std::abs(ep_eval(F, t) - expect) <= 1e-13);
    }
  }
}

TEST_CASE("term budget guard") {
  EpOptions opt;
  opt.max_terms = 8;
  std::vector<EpTerm> terms;
  for (int j = 0; j < 20; ++j) terms.push_back({Complex{1, 0}, 0, static_cast<double>(j)});
  CHECK_THROWS_AS(ep_canonical(std::move(terms), opt), Error);
}

TEST_CASE("debug csv format") {
  ExpPoly f = ExpPoly::monomial({1.5, -2.0}, 2, 0.5);
  auto csv = f.debug_csv();
  CHECK(csv == "1.5,-2,2,0.5\n");
}
