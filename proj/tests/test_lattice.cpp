#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "lattice.hpp"

using namespace qkdv;

namespace {

LatticeIndex idx(std::vector<int> v) { return LatticeIndex(std::move(v)); }

CoeffField random_field(int nu, int radius, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CoeffField c(nu, radius);
  for (const auto& n : box_indices(nu, radius))
    c.set(n, scale * Complex{u(rng), u(rng)});
  return c;
}

}  // namespace

TEST_CASE("phase_cube basics") {
  CHECK(phase_cube(idx({2}), FrequencyVector({1.0})) == doctest::Approx(8.0));
  CHECK(phase_cube(idx({0, 0}), FrequencyVector({0.3, 1.7})) == 0.0);
  // (1 + sqrt 2)^3 = 7 + 5 sqrt 2, algebraically
  double expect = 7.0 + 5.0 * std::sqrt(2.0);
  CHECK(phase_cube(idx({1, 1}), FrequencyVector({1.0, std::sqrt(2.0)})) ==
        doctest::Approx(expect).epsilon(1e-14));
  CHECK_THROWS_AS(phase_cube(idx({1}), FrequencyVector({1.0, 2.0})), Error);
}

TEST_CASE("convolve single pair and zero field") {
  CoeffField a(1, 3), b(1, 3);
  a.set(idx({1}), Complex{2, 1});
  b.set(idx({2}), Complex{0, 3});
  auto out = convolve(a, b, 3);
  CHECK(out.size() == 1);
  CHECK(out.at(idx({3})) == Complex{2, 1} * Complex{0, 3});

  CoeffField zero(1, 3);
  auto z = convolve(a, zero, 3);
  CHECK(z.empty());
}

TEST_CASE("convolve matches brute force, is symmetric and bilinear") {
  std::mt19937_64 rng(7);
  CoeffField a = random_field(2, 3, rng);
  CoeffField b = random_field(2, 3, rng);
  auto out = convolve(a, b, 4, 0.0);

  // Independent O(|support|^2) accumulation into a plain map.
  std::map<LatticeIndex, Complex> brute;
  for (const auto& [m1, v1] : a.entries())
    for (const auto& [m2, v2] : b.entries()) {
      LatticeIndex n = m1 + m2;
      if (n.l1() <= 4) brute[n] += v1 * v2;
    }
  CHECK(brute.size() == out.size());
  for (const auto& [n, v] : brute)
    CHECK(std::abs(out.at(n) - v) <= 1e-14 * std::max(1.0, std::abs(v)));

  auto ba = convolve(b, a, 4, 0.0);
  for (const auto& [n, v] : out.entries())
    CHECK(std::abs(ba.at(n) - v) <= 1e-14 * std::max(1.0, std::abs(v)));
}

TEST_CASE("convolution envelope closure") {
  // |conv(a,b)(n)| <= B_a B_b (1 + 2/kappa)^nu e^{-kappa' |n|}, kappa' = kappa/2.
  const double kappa = 1.3;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int nu : {1, 2}) {
    CoeffField a(nu, 4), b(nu, 4);
    for (const auto& n : box_indices(nu, 4)) {
      a.set(n, u(rng) * std::exp(-kappa * n.l1()));
      b.set(n, 0.7 * u(rng) * std::exp(-kappa * n.l1()));
    }
    a.set_envelope({1.0, kappa});
    b.set_envelope({0.7, kappa});
    CHECK(a.envelope_defect() <= 0);
    CHECK(b.envelope_defect() <= 0);
    auto out = convolve(a, b, 8, 0.0);
    const double factor = 0.7 * std::pow(1.0 + 2.0 / kappa, nu);
    for (const auto& [n, v] : out.entries())
      CHECK(std::abs(v) <= factor * std::exp(-kappa / 2.0 * n.l1()) * (1 + 1e-12));
  }
}

TEST_CASE("check_diophantine") {
  auto r1 = check_diophantine(FrequencyVector({1.0}), {0.5, 1.0}, 30);
  CHECK(r1.pass);

  auto r2 = check_diophantine(FrequencyVector({1.0, 1.0}), {0.5, 1.5}, 5);
  CHECK_FALSE(r2.pass);
  CHECK(r2.worst_ratio == doctest::Approx(0.0));
  CHECK(std::abs(r2.worst_n.n[0] + r2.worst_n.n[1]) == 0);  // resonant n

  // Golden-ratio vector versus an independent rectangular scan.
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  DiophantineParams p{0.3, 1.2};
  auto rep = check_diophantine(FrequencyVector({1.0, phi}), p, 50);
  double best = 1e300;
  for (int i = -50; i <= 50; ++i)
    for (int j = -50; j <= 50; ++j) {
      int l1 = std::abs(i) + std::abs(j);
      if (l1 == 0 || l1 > 50) continue;
      double ratio = std::abs(i + phi * j) * std::pow(l1, p.b0) / p.a0;
      best = std::min(best, ratio);
    }
  CHECK(rep.worst_ratio == doctest::Approx(best).epsilon(1e-12));
  CHECK(rep.pass == (best >= 1.0));
}

TEST_CASE("hermitian_symmetrize") {
  CoeffField c(1, 2);
  c.set(idx({1}), Complex{1, 0});
  auto s = hermitian_symmetrize(c);
  CHECK(s.at(idx({1})) == Complex{0.5, 0});
  CHECK(s.at(idx({-1})) == Complex{0.5, 0});

  std::mt19937_64 rng(3);
  CoeffField r = random_field(2, 3, rng);
  auto h = hermitian_symmetrize(r);
  CHECK(is_hermitian(h, 1e-14));
  auto h2 = hermitian_symmetrize(h);  // fixed point
  for (const auto& [n, v] : h.entries()) CHECK(std::abs(h2.at(n) - v) <= 1e-15);

  // Synthesized function is real at random points.
  FrequencyVector w({1.0, std::sqrt(2.0)});
  std::uniform_real_distribution<double> u(-20, 20);
  double mass = 0;
  for (const auto& [n, v] : h.entries()) mass += std::abs(v);
  for (int k = 0; k < 100; ++k) {
    Complex val = h.synthesize(w, u(rng));
    CHECK(std::abs(val.imag()) <= 1e-12 * mass);
  }
}

TEST_CASE("bohr extraction") {
  FrequencyVector w({1.0, std::sqrt(2.0)});
  CoeffField c(2, 2);
  c.set(idx({1, 0}), Complex{0.8, -0.2});
  c.set(idx({0, 1}), Complex{-0.3, 0.5});

  SUBCASE("self term and orthogonality") {
    auto self = extract_coefficient(c, w, idx({1, 0}), 1e3);
    CHECK(std::abs(self.value - Complex{0.8, -0.2}) <= 10.0 / 1e3);
    auto missing = extract_coefficient(c, w, idx({1, 1}), 1e3);
    CHECK(std::abs(missing.value) <= 10.0 / 1e3);
  }

  SUBCASE("two-mode recovery at A = 1e4") {
    for (auto target : {idx({1, 0}), idx({0, 1})}) {
      auto got = extract_coefficient(c, w, target, 1e4);
      CHECK(std::abs(got.value - c.at(target)) <= 1e-3);
    }
  }

  SUBCASE("error decays like 1/A") {
    double prev = 1e300;
    for (double A : {1e2, 1e3, 1e4}) {
      auto got = extract_coefficient(c, w, idx({1, 0}), A);
      double err = std::abs(got.value - c.at(idx({1, 0})));
      CHECK(err <= got.error_bound + 1e-12);
      CHECK(err < prev);
      prev = err;
    }
  }

  SUBCASE("degenerate phases rejected") {
    FrequencyVector res({1.0, 1.0});
    CoeffField d(2, 2);
    d.set(idx({1, 0}), Complex{1, 0});
    d.set(idx({0, 1}), Complex{1, 0});  // same phase n.w = 1
    CHECK_THROWS_AS(extract_coefficient(d, res, idx({1, 0}), 100.0), Error);
  }
}

TEST_CASE("field json round trip, lexicographic entry order") {
  std::mt19937_64 rng(5);
  CoeffField c = random_field(2, 2, rng);
  c.set_envelope({2.0, 0.7});
  FrequencyVector w({1.0, 1.414});
  std::string text = field_to_json(c, w);
  auto [c2, w2] = field_from_json(text);
  CHECK(w2.omega == w.omega);
  CHECK(c2.radius() == c.radius());
  CHECK(c2.size() == c.size());
  for (const auto& [n, v] : c.entries()) CHECK(c2.at(n) == v);
  REQUIRE(c2.envelope().has_value());
  CHECK(c2.envelope()->kappa == 0.7);

  // Entries iterate lexicographically; the serialized order must match.
  auto prev = c.entries().begin()->first;
  for (const auto& [n, v] : c.entries()) {
    CHECK_FALSE(n < prev);
    prev = n;
  }

  CHECK_THROWS_AS(field_from_json("{not json"), Error);
  CHECK_THROWS_AS(field_from_json("{\"nu\":1,\"omega\":[1.0,2.0],\"radius\":1,\"entries\":[]}"),
                  Error);
}

TEST_CASE("box constraint and pruning") {
  CoeffField c(1, 2);
  CHECK_THROWS_AS(c.set(idx({3}), Complex{1, 0}), Error);
  c.set(idx({1}), Complex{1e-40, 0});
  c.set(idx({2}), Complex{1, 0});
  c.prune(1e-30);
  CHECK(c.size() == 1);
  CHECK(c.at(idx({1})) == Complex{0, 0});
}
