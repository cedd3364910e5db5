#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lattice.hpp"

namespace qkdv {

/// Nonnegative multi-index alpha with weight sum_j alpha_j.
struct MultiIndex {
  std::vector<int> alpha;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> a) : alpha(std::move(a)) {}

  int size() const { return static_cast<int>(alpha.size()); }
  int weight() const;
  bool operator==(const MultiIndex& o) const { return alpha == o.alpha; }
  bool operator<(const MultiIndex& o) const { return alpha < o.alpha; }
  std::string str() const;
};

/// All compositions of l into N nonnegative parts, lexicographic order.
/// Guarded to N <= 8, l <= 8 so sizes stay at desk scale.
std::vector<MultiIndex> enumerate_compositions(int N, int l);

/// The reduction map: decrement the first coordinate holding the minimal
/// positive entry. Returns the reduced index and that coordinate (1-based j1).
std::pair<MultiIndex, int> reduction_map(const MultiIndex& alpha);

/// Exact sum over all compositions of l into N parts of prod_i alpha_i!.
std::uint64_t factorial_sum(int N, int l);

/// Same sum computed by dynamic programming without the N, l <= 8 guard
/// (used for bound evaluation at larger depth). Exact in 64-bit.
std::uint64_t factorial_sum_dp(int N, int l);

/// Exact sum of prod_i alpha_i! over an explicit set of multi-indices.
std::uint64_t sum_prod_factorials(std::span<const MultiIndex> set);

/// The difference-bound exponent sets: subsets of Z^{k+1} built by the
/// recursion  B(1) = {(1,0),(0,1)},  B(k) = B(k-1) x {0} + {unit vectors}.
/// Every element has weight k. Guarded to k <= 6.
std::vector<MultiIndex> build_difference_exponents(int k);

struct C0Row {
  double kappa = 0;
  MultiIndex alpha;
  double lhs = 0;  // prod_j sum_m |m|^{alpha_j} exp(-kappa |m|)
  double rhs = 0;  // alpha! (C0/kappa)^{|alpha| nu} at the reported C0
};

/// 1-d lattice sum S(a, kappa) = sum_{m in Z} |m|^a exp(-kappa |m|),
/// truncated once the tail is negligible.
double lattice_moment_sum(int a, double kappa);

/// Smallest C0 (binary search, 1e-3 resolution) such that
///   prod_j S(alpha_j, kappa) <= alpha! (C0/kappa)^{|alpha| nu}
/// holds for every supplied kappa and alpha with |alpha| >= 1. Zero-weight
/// alphas are excluded: the inequality cannot hold there and every use has
/// weight >= 1.
double estimate_C0(int nu, std::span<const double> kappas,
                   std::span<const MultiIndex> alphas,
                   std::vector<C0Row>* certificate = nullptr);

/// All alpha in Z_{>=0}^nu with 1 <= |alpha| <= max_weight.
std::vector<MultiIndex> default_alpha_domain(int nu, int max_weight = 6);

/// C0 over the documented certification domain (|alpha| <= 6,
/// kappa in {0.5, 1, 2}), cached per nu.
double default_C0(int nu);

/// One solver run's measured Cauchy data, enough to evaluate the difference
/// bound B0^{k+1} (4^{nu+1} C1 kappa^{-nu} |omega| t)^k. weighted_diffs[k-1]
/// holds max_n |c_k - c_{k-1}| e^{kappa |n| / 4} over the run's sample grid.
struct DiffLog {
  int nu = 1;
  double B0 = 0;
  double kappa = 0;
  double omega_norm = 0;
  double t = 0;
  std::vector<double> weighted_diffs;
};

/// Least C1 making every logged difference satisfy the bound, floored at
/// c0_floor (the bound constant must dominate C0).
double estimate_C1(std::span<const DiffLog> logs, double c0_floor);

}  // namespace qkdv
