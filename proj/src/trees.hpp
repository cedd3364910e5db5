#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "combinatorics.hpp"
#include "exp_poly.hpp"
#include "lattice.hpp"

namespace qkdv {

/// Index element of the iterate expansion at depth k: either the passthrough
/// leaf (Zero), the depth-1 interaction leaf (One), or a pair of depth k-1
/// elements. Cached statistics drive the combinatorial bounds:
///   time_power     — number of nested integrals (the exponent of t),
///   leaf_count     — number of lattice indices the element consumes,
///   power_divisor  — the product of nested time_power factors dividing t^l.
struct ExpansionTree {
  enum Kind { Zero, One, Pair };
  Kind kind = Zero;
  int depth = 1;
  int left = -1;   // index into enumerate_trees(depth-1)
  int right = -1;
  int time_power = 0;
  int leaf_count = 1;
  std::uint64_t power_divisor = 1;
};

/// Full enumeration at depth k (sizes 2, 5, 26, 677 for k = 1..4), in a fixed
/// deterministic order: Zero first, then pairs left-major over depth k-1.
const std::vector<ExpansionTree>& enumerate_trees(int k);

/// The exponent-vector family attached to a tree (length leaf_count, all of
/// weight time_power): {0} for Zero, the two unit vectors for One, and for a
/// pair the Minkowski sum (left family x right family) + unit increments.
/// Returned as a sorted multiset; collisions carry multiplicity because the
/// size-product expansion bound needs them.
std::vector<MultiIndex> tree_exponent_set(const ExpansionTree& tree);

/// mu = sum of leaves; leaves are consumed in the induced (lexicographic)
/// order and their count must equal tree.leaf_count.
LatticeIndex tree_mu(std::span<const LatticeIndex> leaves);

/// The combinatorial weight factor: 1 on Zero, -i (mu w)/2 on One, and
/// -i (mu w)/2 times both children's factors on a pair.
Complex tree_weight(const ExpansionTree& tree, std::span<const LatticeIndex> leaves,
                    const FrequencyVector& w);

/// The index-size product bound: 1 on Zero, |mu| on One, |mu| P1 P2 on a pair.
double tree_size_product(const ExpansionTree& tree, std::span<const LatticeIndex> leaves);

/// The nested oscillatory integral I(., m) as an exact ExpPoly, built bottom-up.
ExpPoly tree_integral(const ExpansionTree& tree, std::span<const LatticeIndex> leaves,
                      const FrequencyVector& w, const EpOptions& opt = {});

/// I(t, m).
Complex tree_I(double t, const ExpansionTree& tree, std::span<const LatticeIndex> leaves,
               const FrequencyVector& w, const EpOptions& opt = {});

/// Brute-force evaluation of the k-th iterate at every |n| <= radius via the
/// full tree sum: sum over trees and leaf assignments (all leaves in the
/// initial data's support, every internal node's mu inside the box) of
/// cprod * weight * I(t). Enumeration cost is capped at `budget` combinations.
std::map<LatticeIndex, Complex> tree_sum_field(int k, double t, const CoeffField& c_init,
                                               const FrequencyVector& w, int radius,
                                               const EpOptions& opt = {},
                                               std::uint64_t budget = 10'000'000);

/// Single-mode convenience wrapper around tree_sum_field.
Complex tree_sum_ck(int k, const LatticeIndex& n, double t, const CoeffField& c_init,
                    const FrequencyVector& w, int radius, const EpOptions& opt = {},
                    std::uint64_t budget = 10'000'000);

}  // namespace qkdv
