#include "trees.hpp"

#include <algorithm>
#include <cmath>

namespace qkdv {

const std::vector<ExpansionTree>& enumerate_trees(int k) {
  if (k < 1 || k > 4)
    throw Error(ErrorCode::CombinatorialBudget,
                "enumerate_trees: supported depth range is 1 <= k <= 4");
  static std::vector<std::vector<ExpansionTree>> levels = [] {
    std::vector<std::vector<ExpansionTree>> lv(4);
    lv[0] = {{ExpansionTree::Zero, 1, -1, -1, 0, 1, 1},
             {ExpansionTree::One, 1, -1, -1, 1, 2, 1}};
    for (int depth = 2; depth <= 4; ++depth) {
      const auto& prev = lv[depth - 2];
      auto& cur = lv[depth - 1];
      cur.push_back({ExpansionTree::Zero, depth, -1, -1, 0, 1, 1});
      for (int i = 0; i < static_cast<int>(prev.size()); ++i) {
        for (int j = 0; j < static_cast<int>(prev.size()); ++j) {
          ExpansionTree t;
          t.kind = ExpansionTree::Pair;
          t.depth = depth;
          t.left = i;
          t.right = j;
          t.time_power = prev[i].time_power + prev[j].time_power + 1;
          t.leaf_count = prev[i].leaf_count + prev[j].leaf_count;
          t.power_divisor = static_cast<std::uint64_t>(t.time_power) *
                            prev[i].power_divisor * prev[j].power_divisor;
          cur.push_back(t);
        }
      }
    }
    return lv;
  }();
  return levels[k - 1];
}

std::vector<MultiIndex> tree_exponent_set(const ExpansionTree& tree) {
  // Kept as a sorted multiset: the size-product expansion bound is tight with
  // multiplicities (equality at all-ones leaves) and fails if collisions from
  // the Minkowski construction are collapsed.
  switch (tree.kind) {
    case ExpansionTree::Zero:
      return {MultiIndex({0})};
    case ExpansionTree::One:
      return {MultiIndex({0, 1}), MultiIndex({1, 0})};
    case ExpansionTree::Pair: {
      const auto& prev = enumerate_trees(tree.depth - 1);
      auto ls = tree_exponent_set(prev[tree.left]);
      auto rs = tree_exponent_set(prev[tree.right]);
      std::vector<MultiIndex> out;
      out.reserve(ls.size() * rs.size() * tree.leaf_count);
      for (const auto& a : ls) {
        for (const auto& b : rs) {
          std::vector<int> cat = a.alpha;
          cat.insert(cat.end(), b.alpha.begin(), b.alpha.end());
          for (std::size_t i = 0; i < cat.size(); ++i) {
            std::vector<int> v = cat;
            v[i] += 1;
            out.emplace_back(std::move(v));
          }
        }
      }
      std::sort(out.begin(), out.end());
      return out;
    }
  }
  return {};
}

LatticeIndex tree_mu(std::span<const LatticeIndex> leaves) {
  if (leaves.empty()) throw Error(ErrorCode::InvalidArgument, "tree_mu: no leaves");
  LatticeIndex mu = leaves[0];
  for (std::size_t j = 1; j < leaves.size(); ++j) mu = mu + leaves[j];
  return mu;
}

static void check_leaves(const ExpansionTree& tree, std::span<const LatticeIndex> leaves) {
  if (static_cast<int>(leaves.size()) != tree.leaf_count)
    throw Error(ErrorCode::InvalidArgument, "tree assignment: leaf count mismatch");
}

Complex tree_weight(const ExpansionTree& tree, std::span<const LatticeIndex> leaves,
                    const FrequencyVector& w) {
  check_leaves(tree, leaves);
  switch (tree.kind) {
    case ExpansionTree::Zero:
      return {1, 0};
    case ExpansionTree::One:
      return Complex{0, -0.5} * dot(tree_mu(leaves), w);
    case ExpansionTree::Pair: {
      const auto& prev = enumerate_trees(tree.depth - 1);
      const int dl = prev[tree.left].leaf_count;
      Complex fl = tree_weight(prev[tree.left], leaves.subspan(0, dl), w);
      Complex fr = tree_weight(prev[tree.right], leaves.subspan(dl), w);
      return Complex{0, -0.5} * dot(tree_mu(leaves), w) * fl * fr;
    }
  }
  return {0, 0};
}

double tree_size_product(const ExpansionTree& tree, std::span<const LatticeIndex> leaves) {
  check_leaves(tree, leaves);
  switch (tree.kind) {
    case ExpansionTree::Zero:
      return 1.0;
    case ExpansionTree::One:
      return tree_mu(leaves).l1();
    case ExpansionTree::Pair: {
      const auto& prev = enumerate_trees(tree.depth - 1);
      const int dl = prev[tree.left].leaf_count;
      return tree_mu(leaves).l1() * tree_size_product(prev[tree.left], leaves.subspan(0, dl)) *
             tree_size_product(prev[tree.right], leaves.subspan(dl));
    }
  }
  return 0.0;
}

ExpPoly tree_integral(const ExpansionTree& tree, std::span<const LatticeIndex> leaves,
                      const FrequencyVector& w, const EpOptions& opt) {
  check_leaves(tree, leaves);
  switch (tree.kind) {
    case ExpansionTree::Zero:
      return ExpPoly::oscillation({1, 0}, phase_cube(leaves[0], w), opt);
    case ExpansionTree::One: {
      double inner = phase_cube(leaves[0], w) + phase_cube(leaves[1], w);
      return ep_outer_integral(ExpPoly::oscillation({1, 0}, inner, opt),
                               phase_cube(tree_mu(leaves), w), opt);
    }
    case ExpansionTree::Pair: {
      const auto& prev = enumerate_trees(tree.depth - 1);
      const int dl = prev[tree.left].leaf_count;
      ExpPoly il = tree_integral(prev[tree.left], leaves.subspan(0, dl), w, opt);
      ExpPoly ir = tree_integral(prev[tree.right], leaves.subspan(dl), w, opt);
      return ep_outer_integral(ep_multiply(il, ir, opt),
                               phase_cube(tree_mu(leaves), w), opt);
    }
  }
  return ExpPoly::zero();
}

Complex tree_I(double t, const ExpansionTree& tree, std::span<const LatticeIndex> leaves,
               const FrequencyVector& w, const EpOptions& opt) {
  return ep_eval(tree_integral(tree, leaves, w, opt), t);
}

namespace {

/// One enumerated assignment of a subtree: total index, coefficient product,
/// weight factor and the integral as an ExpPoly.
struct NodeValue {
  LatticeIndex mu;
  Complex cprod;
  Complex weight;
  ExpPoly integral;
};

struct EnumContext {
  const CoeffField* c_init;
  const FrequencyVector* w;
  int radius;
  const EpOptions* opt;
  std::uint64_t budget;
  std::uint64_t used = 0;

  void charge(std::uint64_t n) {
    used += n;
    if (used > budget)
      throw Error(ErrorCode::CombinatorialBudget,
                  "tree_sum: combinatorial budget exceeded");
  }
};

/// Materializes every admissible assignment of a subtree. Internal nodes are
/// constrained to the box, mirroring the truncation the iteration applies.
std::vector<NodeValue> enumerate_node(const ExpansionTree& tree, EnumContext& ctx) {
  std::vector<NodeValue> out;
  switch (tree.kind) {
    case ExpansionTree::Zero: {
      for (const auto& [m, c] : ctx.c_init->entries()) {
        ctx.charge(1);
        out.push_back({m, c, {1, 0},
                       ExpPoly::oscillation({1, 0}, phase_cube(m, *ctx.w), *ctx.opt)});
      }
      return out;
    }
    case ExpansionTree::One: {
      for (const auto& [m1, c1] : ctx.c_init->entries()) {
        for (const auto& [m2, c2] : ctx.c_init->entries()) {
          ctx.charge(1);
          LatticeIndex mu = m1 + m2;
          if (mu.l1() > ctx.radius) continue;
          double inner = phase_cube(m1, *ctx.w) + phase_cube(m2, *ctx.w);
          double outer = phase_cube(mu, *ctx.w);
          NodeValue v;
          v.mu = mu;
          v.cprod = c1 * c2;
          v.weight = Complex{0, -0.5} * dot(mu, *ctx.w);
          v.integral = ep_outer_integral(ExpPoly::oscillation({1, 0}, inner, *ctx.opt),
                                         outer, *ctx.opt);
          out.push_back(std::move(v));
        }
      }
      return out;
    }
    case ExpansionTree::Pair: {
      const auto& prev = enumerate_trees(tree.depth - 1);
      auto ls = enumerate_node(prev[tree.left], ctx);
      auto rs = enumerate_node(prev[tree.right], ctx);
      out.reserve(ls.size() * rs.size() / 2 + 1);
      for (const auto& l : ls) {
        for (const auto& r : rs) {
          ctx.charge(1);
          LatticeIndex mu = l.mu + r.mu;
          if (mu.l1() > ctx.radius) continue;
          NodeValue v;
          v.mu = mu;
          v.cprod = l.cprod * r.cprod;
          v.weight = Complex{0, -0.5} * dot(mu, *ctx.w) * l.weight * r.weight;
          v.integral = ep_outer_integral(ep_multiply(l.integral, r.integral, *ctx.opt),
                                         phase_cube(mu, *ctx.w), *ctx.opt);
          out.push_back(std::move(v));
        }
      }
      return out;
    }
  }
  return out;
}

}  // namespace

std::map<LatticeIndex, Complex> tree_sum_field(int k, double t, const CoeffField& c_init,
                                               const FrequencyVector& w, int radius,
                                               const EpOptions& opt, std::uint64_t budget) {
  if (k < 1 || k > 3)
    throw Error(ErrorCode::CombinatorialBudget, "tree_sum_field: supported depth is k <= 3");
  if (c_init.nu() != w.nu())
    throw Error(ErrorCode::InvalidArgument, "tree_sum_field: dimension mismatch");

  std::map<LatticeIndex, Complex> acc;
  for (const auto& n : box_indices(c_init.nu(), radius)) acc[n] = Complex{0, 0};

  EnumContext ctx{&c_init, &w, radius, &opt, budget};
  for (const auto& tree : enumerate_trees(k)) {
    if (tree.kind == ExpansionTree::Pair) {
      // Accumulate pair combinations without materializing the top level.
      const auto& prev = enumerate_trees(k - 1);
      auto ls = enumerate_node(prev[tree.left], ctx);
      auto rs = enumerate_node(prev[tree.right], ctx);
      for (const auto& l : ls) {
        for (const auto& r : rs) {
          ctx.charge(1);
          LatticeIndex mu = l.mu + r.mu;
          if (mu.l1() > radius) continue;
          Complex weight = Complex{0, -0.5} * dot(mu, w) * l.weight * r.weight;
          ExpPoly integral = ep_outer_integral(ep_multiply(l.integral, r.integral, opt),
                                               phase_cube(mu, w), opt);
          acc[mu] += l.cprod * r.cprod * weight * ep_eval(integral, t);
        }
      }
    } else {
      auto vals = enumerate_node(tree, ctx);
      for (const auto& v : vals) acc[v.mu] += v.cprod * v.weight * ep_eval(v.integral, t);
    }
  }
  return acc;
}

Complex tree_sum_ck(int k, const LatticeIndex& n, double t, const CoeffField& c_init,
                    const FrequencyVector& w, int radius, const EpOptions& opt,
                    std::uint64_t budget) {
  auto field = tree_sum_field(k, t, c_init, w, radius, opt, budget);
  auto it = field.find(n);
  return it == field.end() ? Complex{0, 0} : it->second;
}

}  // namespace qkdv
