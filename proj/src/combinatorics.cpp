#include "combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace qkdv {

int MultiIndex::weight() const {
  int s = 0;
  for (int a : alpha) s += a;
  return s;
}

std::string MultiIndex::str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t j = 0; j < alpha.size(); ++j) os << (j ? "," : "") << alpha[j];
  os << ")";
  return os.str();
}

static void compositions_rec(int parts_left, int budget, std::vector<int>& scratch,
                             std::vector<MultiIndex>& out) {
  if (parts_left == 1) {
    scratch.push_back(budget);
    out.emplace_back(scratch);
    scratch.pop_back();
    return;
  }
  for (int v = 0; v <= budget; ++v) {
    scratch.push_back(v);
    compositions_rec(parts_left - 1, budget - v, scratch, out);
    scratch.pop_back();
  }
}

std::vector<MultiIndex> enumerate_compositions(int N, int l) {
  if (N < 1 || l < 0 || N > 8 || l > 8)
    throw Error(ErrorCode::CombinatorialBudget,
                "enumerate_compositions: supported range is 1 <= N <= 8, 0 <= l <= 8");
  std::vector<MultiIndex> out;
  std::vector<int> scratch;
  compositions_rec(N, l, scratch, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::pair<MultiIndex, int> reduction_map(const MultiIndex& alpha) {
  int min_pos = std::numeric_limits<int>::max();
  for (int a : alpha.alpha)
    if (a > 0) min_pos = std::min(min_pos, a);
  if (min_pos == std::numeric_limits<int>::max())
    throw Error(ErrorCode::InvalidArgument, "reduction_map: all-zero multi-index");
  int j1 = 0;
  for (int j = 0; j < alpha.size(); ++j)
    if (alpha.alpha[j] == min_pos) {
      j1 = j + 1;
      break;
    }
  MultiIndex beta = alpha;
  beta.alpha[j1 - 1] -= 1;
  return {beta, j1};
}

static std::uint64_t factorial_u64(int n) {
  std::uint64_t r = 1;
  for (int j = 2; j <= n; ++j) r *= static_cast<std::uint64_t>(j);
  return r;
}

std::uint64_t sum_prod_factorials(std::span<const MultiIndex> set) {
  std::uint64_t total = 0;
  for (const auto& a : set) {
    std::uint64_t prod = 1;
    for (int x : a.alpha) prod *= factorial_u64(x);
    total += prod;
  }
  return total;
}

std::uint64_t factorial_sum(int N, int l) {
  auto set = enumerate_compositions(N, l);
  return sum_prod_factorials(set);
}

std::uint64_t factorial_sum_dp(int N, int l) {
  // T(n, m) = sum over compositions of m into n parts of prod a_i!
  //         = sum_{a=0}^{m} a! T(n-1, m-a).
  if (N < 1 || l < 0)
    throw Error(ErrorCode::InvalidArgument, "factorial_sum_dp: bad arguments");
  if (l > 20)
    throw Error(ErrorCode::CombinatorialBudget, "factorial_sum_dp: l too large for exact u64");
  std::vector<std::uint64_t> row(static_cast<std::size_t>(l) + 1, 0);
  for (int m = 0; m <= l; ++m) row[m] = factorial_u64(m);
  for (int n = 2; n <= N; ++n) {
    std::vector<std::uint64_t> next(static_cast<std::size_t>(l) + 1, 0);
    for (int m = 0; m <= l; ++m) {
      std::uint64_t s = 0;
      for (int a = 0; a <= m; ++a) {
        std::uint64_t term = factorial_u64(a) * row[m - a];
        if (s > std::numeric_limits<std::uint64_t>::max() - term)
          throw Error(ErrorCode::CombinatorialBudget, "factorial_sum_dp: u64 overflow");
        s += term;
      }
      next[m] = s;
    }
    row = std::move(next);
  }
  return row[l];
}

std::vector<MultiIndex> build_difference_exponents(int k) {
  if (k < 1 || k > 6)
    throw Error(ErrorCode::CombinatorialBudget,
                "build_difference_exponents: supported range is 1 <= k <= 6");
  std::vector<MultiIndex> cur = {MultiIndex({0, 1}), MultiIndex({1, 0})};
  for (int depth = 2; depth <= k; ++depth) {
    std::vector<MultiIndex> next;
    for (const auto& b : cur) {
      std::vector<int> padded = b.alpha;
      padded.push_back(0);
      for (std::size_t i = 0; i < padded.size(); ++i) {
        std::vector<int> a = padded;
        a[i] += 1;
        next.emplace_back(std::move(a));
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    cur = std::move(next);
  }
  return cur;
}

double lattice_moment_sum(int a, double kappa) {
  if (kappa <= 0)
    throw Error(ErrorCode::InvalidArgument, "lattice_moment_sum: kappa must be > 0");
  if (a == 0) {
    // 1 + 2 e^{-kappa}/(1 - e^{-kappa}) = coth(kappa/2)
    return 1.0 / std::tanh(kappa / 2.0);
  }
  double sum = 0;
  for (int m = 1;; ++m) {
    double term = std::pow(static_cast<double>(m), a) * std::exp(-kappa * m);
    sum += term;
    if (m > a / kappa + 1 && term < 1e-15 * sum) break;
    if (m > 100000)
      throw Error(ErrorCode::CombinatorialBudget, "lattice_moment_sum: no convergence");
  }
  return 2.0 * sum;
}

static bool c0_holds(double c0, int nu, std::span<const double> kappas,
                     std::span<const MultiIndex> alphas) {
  for (double kappa : kappas) {
    for (const auto& alpha : alphas) {
      if (alpha.weight() < 1) continue;
      double lhs = 1.0;
      for (int a : alpha.alpha) lhs *= lattice_moment_sum(a, kappa);
      double afact = 1.0;
      for (int a : alpha.alpha) afact *= static_cast<double>(factorial_u64(a));
      double rhs = afact * std::pow(c0 / kappa, static_cast<double>(alpha.weight()) * nu);
      if (lhs > rhs) return false;
    }
  }
  return true;
}

double estimate_C0(int nu, std::span<const double> kappas,
                   std::span<const MultiIndex> alphas, std::vector<C0Row>* certificate) {
  if (nu < 1) throw Error(ErrorCode::InvalidArgument, "estimate_C0: nu must be >= 1");
  double lo = 1e-3, hi = 1.0;
  while (!c0_holds(hi, nu, kappas, alphas)) {
    hi *= 2.0;
    if (hi > 1e6)
      throw Error(ErrorCode::AssertionFailed, "estimate_C0: no admissible C0 below 1e6");
  }
  while (hi - lo > 1e-3) {
    double mid = 0.5 * (lo + hi);
    if (c0_holds(mid, nu, kappas, alphas))
      hi = mid;
    else
      lo = mid;
  }
  if (certificate) {
    certificate->clear();
    for (double kappa : kappas) {
      for (const auto& alpha : alphas) {
        if (alpha.weight() < 1) continue;
        C0Row row;
        row.kappa = kappa;
        row.alpha = alpha;
        row.lhs = 1.0;
        for (int a : alpha.alpha) row.lhs *= lattice_moment_sum(a, kappa);
        double afact = 1.0;
        for (int a : alpha.alpha) afact *= static_cast<double>(factorial_u64(a));
        row.rhs = afact * std::pow(hi / kappa, static_cast<double>(alpha.weight()) * nu);
        certificate->push_back(std::move(row));
      }
    }
  }
  return hi;
}

std::vector<MultiIndex> default_alpha_domain(int nu, int max_weight) {
  std::vector<MultiIndex> out;
  for (int l = 1; l <= max_weight; ++l) {
    std::vector<int> scratch;
    std::vector<MultiIndex> level;
    compositions_rec(nu, l, scratch, level);
    out.insert(out.end(), level.begin(), level.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

double default_C0(int nu) {
  static std::map<int, double> cache;
  auto it = cache.find(nu);
  if (it != cache.end()) return it->second;
  const double kappas[] = {0.5, 1.0, 2.0};
  auto alphas = default_alpha_domain(nu, 6);
  double c0 = estimate_C0(nu, kappas, alphas);
  cache[nu] = c0;
  return c0;
}

double estimate_C1(std::span<const DiffLog> logs, double c0_floor) {
  double c1 = c0_floor;
  for (const auto& log : logs) {
    const double denom = std::pow(4.0, log.nu + 1) * log.omega_norm * log.t;
    if (denom <= 0) continue;
    for (std::size_t k1 = 0; k1 < log.weighted_diffs.size(); ++k1) {
      const int k = static_cast<int>(k1) + 1;
      const double d = log.weighted_diffs[k1];
      if (d <= 0) continue;
      // d <= B0^{k+1} (4^{nu+1} C1 kappa^{-nu} |omega| t)^k
      double x = std::pow(d / std::pow(log.B0, k + 1), 1.0 / k);
      double fit = x * std::pow(log.kappa, log.nu) / denom;
      c1 = std::max(c1, fit);
    }
  }
  return c1;
}

}  // namespace qkdv
