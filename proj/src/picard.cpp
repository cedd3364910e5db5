#include "picard.hpp"

#include <algorithm>
#include <cmath>

#include "combinatorics.hpp"

namespace qkdv {

double horizon(double B0, double kappa, const FrequencyVector& w, double C0) {
  if (B0 <= 0 || kappa <= 0 || C0 <= 0 || w.norm() <= 0)
    throw Error(ErrorCode::InvalidArgument, "horizon: all parameters must be positive");
  const double nu = w.nu();
  return std::pow(kappa, nu) /
         (8.0 * B0 * std::pow(2.0, nu) * std::pow(C0, nu) * w.norm());
}

std::map<LatticeIndex, ExpPoly> picard_step(const std::map<LatticeIndex, ExpPoly>& prev,
                                            const CoeffField& c_init,
                                            const FrequencyVector& w, int radius,
                                            const EpOptions& opt) {
  std::map<LatticeIndex, ExpPoly> out;
  for (const auto& n : box_indices(c_init.nu(), radius)) {
    const double theta_n = phase_cube(n, w);
    const double nw = dot(n, w);

    std::vector<EpTerm> base;
    Complex c0 = c_init.at(n);
    if (c0 != Complex{0, 0}) base.push_back({c0, 0, theta_n});

    if (nw != 0.0) {
      // (prev * prev)(n) as raw terms, summed over m1 in lexicographic order.
      std::vector<EpTerm> conv;
      for (const auto& [m1, f1] : prev) {
        LatticeIndex m2 = n + (-m1);
        if (m2.l1() > radius) continue;
        auto it2 = prev.find(m2);
        if (it2 == prev.end()) continue;
        for (const auto& a : f1.terms())
          for (const auto& b : it2->second.terms())
            conv.push_back({a.coeff * b.coeff, a.power + b.power, a.phase + b.phase});
      }
      if (!conv.empty()) {
        ExpPoly integral = ep_outer_integral(ep_canonical(std::move(conv), opt), theta_n, opt);
        const Complex prefactor = Complex{0, -0.5} * nw;
        for (auto t : integral.terms()) {
          t.coeff *= prefactor;
          base.push_back(t);
        }
      }
    }
    ExpPoly result = ep_canonical(std::move(base), opt);
    if (!result.is_zero()) out.emplace(n, std::move(result));
  }
  return out;
}

namespace {

std::vector<double> uniform_grid(double t_hi, int count) {
  std::vector<double> g(count);
  for (int j = 0; j < count; ++j)
    g[j] = t_hi * static_cast<double>(j) / static_cast<double>(count - 1);
  return g;
}

std::vector<double> chebyshev_grid(double t_hi, int count) {
  std::vector<double> g(count);
  for (int j = 0; j < count; ++j)
    g[j] = 0.5 * t_hi * (1.0 - std::cos(M_PI * j / (count - 1)));
  return g;
}

double weighted_sup_difference(const std::map<LatticeIndex, ExpPoly>& a,
                               const std::map<LatticeIndex, ExpPoly>& b, double kappa,
                               std::span<const double> grid, const EpOptions& opt) {
  double worst = 0;
  auto visit = [&](const LatticeIndex& n, const ExpPoly* fa, const ExpPoly* fb) {
    static const ExpPoly kZero;
    ExpPoly diff = ep_sub(fa ? *fa : kZero, fb ? *fb : kZero, opt);
    if (diff.is_zero()) return;
    double w = std::exp(kappa * n.l1() / 4.0);
    for (double t : grid) worst = std::max(worst, w * std::abs(ep_eval(diff, t)));
  };
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      visit(ia->first, &ia->second, nullptr);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      visit(ib->first, nullptr, &ib->second);
      ++ib;
    } else {
      visit(ia->first, &ia->second, &ib->second);
      ++ia;
      ++ib;
    }
  }
  return worst;
}

}  // namespace

SolutionTrajectory solve(const CoeffField& c_init, const FrequencyVector& w,
                         const SolverConfig& cfg) {
  if (c_init.nu() != w.nu())
    throw Error(ErrorCode::InvalidArgument, "solve: dimension mismatch");
  if (!c_init.envelope())
    throw Error(ErrorCode::InvalidArgument, "solve: initial data must carry an envelope");
  const Envelope env = *c_init.envelope();
  if (c_init.envelope_defect() > 1e-12 * env.B)
    throw Error(ErrorCode::InvalidArgument, "solve: envelope certificate violated by data");

  const EpOptions opt = cfg.ep_options();
  const double c0 = cfg.c0 > 0 ? cfg.c0 : default_C0(w.nu());
  const double t0 = horizon(env.B, env.kappa, w, c0);
  if (cfg.t_request > t0)
    throw Error(ErrorCode::HorizonExceeded,
                "solve: t_request " + std::to_string(cfg.t_request) +
                    " exceeds certified horizon " + std::to_string(t0));

  SolutionTrajectory traj;
  traj.omega = w;
  traj.box_radius = cfg.radius;
  traj.t_max = cfg.t_request;
  traj.initial_envelope = env;
  traj.c0_used = c0;
  traj.horizon_t0 = t0;
  traj.ep_opt = opt;

  // c_0(t, n) = c(n) e^{i t (nw)^3}
  std::map<LatticeIndex, ExpPoly> cur;
  for (const auto& [n, v] : c_init.entries())
    cur.emplace(n, ExpPoly::oscillation(v, phase_cube(n, w), opt));

  const auto grid = uniform_grid(cfg.t_request, cfg.diff_grid);
  int stagnant = 0;
  for (int k = 1; k <= cfg.max_iterations; ++k) {
    auto next = picard_step(cur, c_init, w, cfg.radius, opt);
    double d = weighted_sup_difference(next, cur, env.kappa, grid, opt);
    traj.weighted_diffs.push_back(d);
    cur = std::move(next);
    traj.iterations = k;
    if (d <= cfg.target_tol) {
      traj.converged = true;
      break;
    }
    if (k >= 2) {
      double ratio = traj.weighted_diffs[k - 1] / traj.weighted_diffs[k - 2];
      traj.empirical_ratio = std::max(traj.empirical_ratio, ratio);
      stagnant = ratio >= 1.0 ? stagnant + 1 : 0;
      if (stagnant >= 3)
        throw Error(ErrorCode::NoContraction,
                    "solve: weighted differences failed to contract for 3 steps");
    }
  }
  traj.coeffs = std::move(cur);
  return traj;
}

CoeffField SolutionTrajectory::snapshot(double t) const {
  CoeffField out(omega.nu(), box_radius);
  for (const auto& [n, f] : coeffs) out.set(n, ep_eval(f, t));
  out.prune(ep_opt.prune_floor);
  return out;
}

double SolutionTrajectory::theoretical_ratio(double c1) const {
  const double nu = omega.nu();
  return initial_envelope.B * std::pow(4.0, nu + 1) * c1 *
         std::pow(initial_envelope.kappa, -nu) * omega.norm() * t_max;
}

Complex evaluate_u_complex(const SolutionTrajectory& traj, double t, double x) {
  if (t < 0 || t > traj.t_max * (1 + 1e-12))
    throw Error(ErrorCode::InvalidArgument, "evaluate_u: t outside [0, t_max]");
  Complex s{0, 0};
  for (const auto& [n, f] : traj.coeffs) {
    double ph = dot(n, traj.omega) * x;
    s += ep_eval(f, t) * Complex{std::cos(ph), std::sin(ph)};
  }
  return s;
}

double evaluate_u(const SolutionTrajectory& traj, double t, double x) {
  if (t < 0 || t > traj.t_max * (1 + 1e-12))
    throw Error(ErrorCode::InvalidArgument, "evaluate_u: t outside [0, t_max]");
  Complex s{0, 0};
  double mass = 0;
  for (const auto& [n, f] : traj.coeffs) {
    Complex c = ep_eval(f, t);
    mass += std::abs(c);
    double ph = dot(n, traj.omega) * x;
    s += c * Complex{std::cos(ph), std::sin(ph)};
  }
  if (std::abs(s.imag()) > 1e-10 * std::max(mass, 1e-300))
    throw Error(ErrorCode::AssertionFailed,
                "evaluate_u: non-real synthesis (field not Hermitian-symmetric?)");
  return s.real();
}

std::uint64_t shell_count(int nu, int s) {
  if (s == 0) return 1;
  // #{n in Z^nu : sum |n_j| = s} = sum_k 2^k C(nu,k) C(s-1,k-1)
  auto binom = [](int n, int k) -> std::uint64_t {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int j = 1; j <= k; ++j) r = r * static_cast<std::uint64_t>(n - k + j) / j;
    return r;
  };
  std::uint64_t total = 0;
  for (int k = 1; k <= nu; ++k)
    total += (std::uint64_t{1} << k) * binom(nu, k) * binom(s - 1, k - 1);
  return total;
}

ResidualReport pde_residual(const SolutionTrajectory& traj,
                            std::span<const double> t_samples,
                            std::span<const double> x_samples, double target_tol) {
  if (!traj.converged)
    throw Error(ErrorCode::NoContraction, "pde_residual: trajectory did not converge");
  const auto& w = traj.omega;
  const int R = traj.box_radius;

  ResidualReport rep;
  for (double t : t_samples) {
    // Instantaneous coefficients and the quadratic term out to radius 2R.
    CoeffField snap(w.nu(), R);
    for (const auto& [n, f] : traj.coeffs) snap.set(n, ep_eval(f, t));
    CoeffField quad = convolve(snap, snap, 2 * R, 0.0);

    std::map<LatticeIndex, Complex> r;
    for (const auto& [n, v] : quad.entries())
      r[n] = Complex{0, 0.5} * dot(n, w) * v;  // (i n w / 2) (c * c)(n)
    for (const auto& [n, f] : traj.coeffs) {
      Complex dt = ep_eval(ep_derivative_t(f, traj.ep_opt), t);
      Complex dxxx = Complex{0, -phase_cube(n, w)} * ep_eval(f, t);  // (i n w)^3 c
      r[n] += dt + dxxx;
    }
    for (double x : x_samples) {
      Complex s{0, 0};
      for (const auto& [n, v] : r) {
        double ph = dot(n, w) * x;
        s += v * Complex{std::cos(ph), std::sin(ph)};
      }
      rep.max_residual = std::max(rep.max_residual, std::abs(s));
    }
  }

  // Tail of the quadratic term for the true truncated solution: modes between
  // R+1 and 2R bounded by (|n| |w| / 2) (2B0)^2 #pairs e^{-kappa |n| / 2}.
  const Envelope& env = traj.initial_envelope;
  const double pairs = std::pow(2.0 * R + 1.0, w.nu());
  double tail = 0;
  for (int s = R + 1; s <= 2 * R; ++s)
    tail += static_cast<double>(shell_count(w.nu(), s)) * (s * w.norm() / 2.0) *
            4.0 * env.B * env.B * pairs * std::exp(-env.kappa * s / 2.0);
  rep.tail_bound = tail;

  double box_mass = 0;
  for (int s = 0; s <= R; ++s)
    box_mass += static_cast<double>(shell_count(w.nu(), s)) * 2.0 * env.B *
                std::exp(-env.kappa * s / 2.0);
  rep.reported_bound = target_tol * (1.0 + w.norm() * R * box_mass) + tail;
  return rep;
}

EnvelopeCheckReport check_solution_envelope(const std::map<LatticeIndex, ExpPoly>& coeffs,
                                            const Envelope& env, double t_hi, int n_times) {
  EnvelopeCheckReport rep;
  rep.worst_excess = -std::numeric_limits<double>::infinity();
  auto grid = chebyshev_grid(t_hi, n_times);
  for (const auto& [n, f] : coeffs) {
    const double bound = 2.0 * env.B * std::exp(-env.kappa * n.l1() / 2.0);
    for (double t : grid) {
      rep.worst_excess = std::max(rep.worst_excess, std::abs(ep_eval(f, t)) - bound);
      ++rep.samples;
    }
  }
  if (coeffs.empty()) rep.worst_excess = 0;
  rep.pass = rep.worst_excess <= 0;
  return rep;
}

double momentum_drift(const SolutionTrajectory& traj, int n_times) {
  auto grid = uniform_grid(traj.t_max, n_times);
  double m0 = -1, lo = 0, hi = 0;
  for (double t : grid) {
    double m = traj.snapshot(t).l2_mass();
    if (m0 < 0) {
      m0 = lo = hi = m;
    } else {
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
  }
  return m0 > 0 ? (hi - lo) / m0 : 0.0;
}

}  // namespace qkdv
