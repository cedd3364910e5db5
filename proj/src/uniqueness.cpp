#include "uniqueness.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "combinatorics.hpp"

namespace qkdv {

TrajectoryPair make_trajectory_pair(SolutionTrajectory c, SolutionTrajectory h) {
  if (c.omega.omega != h.omega.omega || c.box_radius != h.box_radius)
    throw Error(ErrorCode::InvalidArgument,
                "make_trajectory_pair: trajectories must share omega and box");
  double scale = std::max(c.initial_envelope.B, 1e-300);
  for (const auto& n : box_indices(c.omega.nu(), c.box_radius)) {
    auto ic = c.coeffs.find(n);
    auto ih = h.coeffs.find(n);
    Complex vc = ic == c.coeffs.end() ? Complex{0, 0} : ic->second.value_at_zero();
    Complex vh = ih == h.coeffs.end() ? Complex{0, 0} : ih->second.value_at_zero();
    if (std::abs(vc - vh) > 1e-12 * scale)
      throw Error(ErrorCode::InconsistentInitialData,
                  "make_trajectory_pair: initial fields differ at " + n.str());
  }
  TrajectoryPair pair;
  pair.B = 2.0 * std::max(c.initial_envelope.B, h.initial_envelope.B);
  pair.rho = 0.5 * std::min(c.initial_envelope.kappa, h.initial_envelope.kappa);
  pair.c_traj = std::move(c);
  pair.h_traj = std::move(h);
  return pair;
}

SolutionTrajectory project_trajectory(const SolutionTrajectory& traj, int radius) {
  SolutionTrajectory out = traj;
  out.box_radius = radius;
  out.coeffs.clear();
  for (const auto& [n, f] : traj.coeffs)
    if (n.l1() <= radius) out.coeffs.emplace(n, f);
  return out;
}

double verify_integral_equations(const SolutionTrajectory& traj,
                                 std::span<const double> t_samples) {
  // Reconstruct the initial field and apply one Duhamel application; the
  // defect is the closed-form difference evaluated at the samples.
  CoeffField init(traj.omega.nu(), traj.box_radius);
  for (const auto& [n, f] : traj.coeffs) init.set(n, f.value_at_zero());
  init.prune(traj.ep_opt.prune_floor);
  auto rhs = picard_step(traj.coeffs, init, traj.omega, traj.box_radius, traj.ep_opt);

  double worst = 0;
  static const ExpPoly kZero;
  auto all = box_indices(traj.omega.nu(), traj.box_radius);
  for (const auto& n : all) {
    auto il = traj.coeffs.find(n);
    auto ir = rhs.find(n);
    const ExpPoly& lhs = il == traj.coeffs.end() ? kZero : il->second;
    const ExpPoly& r = ir == rhs.end() ? kZero : ir->second;
    ExpPoly diff = ep_sub(lhs, r, traj.ep_opt);
    if (diff.is_zero()) continue;
    for (double t : t_samples) worst = std::max(worst, std::abs(ep_eval(diff, t)));
  }
  return worst;
}

double contraction_bound(const TrajectoryPair& pair, int k, double t, double c0) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "contraction_bound: k must be >= 1");
  const double nu = pair.c_traj.omega.nu();
  const double x = std::pow(2.0, nu + 1) * c0 * std::pow(pair.rho, -nu) *
                   pair.c_traj.omega.norm() * t;
  double fact_sum;
  if (k <= 6)
    fact_sum = static_cast<double>(sum_prod_factorials(build_difference_exponents(k)));
  else
    fact_sum = static_cast<double>(factorial_sum_dp(k + 1, k));
  double kfact = 1;
  for (int j = 2; j <= k; ++j) kfact *= j;
  return std::pow(pair.B, k + 1) * std::pow(x, k) / kfact * fact_sum;
}

UniquenessReport assert_unique(const TrajectoryPair& pair,
                               std::span<const double> t_samples, double c0) {
  UniquenessReport rep;
  rep.defect_c = verify_integral_equations(pair.c_traj, t_samples);
  rep.defect_h = verify_integral_equations(pair.h_traj, t_samples);

  double t_hi = 0;
  for (double t : t_samples) t_hi = std::max(t_hi, t);

  static const ExpPoly kZero;
  for (const auto& n : box_indices(pair.c_traj.omega.nu(), pair.c_traj.box_radius)) {
    auto ic = pair.c_traj.coeffs.find(n);
    auto ih = pair.h_traj.coeffs.find(n);
    const ExpPoly& fc = ic == pair.c_traj.coeffs.end() ? kZero : ic->second;
    const ExpPoly& fh = ih == pair.h_traj.coeffs.end() ? kZero : ih->second;
    ExpPoly diff = ep_sub(fh, fc, pair.c_traj.ep_opt);
    if (diff.is_zero()) continue;
    for (double t : t_samples)
      rep.max_diff = std::max(rep.max_diff, std::abs(ep_eval(diff, t)));
  }

  rep.best_k = 1;
  rep.bound_at_best_k = contraction_bound(pair, 1, t_hi, c0);
  for (int k = 2; k <= 12; ++k) {
    double b = contraction_bound(pair, k, t_hi, c0);
    if (b < rep.bound_at_best_k) {
      rep.bound_at_best_k = b;
      rep.best_k = k;
    }
  }

  // One-step Lipschitz constant of the Duhamel quadratic map on the box:
  // |F[h] - F[c]|(n) <= (|n||w|/2) t * 2 * (sum_m common mass) * sup|h-c|.
  double mass = 0;
  for (const auto& [n, f] : pair.c_traj.coeffs) mass += std::abs(ep_eval(f, 0.0));
  double mass_h = 0;
  for (const auto& [n, f] : pair.h_traj.coeffs) mass_h += std::abs(ep_eval(f, 0.0));
  mass = std::max(mass, mass_h) * 2.0;  // certified ball is twice the data mass
  rep.lipschitz = pair.c_traj.box_radius * pair.c_traj.omega.norm() * t_hi * mass;
  if (rep.lipschitz >= 0.9)
    throw Error(ErrorCode::NoContraction,
                "assert_unique: Lipschitz estimate >= 0.9, samples beyond the "
                "uniqueness horizon");
  rep.allowance = (rep.defect_c + rep.defect_h) / (1.0 - rep.lipschitz);

  // Coupling of box modes to the first two out-of-box shells (the projection
  // defect scale when comparing against a larger-box run).
  const int R = pair.c_traj.box_radius;
  double shell_mass = 0;
  for (int s = R + 1; s <= R + 2; ++s)
    shell_mass += static_cast<double>(shell_count(pair.c_traj.omega.nu(), s)) * pair.B *
                  std::exp(-pair.rho * s);
  rep.tail_bound = R * pair.c_traj.omega.norm() * t_hi * 2.0 * pair.B * shell_mass;

  rep.pass = rep.max_diff <= rep.bound_at_best_k + rep.allowance;
  return rep;
}

FittedTrajectory fit_trajectory_from_samples(const SolutionTrajectory& reference,
                                             std::span<const OdeState> samples,
                                             int degree) {
  if (samples.size() < static_cast<std::size_t>(degree) + 2)
    throw Error(ErrorCode::InvalidArgument,
                "fit_trajectory_from_samples: need more samples than degree");
  const double t_max = reference.t_max;
  const int m = static_cast<int>(samples.size());

  FittedTrajectory out;
  out.traj = reference;

  // Shared scaled Vandermonde in s = t / t_max, powers 1..degree.
  Eigen::MatrixXcd A(m, degree);
  for (int j = 0; j < m; ++j) {
    double s = samples[j].t / t_max;
    double sp = 1.0;
    for (int p = 0; p < degree; ++p) {
      sp *= s;
      A(j, p) = sp;
    }
  }
  auto qr = A.colPivHouseholderQr();

  static const ExpPoly kZero;
  for (const auto& n : box_indices(reference.omega.nu(), reference.box_radius)) {
    auto ic = reference.coeffs.find(n);
    const ExpPoly& ref = ic == reference.coeffs.end() ? kZero : ic->second;
    Eigen::VectorXcd b(m);
    bool any = false;
    for (int j = 0; j < m; ++j) {
      Complex r = samples[j].c.at(n) - ep_eval(ref, samples[j].t);
      b(j) = r;
      any = any || std::abs(r) != 0.0;
    }
    if (!any) continue;
    Eigen::VectorXcd coef = qr.solve(b);
    for (int j = 0; j < m; ++j) {
      Complex fit{0, 0};
      double sp = 1.0, s = samples[j].t / t_max;
      for (int p = 0; p < degree; ++p) {
        sp *= s;
        fit += coef(p) * sp;
      }
      out.max_fit_residual =
          std::max(out.max_fit_residual, std::abs(fit - static_cast<Complex>(b(j))));
    }
    std::vector<EpTerm> terms = ref.terms();
    double scale = 1.0;
    for (int p = 0; p < degree; ++p) {
      scale /= t_max;
      terms.push_back({static_cast<Complex>(coef(p)) * scale, p + 1, 0.0});
    }
    out.traj.coeffs[n] = ep_canonical(std::move(terms), reference.ep_opt);
  }
  return out;
}

}  // namespace qkdv
