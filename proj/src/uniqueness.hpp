#pragma once

#include <span>

#include "picard.hpp"
#include "rk4.hpp"

namespace qkdv {

/// Two coefficient trajectories on the same lattice/box with equal initial
/// data and a common exponential bound |c|,|h| <= B e^{-rho |n|}.
struct TrajectoryPair {
  SolutionTrajectory c_traj;
  SolutionTrajectory h_traj;
  double B = 0;
  double rho = 0;
};

/// Builds a pair, deriving (B, rho) = (2 max B0, min kappa / 2) from the two
/// envelope certificates. Throws InconsistentInitialData when the t = 0
/// fields differ beyond 1e-12.
TrajectoryPair make_trajectory_pair(SolutionTrajectory c, SolutionTrajectory h);

/// Restriction of a trajectory to a smaller box (modes outside are dropped).
SolutionTrajectory project_trajectory(const SolutionTrajectory& traj, int radius);

/// Max over sample times and box modes of |c(t,n) - RHS(t,n)| where RHS is
/// the Duhamel integral form c(0,n) e^{it(nw)^3} - i(nw)/2 \int e^{...} (c*c),
/// evaluated in closed form. A converged iteration trajectory keeps this at
/// the stopping tolerance plus truncation tail.
double verify_integral_equations(const SolutionTrajectory& traj,
                                 std::span<const double> t_samples);

/// Theoretical ceiling on sup_n |h(t,n) - c(t,n)| e^{rho |n| / 2} at depth k:
///   B^{k+1} (2^{nu+1} C0 rho^{-nu} |omega| t)^k / k! * sum over the
///   difference-exponent set of prod alpha_j!.
/// For k <= 6 the set is enumerated exactly; beyond that the sum is bounded
/// by the full composition sum, which only enlarges the ceiling.
double contraction_bound(const TrajectoryPair& pair, int k, double t, double c0);

struct UniquenessReport {
  double max_diff = 0;       // measured sup over samples and modes of |h - c|
  double defect_c = 0;       // integral-equation defect of c
  double defect_h = 0;       // integral-equation defect of h
  int best_k = 0;            // argmin of the contraction bound over k <= 12
  double bound_at_best_k = 0;
  double lipschitz = 0;      // one-step Lipschitz estimate K of the Duhamel map
  double allowance = 0;      // (defect_c + defect_h) / (1 - K)
  double tail_bound = 0;     // out-of-box coupling estimate, reported
  bool pass = false;         // max_diff <= bound_at_best_k + allowance
};

/// The uniqueness check: verifies both trajectories satisfy the integral
/// equations, measures their difference, and asserts it stays under the
/// contraction ceiling plus the defect allowance.
UniquenessReport assert_unique(const TrajectoryPair& pair,
                               std::span<const double> t_samples, double c0);

struct FittedTrajectory {
  SolutionTrajectory traj;
  double max_fit_residual = 0;
};

/// Interpolates sampled coefficient data (e.g. an RK4 trace) into closed-form
/// ExpPoly modes: per mode, the deviation from the reference trajectory is
/// least-squares fitted by a polynomial correction vanishing at t = 0, so the
/// initial field is preserved exactly. The fit residual is reported.
FittedTrajectory fit_trajectory_from_samples(const SolutionTrajectory& reference,
                                             std::span<const OdeState> samples,
                                             int degree = 6);

}  // namespace qkdv
