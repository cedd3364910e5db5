#pragma once

#include <map>
#include <span>
#include <vector>

#include "exp_poly.hpp"
#include "lattice.hpp"

namespace qkdv {

struct SolverConfig {
  int radius = 8;
  int max_iterations = 12;
  double target_tol = 1e-10;
  double t_request = 0.01;
  double prune_floor = 1e-30;
  double resonance_tol = 1e-9;
  double merge_tol = 1e-12;
  std::size_t max_terms = 100000;
  double c0 = 0;      // <= 0: use default_C0(nu)
  int diff_grid = 9;  // fixed time grid for difference measurement

  EpOptions ep_options() const {
    return {merge_tol, resonance_tol, prune_floor, max_terms};
  }
};

/// Closed-form coefficient family of one local solve: coeffs(n) is the final
/// iterate as an exact function of t, valid on [0, t_max].
struct SolutionTrajectory {
  FrequencyVector omega;
  std::map<LatticeIndex, ExpPoly> coeffs;
  int box_radius = 0;
  int iterations = 0;
  double t_max = 0;
  Envelope initial_envelope;
  bool converged = false;
  std::vector<double> weighted_diffs;  // d_k = max_n e^{kappa|n|/4} |c_k - c_{k-1}|
  double empirical_ratio = 0;          // max_{k >= 2} d_k / d_{k-1}
  double c0_used = 0;
  double horizon_t0 = 0;
  EpOptions ep_opt;

  /// Instantaneous coefficient field at time t.
  CoeffField snapshot(double t) const;
  /// Theoretical contraction ratio q = B0 4^{nu+1} C1 kappa^{-nu} |omega| t.
  double theoretical_ratio(double c1) const;
};

/// Most restrictive local-existence horizon kappa^nu / (8 B0 2^nu C0^nu |omega|).
double horizon(double B0, double kappa, const FrequencyVector& w, double C0);

/// One iteration of the integral recursion on the box:
///   out(n) = c_init(n) e^{i t (nw)^3}
///            - i(nw)/2 * \int_0^t e^{i(t-tau)(nw)^3} (prev * prev)(tau, n) dtau.
/// Modes with nw == 0 skip the integral term entirely, so mode zero is
/// preserved exactly.
std::map<LatticeIndex, ExpPoly> picard_step(const std::map<LatticeIndex, ExpPoly>& prev,
                                            const CoeffField& c_init,
                                            const FrequencyVector& w, int radius,
                                            const EpOptions& opt = {});

/// Runs the iteration from c_init (which must carry an envelope certificate)
/// until the kappa/4-weighted sup difference falls under target_tol or
/// max_iterations is reached. Throws HorizonExceeded when t_request lies
/// beyond the certified horizon and NoContraction when the measured ratio
/// stays >= 1 for three consecutive steps.
SolutionTrajectory solve(const CoeffField& c_init, const FrequencyVector& w,
                         const SolverConfig& cfg);

/// u(t, x) = sum_n c(t, n) e^{i (nw) x}.
Complex evaluate_u_complex(const SolutionTrajectory& traj, double t, double x);

/// Real-valued evaluation; requires a Hermitian-symmetric snapshot and checks
/// the imaginary part is <= 1e-10 relative to the synthesis mass.
double evaluate_u(const SolutionTrajectory& traj, double t, double x);

struct ResidualReport {
  double max_residual = 0;   // max over samples of |u_t + u_xxx + u u_x|
  double tail_bound = 0;     // truncation tail of the quadratic term
  double reported_bound = 0; // target_tol allowance + tail_bound
};

/// PDE residual with every derivative exact: d/dt termwise, d/dx as i(nw)
/// mode multipliers, the quadratic term as an instantaneous convolution
/// carried out to radius 2R (everything beyond 2R is identically zero).
ResidualReport pde_residual(const SolutionTrajectory& traj,
                            std::span<const double> t_samples,
                            std::span<const double> x_samples,
                            double target_tol = 1e-10);

struct EnvelopeCheckReport {
  double worst_excess = 0;  // max over samples of |c(t,n)| - 2 B0 e^{-kappa|n|/2}
  int samples = 0;
  bool pass = false;
};

/// Checks |c(t,n)| <= 2 B0 exp(-kappa |n| / 2) at Chebyshev-spaced times in
/// [0, t_hi] (t_hi defaults to t_max).
EnvelopeCheckReport check_solution_envelope(const std::map<LatticeIndex, ExpPoly>& coeffs,
                                            const Envelope& env, double t_hi,
                                            int n_times = 16);

/// Relative drift of sum_n |c(t,n)|^2 over [0, t_max].
double momentum_drift(const SolutionTrajectory& traj, int n_times = 16);

/// Count of lattice points with |n|_1 == s in Z^nu.
std::uint64_t shell_count(int nu, int s);

}  // namespace qkdv
