#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "picard.hpp"

namespace qkdv {

/// Real potential over one period, sampled on uniform grids of 2N+1 points
/// (nodes and midpoints of an N-step integrator). Grids are cached per N.
class PeriodicPotential {
 public:
  PeriodicPotential(std::function<double(double)> f, double period);

  double period() const { return period_; }
  double min_value(int steps = 512) const;
  const std::vector<double>& samples(int steps) const;

 private:
  std::function<double(double)> f_;
  double period_;
  mutable std::map<int, std::vector<double>> cache_;
};

/// Builds the synthesized potential of a Hermitian field (nu = 1, period 2 pi / w).
PeriodicPotential potential_from_field(const CoeffField& c, const FrequencyVector& w);

/// Trace of the monodromy matrix of -psi'' + (V - E) psi over one period,
/// integrated with a fixed-step 4th-order scheme at the given step count.
double hill_discriminant_fixed(const PeriodicPotential& V, double E, int steps);

/// Step count chosen by halving until the discriminant moves by < 1e-8.
double hill_discriminant(const PeriodicPotential& V, double E, int* steps_used = nullptr);

/// Step count that is 1e-8-converged at the fastest oscillation in [E_lo, E_hi].
int discriminant_steps(const PeriodicPotential& V, double E_lo, double E_hi);

struct SpectrumReport {
  std::string mode;                 // "periodic" or "quasiperiodic"
  std::vector<double> band_edges;   // ascending; closed gaps contribute twice
  std::vector<int> edge_signs;      // +1 for Delta = +2 edges, -1 for Delta = -2
  int discriminant_steps = 0;
  double grid_step = 0;
  double root_tol = 0;
  std::vector<double> fiber_thetas;                // nu >= 2 mode
  std::vector<std::vector<double>> fiber_clouds;   // eigenvalues per theta
  int basis_radius = 0;
};

/// All roots of Delta(E) -+ 2 in [min V - pad, E_max]: simple roots by
/// bisection on a fine grid, closed gaps recognized as tangencies. Raises
/// UnresolvedRootCluster when the edge pattern cannot be certified.
SpectrumReport band_edges(const PeriodicPotential& V, double E_max, double root_tol = 1e-9);

struct IsospectralityReport {
  std::vector<double> t_values;
  std::vector<std::vector<double>> edges_per_t;
  std::vector<double> drift_per_t;  // max edge drift vs t = 0, per time
  double max_edge_drift = 0;
  int edges_compared = 0;
};

/// Synthesizes u(t, .) for each requested t, computes band edges with one
/// shared discretization, pairs them index-wise against the t = 0 baseline
/// (validated against the baseline gap structure) and reports the worst
/// drift over the first max_edges edges (0 = all common edges).
IsospectralityReport isospectrality_check(const SolutionTrajectory& traj,
                                          std::span<const double> t_list, double E_max,
                                          int max_edges = 0);

/// Galerkin fiber matrix M[n,m] = (theta + n w)^2 delta_{nm} + c(n - m) on
/// |n| <= basis_radius; eigenvalues ascending. Requires a Hermitian field.
std::vector<double> quasiperiodic_fiber_spectrum(const CoeffField& c,
                                                 const FrequencyVector& w, double theta,
                                                 int basis_radius);

/// Fiber clouds sampled over theta in [0, g) with g the smallest positive
/// |n w| at small |n|; an approximation of the quasi-periodic spectrum, not a
/// certificate.
SpectrumReport fiber_cloud(const CoeffField& c, const FrequencyVector& w,
                           int basis_radius, int n_thetas = 32);

/// One-sided Hausdorff distance max_a min_b |a - b|.
double hausdorff_one_sided(std::span<const double> a, std::span<const double> b);

}  // namespace qkdv
