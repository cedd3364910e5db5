#include "spectral.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace qkdv {

PeriodicPotential::PeriodicPotential(std::function<double(double)> f, double period)
    : f_(std::move(f)), period_(period) {
  if (!(period > 0))
    throw Error(ErrorCode::InvalidArgument, "PeriodicPotential: period must be > 0");
}

const std::vector<double>& PeriodicPotential::samples(int steps) const {
  auto it = cache_.find(steps);
  if (it != cache_.end()) return it->second;
  std::vector<double> v(2 * static_cast<std::size_t>(steps) + 1);
  for (std::size_t j = 0; j < v.size(); ++j)
    v[j] = f_(period_ * static_cast<double>(j) / static_cast<double>(2 * steps));
  return cache_.emplace(steps, std::move(v)).first->second;
}

double PeriodicPotential::min_value(int steps) const {
  const auto& v = samples(steps);
  return *std::min_element(v.begin(), v.end());
}

PeriodicPotential potential_from_field(const CoeffField& c, const FrequencyVector& w) {
  if (w.nu() != 1)
    throw Error(ErrorCode::InvalidArgument, "potential_from_field: requires nu = 1");
  if (!is_hermitian(c, 1e-10))
    throw Error(ErrorCode::InvalidArgument, "potential_from_field: field not Hermitian");
  const double L = 2.0 * M_PI / std::abs(w.omega[0]);
  CoeffField copy = c;
  FrequencyVector wc = w;
  return PeriodicPotential(
      [copy, wc](double x) { return copy.synthesize(wc, x).real(); }, L);
}

double hill_discriminant_fixed(const PeriodicPotential& V, double E, int steps) {
  const auto& s = V.samples(steps);
  const double h = V.period() / static_cast<double>(steps);
  // psi'' = (V - E) psi as the 2x2 system y' = A(x) y; RK4 on both columns.
  double m00 = 1, m01 = 0, m10 = 0, m11 = 1;  // (psi, psi') columns
  for (int j = 0; j < steps; ++j) {
    const double q0 = s[2 * j] - E;
    const double qh = s[2 * j + 1] - E;
    const double q1 = s[2 * j + 2] - E;
    auto step_col = [&](double& y, double& yp) {
      const double k1y = yp, k1p = q0 * y;
      const double k2y = yp + 0.5 * h * k1p, k2p = qh * (y + 0.5 * h * k1y);
      const double k3y = yp + 0.5 * h * k2p, k3p = qh * (y + 0.5 * h * k2y);
      const double k4y = yp + h * k3p, k4p = q1 * (y + h * k3y);
      y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
      yp += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
    };
    step_col(m00, m10);
    step_col(m01, m11);
  }
  return m00 + m11;
}

double hill_discriminant(const PeriodicPotential& V, double E, int* steps_used) {
  int steps = 256;
  double prev = hill_discriminant_fixed(V, E, steps);
  for (int iter = 0; iter < 12; ++iter) {
    steps *= 2;
    double cur = hill_discriminant_fixed(V, E, steps);
    if (std::abs(cur - prev) < 1e-8) {
      if (steps_used) *steps_used = steps;
      return cur;
    }
    prev = cur;
  }
  throw Error(ErrorCode::AssertionFailed, "hill_discriminant: step refinement stalled");
}

int discriminant_steps(const PeriodicPotential& V, double E_lo, double E_hi) {
  int worst = 256;
  for (double E : {E_hi, 0.5 * (E_lo + E_hi)}) {
    int used = 0;
    hill_discriminant(V, E, &used);
    worst = std::max(worst, used);
  }
  return worst;
}

namespace {

double bisect_root(const std::function<double(double)>& f, double a, double b, double fa,
                   double tol) {
  for (int it = 0; it < 200 && b - a > tol; ++it) {
    double m = 0.5 * (a + b);
    double fm = f(m);
    if (fm == 0.0) return m;
    if ((fa < 0) == (fm < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

/// Ternary search for the maximum of f on [a, b].
std::pair<double, double> refine_max(const std::function<double(double)>& f, double a,
                                     double b, double tol) {
  while (b - a > tol) {
    double m1 = a + (b - a) / 3.0;
    double m2 = b - (b - a) / 3.0;
    if (f(m1) < f(m2))
      a = m1;
    else
      b = m2;
  }
  double m = 0.5 * (a + b);
  return {m, f(m)};
}

}  // namespace

SpectrumReport band_edges(const PeriodicPotential& V, double E_max, double root_tol) {
  SpectrumReport rep;
  rep.mode = "periodic";
  rep.root_tol = root_tol;

  const double vmin = V.min_value();
  const double E_lo = vmin - 0.1 * std::max(1.0, E_max - vmin);
  if (E_max <= E_lo)
    throw Error(ErrorCode::InvalidArgument, "band_edges: E_max below the search floor");
  const int steps = discriminant_steps(V, E_lo, E_max);
  rep.discriminant_steps = steps;

  const int M = 16384;
  rep.grid_step = (E_max - E_lo) / M;
  std::vector<double> disc(M + 1);
  for (int j = 0; j <= M; ++j)
    disc[j] = hill_discriminant_fixed(V, E_lo + rep.grid_step * j, steps);

  auto delta = [&](double E) { return hill_discriminant_fixed(V, E, steps); };
  const double double_tol = 1e-6;

  struct Edge {
    double E;
    int sign;
  };
  std::vector<Edge> edges;

  for (int sign : {+1, -1}) {
    auto f = [&](double E) { return sign > 0 ? delta(E) - 2.0 : -(delta(E) + 2.0); };
    // With this orientation band edges are zeros approached from below:
    // sign=+1 handles Delta=+2 (f = Delta-2), sign=-1 handles Delta=-2
    // (f = -(Delta+2)), and in both cases f <= 0 inside bands.
    std::vector<double> g(M + 1);
    for (int j = 0; j <= M; ++j)
      g[j] = sign > 0 ? disc[j] - 2.0 : -(disc[j] + 2.0);

    std::vector<std::pair<int, int>> crossings;  // grid intervals with sign change
    for (int j = 0; j < M; ++j)
      if ((g[j] < 0) != (g[j + 1] < 0)) crossings.emplace_back(j, j + 1);
    for (auto [j, j1] : crossings) {
      double a = E_lo + rep.grid_step * j, b = E_lo + rep.grid_step * j1;
      edges.push_back({bisect_root(f, a, b, g[j], root_tol), sign});
    }

    // Tangencies: strict local maxima of f near zero that do not already
    // bracket a sign change (closed or unresolved gaps).
    for (int j = 1; j < M; ++j) {
      if (!(g[j] > g[j - 1] && g[j] > g[j + 1])) continue;
      if ((g[j - 1] < 0) != (g[j] < 0) || (g[j] < 0) != (g[j + 1] < 0)) continue;
      if (g[j] >= 0) continue;  // open gap, crossings already recorded
      if (g[j] < -0.05) continue;  // far from the band edge level
      auto [E_star, f_star] =
          refine_max(f, E_lo + rep.grid_step * (j - 1), E_lo + rep.grid_step * (j + 1),
                     root_tol);
      if (std::abs(f_star) <= double_tol) {
        edges.push_back({E_star, sign});
        edges.push_back({E_star, sign});
      } else if (f_star > -0.05 && f_star < -double_tol) {
        // A maximum this close to the edge level that is neither a crossing
        // pair nor a certified tangency means the grid cannot separate edges.
        throw Error(ErrorCode::UnresolvedRootCluster,
                    "band_edges: unresolved root cluster near E = " +
                        std::to_string(E_star));
      }
    }
  }

  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.E < b.E; });
  // Validate the alternation E0 < E1- <= E1+ < E2- <= E2+ < ...:
  // signs must come as -,(+,+),(-,-),(+,+),... after the ground edge +.
  for (std::size_t i = 0; i < edges.size(); ++i) {
    int expect = ((i + 1) / 2) % 2 == 0 ? +1 : -1;
    if (edges[i].sign != expect)
      throw Error(ErrorCode::UnresolvedRootCluster,
                  "band_edges: edge pattern broken at index " + std::to_string(i) +
                      " (an edge was likely missed)");
  }
  for (const auto& e : edges) {
    rep.band_edges.push_back(e.E);
    rep.edge_signs.push_back(e.sign);
  }
  return rep;
}

IsospectralityReport isospectrality_check(const SolutionTrajectory& traj,
                                          std::span<const double> t_list, double E_max,
                                          int max_edges) {
  if (traj.omega.nu() != 1)
    throw Error(ErrorCode::InvalidArgument,
                "isospectrality_check: band-edge mode requires nu = 1");
  IsospectralityReport rep;
  for (double t : t_list) {
    CoeffField snap = traj.snapshot(t);
    auto V = potential_from_field(snap, traj.omega);
    auto spec = band_edges(V, E_max);
    rep.t_values.push_back(t);
    rep.edges_per_t.push_back(std::move(spec.band_edges));
  }
  if (rep.edges_per_t.empty()) return rep;

  const auto& base = rep.edges_per_t.front();
  std::size_t count = base.size();
  for (const auto& e : rep.edges_per_t) count = std::min(count, e.size());
  if (max_edges > 0) count = std::min(count, static_cast<std::size_t>(max_edges));
  for (const auto& e : rep.edges_per_t)
    if (e.size() != base.size())
      throw Error(ErrorCode::UnresolvedRootCluster,
                  "isospectrality_check: edge count changed across t");

  // Nearest-neighbor sanity: a drifted edge must stay closer to its baseline
  // partner than to any other baseline edge.
  rep.edges_compared = static_cast<int>(count);
  for (std::size_t ti = 0; ti < rep.edges_per_t.size(); ++ti) {
    double worst = 0;
    for (std::size_t i = 0; i < count; ++i) {
      double d = std::abs(rep.edges_per_t[ti][i] - base[i]);
      double spacing = std::numeric_limits<double>::infinity();
      if (i > 0) spacing = std::min(spacing, base[i] - base[i - 1]);
      if (i + 1 < base.size()) spacing = std::min(spacing, base[i + 1] - base[i]);
      if (std::isfinite(spacing) && spacing > 0 && d > 0.5 * spacing + 1e-12)
        throw Error(ErrorCode::UnresolvedRootCluster,
                    "isospectrality_check: edge pairing lost at index " +
                        std::to_string(i));
      worst = std::max(worst, d);
    }
    rep.drift_per_t.push_back(worst);
    rep.max_edge_drift = std::max(rep.max_edge_drift, worst);
  }
  return rep;
}

std::vector<double> quasiperiodic_fiber_spectrum(const CoeffField& c,
                                                 const FrequencyVector& w, double theta,
                                                 int basis_radius) {
  if (basis_radius < c.radius())
    throw Error(ErrorCode::InvalidArgument,
                "quasiperiodic_fiber_spectrum: basis_radius must cover the field");
  if (!is_hermitian(c, 1e-10))
    throw Error(ErrorCode::InvalidArgument,
                "quasiperiodic_fiber_spectrum: field not Hermitian");
  auto basis = box_indices(c.nu(), basis_radius);
  const int dim = static_cast<int>(basis.size());
  Eigen::MatrixXcd M(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      Complex v = c.at(basis[i] + (-basis[j]));
      if (i == j) {
        double d = theta + dot(basis[i], w);
        v += d * d;
      }
      M(i, j) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M, Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + dim);
  std::sort(ev.begin(), ev.end());
  return ev;
}

SpectrumReport fiber_cloud(const CoeffField& c, const FrequencyVector& w,
                           int basis_radius, int n_thetas) {
  SpectrumReport rep;
  rep.mode = "quasiperiodic";
  rep.basis_radius = basis_radius;
  // Fiber range: the smallest positive |n w| over a small index box.
  double g = std::numeric_limits<double>::infinity();
  for (const auto& n : box_indices(w.nu(), 2)) {
    double d = std::abs(dot(n, w));
    if (d > 1e-12) g = std::min(g, d);
  }
  for (int j = 0; j < n_thetas; ++j) {
    double theta = g * static_cast<double>(j) / static_cast<double>(n_thetas);
    rep.fiber_thetas.push_back(theta);
    rep.fiber_clouds.push_back(quasiperiodic_fiber_spectrum(c, w, theta, basis_radius));
  }
  return rep;
}

double hausdorff_one_sided(std::span<const double> a, std::span<const double> b) {
  double worst = 0;
  for (double x : a) {
    double best = std::numeric_limits<double>::infinity();
    for (double y : b) best = std::min(best, std::abs(x - y));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace qkdv
