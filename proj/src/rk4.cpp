#include "rk4.hpp"

#include <algorithm>
#include <cmath>

namespace qkdv {

namespace {

using Field = std::map<LatticeIndex, Complex>;

Field rhs(const Field& h, const FrequencyVector& w, int radius, bool nonlinear) {
  Field out;
  if (nonlinear) {
    // (h * h)(n), all pairs within the box.
    for (const auto& [m1, v1] : h) {
      for (const auto& [m2, v2] : h) {
        LatticeIndex n = m1 + m2;
        if (n.l1() > radius) continue;
        out[n] += v1 * v2;
      }
    }
    for (auto& [n, v] : out) v *= Complex{0, -0.5} * dot(n, w);
  }
  for (const auto& [n, v] : h) out[n] += Complex{0, phase_cube(n, w)} * v;
  return out;
}

void axpy(Field& y, double a, const Field& x) {
  for (const auto& [n, v] : x) y[n] += a * v;
}

void rk4_step(Field& h, const FrequencyVector& w, int radius, bool nonlinear, double dt) {
  Field k1 = rhs(h, w, radius, nonlinear);
  Field y2 = h;
  axpy(y2, dt / 2, k1);
  Field k2 = rhs(y2, w, radius, nonlinear);
  Field y3 = h;
  axpy(y3, dt / 2, k2);
  Field k3 = rhs(y3, w, radius, nonlinear);
  Field y4 = h;
  axpy(y4, dt, k3);
  Field k4 = rhs(y4, w, radius, nonlinear);
  axpy(h, dt / 6, k1);
  axpy(h, dt / 3, k2);
  axpy(h, dt / 3, k3);
  axpy(h, dt / 6, k4);
}

void check_stability(const CoeffField& c0, const FrequencyVector& w, double dt) {
  double max_cube = 0;
  for (const auto& n : box_indices(c0.nu(), c0.radius()))
    max_cube = std::max(max_cube, std::abs(phase_cube(n, w)));
  if (dt * max_cube > 2.5)
    throw Error(ErrorCode::InvalidArgument,
                "rk4: dt * max|(nw)^3| = " + std::to_string(dt * max_cube) +
                    " violates the stability bound 2.5");
}

CoeffField to_field(const Field& h, int nu, int radius, double prune_floor) {
  CoeffField out(nu, radius);
  for (const auto& [n, v] : h)
    if (std::abs(v) > prune_floor) out.set(n, v);
  return out;
}

}  // namespace

OdeState rk4_integrate(const CoeffField& c0, const FrequencyVector& w, double t_end,
                       double dt, const Rk4Options& opt) {
  std::vector<double> samples = {t_end};
  return rk4_trace(c0, w, samples, dt, opt).back();
}

std::vector<OdeState> rk4_trace(const CoeffField& c0, const FrequencyVector& w,
                                std::span<const double> sample_times, double dt,
                                const Rk4Options& opt) {
  if (c0.nu() != w.nu())
    throw Error(ErrorCode::InvalidArgument, "rk4: dimension mismatch");
  if (dt <= 0) throw Error(ErrorCode::InvalidArgument, "rk4: dt must be > 0");
  for (double t : sample_times)
    if (t < 0) throw Error(ErrorCode::InvalidArgument, "rk4: t_end must be >= 0");
  check_stability(c0, w, dt);

  std::vector<double> times(sample_times.begin(), sample_times.end());
  std::sort(times.begin(), times.end());

  Field h;
  for (const auto& [n, v] : c0.entries()) h[n] = v;
  const Complex h0_initial = c0.at(LatticeIndex::zero(c0.nu()));

  std::vector<OdeState> out;
  double t = 0;
  for (double target : times) {
    long steps = std::lround((target - t) / dt);
    for (long s = 0; s < steps; ++s) {
      rk4_step(h, w, c0.radius(), opt.nonlinear, dt);
      t += dt;
    }
    double rem = target - t;
    if (std::abs(rem) > 1e-13 * std::max(1.0, target)) {
      rk4_step(h, w, c0.radius(), opt.nonlinear, rem);
      t = target;
    }
    // Mode zero must not have moved: its right-hand side is exactly zero.
    auto it = h.find(LatticeIndex::zero(c0.nu()));
    Complex h0 = it == h.end() ? Complex{0, 0} : it->second;
    if (h0 != h0_initial)
      throw Error(ErrorCode::AssertionFailed, "rk4: mode zero drifted");
    out.push_back({target, to_field(h, c0.nu(), c0.radius(), opt.prune_floor)});
  }
  return out;
}

}  // namespace qkdv
