#pragma once

#include <span>
#include <vector>

#include "lattice.hpp"

namespace qkdv {

/// Snapshot of the Galerkin coefficient ODE state.
struct OdeState {
  double t = 0;
  CoeffField c;
};

struct Rk4Options {
  bool nonlinear = true;
  double prune_floor = 0.0;  // keep everything by default; the box is small
};

/// Classical fixed-step RK4 on the truncated coefficient system
///   dc(n)/dt = i (nw)^3 c(n) - i (nw)/2 (c * c)(n),  |n| <= radius of c0.
/// The quadratic term uses the symmetric convolution form, so the n = 0
/// right-hand side is exactly zero and mode zero never moves.
/// Requires dt * max|(nw)^3| <= 2.5 (explicit-scheme stability).
OdeState rk4_integrate(const CoeffField& c0, const FrequencyVector& w, double t_end,
                       double dt, const Rk4Options& opt = {});

/// Same integration, returning states at each requested sample time
/// (each must be a multiple of dt within rounding).
std::vector<OdeState> rk4_trace(const CoeffField& c0, const FrequencyVector& w,
                                std::span<const double> sample_times, double dt,
                                const Rk4Options& opt = {});

}  // namespace qkdv
