#pragma once

#include <complex>
#include <string>
#include <vector>

#include "lattice.hpp"

namespace qkdv {

/// One monomial a * t^p * e^{i theta t}.
struct EpTerm {
  Complex coeff;
  int power = 0;
  double phase = 0;
};

struct EpOptions {
  double merge_tol = 1e-12;      // relative phase-merge tolerance (D5)
  double resonance_tol = 1e-9;   // absolute |phase - theta0| resonance cut (D6)
  double prune_floor = 1e-30;    // drop terms with |coeff| below this
  std::size_t max_terms = 100000;  // controlled failure beyond this (D7)
};

/// Exponential polynomial sum_j a_j t^{p_j} e^{i theta_j t}: the exact closed
/// form of every Picard iterate coefficient. Closed under products, d/dt and
/// the Duhamel integral with an outer phase. Canonical form keeps terms sorted
/// by (phase, power), merges phases within merge_tol and drops zero terms.
class ExpPoly {
 public:
  ExpPoly() = default;
  explicit ExpPoly(std::vector<EpTerm> terms, const EpOptions& opt = {});

  static ExpPoly zero() { return ExpPoly(); }
  /// a * e^{i theta t}
  static ExpPoly oscillation(Complex a, double theta, const EpOptions& opt = {});
  /// a * t^p e^{i theta t}
  static ExpPoly monomial(Complex a, int power, double theta, const EpOptions& opt = {});

  const std::vector<EpTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  /// Value at t = 0 (sum of p = 0 coefficients).
  Complex value_at_zero() const;

  ExpPoly& operator*=(Complex s);
  std::string debug_csv() const;  // lines "re(coeff),im(coeff),power,phase"

 private:
  std::vector<EpTerm> terms_;  // canonical
  friend ExpPoly ep_canonical(std::vector<EpTerm> raw, const EpOptions& opt);
};

ExpPoly ep_canonical(std::vector<EpTerm> raw, const EpOptions& opt = {});

ExpPoly ep_add(const ExpPoly& f, const ExpPoly& g, const EpOptions& opt = {});
ExpPoly ep_sub(const ExpPoly& f, const ExpPoly& g, const EpOptions& opt = {});
ExpPoly ep_scale(const ExpPoly& f, Complex s, const EpOptions& opt = {});

/// Termwise product, canonicalized.
ExpPoly ep_multiply(const ExpPoly& f, const ExpPoly& g, const EpOptions& opt = {});

/// F(t) = \int_0^t e^{i (t-tau) theta0} f(tau) dtau, exactly. Terms whose phase
/// is within resonance_tol of theta0 take the resonant branch
/// a t^{p+1}/(p+1) e^{i theta0 t}; all others integrate by parts in closed form.
ExpPoly ep_outer_integral(const ExpPoly& f, double theta0, const EpOptions& opt = {});

/// Termwise d/dt.
ExpPoly ep_derivative_t(const ExpPoly& f, const EpOptions& opt = {});

/// Stable evaluation at t. Terms are grouped by phase proximity at the given t
/// and each group is evaluated around a reference phase with the oscillation
/// split as e^{i theta t} = e^{i theta* t}(1 + (e^{i d t} - 1)), in extended
/// (long double) precision with compensated accumulation. This keeps the
/// cancellation between the 1/(i Delta)^k coefficients produced by
/// ep_outer_integral near (but above) the resonance threshold harmless.
Complex ep_eval(const ExpPoly& f, double t);

/// Extended-precision evaluation path (same algorithm, long double result) for
/// oracle comparisons.
std::complex<long double> ep_eval_extended(const ExpPoly& f, double t);

}  // namespace qkdv
