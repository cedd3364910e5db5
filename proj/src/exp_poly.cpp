#include "exp_poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qkdv {

namespace {

// Neumaier-compensated accumulator, long double, one per real component.
struct Accum {
  long double sum = 0.0L;
  long double comp = 0.0L;
  void add(long double x) {
    long double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  long double get() const { return sum + comp; }
};

struct CAccum {
  Accum re, im;
  void add(std::complex<long double> z) {
    re.add(z.real());
    im.add(z.imag());
  }
  std::complex<long double> get() const { return {re.get(), im.get()}; }
};

long double pow_ld(long double t, int p) {
  long double r = 1.0L;
  for (int j = 0; j < p; ++j) r *= t;
  return r;
}

}  // namespace

ExpPoly::ExpPoly(std::vector<EpTerm> terms, const EpOptions& opt) {
  *this = ep_canonical(std::move(terms), opt);
}

ExpPoly ExpPoly::oscillation(Complex a, double theta, const EpOptions& opt) {
  return ep_canonical({{a, 0, theta}}, opt);
}

ExpPoly ExpPoly::monomial(Complex a, int power, double theta, const EpOptions& opt) {
  return ep_canonical({{a, power, theta}}, opt);
}

Complex ExpPoly::value_at_zero() const {
  Complex s{0, 0};
  for (const auto& t : terms_)
    if (t.power == 0) s += t.coeff;
  return s;
}

ExpPoly& ExpPoly::operator*=(Complex s) {
  for (auto& t : terms_) t.coeff *= s;
  if (s == Complex{0, 0}) terms_.clear();
  return *this;
}

std::string ExpPoly::debug_csv() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& t : terms_)
    os << t.coeff.real() << "," << t.coeff.imag() << "," << t.power << "," << t.phase
       << "\n";
  return os.str();
}

ExpPoly ep_canonical(std::vector<EpTerm> raw, const EpOptions& opt) {
  ExpPoly out;
  if (raw.empty()) return out;

  double max_phase = 0;
  for (const auto& t : raw) max_phase = std::max(max_phase, std::abs(t.phase));
  const double tol = opt.merge_tol * std::max(1.0, max_phase);

  std::sort(raw.begin(), raw.end(), [](const EpTerm& a, const EpTerm& b) {
    if (a.phase != b.phase) return a.phase < b.phase;
    return a.power < b.power;
  });

  std::vector<EpTerm> merged;
  std::size_t i = 0;
  while (i < raw.size()) {
    // Phase cluster: chain of consecutive phases with gaps <= tol.
    std::size_t j = i + 1;
    double rep = raw[i].phase;
    double prev = rep;
    while (j < raw.size() && raw[j].phase - prev <= tol) {
      prev = raw[j].phase;
      ++j;
    }
    // Within the cluster merge equal powers under the representative phase.
    std::vector<EpTerm> cluster(raw.begin() + i, raw.begin() + j);
    std::sort(cluster.begin(), cluster.end(),
              [](const EpTerm& a, const EpTerm& b) { return a.power < b.power; });
    std::size_t k = 0;
    while (k < cluster.size()) {
      Complex c = cluster[k].coeff;
      std::size_t l = k + 1;
      while (l < cluster.size() && cluster[l].power == cluster[k].power) {
        c += cluster[l].coeff;
        ++l;
      }
      if (std::abs(c) > opt.prune_floor) merged.push_back({c, cluster[k].power, rep});
      k = l;
    }
    i = j;
  }

  if (merged.size() > opt.max_terms)
    throw Error(ErrorCode::TermBudgetExceeded,
                "ExpPoly term budget exceeded: " + std::to_string(merged.size()) +
                    " > " + std::to_string(opt.max_terms));
  out.terms_ = std::move(merged);
  return out;
}

ExpPoly ep_add(const ExpPoly& f, const ExpPoly& g, const EpOptions& opt) {
  std::vector<EpTerm> raw = f.terms();
  raw.insert(raw.end(), g.terms().begin(), g.terms().end());
  return ep_canonical(std::move(raw), opt);
}

ExpPoly ep_sub(const ExpPoly& f, const ExpPoly& g, const EpOptions& opt) {
  std::vector<EpTerm> raw = f.terms();
  raw.reserve(raw.size() + g.terms().size());
  for (auto t : g.terms()) {
    t.coeff = -t.coeff;
    raw.push_back(t);
  }
  return ep_canonical(std::move(raw), opt);
}

ExpPoly ep_scale(const ExpPoly& f, Complex s, const EpOptions& opt) {
  std::vector<EpTerm> raw = f.terms();
  for (auto& t : raw) t.coeff *= s;
  return ep_canonical(std::move(raw), opt);
}

ExpPoly ep_multiply(const ExpPoly& f, const ExpPoly& g, const EpOptions& opt) {
  std::vector<EpTerm> raw;
  raw.reserve(f.size() * g.size());
  for (const auto& a : f.terms())
    for (const auto& b : g.terms())
      raw.push_back({a.coeff * b.coeff, a.power + b.power, a.phase + b.phase});
  return ep_canonical(std::move(raw), opt);
}

ExpPoly ep_outer_integral(const ExpPoly& f, double theta0, const EpOptions& opt) {
  std::vector<EpTerm> raw;
  for (const auto& term : f.terms()) {
    const double delta = term.phase - theta0;
    const int p = term.power;
    if (std::abs(delta) <= opt.resonance_tol) {
      raw.push_back({term.coeff / static_cast<double>(p + 1), p + 1, theta0});
      continue;
    }
    // \int_0^t tau^p e^{i delta tau} dtau
    //   = e^{i delta t} sum_{j=0}^p (-1)^j (p!/(p-j)!) t^{p-j} / z^{j+1}
    //     + (-1)^{p+1} p! / z^{p+1},   z = i delta,
    // multiplied through by e^{i theta0 t}.
    const Complex z{0.0, delta};
    Complex zpow = z;           // z^{j+1}
    double fall = 1.0;          // p!/(p-j)!
    double sign = 1.0;          // (-1)^j
    Complex last{};
    for (int j = 0; j <= p; ++j) {
      Complex c = term.coeff * sign * fall / zpow;
      raw.push_back({c, p - j, term.phase});
      last = c;
      sign = -sign;
      fall *= static_cast<double>(p - j);
      zpow *= z;
    }
    // Boundary term carries the outer phase; equals -(last j = p coefficient),
    // so the whole integral vanishes at t = 0 exactly.
    raw.push_back({-last, 0, theta0});
  }
  return ep_canonical(std::move(raw), opt);
}

ExpPoly ep_derivative_t(const ExpPoly& f, const EpOptions& opt) {
  std::vector<EpTerm> raw;
  raw.reserve(2 * f.size());
  for (const auto& t : f.terms()) {
    if (t.power > 0)
      raw.push_back({t.coeff * static_cast<double>(t.power), t.power - 1, t.phase});
    raw.push_back({t.coeff * Complex{0.0, t.phase}, t.power, t.phase});
  }
  return ep_canonical(std::move(raw), opt);
}

std::complex<long double> ep_eval_extended(const ExpPoly& f, double t) {
  const auto& terms = f.terms();
  if (terms.empty()) return {0.0L, 0.0L};
  const long double tl = t;

  CAccum total;
  std::size_t i = 0;
  while (i < terms.size()) {
    // Cluster: consecutive phases whose spacing stays well inside one
    // oscillation at this t, so the in-cluster split below is accurate.
    std::size_t j = i + 1;
    const double theta_ref = terms[i].phase;
    double prev = theta_ref;
    while (j < terms.size() &&
           std::abs((terms[j].phase - prev) * t) <= 0.5) {
      prev = terms[j].phase;
      ++j;
    }

    CAccum s_poly;   // sum a_j t^{p_j}            (exact-cancellation carrier)
    CAccum s_osc;    // sum a_j t^{p_j} (e^{i d_j t} - 1)
    for (std::size_t k = i; k < j; ++k) {
      const std::complex<long double> a{terms[k].coeff.real(), terms[k].coeff.imag()};
      const std::complex<long double> u = a * pow_ld(tl, terms[k].power);
      s_poly.add(u);
      const long double d = static_cast<long double>(terms[k].phase) - theta_ref;
      if (d != 0.0L) {
        const long double half = 0.5L * d * tl;
        const long double sh = std::sin(half);
        // e^{i d t} - 1 = -2 sin^2(dt/2) + i sin(dt)
        const std::complex<long double> w{-2.0L * sh * sh, std::sin(d * tl)};
        s_osc.add(u * w);
      }
    }
    const long double ph = static_cast<long double>(theta_ref) * tl;
    const std::complex<long double> rot{std::cos(ph), std::sin(ph)};
    total.add((s_poly.get() + s_osc.get()) * rot);
    i = j;
  }
  return total.get();
}

Complex ep_eval(const ExpPoly& f, double t) {
  auto v = ep_eval_extended(f, t);
  return {static_cast<double>(v.real()), static_cast<double>(v.imag())};
}

}  // namespace qkdv
