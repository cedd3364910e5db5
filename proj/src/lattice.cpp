#include "lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace qkdv {

FrequencyVector::FrequencyVector(std::vector<double> w) : omega(std::move(w)) {
  if (omega.empty())
    throw Error(ErrorCode::InvalidArgument, "FrequencyVector: nu must be >= 1");
  for (double x : omega)
    if (!std::isfinite(x))
      throw Error(ErrorCode::InvalidArgument, "FrequencyVector: entries must be finite");
  if (norm() <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "FrequencyVector: |omega| must be > 0");
}

double FrequencyVector::norm() const {
  double s = 0;
  for (double x : omega) s += x * x;
  return std::sqrt(s);
}

int LatticeIndex::l1() const {
  int s = 0;
  for (int x : n) s += std::abs(x);
  return s;
}

bool LatticeIndex::is_zero() const {
  return std::all_of(n.begin(), n.end(), [](int x) { return x == 0; });
}

LatticeIndex LatticeIndex::operator+(const LatticeIndex& o) const {
  if (n.size() != o.n.size())
    throw Error(ErrorCode::InvalidArgument, "LatticeIndex: dimension mismatch");
  LatticeIndex r = *this;
  for (std::size_t j = 0; j < n.size(); ++j) r.n[j] += o.n[j];
  return r;
}

LatticeIndex LatticeIndex::operator-() const {
  LatticeIndex r = *this;
  for (int& x : r.n) x = -x;
  return r;
}

std::string LatticeIndex::str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t j = 0; j < n.size(); ++j) os << (j ? "," : "") << n[j];
  os << ")";
  return os.str();
}

double dot(const LatticeIndex& n, const FrequencyVector& w) {
  if (n.nu() != w.nu())
    throw Error(ErrorCode::InvalidArgument, "dot: dimension mismatch");
  double s = 0;
  for (int j = 0; j < n.nu(); ++j) s += n.n[j] * w.omega[j];
  return s;
}

double phase_cube(const LatticeIndex& n, const FrequencyVector& w) {
  double d = dot(n, w);
  return d * d * d;
}

void CoeffField::add(const LatticeIndex& n, Complex v) {
  if (n.nu() != nu_)
    throw Error(ErrorCode::InvalidArgument, "CoeffField::add: dimension mismatch");
  if (n.l1() > radius_)
    throw Error(ErrorCode::InvalidArgument,
                "CoeffField::add: index " + n.str() + " outside box radius");
  entries_[n] += v;
}

void CoeffField::set(const LatticeIndex& n, Complex v) {
  if (n.nu() != nu_)
    throw Error(ErrorCode::InvalidArgument, "CoeffField::set: dimension mismatch");
  if (n.l1() > radius_)
    throw Error(ErrorCode::InvalidArgument,
                "CoeffField::set: index " + n.str() + " outside box radius");
  entries_[n] = v;
}

Complex CoeffField::at(const LatticeIndex& n) const {
  auto it = entries_.find(n);
  return it == entries_.end() ? Complex{0, 0} : it->second;
}

void CoeffField::prune(double floor) {
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (std::abs(it->second) <= floor)
      it = entries_.erase(it);
    else
      ++it;
  }
}

double CoeffField::envelope_defect() const {
  if (!envelope_) return 0.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [n, v] : entries_)
    worst = std::max(worst, std::abs(v) - envelope_->B * std::exp(-envelope_->kappa * n.l1()));
  return entries_.empty() ? 0.0 : worst;
}

double CoeffField::l2_mass() const {
  double s = 0;
  for (const auto& [n, v] : entries_) s += std::norm(v);
  return s;
}

Complex CoeffField::synthesize(const FrequencyVector& w, double x) const {
  Complex s{0, 0};
  for (const auto& [n, v] : entries_) {
    double ph = dot(n, w) * x;
    s += v * Complex{std::cos(ph), std::sin(ph)};
  }
  return s;
}

CoeffField convolve(const CoeffField& a, const CoeffField& b, int out_radius,
                    double prune_floor) {
  if (a.nu() != b.nu())
    throw Error(ErrorCode::InvalidArgument, "convolve: dimension mismatch");
  if (out_radius < 0)
    throw Error(ErrorCode::InvalidArgument, "convolve: out_radius must be >= 0");
  CoeffField out(a.nu(), out_radius);
  for (const auto& [m1, v1] : a.entries()) {
    for (const auto& [m2, v2] : b.entries()) {
      LatticeIndex n = m1 + m2;
      if (n.l1() > out_radius) continue;
      out.add(n, v1 * v2);
    }
  }
  out.prune(prune_floor);
  return out;
}

CoeffField hermitian_symmetrize(const CoeffField& c) {
  CoeffField out(c.nu(), c.radius());
  for (const auto& [n, v] : c.entries()) {
    Complex sym = 0.5 * (v + std::conj(c.at(-n)));
    out.set(n, sym);
    if (!(n == -n)) out.set(-n, std::conj(sym));
  }
  return out;
}

bool is_hermitian(const CoeffField& c, double tol) {
  double scale = 0;
  for (const auto& [n, v] : c.entries()) scale = std::max(scale, std::abs(v));
  for (const auto& [n, v] : c.entries())
    if (std::abs(v - std::conj(c.at(-n))) > tol * std::max(1.0, scale)) return false;
  return true;
}

static void enumerate_box(int nu, int radius, std::vector<int>& scratch,
                          std::vector<LatticeIndex>& out, int pos, int budget) {
  if (pos == nu) {
    out.emplace_back(scratch);
    return;
  }
  for (int v = -budget; v <= budget; ++v) {
    scratch[pos] = v;
    enumerate_box(nu, radius, scratch, out, pos + 1, budget - std::abs(v));
  }
}

std::vector<LatticeIndex> box_indices(int nu, int radius) {
  std::vector<LatticeIndex> out;
  std::vector<int> scratch(nu, 0);
  enumerate_box(nu, radius, scratch, out, 0, radius);
  std::sort(out.begin(), out.end());
  return out;
}

DiophantineReport check_diophantine(const FrequencyVector& w,
                                    const DiophantineParams& params, int N_max) {
  if (N_max < 1)
    throw Error(ErrorCode::InvalidArgument, "check_diophantine: N_max must be >= 1");
  DiophantineReport rep;
  rep.scanned_max = N_max;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& n : box_indices(w.nu(), N_max)) {
    if (n.is_zero()) continue;
    double ratio = std::abs(dot(n, w)) * std::pow(n.l1(), params.b0) / params.a0;
    if (ratio < best) {
      best = ratio;
      rep.worst_n = n;
    }
  }
  rep.worst_ratio = best;
  rep.pass = best >= 1.0;
  return rep;
}

BohrResult bohr_extract(const std::function<Complex(double)>& f,
                        std::span<const double> support_phases, double target_phase,
                        double A, double gap_tol) {
  if (A <= 0) throw Error(ErrorCode::InvalidArgument, "bohr_extract: A must be > 0");
  std::vector<double> ph(support_phases.begin(), support_phases.end());
  std::sort(ph.begin(), ph.end());
  double gap = std::numeric_limits<double>::infinity();
  double max_abs_phase = std::abs(target_phase);
  for (std::size_t j = 0; j < ph.size(); ++j) {
    max_abs_phase = std::max(max_abs_phase, std::abs(ph[j]));
    if (j + 1 < ph.size()) {
      double d = ph[j + 1] - ph[j];
      if (d <= gap_tol)
        throw Error(ErrorCode::DegeneratePhase,
                    "bohr_extract: duplicate phases in support");
      gap = std::min(gap, d);
    }
  }

  // Composite Simpson; panel count keeps the fastest oscillation resolved.
  double osc = (max_abs_phase + std::abs(target_phase)) * 2.0 * A;
  std::size_t panels = static_cast<std::size_t>(std::max(1024.0, osc));
  panels += panels % 2;  // Simpson needs an even count
  const double h = 2.0 * A / static_cast<double>(panels);
  auto g = [&](double x) {
    double p = -target_phase * x;
    return f(x) * Complex{std::cos(p), std::sin(p)};
  };
  Complex acc = g(-A) + g(A);
  for (std::size_t j = 1; j < panels; ++j) {
    double x = -A + h * static_cast<double>(j);
    acc += g(x) * ((j % 2) ? 4.0 : 2.0);
  }
  Complex value = acc * (h / 3.0) / (2.0 * A);

  BohrResult r;
  r.value = value;
  // |(1/2A) \int e^{i b x} dx| = |sin(bA)/(bA)| <= 1/(A gap) per cross term.
  r.error_bound = std::isfinite(gap)
                      ? static_cast<double>(ph.size()) / (A * gap)
                      : 1.0 / A;
  return r;
}

BohrResult extract_coefficient(const CoeffField& c, const FrequencyVector& w,
                               const LatticeIndex& m, double A) {
  std::vector<double> phases;
  phases.reserve(c.size());
  for (const auto& [n, v] : c.entries()) phases.push_back(dot(n, w));
  auto f = [&](double x) { return c.synthesize(w, x); };
  return bohr_extract(f, phases, dot(m, w), A);
}

std::string field_to_json(const CoeffField& c, const FrequencyVector& w) {
  nlohmann::ordered_json j;
  j["nu"] = c.nu();
  j["omega"] = w.omega;
  j["radius"] = c.radius();
  auto entries = nlohmann::ordered_json::array();
  for (const auto& [n, v] : c.entries()) {
    nlohmann::ordered_json e;
    e["n"] = n.n;
    e["re"] = v.real();
    e["im"] = v.imag();
    entries.push_back(std::move(e));
  }
  j["entries"] = std::move(entries);
  if (c.envelope()) {
    j["envelope"] = {{"B", c.envelope()->B}, {"kappa", c.envelope()->kappa}};
  }
  return j.dump(2);
}

std::pair<CoeffField, FrequencyVector> field_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("field_from_json: parse error: ") + e.what());
  }
  try {
    int nu = j.at("nu").get<int>();
    FrequencyVector w(j.at("omega").get<std::vector<double>>());
    if (w.nu() != nu) throw Error(ErrorCode::BadConfig, "field_from_json: omega length != nu");
    CoeffField c(nu, j.at("radius").get<int>());
    for (const auto& e : j.at("entries")) {
      LatticeIndex n(e.at("n").get<std::vector<int>>());
      c.set(n, Complex{e.at("re").get<double>(), e.at("im").get<double>()});
    }
    if (j.contains("envelope"))
      c.set_envelope({j["envelope"].at("B").get<double>(),
                      j["envelope"].at("kappa").get<double>()});
    return {std::move(c), std::move(w)};
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("field_from_json: ") + e.what());
  }
}

}  // namespace qkdv
