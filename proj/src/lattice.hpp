#pragma once

#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkdv {

using Complex = std::complex<double>;

/// Domain failure categories surfaced through the C API as status codes.
enum class ErrorCode {
  InvalidArgument,
  BadConfig,
  HorizonExceeded,
  NoContraction,
  TermBudgetExceeded,
  CombinatorialBudget,
  DegeneratePhase,
  UnresolvedRootCluster,
  InconsistentInitialData,
  AssertionFailed,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Base frequency vector omega in R^nu. Finite entries, |omega| > 0.
struct FrequencyVector {
  std::vector<double> omega;

  FrequencyVector() = default;
  explicit FrequencyVector(std::vector<double> w);

  int nu() const { return static_cast<int>(omega.size()); }
  double norm() const;  // Euclidean
};

/// Integer lattice point n in Z^nu. |n| is always the l1 norm.
struct LatticeIndex {
  std::vector<int> n;

  LatticeIndex() = default;
  explicit LatticeIndex(std::vector<int> v) : n(std::move(v)) {}
  static LatticeIndex zero(int nu) { return LatticeIndex(std::vector<int>(nu, 0)); }

  int nu() const { return static_cast<int>(n.size()); }
  int l1() const;
  bool is_zero() const;

  LatticeIndex operator+(const LatticeIndex& o) const;
  LatticeIndex operator-() const;
  bool operator==(const LatticeIndex& o) const { return n == o.n; }
  bool operator<(const LatticeIndex& o) const { return n < o.n; }  // lexicographic

  std::string str() const;
};

/// n·omega = sum_j n_j omega_j.
double dot(const LatticeIndex& n, const FrequencyVector& w);

/// (n·omega)^3, the phase of the free Airy propagation of mode n.
double phase_cube(const LatticeIndex& n, const FrequencyVector& w);

/// Exponential decay certificate: |c(n)| <= B exp(-kappa |n|).
struct Envelope {
  double B = 0;
  double kappa = 0;
};

/// Truncated Fourier coefficient family on the box |n| <= radius.
/// Entries are kept in an ordered map so every iteration (and therefore every
/// summation this library performs over a field) runs in index-lexicographic
/// order, which keeps results bit-reproducible.
class CoeffField {
 public:
  using Map = std::map<LatticeIndex, Complex>;

  CoeffField() = default;
  CoeffField(int nu, int radius) : nu_(nu), radius_(radius) {
    if (nu < 1) throw Error(ErrorCode::InvalidArgument, "CoeffField: nu must be >= 1");
    if (radius < 0) throw Error(ErrorCode::InvalidArgument, "CoeffField: radius must be >= 0");
  }

  int nu() const { return nu_; }
  int radius() const { return radius_; }
  const Map& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  const std::optional<Envelope>& envelope() const { return envelope_; }
  void set_envelope(Envelope e) { envelope_ = e; }
  void clear_envelope() { envelope_.reset(); }

  /// Inserts (adds) a value at n. Indices outside the box are rejected.
  void add(const LatticeIndex& n, Complex v);
  void set(const LatticeIndex& n, Complex v);
  Complex at(const LatticeIndex& n) const;  // 0 for absent entries

  /// Removes entries with |c(n)| <= floor.
  void prune(double floor);

  /// Largest violation of the envelope over stored entries (<= 0 means certified).
  double envelope_defect() const;

  /// sum_n |c(n)|^2 over the box, in index order.
  double l2_mass() const;

  /// Synthesized value sum_n c(n) e^{i (n·omega) x}.
  Complex synthesize(const FrequencyVector& w, double x) const;

 private:
  int nu_ = 1;
  int radius_ = 0;
  Map entries_;
  std::optional<Envelope> envelope_;
};

/// Truncated convolution: out(n) = sum_{m1+m2=n} a(m1) b(m2) for |n| <= out_radius.
/// Entries below prune_floor are dropped afterwards.
CoeffField convolve(const CoeffField& a, const CoeffField& b, int out_radius,
                    double prune_floor = 1e-30);

/// New field with entries (c(n) + conj(c(-n)))/2; a fixed point iff the input
/// already satisfies c(-n) = conj(c(n)).
CoeffField hermitian_symmetrize(const CoeffField& c);
bool is_hermitian(const CoeffField& c, double tol = 1e-12);

struct DiophantineParams {
  double a0 = 0.5;  // in (0,1)
  double b0 = 1.0;  // > nu-1
};

struct DiophantineReport {
  LatticeIndex worst_n;
  double worst_ratio = 0;  // min over n of |n·omega| |n|^{b0} / a0
  bool pass = false;       // worst_ratio >= 1 over the scanned ball
  int scanned_max = 0;     // finite certificate: only 0 < |n| <= scanned_max
};

/// Scans 0 < |n| <= N_max (l1 ball) for |n·omega| >= a0 |n|^{-b0}.
DiophantineReport check_diophantine(const FrequencyVector& w,
                                    const DiophantineParams& params, int N_max);

/// All indices with |n| <= radius (l1), lexicographic order.
std::vector<LatticeIndex> box_indices(int nu, int radius);

struct BohrResult {
  Complex value;
  double error_bound = 0;  // O(1/(A·gap)) with gap = min distinct-phase spacing
};

/// Bohr-mean coefficient extraction: (1/2A) \int_{-A}^{A} f(x) e^{-i phase x} dx
/// by composite Simpson quadrature. support_phases are the phases present in f;
/// duplicates (within gap_tol) raise DegeneratePhase.
BohrResult bohr_extract(const std::function<Complex(double)>& f,
                        std::span<const double> support_phases, double target_phase,
                        double A, double gap_tol = 1e-12);

/// Convenience overload: extracts the coefficient of mode m from the synthesis
/// of the given field.
BohrResult extract_coefficient(const CoeffField& c, const FrequencyVector& w,
                               const LatticeIndex& m, double A);

/// JSON (de)serialization of a field together with its frequency vector:
/// {"nu":int,"omega":[..],"radius":int,"entries":[{"n":[..],"re":..,"im":..},..]}
/// with entries sorted index-lexicographically.
std::string field_to_json(const CoeffField& c, const FrequencyVector& w);
std::pair<CoeffField, FrequencyVector> field_from_json(const std::string& text);

}  // namespace qkdv
