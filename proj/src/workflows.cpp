#include "workflows.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "combinatorics.hpp"
#include "exp_poly.hpp"
#include "lattice.hpp"
#include "picard.hpp"
#include "rk4.hpp"
#include "spectral.hpp"
#include "trees.hpp"
#include "uniqueness.hpp"

namespace qkdv {

namespace {

using Json = nlohmann::ordered_json;

/// Canonical double in [0, 1) from the generator's raw 64-bit output, so the
/// stream does not depend on the standard library's distribution internals.
double canonical(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct ProblemConfig {
  FrequencyVector omega;
  double kappa = 1.0;
  double B0 = 1.0;
  std::string generator;  // empty when explicit coefficients are given
  double amplitude = 0.0;
  std::vector<std::pair<LatticeIndex, Complex>> coefficients;
};

struct RunConfig {
  ProblemConfig problem;
  SolverConfig solver;
  Json task;
  std::uint64_t seed = 0;
};

RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("config: JSON parse error: ") + e.what());
  }
  RunConfig cfg;
  try {
    const auto& p = j.at("problem");
    if (!p.contains("omega"))
      throw Error(ErrorCode::BadConfig, "config: problem.omega is required");
    cfg.problem.omega = FrequencyVector(p.at("omega").get<std::vector<double>>());
    if (p.contains("nu") && p.at("nu").get<int>() != cfg.problem.omega.nu())
      throw Error(ErrorCode::BadConfig, "config: problem.nu does not match omega length");
    cfg.problem.kappa = p.value("kappa", 1.0);
    cfg.problem.B0 = p.value("B0", 1.0);
    if (cfg.problem.kappa <= 0 || cfg.problem.B0 <= 0)
      throw Error(ErrorCode::BadConfig, "config: kappa and B0 must be positive");
    if (p.contains("coefficients")) {
      for (const auto& e : p.at("coefficients"))
        cfg.problem.coefficients.emplace_back(
            LatticeIndex(e.at("n").get<std::vector<int>>()),
            Complex{e.at("re").get<double>(), e.value("im", 0.0)});
    } else {
      cfg.problem.generator = p.value("generator", "zero");
      cfg.problem.amplitude = p.value("amplitude", 0.0);
    }

    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      cfg.solver.radius = s.value("radius", cfg.solver.radius);
      cfg.solver.max_iterations = s.value("max_iterations", cfg.solver.max_iterations);
      cfg.solver.target_tol = s.value("target_tol", cfg.solver.target_tol);
      cfg.solver.t_request = s.value("t_request", cfg.solver.t_request);
      cfg.solver.prune_floor = s.value("prune_floor", cfg.solver.prune_floor);
      cfg.solver.resonance_tol = s.value("resonance_tol", cfg.solver.resonance_tol);
      cfg.solver.merge_tol = s.value("merge_tol", cfg.solver.merge_tol);
      cfg.solver.max_terms = s.value("max_terms", cfg.solver.max_terms);
      cfg.solver.c0 = s.value("c0", cfg.solver.c0);
    }
    if (cfg.solver.radius < 0 || cfg.solver.max_iterations < 1 ||
        cfg.solver.target_tol <= 0 || cfg.solver.t_request < 0)
      throw Error(ErrorCode::BadConfig, "config: invalid solver block");

    cfg.task = j.contains("task") ? Json(j.at("task")) : Json::object();
    cfg.seed = j.value("seed", std::uint64_t{0});
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("config: ") + e.what());
  }
  if (seed_override) cfg.seed = *seed_override;
  return cfg;
}

CoeffField build_field(const ProblemConfig& p, int radius, std::uint64_t seed) {
  const int nu = p.omega.nu();
  CoeffField c(nu, radius);
  double B_needed = p.B0;

  if (!p.coefficients.empty()) {
    for (const auto& [n, v] : p.coefficients) {
      c.set(n, v);
      B_needed = std::max(B_needed, std::abs(v) * std::exp(p.kappa * n.l1()));
    }
  } else if (p.generator == "zero") {
    // empty field
  } else if (p.generator == "constant") {
    c.set(LatticeIndex::zero(nu), Complex{p.amplitude, 0});
    B_needed = std::max(B_needed, std::abs(p.amplitude));
  } else if (p.generator == "two_mode" || p.generator == "cosine") {
    std::vector<int> e1(nu, 0);
    e1[0] = 1;
    LatticeIndex n1(e1);
    c.set(n1, Complex{p.amplitude, 0});
    c.set(-n1, Complex{p.amplitude, 0});
    B_needed = std::max(B_needed, std::abs(p.amplitude) * std::exp(p.kappa));
  } else if (p.generator == "random_hermitian") {
    std::mt19937_64 rng(seed);
    for (const auto& n : box_indices(nu, radius)) {
      if (n.is_zero()) {
        c.set(n, Complex{p.B0 * (2.0 * canonical(rng) - 1.0) * 0.5, 0});
        continue;
      }
      if (-n < n) continue;  // visit each +/- pair once, keyed by the lex-smaller
      double mag = p.B0 * std::exp(-p.kappa * n.l1()) * canonical(rng);
      double phase = 2.0 * M_PI * canonical(rng);
      Complex v = mag * Complex{std::cos(phase), std::sin(phase)};
      c.set(n, v);
      c.set(-n, std::conj(v));
    }
  } else {
    throw Error(ErrorCode::BadConfig, "config: unknown generator '" + p.generator + "'");
  }

  c.set_envelope({B_needed, p.kappa});
  if (c.envelope_defect() > 1e-12 * B_needed)
    throw Error(ErrorCode::BadConfig, "config: data violates its envelope certificate");
  return c;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << content;
}

std::string trajectory_to_json(const SolutionTrajectory& traj, const Json& config_echo) {
  Json j;
  j["config"] = config_echo;
  j["K"] = traj.iterations;
  j["t_max"] = traj.t_max;
  j["converged"] = traj.converged;
  j["omega"] = traj.omega.omega;
  j["radius"] = traj.box_radius;
  auto modes = Json::array();
  for (const auto& [n, f] : traj.coeffs) {
    Json m;
    m["n"] = n.n;
    auto terms = Json::array();
    for (const auto& t : f.terms())
      terms.push_back({{"re", t.coeff.real()},
                       {"im", t.coeff.imag()},
                       {"p", t.power},
                       {"theta", t.phase}});
    m["terms"] = std::move(terms);
    modes.push_back(std::move(m));
  }
  j["modes"] = std::move(modes);
  return j.dump(2);
}

std::string sampled_csv(const SolutionTrajectory& traj, int nt, int nx) {
  const double x_hi = 2.0 * M_PI / std::max(1e-12, traj.omega.norm());
  bool hermitian = is_hermitian(traj.snapshot(0.0), 1e-10);
  std::ostringstream os;
  os.precision(17);
  os << (hermitian ? "t,x,u\n" : "t,x,re,im\n");
  for (int i = 0; i < nt; ++i) {
    double t = traj.t_max * i / std::max(1, nt - 1);
    for (int k = 0; k < nx; ++k) {
      double x = x_hi * k / std::max(1, nx - 1);
      if (hermitian)
        os << t << "," << x << "," << evaluate_u(traj, t, x) << "\n";
      else {
        Complex u = evaluate_u_complex(traj, t, x);
        os << t << "," << x << "," << u.real() << "," << u.imag() << "\n";
      }
    }
  }
  return os.str();
}

Json config_echo(const RunConfig& cfg) {
  Json e;
  e["omega"] = cfg.problem.omega.omega;
  e["kappa"] = cfg.problem.kappa;
  e["B0"] = cfg.problem.B0;
  if (!cfg.problem.generator.empty()) e["generator"] = cfg.problem.generator;
  e["radius"] = cfg.solver.radius;
  e["t_request"] = cfg.solver.t_request;
  e["target_tol"] = cfg.solver.target_tol;
  e["seed"] = cfg.seed;
  return e;
}

bool mode_zero_constant(const SolutionTrajectory& traj) {
  auto it = traj.coeffs.find(LatticeIndex::zero(traj.omega.nu()));
  if (it == traj.coeffs.end()) return true;  // identically zero
  const auto& terms = it->second.terms();
  return terms.size() == 1 && terms[0].power == 0 && terms[0].phase == 0.0;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::BadConfig:
    case ErrorCode::InvalidArgument:
      return 2;
    case ErrorCode::HorizonExceeded:
    case ErrorCode::NoContraction:
    case ErrorCode::TermBudgetExceeded:
      return 3;
    case ErrorCode::AssertionFailed:
    case ErrorCode::UnresolvedRootCluster:
    case ErrorCode::InconsistentInitialData:
      return 4;
    default:
      return 2;
  }
}

WorkflowResult guard(const std::function<WorkflowResult()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    Json j;
    j["error"] = e.what();
    j["pass"] = false;
    return {exit_code_for(e), j.dump(2)};
  } catch (const std::exception& e) {
    Json j;
    j["error"] = std::string("internal: ") + e.what();
    j["pass"] = false;
    return {2, j.dump(2)};
  }
}

// ---------------------------------------------------------------------------
// verify suites
// ---------------------------------------------------------------------------

void add_check(Json& checks, const std::string& name, bool pass, Json detail) {
  detail["name"] = name;
  detail["pass"] = pass;
  checks.push_back(std::move(detail));
}

Json verify_combinatorics() {
  Json checks = Json::array();

  bool phi_into = true, phi_fiber = true, phi_inject = true;
  for (int N = 1; N <= 6 && phi_into; ++N) {
    for (int l = 1; l <= 6; ++l) {
      auto set = enumerate_compositions(N, l);
      std::map<MultiIndex, std::vector<MultiIndex>> fibers;
      std::map<MultiIndex, int> big_preimages;
      for (const auto& a : set) {
        auto [b, j1] = reduction_map(a);
        if (b.weight() != l - 1) phi_into = false;
        fibers[b].push_back(a);
        if (a.alpha[j1 - 1] + 1 > 2) ++big_preimages[b];  // alpha_{j1} > 1 before decrement
      }
      for (const auto& [b, pre] : fibers)
        if (static_cast<int>(pre.size()) > N) phi_fiber = false;
      for (const auto& [b, cnt] : big_preimages)
        if (cnt > 1) phi_inject = false;
    }
  }
  add_check(checks, "phi_maps_into_lower_weight", phi_into, {});
  add_check(checks, "phi_fiber_card_le_N", phi_fiber, {});
  add_check(checks, "phi_injective_on_large_min_entry", phi_inject, {});

  bool monotone = true;
  for (int N = 1; N <= 6; ++N)
    for (int l = 1; l <= 6; ++l)
      if (factorial_sum(N, l) >
          static_cast<std::uint64_t>(l + N) * factorial_sum(N, l - 1))
        monotone = false;
  add_check(checks, "factorial_sum_monotone_recursion", monotone, {});

  bool stirling = true;
  Json stirling_rows = Json::array();
  for (int N = 1; N <= 6; ++N) {
    std::uint64_t lhs = factorial_sum(N, N);
    double rhs = std::pow(2.0 * N, N);
    stirling_rows.push_back({{"N", N}, {"sum", lhs}, {"bound", rhs}});
    if (!(static_cast<double>(lhs) < rhs)) stirling = false;
  }
  add_check(checks, "factorial_sum_NN_below_2N_pow_N", stirling,
            {{"rows", stirling_rows}});

  bool bweights = true;
  for (int k = 1; k <= 6; ++k)
    for (const auto& a : build_difference_exponents(k))
      if (a.weight() != k) bweights = false;
  add_check(checks, "difference_exponents_weight_identity", bweights, {});

  return checks;
}

Json verify_tree_oracle(const RunConfig& cfg, const CoeffField& field) {
  Json checks = Json::array();
  const auto opt = cfg.solver.ep_options();
  const auto& w = cfg.problem.omega;
  const int R = cfg.solver.radius;
  if (R > 3)
    throw Error(ErrorCode::CombinatorialBudget,
                "verify tree-oracle: radius must be <= 3 for the full tree sum");

  // Cardinalities and stat recursions.
  bool sizes = enumerate_trees(1).size() == 2 && enumerate_trees(2).size() == 5 &&
               enumerate_trees(3).size() == 26 && enumerate_trees(4).size() == 677;
  add_check(checks, "tree_enumeration_cardinalities", sizes, {});

  bool stats = true;
  for (int k = 2; k <= 4; ++k) {
    const auto& prev = enumerate_trees(k - 1);
    for (const auto& t : enumerate_trees(k)) {
      if (t.kind == ExpansionTree::Zero) {
        if (t.time_power != 0 || t.leaf_count != 1 || t.power_divisor != 1) stats = false;
      } else {
        const auto& l = prev[t.left];
        const auto& r = prev[t.right];
        if (t.time_power != l.time_power + r.time_power + 1) stats = false;
        if (t.leaf_count != l.leaf_count + r.leaf_count) stats = false;
        if (t.power_divisor != static_cast<std::uint64_t>(t.time_power) *
                                   l.power_divisor * r.power_divisor)
          stats = false;
      }
    }
  }
  add_check(checks, "tree_stat_recursions_exact", stats, {});

  // Iterates vs tree sums.
  std::map<LatticeIndex, ExpPoly> iterate;
  for (const auto& [n, v] : field.entries())
    iterate.emplace(n, ExpPoly::oscillation(v, phase_cube(n, w), opt));
  const double t = cfg.solver.t_request;
  double worst_rel = 0;
  Json oracle_rows = Json::array();
  for (int k = 1; k <= 3; ++k) {
    iterate = picard_step(iterate, field, w, R, opt);
    auto tree = tree_sum_field(k, t, field, w, R, opt);
    for (const auto& [n, tv] : tree) {
      auto it = iterate.find(n);
      Complex pv = it == iterate.end() ? Complex{0, 0} : ep_eval(it->second, t);
      double denom = std::max({std::abs(pv), std::abs(tv), 1e-30});
      double rel = std::abs(pv - tv) / denom;
      worst_rel = std::max(worst_rel, rel);
      oracle_rows.push_back({{"k", k},
                             {"n", n.n},
                             {"picard_value", {pv.real(), pv.imag()}},
                             {"tree_value", {tv.real(), tv.imag()}},
                             {"abs_diff", std::abs(pv - tv)}});
    }
  }
  add_check(checks, "tree_sum_matches_picard_iterate", worst_rel <= 1e-10,
            {{"max_rel_diff", worst_rel}, {"rows", oracle_rows}});

  // |I| <= t^l / F and |f| <= |w|^l P on random assignments, depth <= 3.
  std::mt19937_64 rng(cfg.seed + 1);
  bool i_bound = true, f_bound = true, p_expansion = true;
  for (int k = 1; k <= 3; ++k) {
    for (const auto& tree : enumerate_trees(k)) {
      auto exps = tree_exponent_set(tree);
      for (const auto& a : exps)
        if (a.weight() != tree.time_power) p_expansion = false;
      for (int trial = 0; trial < (tree.kind == ExpansionTree::Pair ? 12 : 4); ++trial) {
        std::vector<LatticeIndex> leaves;
        for (int j = 0; j < tree.leaf_count; ++j) {
          std::vector<int> v(w.nu());
          for (auto& x : v) x = static_cast<int>(canonical(rng) * 7) - 3;
          leaves.emplace_back(std::move(v));
        }
        double tt = 0.05 + 0.9 * canonical(rng);
        double iv = std::abs(tree_I(tt, tree, leaves, w, opt));
        double ib = std::pow(tt, tree.time_power) /
                    static_cast<double>(tree.power_divisor);
        if (iv > ib * (1 + 1e-9)) i_bound = false;
        double fv = std::abs(tree_weight(tree, leaves, w));
        double fb = std::pow(w.norm(), tree.time_power) * tree_size_product(tree, leaves);
        if (tree.kind != ExpansionTree::Zero && fv > fb * (1 + 1e-9) + 1e-30)
          f_bound = false;
        // P <= sum over the exponent set of prod |leaf_i|^{a_i}
        double p = tree_size_product(tree, leaves);
        double expansion = 0;
        for (const auto& a : exps) {
          double prod = 1;
          for (int i = 0; i < a.size(); ++i)
            prod *= std::pow(static_cast<double>(leaves[i].l1()), a.alpha[i]);
          expansion += prod;
        }
        if (p > expansion * (1 + 1e-9)) p_expansion = false;
      }
    }
  }
  add_check(checks, "integral_bound_t_pow_l_over_F", i_bound, {});
  add_check(checks, "weight_bound_omega_pow_l_times_P", f_bound, {});
  add_check(checks, "size_product_expansion_bound", p_expansion, {});

  return checks;
}

Json verify_uniqueness(const RunConfig& cfg, const CoeffField& field) {
  Json checks = Json::array();
  const auto& w = cfg.problem.omega;
  const double c0 = cfg.solver.c0 > 0 ? cfg.solver.c0 : default_C0(w.nu());

  SolutionTrajectory traj = solve(field, w, cfg.solver);
  std::vector<double> samples;
  for (int j = 0; j <= 4; ++j) samples.push_back(traj.t_max * j / 4.0);

  double defect = verify_integral_equations(traj, samples);
  add_check(checks, "integral_equations_defect_small", defect <= 1e-8,
            {{"defect", defect}});

  {
    auto pair = make_trajectory_pair(traj, traj);
    auto rep = assert_unique(pair, samples, c0);
    add_check(checks, "unique_identical_runs", rep.pass && rep.max_diff == 0.0,
              {{"max_diff", rep.max_diff},
               {"best_k", rep.best_k},
               {"bound_at_best_k", rep.bound_at_best_k}});
  }
  {
    SolverConfig big = cfg.solver;
    big.radius += 2;
    CoeffField field_big = field;  // same entries, wider box
    CoeffField wide(field.nu(), big.radius);
    for (const auto& [n, v] : field.entries()) wide.set(n, v);
    wide.set_envelope(*field.envelope());
    SolutionTrajectory tb = project_trajectory(solve(wide, w, big), cfg.solver.radius);
    tb.box_radius = cfg.solver.radius;
    auto pair = make_trajectory_pair(traj, tb);
    auto rep = assert_unique(pair, samples, c0);
    add_check(checks, "unique_under_retruncation", rep.pass,
              {{"max_diff", rep.max_diff},
               {"best_k", rep.best_k},
               {"bound_at_best_k", rep.bound_at_best_k},
               {"allowance", rep.allowance},
               {"tail_bound", rep.tail_bound}});
  }
  {
    std::vector<double> times;
    for (int j = 0; j <= 24; ++j) times.push_back(traj.t_max * j / 24.0);
    auto trace = rk4_trace(field, w, times, 1e-4);
    auto fitted = fit_trajectory_from_samples(traj, trace);
    auto pair = make_trajectory_pair(traj, fitted.traj);
    auto rep = assert_unique(pair, samples, c0);
    add_check(checks, "unique_vs_reference_integrator", rep.pass,
              {{"max_diff", rep.max_diff},
               {"best_k", rep.best_k},
               {"bound_at_best_k", rep.bound_at_best_k},
               {"allowance", rep.allowance},
               {"fit_residual", fitted.max_fit_residual}});
  }
  return checks;
}

Json verify_spectrum(const RunConfig& cfg, const CoeffField& field) {
  Json checks = Json::array();
  const auto& w = cfg.problem.omega;
  if (w.nu() != 1)
    throw Error(ErrorCode::BadConfig, "verify spectrum: requires nu = 1");

  // Free operator and constant shift closed forms.
  const double L = 2.0 * M_PI / std::abs(w.omega[0]);
  PeriodicPotential zero([](double) { return 0.0; }, L);
  PeriodicPotential shifted([](double) { return 0.7; }, L);
  double worst_free = 0;
  for (double E : {0.5, 1.0, 2.7, 5.0, 9.0}) {
    worst_free = std::max(worst_free, std::abs(hill_discriminant(zero, E) -
                                               2.0 * std::cos(std::sqrt(E) * L)));
    worst_free = std::max(
        worst_free, std::abs(hill_discriminant(shifted, E + 0.7) -
                             2.0 * std::cos(std::sqrt(E) * L)));
  }
  add_check(checks, "free_and_shifted_closed_forms", worst_free <= 1e-9,
            {{"max_abs_err", worst_free}});

  // Fiber matrix sanity: empty field gives (theta + n w)^2 exactly.
  {
    CoeffField empty(1, 0);
    auto ev = quasiperiodic_fiber_spectrum(empty, w, 0.25, 4);
    double worst = 0;
    std::vector<double> expect;
    for (const auto& n : box_indices(1, 4)) {
      double d = 0.25 + dot(n, w);
      expect.push_back(d * d);
    }
    std::sort(expect.begin(), expect.end());
    for (std::size_t j = 0; j < ev.size(); ++j)
      worst = std::max(worst, std::abs(ev[j] - expect[j]));
    add_check(checks, "fiber_matrix_free_eigenvalues", worst <= 1e-12,
              {{"max_abs_err", worst}});
  }

  const double E_max = cfg.task.value("E_max", 3.0);
  const int edge_count = cfg.task.value("edge_count", 6);
  const double drift_tol = cfg.task.value("drift_tol", 1e-4);

  SolutionTrajectory traj = solve(field, w, cfg.solver);
  std::vector<double> t_list = {0.0, traj.t_max / 2.0, traj.t_max};
  auto iso = isospectrality_check(traj, t_list, E_max, edge_count);
  add_check(checks, "isospectral_band_edges", iso.max_edge_drift <= drift_tol,
            {{"max_edge_drift", iso.max_edge_drift},
             {"edges_compared", iso.edges_compared},
             {"drift_per_t", iso.drift_per_t},
             {"baseline_edges", iso.edges_per_t.front()}});
  return checks;
}

}  // namespace

WorkflowResult run_solve(const std::string& config_text, const std::string& out_dir,
                         std::optional<std::uint64_t> seed_override) {
  return guard([&]() -> WorkflowResult {
    RunConfig cfg = parse_config(config_text, seed_override);
    CoeffField field = build_field(cfg.problem, cfg.solver.radius, cfg.seed);
    SolutionTrajectory traj = solve(field, cfg.problem.omega, cfg.solver);

    Json report;
    report["task"] = "solve";
    report["config"] = config_echo(cfg);
    report["horizon_t0"] = traj.horizon_t0;
    report["c0"] = traj.c0_used;
    report["iterations"] = traj.iterations;
    report["converged"] = traj.converged;
    report["weighted_diffs"] = traj.weighted_diffs;
    report["empirical_ratio"] = traj.empirical_ratio;

    DiffLog log{cfg.problem.omega.nu(), traj.initial_envelope.B,
                traj.initial_envelope.kappa, cfg.problem.omega.norm(), traj.t_max,
                traj.weighted_diffs};
    double c1 = estimate_C1(std::span<const DiffLog>(&log, 1), traj.c0_used);
    report["c1_fit"] = c1;
    report["theoretical_ratio"] = traj.theoretical_ratio(c1);

    auto env = check_solution_envelope(traj.coeffs, traj.initial_envelope, traj.t_max);
    report["envelope"] = {{"worst_excess", env.worst_excess}, {"pass", env.pass}};

    std::vector<double> ts, xs;
    for (int j = 0; j < 5; ++j) ts.push_back(traj.t_max * j / 4.0);
    for (int j = 0; j < 5; ++j)
      xs.push_back(2.0 * M_PI / cfg.problem.omega.norm() * j / 5.0);
    auto res = pde_residual(traj, ts, xs, cfg.solver.target_tol);
    report["residual"] = {{"max", res.max_residual},
                          {"tail_bound", res.tail_bound},
                          {"reported_bound", res.reported_bound}};
    report["momentum_drift"] = momentum_drift(traj);
    report["mode_zero_constant"] = mode_zero_constant(traj);

    const double residual_tol = cfg.task.value("residual_tol", 1e-6);
    bool pass = traj.converged && env.pass && mode_zero_constant(traj) &&
                res.max_residual <= residual_tol;
    report["pass"] = pass;

    std::filesystem::create_directories(out_dir);
    write_file(std::filesystem::path(out_dir) / "trajectory.json",
               trajectory_to_json(traj, config_echo(cfg)));
    write_file(std::filesystem::path(out_dir) / "samples.csv", sampled_csv(traj, 5, 9));
    std::string text = report.dump(2);
    write_file(std::filesystem::path(out_dir) / "report.json", text);
    return {pass ? 0 : 3, text};
  });
}

WorkflowResult run_verify(const std::string& config_text, const std::string& out_dir,
                          std::optional<std::uint64_t> seed_override) {
  return guard([&]() -> WorkflowResult {
    RunConfig cfg = parse_config(config_text, seed_override);
    const std::string suite = cfg.task.value("suite", "");
    Json checks;
    if (suite == "combinatorics") {
      checks = verify_combinatorics();
    } else if (suite == "tree-oracle") {
      checks = verify_tree_oracle(cfg, build_field(cfg.problem, cfg.solver.radius, cfg.seed));
    } else if (suite == "uniqueness") {
      checks = verify_uniqueness(cfg, build_field(cfg.problem, cfg.solver.radius, cfg.seed));
    } else if (suite == "spectrum") {
      checks = verify_spectrum(cfg, build_field(cfg.problem, cfg.solver.radius, cfg.seed));
    } else {
      throw Error(ErrorCode::BadConfig,
                  "config: task.suite must be one of tree-oracle | combinatorics | "
                  "uniqueness | spectrum");
    }

    bool pass = true;
    std::string failed;
    for (const auto& c : checks)
      if (!c.at("pass").get<bool>()) {
        pass = false;
        if (!failed.empty()) failed += ", ";
        failed += c.at("name").get<std::string>();
      }
    Json report;
    report["task"] = "verify";
    report["suite"] = suite;
    report["config"] = config_echo(cfg);
    report["checks"] = checks;
    report["pass"] = pass;
    if (!pass) report["failed_checks"] = failed;

    std::filesystem::create_directories(out_dir);
    std::string text = report.dump(2);
    write_file(std::filesystem::path(out_dir) / ("report_" + suite + ".json"), text);
    return {pass ? 0 : 4, text};
  });
}

WorkflowResult run_chain(const std::string& config_text, const std::string& out_dir,
                         std::optional<std::uint64_t> seed_override) {
  return guard([&]() -> WorkflowResult {
    RunConfig cfg = parse_config(config_text, seed_override);
    const int segments = cfg.task.value("segments", 2);
    const double budget = cfg.task.value("envelope_budget", 10.0 * cfg.problem.B0);
    const bool check_spectrum =
        cfg.task.value("check_spectrum", false) && cfg.problem.omega.nu() == 1;
    const double E_max = cfg.task.value("E_max", 3.0);
    const int edge_count = cfg.task.value("edge_count", 6);
    if (segments < 1) throw Error(ErrorCode::BadConfig, "config: segments must be >= 1");

    std::filesystem::create_directories(out_dir);
    Json report;
    report["task"] = "chain";
    report["config"] = config_echo(cfg);
    auto seg_array = Json::array();

    CoeffField field = build_field(cfg.problem, cfg.solver.radius, cfg.seed);
    double kappa = cfg.problem.kappa;
    std::vector<double> baseline_edges;
    bool budget_exceeded = false;
    double max_spec_drift = 0;

    for (int s = 0; s < segments; ++s) {
      SolverConfig scfg = cfg.solver;
      SolutionTrajectory traj = solve(field, cfg.problem.omega, scfg);
      CoeffField end_state = hermitian_symmetrize(traj.snapshot(traj.t_max));

      double kappa_next = kappa / 2.0;
      double B_next = 0;
      for (const auto& [n, v] : end_state.entries())
        B_next = std::max(B_next, std::abs(v) * std::exp(kappa_next * n.l1()));
      if (B_next == 0) B_next = cfg.problem.B0;  // zero data keeps its certificate

      Json seg;
      seg["segment"] = s;
      seg["iterations"] = traj.iterations;
      seg["converged"] = traj.converged;
      seg["t_max"] = traj.t_max;
      seg["kappa"] = kappa;
      seg["envelope_B_next"] = B_next;
      write_file(std::filesystem::path(out_dir) /
                     ("trajectory_seg" + std::to_string(s) + ".json"),
                 trajectory_to_json(traj, config_echo(cfg)));

      if (check_spectrum && is_hermitian(field, 1e-10)) {
        auto V = potential_from_field(field, cfg.problem.omega);
        auto spec = band_edges(V, E_max);
        std::size_t count = std::min<std::size_t>(edge_count, spec.band_edges.size());
        if (baseline_edges.empty()) {
          baseline_edges.assign(spec.band_edges.begin(),
                                spec.band_edges.begin() + count);
        } else {
          double drift = 0;
          for (std::size_t j = 0; j < std::min(count, baseline_edges.size()); ++j)
            drift = std::max(drift, std::abs(spec.band_edges[j] - baseline_edges[j]));
          seg["spectral_drift"] = drift;
          max_spec_drift = std::max(max_spec_drift, drift);
        }
      }

      seg_array.push_back(std::move(seg));
      if (B_next > budget) {
        budget_exceeded = true;
        break;
      }
      end_state.set_envelope({B_next, kappa_next});
      field = std::move(end_state);
      kappa = kappa_next;
    }

    report["segments"] = std::move(seg_array);
    report["envelope_budget"] = budget;
    report["budget_exceeded"] = budget_exceeded;
    if (check_spectrum) report["max_spectral_drift"] = max_spec_drift;
    report["pass"] = !budget_exceeded;
    std::string text = report.dump(2);
    write_file(std::filesystem::path(out_dir) / "report.json", text);
    return {budget_exceeded ? 5 : 0, text};
  });
}

}  // namespace qkdv
