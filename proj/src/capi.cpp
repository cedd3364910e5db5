#include "qkdv.h"

#include <cstring>
#include <string>

#include "json.hpp"

#include "lattice.hpp"
#include "picard.hpp"
#include "workflows.hpp"

using namespace qkdv;

struct qkdv_field {
  CoeffField field;
  FrequencyVector omega;
};

struct qkdv_trajectory {
  SolutionTrajectory traj;
};

namespace {

thread_local std::string g_last_error;

qkdv_status status_of(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidArgument: return QKDV_ERR_INVALID_ARGUMENT;
    case ErrorCode::BadConfig: return QKDV_ERR_BAD_CONFIG;
    case ErrorCode::HorizonExceeded: return QKDV_ERR_HORIZON;
    case ErrorCode::NoContraction: return QKDV_ERR_NO_CONTRACTION;
    case ErrorCode::TermBudgetExceeded: return QKDV_ERR_TERM_BUDGET;
    case ErrorCode::CombinatorialBudget: return QKDV_ERR_COMBINATORIAL_BUDGET;
    case ErrorCode::DegeneratePhase: return QKDV_ERR_DEGENERATE_PHASE;
    case ErrorCode::UnresolvedRootCluster: return QKDV_ERR_UNRESOLVED_ROOTS;
    case ErrorCode::InconsistentInitialData: return QKDV_ERR_INCONSISTENT_DATA;
    case ErrorCode::AssertionFailed: return QKDV_ERR_ASSERTION;
    case ErrorCode::Io: return QKDV_ERR_IO;
  }
  return QKDV_ERR_INTERNAL;
}

template <typename Fn>
qkdv_status wrap(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QKDV_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return QKDV_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

SolverConfig parse_solver_json(const char* solver_json) {
  SolverConfig cfg;
  if (!solver_json || !*solver_json) return cfg;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(solver_json);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("solver config: ") + e.what());
  }
  cfg.radius = j.value("radius", cfg.radius);
  cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
  cfg.target_tol = j.value("target_tol", cfg.target_tol);
  cfg.t_request = j.value("t_request", cfg.t_request);
  cfg.prune_floor = j.value("prune_floor", cfg.prune_floor);
  cfg.resonance_tol = j.value("resonance_tol", cfg.resonance_tol);
  cfg.merge_tol = j.value("merge_tol", cfg.merge_tol);
  cfg.max_terms = j.value("max_terms", cfg.max_terms);
  cfg.c0 = j.value("c0", cfg.c0);
  return cfg;
}

qkdv_status run_workflow(WorkflowResult (*fn)(const std::string&, const std::string&,
                                              std::optional<std::uint64_t>),
                         const char* config_json, const char* out_dir,
                         int64_t seed_override, int* exit_code, char** report_json) {
  return wrap([&]() -> qkdv_status {
    if (!config_json || !out_dir || !exit_code || !report_json)
      throw Error(ErrorCode::InvalidArgument, "null argument");
    std::optional<std::uint64_t> seed;
    if (seed_override >= 0) seed = static_cast<std::uint64_t>(seed_override);
    WorkflowResult r = fn(config_json, out_dir, seed);
    *exit_code = r.exit_code;
    *report_json = dup_string(r.report_json);
    return QKDV_OK;
  });
}

}  // namespace

extern "C" {

const char* qkdv_status_name(qkdv_status s) {
  switch (s) {
    case QKDV_OK: return "ok";
    case QKDV_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case QKDV_ERR_BAD_CONFIG: return "bad-config";
    case QKDV_ERR_HORIZON: return "horizon-exceeded";
    case QKDV_ERR_NO_CONTRACTION: return "no-contraction";
    case QKDV_ERR_TERM_BUDGET: return "term-budget-exceeded";
    case QKDV_ERR_COMBINATORIAL_BUDGET: return "combinatorial-budget-exceeded";
    case QKDV_ERR_DEGENERATE_PHASE: return "degenerate-phase";
    case QKDV_ERR_UNRESOLVED_ROOTS: return "unresolved-root-cluster";
    case QKDV_ERR_INCONSISTENT_DATA: return "inconsistent-initial-data";
    case QKDV_ERR_ASSERTION: return "assertion-failed";
    case QKDV_ERR_IO: return "io-error";
    case QKDV_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* qkdv_last_error(void) { return g_last_error.c_str(); }

void qkdv_string_free(char* s) { delete[] s; }

qkdv_status qkdv_field_from_json(const char* json_text, qkdv_field** out) {
  return wrap([&]() -> qkdv_status {
    if (!json_text || !out)
      throw Error(ErrorCode::InvalidArgument, "null argument");
    auto [field, omega] = field_from_json(json_text);
    *out = new qkdv_field{std::move(field), std::move(omega)};
    return QKDV_OK;
  });
}

qkdv_status qkdv_field_to_json(const qkdv_field* field, char** json_out) {
  return wrap([&]() -> qkdv_status {
    if (!field || !json_out)
      throw Error(ErrorCode::InvalidArgument, "null argument");
    *json_out = dup_string(field_to_json(field->field, field->omega));
    return QKDV_OK;
  });
}

void qkdv_field_free(qkdv_field* field) { delete field; }

qkdv_status qkdv_solve(const qkdv_field* initial, const char* solver_json,
                       qkdv_trajectory** out) {
  return wrap([&]() -> qkdv_status {
    if (!initial || !out)
      throw Error(ErrorCode::InvalidArgument, "null argument");
    SolverConfig cfg = parse_solver_json(solver_json);
    CoeffField data = initial->field;
    if (data.radius() != cfg.radius) {
      CoeffField wide(data.nu(), cfg.radius);
      for (const auto& [n, v] : data.entries()) wide.set(n, v);
      if (data.envelope()) wide.set_envelope(*data.envelope());
      data = std::move(wide);
    }
    auto traj = solve(data, initial->omega, cfg);
    *out = new qkdv_trajectory{std::move(traj)};
    return QKDV_OK;
  });
}

qkdv_status qkdv_trajectory_info(const qkdv_trajectory* traj, int* iterations,
                                 double* t_max, int* converged) {
  return wrap([&]() -> qkdv_status {
    if (!traj) throw Error(ErrorCode::InvalidArgument, "null argument");
    if (iterations) *iterations = traj->traj.iterations;
    if (t_max) *t_max = traj->traj.t_max;
    if (converged) *converged = traj->traj.converged ? 1 : 0;
    return QKDV_OK;
  });
}

qkdv_status qkdv_trajectory_eval(const qkdv_trajectory* traj, double t, double x,
                                 double* re, double* im) {
  return wrap([&]() -> qkdv_status {
    if (!traj || !re || !im)
      throw Error(ErrorCode::InvalidArgument, "null argument");
    Complex u = evaluate_u_complex(traj->traj, t, x);
    *re = u.real();
    *im = u.imag();
    return QKDV_OK;
  });
}

qkdv_status qkdv_trajectory_to_json(const qkdv_trajectory* traj, char** json_out) {
  return wrap([&]() -> qkdv_status {
    if (!traj || !json_out)
      throw Error(ErrorCode::InvalidArgument, "null argument");
    nlohmann::ordered_json j;
    j["K"] = traj->traj.iterations;
    j["t_max"] = traj->traj.t_max;
    j["omega"] = traj->traj.omega.omega;
    j["radius"] = traj->traj.box_radius;
    auto modes = nlohmann::ordered_json::array();
    for (const auto& [n, f] : traj->traj.coeffs) {
      nlohmann::ordered_json m;
      m["n"] = n.n;
      auto terms = nlohmann::ordered_json::array();
      for (const auto& t : f.terms())
        terms.push_back({{"re", t.coeff.real()},
                         {"im", t.coeff.imag()},
                         {"p", t.power},
                         {"theta", t.phase}});
      m["terms"] = std::move(terms);
      modes.push_back(std::move(m));
    }
    j["modes"] = std::move(modes);
    *json_out = dup_string(j.dump(2));
    return QKDV_OK;
  });
}

qkdv_status qkdv_trajectory_residual(const qkdv_trajectory* traj, double* max_residual,
                                     double* reported_bound) {
  return wrap([&]() -> qkdv_status {
    if (!traj || !max_residual || !reported_bound)
      throw Error(ErrorCode::InvalidArgument, "null argument");
    std::vector<double> ts, xs;
    for (int j = 0; j < 5; ++j) ts.push_back(traj->traj.t_max * j / 4.0);
    for (int j = 0; j < 5; ++j)
      xs.push_back(2.0 * M_PI / traj->traj.omega.norm() * j / 5.0);
    auto rep = pde_residual(traj->traj, ts, xs);
    *max_residual = rep.max_residual;
    *reported_bound = rep.reported_bound;
    return QKDV_OK;
  });
}

void qkdv_trajectory_free(qkdv_trajectory* traj) { delete traj; }

qkdv_status qkdv_run_solve(const char* config_json, const char* out_dir,
                           int64_t seed_override, int* exit_code, char** report_json) {
  return run_workflow(&run_solve, config_json, out_dir, seed_override, exit_code,
                      report_json);
}

qkdv_status qkdv_run_verify(const char* config_json, const char* out_dir,
                            int64_t seed_override, int* exit_code, char** report_json) {
  return run_workflow(&run_verify, config_json, out_dir, seed_override, exit_code,
                      report_json);
}

qkdv_status qkdv_run_chain(const char* config_json, const char* out_dir,
                           int64_t seed_override, int* exit_code, char** report_json) {
  return run_workflow(&run_chain, config_json, out_dir, seed_override, exit_code,
                      report_json);
}

uint32_t qkdv_version(void) { return 10000; }

}  // extern "C"
