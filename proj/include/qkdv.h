/* qkdv — quasi-periodic KdV toolkit, C API.
 *
 * All functions return a qkdv_status; QKDV_OK means success. On failure a
 * thread-local message is available via qkdv_last_error(). Objects returned
 * through out-parameters are owned by the caller and released with the
 * matching *_free function; strings with qkdv_string_free.
 */
#ifndef QKDV_H
#define QKDV_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qkdv_status {
  QKDV_OK = 0,
  QKDV_ERR_INVALID_ARGUMENT = 1,
  QKDV_ERR_BAD_CONFIG = 2,
  QKDV_ERR_HORIZON = 3,
  QKDV_ERR_NO_CONTRACTION = 4,
  QKDV_ERR_TERM_BUDGET = 5,
  QKDV_ERR_COMBINATORIAL_BUDGET = 6,
  QKDV_ERR_DEGENERATE_PHASE = 7,
  QKDV_ERR_UNRESOLVED_ROOTS = 8,
  QKDV_ERR_INCONSISTENT_DATA = 9,
  QKDV_ERR_ASSERTION = 10,
  QKDV_ERR_IO = 11,
  QKDV_ERR_INTERNAL = 12
} qkdv_status;

const char* qkdv_status_name(qkdv_status s);

/* Message for the most recent failure on this thread. Valid until the next
 * API call on the same thread. */
const char* qkdv_last_error(void);

void qkdv_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Coefficient fields                                                  */
/* ------------------------------------------------------------------ */

typedef struct qkdv_field qkdv_field;

/* JSON schema: {"nu":int,"omega":[..],"radius":int,
 *               "entries":[{"n":[..],"re":..,"im":..},..],
 *               "envelope":{"B":..,"kappa":..}?}                      */
qkdv_status qkdv_field_from_json(const char* json_text, qkdv_field** out);
qkdv_status qkdv_field_to_json(const qkdv_field* field, char** json_out);
void qkdv_field_free(qkdv_field* field);

/* ------------------------------------------------------------------ */
/* Local solves                                                        */
/* ------------------------------------------------------------------ */

typedef struct qkdv_trajectory qkdv_trajectory;

/* solver_json (all keys optional): {"radius":int,"t_request":..,
 *   "target_tol":..,"max_iterations":int,"prune_floor":..,
 *   "resonance_tol":..,"merge_tol":..,"max_terms":int,"c0":..}        */
qkdv_status qkdv_solve(const qkdv_field* initial, const char* solver_json,
                       qkdv_trajectory** out);

qkdv_status qkdv_trajectory_info(const qkdv_trajectory* traj, int* iterations,
                                 double* t_max, int* converged);

/* u(t, x); both parts are always written. */
qkdv_status qkdv_trajectory_eval(const qkdv_trajectory* traj, double t, double x,
                                 double* re, double* im);

qkdv_status qkdv_trajectory_to_json(const qkdv_trajectory* traj, char** json_out);

/* Max PDE residual over a small fixed sample grid, with its reported bound. */
qkdv_status qkdv_trajectory_residual(const qkdv_trajectory* traj, double* max_residual,
                                     double* reported_bound);

void qkdv_trajectory_free(qkdv_trajectory* traj);

/* ------------------------------------------------------------------ */
/* Batch workflows (the CLI front ends)                                */
/* ------------------------------------------------------------------ */

/* Runs a workflow on a JSON run configuration, writing artifacts under
 * out_dir and returning the report as JSON. seed_override < 0 keeps the
 * config's seed. *exit_code follows the CLI convention: 0 success,
 * 2 invalid config, 3 horizon/contraction failure, 4 failed verification,
 * 5 chain envelope budget exceeded. */
qkdv_status qkdv_run_solve(const char* config_json, const char* out_dir,
                           int64_t seed_override, int* exit_code, char** report_json);
qkdv_status qkdv_run_verify(const char* config_json, const char* out_dir,
                            int64_t seed_override, int* exit_code, char** report_json);
qkdv_status qkdv_run_chain(const char* config_json, const char* out_dir,
                           int64_t seed_override, int* exit_code, char** report_json);

/* Version as major*10000 + minor*100 + patch. */
uint32_t qkdv_version(void);

#ifdef __cplusplus
}
#endif

#endif /* QKDV_H */
