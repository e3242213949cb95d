#ifndef BSQZ_BSQZ_H
#define BSQZ_BSQZ_H

/* Belief compression for POMDPs: C interface.
 *
 * Every object is an opaque handle released with its *_free function. Functions
 * return a bsqz_status; on failure bsqz_last_error() describes the problem for the
 * calling thread. Matrices cross the boundary as column-major double arrays. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BSQZ_API __declspec(dllexport)
#else
#define BSQZ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bsqz_status {
    BSQZ_OK = 0,
    BSQZ_ERR_INVALID_ARGUMENT = 1,
    BSQZ_ERR_INVALID_MODEL = 2,
    BSQZ_ERR_PARSE = 3,
    BSQZ_ERR_IO = 4,
    BSQZ_ERR_FORMAT = 5,
    BSQZ_ERR_NUMERICAL = 6,
    BSQZ_ERR_IMPOSSIBLE_OBSERVATION = 7,
    BSQZ_ERR_INTERNAL = 99
} bsqz_status;

typedef struct bsqz_model bsqz_model;
typedef struct bsqz_beliefs bsqz_beliefs;
typedef struct bsqz_basis bsqz_basis;
typedef struct bsqz_compressed bsqz_compressed;
typedef struct bsqz_value bsqz_value;
typedef struct bsqz_solution bsqz_solution;

BSQZ_API const char* bsqz_version(void);
BSQZ_API const char* bsqz_last_error(void);
BSQZ_API const char* bsqz_status_name(bsqz_status s);
/* 0 selects the hardware concurrency. Results do not depend on this setting. */
BSQZ_API void bsqz_set_threads(unsigned n);

/* ---- models ---- */

BSQZ_API bsqz_status bsqz_model_load(const char* path, bsqz_model** out);
BSQZ_API bsqz_status bsqz_model_parse(const char* text, bsqz_model** out);
BSQZ_API bsqz_status bsqz_model_synth_lowrank(size_t k, size_t n, uint64_t seed, bsqz_model** out);
BSQZ_API bsqz_status bsqz_model_save(const bsqz_model* m, const char* path);
BSQZ_API void bsqz_model_free(bsqz_model* m);
BSQZ_API bsqz_status bsqz_model_dims(const bsqz_model* m, size_t* n_states, size_t* n_actions, size_t* n_obs,
                                     double* discount);
/* Copies R(s, a) (n_states x n_actions) and the initial belief (n_states). */
BSQZ_API bsqz_status bsqz_model_reward(const bsqz_model* m, double* out);
BSQZ_API bsqz_status bsqz_model_initial_belief(const bsqz_model* m, double* out);
BSQZ_API bsqz_status bsqz_belief_update(const bsqz_model* m, const double* b, size_t a, size_t z, double* out);

/* ---- sampled beliefs ---- */

BSQZ_API bsqz_status bsqz_sample_beliefs(const bsqz_model* m, size_t count, uint64_t seed, size_t horizon_cap,
                                         bsqz_beliefs** out);
BSQZ_API bsqz_status bsqz_beliefs_from_matrix(const double* data, size_t n, size_t count, bsqz_beliefs** out);
/* First `count` columns (or all, if count exceeds the size). */
BSQZ_API bsqz_status bsqz_beliefs_head(const bsqz_beliefs* b, size_t count, bsqz_beliefs** out);
BSQZ_API bsqz_status bsqz_beliefs_dims(const bsqz_beliefs* b, size_t* n, size_t* count);
BSQZ_API bsqz_status bsqz_beliefs_copy(const bsqz_beliefs* b, double* out);
BSQZ_API bsqz_status bsqz_beliefs_save(const bsqz_beliefs* b, const char* path);
BSQZ_API bsqz_status bsqz_beliefs_load(const char* path, bsqz_beliefs** out);
BSQZ_API void bsqz_beliefs_free(bsqz_beliefs* b);

/* ---- compression ---- */

typedef enum bsqz_vdc_mode { BSQZ_VDC_LOSSLESS_RANK = 0, BSQZ_VDC_LOSSLESS_RESIDUAL = 1, BSQZ_VDC_LOSSY = 2 } bsqz_vdc_mode;

typedef struct bsqz_vdc_options {
    bsqz_vdc_mode mode;
    double tau;
    size_t k;
} bsqz_vdc_options;

typedef enum bsqz_nmf_variant { BSQZ_NMF_PNMF = 0, BSQZ_NMF_ONMF = 1, BSQZ_NMF_LPNMF = 2 } bsqz_nmf_variant;

typedef struct bsqz_nmf_options {
    bsqz_nmf_variant variant;
    size_t k;
    double lambda;
    int lambda_auto;
    size_t max_iters;
    double tol;
    uint64_t seed;
    double delta;
    size_t knn_k;
    double locality_weight;
    int accelerate;
    size_t restarts;
} bsqz_nmf_options;

BSQZ_API void bsqz_vdc_options_default(bsqz_vdc_options* o);
BSQZ_API void bsqz_nmf_options_default(bsqz_nmf_options* o);

BSQZ_API bsqz_status bsqz_compress_vdc(const bsqz_model* m, const bsqz_vdc_options* o, bsqz_basis** out);
BSQZ_API bsqz_status bsqz_compress_nmf(const bsqz_model* m, const bsqz_beliefs* b, const bsqz_nmf_options* o,
                                       bsqz_basis** out);
/* F = [columns], F_dag = F^T. */
BSQZ_API bsqz_status bsqz_basis_from_matrix(const double* F, size_t n, size_t k, bsqz_basis** out);
BSQZ_API bsqz_status bsqz_basis_dims(const bsqz_basis* b, size_t* n, size_t* k);
BSQZ_API bsqz_status bsqz_basis_copy(const bsqz_basis* b, double* F, double* F_dag);
/* Method name ("vdc", "pnmf", ...), provenance and nonnegativity. Strings live as long as the handle. */
BSQZ_API const char* bsqz_basis_method(const bsqz_basis* b);
BSQZ_API const char* bsqz_basis_provenance(const bsqz_basis* b);
BSQZ_API int bsqz_basis_nonnegative(const bsqz_basis* b);
/* Factorisation objective per iteration (NMF) or accepted-column residuals (VDC). */
BSQZ_API bsqz_status bsqz_basis_trace(const bsqz_basis* b, size_t* len, const double** values);
/* NMF: stop reason ("tol", "max_iters") and the lambda used; VDC: "" and 0. */
BSQZ_API const char* bsqz_basis_stop_reason(const bsqz_basis* b);
BSQZ_API double bsqz_basis_lambda(const bsqz_basis* b);
BSQZ_API bsqz_status bsqz_basis_save(const bsqz_basis* b, const char* path);
BSQZ_API bsqz_status bsqz_basis_load(const char* path, bsqz_basis** out);
BSQZ_API void bsqz_basis_free(bsqz_basis* b);
/* ||B - F F_dag B||_F over the given beliefs. */
BSQZ_API bsqz_status bsqz_basis_residual(const bsqz_basis* f, const bsqz_beliefs* b, double* out);

typedef struct bsqz_error_report {
    double eps_r;
    double eps_t;
    double a_inf;
    double i_minus_a_inf;
    double contraction_margin;
    int has_value_bound;
    double value_bound;
    double v_sup;
} bsqz_error_report;

BSQZ_API bsqz_status bsqz_error_report_compute(const bsqz_model* m, const bsqz_basis* b, bsqz_error_report* out);

BSQZ_API bsqz_status bsqz_build_compressed(const bsqz_model* m, const bsqz_basis* b, bsqz_compressed** out);
BSQZ_API bsqz_status bsqz_compressed_save(const bsqz_compressed* c, const char* path);
BSQZ_API bsqz_status bsqz_compressed_load(const char* path, bsqz_compressed** out);
BSQZ_API bsqz_status bsqz_compressed_dims(const bsqz_compressed* c, size_t* k);
BSQZ_API void bsqz_compressed_free(bsqz_compressed* c);

/* ---- solving ---- */

typedef struct bsqz_solver_options {
    size_t max_stages;
    uint64_t seed;
    int value_floor_init;
    int prune;
    double tol;
    int synchronous;
} bsqz_solver_options;

typedef enum bsqz_verdict { BSQZ_CONVERGED = 0, BSQZ_PLATEAUED = 1, BSQZ_DIVERGED = 2 } bsqz_verdict;

BSQZ_API void bsqz_solver_options_default(bsqz_solver_options* o);
/* Solves the original model over the belief points, or its compression when c is non-NULL. */
BSQZ_API bsqz_status bsqz_solve(const bsqz_model* m, const bsqz_compressed* c, const bsqz_beliefs* points,
                                const bsqz_solver_options* o, bsqz_solution** out);
BSQZ_API void bsqz_solution_free(bsqz_solution* s);
BSQZ_API size_t bsqz_solution_stages(const bsqz_solution* s);
/* Per stage: sum of point values, |Gamma| and largest point-value change. Any pointer may be NULL. */
BSQZ_API bsqz_status bsqz_solution_trace(const bsqz_solution* s, double* expected_value, size_t* n_vectors,
                                         double* max_change);
BSQZ_API bsqz_verdict bsqz_solution_verdict(const bsqz_solution* s);
/* "converged", "max_stages" or "diverged". */
BSQZ_API const char* bsqz_solution_status(const bsqz_solution* s);
BSQZ_API double bsqz_solution_ceiling(const bsqz_solution* s);
BSQZ_API int bsqz_solution_heuristic_floor(const bsqz_solution* s);
/* Borrowed view of the value function; valid while the solution lives. */
BSQZ_API const bsqz_value* bsqz_solution_value(const bsqz_solution* s);

BSQZ_API bsqz_status bsqz_value_dims(const bsqz_value* v, size_t* count, size_t* dim);
/* alphas holds count vectors of dim entries, one after another. */
BSQZ_API bsqz_status bsqz_value_copy(const bsqz_value* v, double* alphas, size_t* actions);
BSQZ_API const char* bsqz_value_space(const bsqz_value* v);
BSQZ_API bsqz_status bsqz_value_at(const bsqz_value* v, const double* x, double* value, size_t* action);
BSQZ_API bsqz_status bsqz_value_save(const bsqz_value* v, const char* path);
BSQZ_API bsqz_status bsqz_value_load(const char* path, bsqz_value** out);
BSQZ_API void bsqz_value_free(bsqz_value* v);
/* Original-space image F alpha~ of every vector of a compressed value function. */
BSQZ_API bsqz_status bsqz_value_lift(const bsqz_basis* f, const bsqz_value* compressed, bsqz_value** out);

/* ---- evaluation ---- */

typedef struct bsqz_eval_protocol {
    size_t n_trajectories;
    size_t horizon;
    size_t n_repeats;
    uint64_t seed;
    int discounted;
} bsqz_eval_protocol;

BSQZ_API void bsqz_eval_protocol_default(bsqz_eval_protocol* p);
/* basis is NULL for original-space value functions. per_repeat (n_repeats entries) may be NULL. */
BSQZ_API bsqz_status bsqz_evaluate(const bsqz_model* m, const bsqz_value* v, const bsqz_basis* basis,
                                   const bsqz_eval_protocol* p, double* mean, double* std, double* per_repeat);

/* ---- diagnostics ---- */

typedef enum bsqz_check_status {
    BSQZ_CHECK_PASS = 0,
    BSQZ_CHECK_FAIL = 1,
    BSQZ_CHECK_NOT_APPLICABLE = 2,
    BSQZ_CHECK_NONE_FOUND = 3
} bsqz_check_status;

typedef struct bsqz_check {
    bsqz_check_status status;
    double margin;
} bsqz_check;

BSQZ_API bsqz_status bsqz_lemma4(const bsqz_basis* f, const bsqz_beliefs* b, size_t draws, uint64_t seed,
                                 bsqz_check* out);
BSQZ_API bsqz_status bsqz_value_gap(const bsqz_model* m, const bsqz_basis* f, const bsqz_value* v,
                                   const bsqz_value* v_c, const bsqz_beliefs* b, bsqz_check* out, double* measured,
                                   double* bound);
/* Lemma-1 scaling identity with A = F F_dag over every belief column; counts per outcome.
 * v_bar lives in the original space (see bsqz_value_lift). */
BSQZ_API bsqz_status bsqz_lemma1(const bsqz_model* m, const bsqz_basis* f, const bsqz_value* v_bar,
                                 const bsqz_beliefs* b, size_t* passed, size_t* failed, size_t* not_applicable);
/* Value-loss identity; per-belief rows are written when the arrays are non-NULL (count entries each). */
BSQZ_API bsqz_status bsqz_value_loss(const bsqz_model* m, const bsqz_basis* f, const bsqz_value* v,
                                     const bsqz_value* v_c, const bsqz_beliefs* b, double* lhs, double* rhs,
                                     int* premise, double* max_residual, size_t* premise_failures);

#ifdef __cplusplus
}
#endif

#endif
