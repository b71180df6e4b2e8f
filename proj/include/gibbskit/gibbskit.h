#ifndef GIBBSKIT_H
#define GIBBSKIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(__GNUC__)
#define GK_API __attribute__((visibility("default")))
#else
#define GK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gk_status {
  GK_OK = 0,
  GK_INVALID_ARGUMENT = 1,
  GK_OVER_CAP = 2,
  GK_DOMAIN_ERROR = 3,
  GK_NUMERICAL_ERROR = 4,
  GK_INTERNAL_ERROR = 5
} gk_status;

typedef struct gk_model gk_model;
typedef struct gk_state gk_state;

GK_API const char* gk_version(void);
GK_API const char* gk_status_name(gk_status status);
/* Message of the last failed call on the calling thread; "" after a success. */
GK_API const char* gk_last_error(void);

GK_API uint64_t gk_dense_cap(void);
GK_API void gk_set_dense_cap(uint64_t cap);

/* Model description as JSON, e.g. {"model": "tfim_chain", "N": 8}. */
GK_API gk_status gk_model_create(const char* json, gk_model** out);
GK_API void gk_model_free(gk_model* model);
GK_API gk_status gk_model_num_vertices(const gk_model* model, int* out);
GK_API gk_status gk_model_summary(const gk_model* model, char** json_out);

GK_API gk_status gk_gibbs_create(const gk_model* model, double beta, int density_matrix, gk_state** out);
GK_API void gk_state_free(gk_state* state);
GK_API gk_status gk_state_log_z(const gk_state* state, double* out);
GK_API gk_status gk_state_energy(const gk_state* state, double* out);
GK_API gk_status gk_state_entropy(const gk_state* state, double* out);
/* Needs a state created with density_matrix != 0 for regions other than all sites. */
GK_API gk_status gk_state_region_entropy(const gk_state* state, const int* region, size_t size, double* out);

GK_API gk_status gk_log_z_exact(const gk_model* model, double beta, double* out);
/* Cluster series at the smallest order whose tail bound is below epsilon. */
GK_API gk_status gk_log_z_cluster(const gk_model* model, double beta, double epsilon, double* log_z, double* bound,
                           int* order);
/* 1D sequential algorithm; l_star <= 0 selects the default schedule. */
GK_API gk_status gk_log_z_1d(const gk_model* model, double beta, int l_star, double* log_z, double* certificate);

/* JSON-in, JSON-out entry point. Operations: summary, exact, logz, locality,
   qbp, stats, checks. The result carries "all_pass" (true, false or null when
   no bound is involved) and optionally "plot" with columns and rows. Free the
   returned string with gk_string_free. */
GK_API gk_status gk_run(const gk_model* model, const char* operation, const char* params_json, char** result_json);
GK_API void gk_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
