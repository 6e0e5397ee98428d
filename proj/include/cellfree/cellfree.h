/*
 * cellfree: downlink energy-efficiency analysis for cell-free massive MIMO
 * networks with Poisson-distributed access points.
 *
 * C interface to the shared library: opaque context handle, status codes,
 * string results. Every function returning a char** allocates the string
 * with the library allocator; release it with cf_string_free(). All calls
 * are thread-compatible (distinct contexts may be used concurrently; a
 * single context must not be shared between threads without external
 * synchronization).
 */
#ifndef CELLFREE_CELLFREE_H
#define CELLFREE_CELLFREE_H

#include <stdint.h>

#if defined(_WIN32)
#  define CELLFREE_API __declspec(dllexport)
#else
#  define CELLFREE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cf_status {
  CF_OK = 0,
  CF_ERROR = 1,              /* unexpected internal failure */
  CF_ERROR_CONFIG = 2,       /* invalid configuration or arguments */
  CF_ERROR_INFEASIBLE = 3,   /* the requested problem has no feasible point */
  CF_ERROR_SIMULATION = 4    /* Monte Carlo failure */
} cf_status;

typedef struct cf_context cf_context;

CELLFREE_API const char* cf_version(void);

/* Creates a context from a JSON configuration document (or file). On
 * failure *out_ctx is NULL and the message is available through
 * cf_last_error(NULL). */
CELLFREE_API cf_status cf_context_create(const char* config_json,
                                         cf_context** out_ctx);
CELLFREE_API cf_status cf_context_create_from_file(const char* path,
                                                   cf_context** out_ctx);
CELLFREE_API void cf_context_free(cf_context* ctx);

/* Last error message for the context, or the thread-local creation error
 * when ctx is NULL. The pointer stays valid until the next failing call. */
CELLFREE_API const char* cf_last_error(const cf_context* ctx);

/* Overrides the configured Monte Carlo seed. */
CELLFREE_API cf_status cf_context_set_seed(cf_context* ctx, uint64_t seed);

/* Options: "strict_paper" = "0"|"1" (published power-model coefficients
 * verbatim), "apc_mode" = "polynomial"|"first-principles". */
CELLFREE_API cf_status cf_context_set_option(cf_context* ctx, const char* key,
                                             const char* value);

/* Single-point evaluation of the SINR bound, SE, ASE, APC and EE. */
CELLFREE_API cf_status cf_evaluate(cf_context* ctx, char** out_json);

/* Parameter sweep over the configured axes; format "csv" or "json". */
CELLFREE_API cf_status cf_sweep(cf_context* ctx, const char* format,
                                char** out_doc);

/* Optimizer reports; variables is a comma list of zeta|lambda|K|N or
 * "all". */
CELLFREE_API cf_status cf_optimize(cf_context* ctx, const char* variables,
                                   char** out_json);

/* Monte Carlo run. out_records_ndjson may be NULL; when non-NULL and the
 * configuration enables record emission it receives one JSON object per
 * realization. */
CELLFREE_API cf_status cf_simulate(cf_context* ctx, char** out_summary_json,
                                   char** out_records_ndjson);

/* Regenerates the dataset behind a reference figure: "fig1", "fig3",
 * "fig4" or "fig5". */
CELLFREE_API cf_status cf_reproduce(cf_context* ctx, const char* figure,
                                    char** out_dataset_csv,
                                    char** out_meta_json);

CELLFREE_API void cf_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CELLFREE_CELLFREE_H */
