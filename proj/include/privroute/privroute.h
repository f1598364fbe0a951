/*
 * C interface to the privroute library.
 *
 * All functions return a prv_status; on failure prv_last_error() describes
 * the most recent error on the calling thread. Strings returned through
 * char** out-parameters are heap allocated and must be released with
 * prv_string_free(). Handles are released with their matching _free().
 */
#ifndef PRIVROUTE_H
#define PRIVROUTE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PRIVROUTE_BUILDING)
#    define PRV_API __declspec(dllexport)
#  else
#    define PRV_API __declspec(dllimport)
#  endif
#else
#  define PRV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum prv_status {
    PRV_OK = 0,
    PRV_ERR_INVALID_ARGUMENT = 1,
    PRV_ERR_CONFIG = 2,
    PRV_ERR_NETWORK = 3,
    PRV_ERR_NUMERIC = 4,
    PRV_ERR_CONVERGENCE = 5,
    PRV_ERR_IO = 6,
    PRV_ERR_INTERNAL = 99
} prv_status;

/* Parsed experiment config: network, costs, populations, simulation and
 * privacy blocks. */
typedef struct prv_experiment prv_experiment;
/* Result of a Monte Carlo ensemble for one noise level. */
typedef struct prv_ensemble prv_ensemble;
/* Composed privacy guarantee for one (c, sigma, T). */
typedef struct prv_report prv_report;

typedef struct prv_ensemble_summary {
    size_t iterations;
    size_t runs;
    double sigma;
    double f_star;
    double slope;          /* NaN when the fit had < 2 usable points */
    double terminal_f_mean;
    int feasible;          /* 1 iff every iterate of every run was feasible */
} prv_ensemble_summary;

typedef struct prv_report_summary {
    double epsilon;
    double delta;
    double delta_tail;
    size_t iterations;
    int valid;    /* every step satisfied the mechanism preconditions */
    int trivial;  /* delta >= 1 */
} prv_report_summary;

PRV_API const char* prv_version(void);
PRV_API const char* prv_last_error(void);
PRV_API void prv_string_free(char* s);

/* ---- experiments ---- */
PRV_API prv_status prv_experiment_from_file(const char* path, prv_experiment** out);
PRV_API prv_status prv_experiment_from_json(const char* json, prv_experiment** out);
PRV_API void prv_experiment_free(prv_experiment* exp);

PRV_API prv_status prv_experiment_set_seed(prv_experiment* exp, uint64_t seed);
PRV_API prv_status prv_experiment_set_runs(prv_experiment* exp, size_t runs);
PRV_API prv_status prv_experiment_set_iterations(prv_experiment* exp, size_t T);
PRV_API prv_status prv_experiment_set_sigmas(prv_experiment* exp, const double* sigmas, size_t n);
PRV_API prv_status prv_experiment_set_threads(prv_experiment* exp, size_t threads);
/* Sets c for constants and equilibrium reports and overwrites c in every
 * configured accountant pair. */
PRV_API prv_status prv_experiment_set_adjacency(prv_experiment* exp, double c);
PRV_API prv_status prv_experiment_set_clip(prv_experiment* exp, double a);
/* Replaces the accountant (c, sigma) pairs. */
PRV_API prv_status prv_experiment_set_pairs(prv_experiment* exp, const double* c, const double* sigma, size_t n);
PRV_API prv_status prv_experiment_set_t_range(prv_experiment* exp, size_t first, size_t last, size_t stride);

/* Number of sigma values; copies up to cap of them into out (out may be NULL). */
PRV_API prv_status prv_experiment_sigmas(const prv_experiment* exp, double* out, size_t cap, size_t* n);
PRV_API prv_status prv_experiment_pairs(const prv_experiment* exp, double* c, double* sigma, size_t cap, size_t* n);
PRV_API prv_status prv_experiment_t_range(const prv_experiment* exp, size_t* first, size_t* last, size_t* stride);
/* Configured output directory; empty string when unset. */
PRV_API prv_status prv_experiment_output_dir(const prv_experiment* exp, char** out);
PRV_API prv_status prv_experiment_config_json(const prv_experiment* exp, char** out);

/* ---- reports ---- */
PRV_API prv_status prv_constants_json(const prv_experiment* exp, char** out);
PRV_API prv_status prv_equilibrium_json(const prv_experiment* exp, double tol, char** out);

/* ---- simulation ---- */
/* keep_runs != 0 retains every run so prv_ensemble_run_csv can export it. */
PRV_API prv_status prv_simulate(const prv_experiment* exp, double sigma, int keep_runs, prv_ensemble** out);
PRV_API void prv_ensemble_free(prv_ensemble* ens);
PRV_API prv_status prv_ensemble_summary_get(const prv_ensemble* ens, prv_ensemble_summary* out);
PRV_API prv_status prv_ensemble_csv(const prv_ensemble* ens, char** out);
PRV_API prv_status prv_ensemble_run_csv(const prv_ensemble* ens, size_t run, char** out);
/* timestamp is echoed verbatim into the manifest (may be NULL). */
PRV_API prv_status prv_ensemble_manifest_json(const prv_ensemble* ens, const char* timestamp, char** out);

/* ---- privacy accounting ---- */
PRV_API prv_status prv_accountant(const prv_experiment* exp, double c, double sigma, size_t T, prv_report** out);
PRV_API void prv_report_free(prv_report* rep);
PRV_API prv_status prv_report_summary_get(const prv_report* rep, prv_report_summary* out);
PRV_API prv_status prv_report_json(const prv_report* rep, char** out);
PRV_API prv_status prv_accountant_curve_csv(const prv_experiment* exp, double c, double sigma, size_t t_first,
                                            size_t t_last, size_t stride, int header, char** out);

/* ---- stateless calculus ---- */
PRV_API prv_status prv_gaussian_epsilon(double sensitivity, double sigma, double delta, int paper_variant,
                                        double* epsilon, int* valid);
PRV_API prv_status prv_tail_delta(double sigma, double a, uint64_t observations, double* out);
PRV_API prv_status prv_compose(const double* epsilon, const double* delta, size_t n, double delta_tail,
                               double* epsilon_out, double* delta_out);

#ifdef __cplusplus
}
#endif

#endif /* PRIVROUTE_H */
