#ifndef RFILTER_RFILTER_H
#define RFILTER_RFILTER_H

/*
 * C interface of the rfilter library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every fallible call returns an rf_status; on failure rf_last_error()
 * describes the problem (thread local, valid until the next failing call).
 * Matrices are row-major.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(RFILTER_BUILDING)
#define RF_API __declspec(dllexport)
#else
#define RF_API __declspec(dllimport)
#endif
#else
#define RF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rf_status {
    RF_OK = 0,
    RF_INVALID_ARGUMENT = 1,
    RF_DIMENSION_MISMATCH = 2,
    RF_PARSE = 3,
    RF_IO = 4,
    RF_FLOW = 5,
    RF_NUMERIC = 6,
    RF_INTERNAL = 100
} rf_status;

typedef struct rf_path rf_path;
typedef struct rf_model rf_model;

RF_API const char* rf_last_error(void);
RF_API const char* rf_status_name(rf_status status);

/* ---- paths ---- */

/* areas may be NULL for zero areas; it holds n rows of d(d-1)/2 packed entries a12, a13, ..., a23, ... */
RF_API rf_status rf_path_create(const double* times, size_t n, const double* values, size_t d,
                                const double* areas, double alpha, rf_path** out);
/* Piecewise-linear lift of n samples in R^d. */
RF_API rf_status rf_path_lift(const double* times, size_t n, const double* values, size_t d, double alpha,
                              rf_path** out);
RF_API rf_status rf_path_read_csv(const char* file, double alpha, rf_path** out);
RF_API rf_status rf_path_write_csv(const rf_path* path, const char* file);
/* Writes the CSV into a malloc'ed NUL-terminated buffer; release with rf_string_free. */
RF_API rf_status rf_path_to_csv(const rf_path* path, char** out);
RF_API void rf_string_free(char* s);
RF_API rf_status rf_path_clone(const rf_path* path, rf_path** out);
RF_API void rf_path_free(rf_path* path);

RF_API size_t rf_path_size(const rf_path* path);
RF_API size_t rf_path_dim(const rf_path* path);
RF_API double rf_path_alpha(const rf_path* path);
RF_API rf_status rf_path_times(const rf_path* path, double* out);  /* n */
RF_API rf_status rf_path_values(const rf_path* path, double* out); /* n x d */
RF_API rf_status rf_path_areas(const rf_path* path, double* out);  /* n x d(d-1)/2 */
RF_API int rf_path_equal(const rf_path* a, const rf_path* b);

RF_API rf_status rf_path_geodesic_interpolate(const rf_path* path, const double* times, size_t n, rf_path** out);
RF_API rf_status rf_path_subsample(const rf_path* path, size_t stride, rf_path** out);
RF_API rf_status rf_path_dilate(const rf_path* path, double lambda, rf_path** out);
RF_API rf_status rf_path_shift_area(const rf_path* path, size_t segment, size_t i, size_t j, double delta,
                                    rf_path** out);
RF_API rf_status rf_path_with_alpha(const rf_path* path, double alpha, rf_path** out);

typedef struct rf_seminorms {
    double level1;
    double level2;
    double alpha;
    double homogeneous;
} rf_seminorms;

/* dyadic != 0 restricts to dyadic lags. */
RF_API rf_status rf_path_seminorms(const rf_path* path, int dyadic, rf_seminorms* out);
RF_API rf_status rf_path_distance(const rf_path* a, const rf_path* b, double* out);

/* Smooth planar spiral lifted on a uniform grid. */
RF_API rf_status rf_spiral_driver(double horizon, size_t steps, double alpha, rf_path** out);

/* ---- models ---- */

RF_API size_t rf_builtin_model_count(void);
RF_API const char* rf_builtin_model_name(size_t index);
/* A builtin name, or an inline JSON coefficient spec starting with '{'. */
RF_API rf_status rf_model_resolve(const char* id, rf_model** out);
RF_API void rf_model_free(rf_model* model);
RF_API const char* rf_model_name(const rf_model* model);
RF_API void rf_model_dims(const rf_model* model, size_t* dx, size_t* dy, size_t* db);
RF_API int rf_model_correlated(const rf_model* model);

/* ---- estimators ---- */

typedef struct rf_theta_options {
    size_t n_samples;
    uint64_t seed;
    size_t workers;
    size_t noise_refinement; /* 0 means 1 */
    double log_weight_offset;
} rf_theta_options;

RF_API rf_theta_options rf_theta_options_default(void);

typedef struct rf_theta_result {
    double gf_mean;
    double gf_stderr;
    double g1_mean;
    double g1_stderr;
    double theta;
    double theta_stderr;
    size_t n_samples;
    uint64_t seed;
    size_t grid_steps;
    double horizon;
} rf_theta_result;

/* f_id: "one", "zero", "tanh", "sin" or "expr:<expression>". */
RF_API rf_status rf_evaluate_theta(const rf_model* model, const rf_path* driver, const char* f_id,
                                   const rf_theta_options* options, rf_theta_result* out);

typedef struct rf_continuity_row {
    size_t index;
    double distance;
    double theta;
    double theta_stderr;
    double delta_theta;
    double ratio;
} rf_continuity_row;

/* rows receives `count` entries sorted by distance. */
RF_API rf_status rf_continuity_probe(const rf_model* model, const rf_path* driver, const char* f_id,
                                     const rf_path* const* perturbations, size_t count,
                                     const rf_theta_options* options, rf_theta_result* base,
                                     rf_continuity_row* rows);

typedef struct rf_particle_result {
    double estimate;
    double stderr_;
    double ess;
    int ess_warning;
    size_t n_particles;
    uint64_t seed;
} rf_particle_result;

RF_API rf_status rf_particle_filter(const rf_model* model, const rf_path* observed, const char* f_id,
                                    size_t n_particles, uint64_t seed, size_t workers, rf_particle_result* out);

/* Closed-form filter of the scalar exponential model (example_s1) along a smooth planar path. */
RF_API rf_status rf_example_closed_form(const rf_model* model, const char* f_id, const rf_path* path, double* out);

/* Simulates (X, Y) under the model on fine_steps Euler steps; x_final receives d_X entries (may be NULL). */
RF_API rf_status rf_simulate(const rf_model* model, double horizon, size_t fine_steps, uint64_t seed, double alpha,
                             rf_path** observation, double* x_final);

#ifdef __cplusplus
}
#endif

#endif
