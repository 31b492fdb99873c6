#ifndef EPSTEIN_LAB_H
#define EPSTEIN_LAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(EPSTEIN_LAB_BUILDING)
#define EL_API __attribute__((visibility("default")))
#else
#define EL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns EL_OK or one of these; el_last_error() explains the
   most recent failure on the calling thread. */
typedef enum el_status {
  EL_OK = 0,
  EL_INVALID_ARGUMENT = 1,
  EL_DOMAIN = 2,
  EL_SINGULAR = 3,
  EL_DEGENERATE = 4,
  EL_NOT_CONVERGED = 5,
  EL_DIVERGENCE = 6,
  EL_CERTIFICATE = 7,
  EL_IO = 8,
  EL_UNKNOWN_COMMAND = 9,
  EL_OUTSIDE_COLLAR = 10,
  EL_NOT_FILLING = 11,
  EL_CHART_MISMATCH = 12,
  EL_INTERNAL = 99
} el_status;

typedef struct el_complex {
  double re, im;
} el_complex;

typedef struct el_moebius {
  el_complex a, b, c, d;
} el_moebius;

typedef struct el_h3_point {
  el_complex z;
  double t;
} el_h3_point;

typedef struct el_metric el_metric;
typedef struct el_surface el_surface;
typedef struct el_mesh el_mesh;

EL_API const char* el_version(void);
EL_API const char* el_last_error(void);
EL_API const char* el_status_name(el_status s);

/* geometry */
EL_API el_status el_moebius_normalize(const el_moebius* in, el_moebius* out);
EL_API el_status el_moebius_compose(const el_moebius* m1, const el_moebius* m2, el_moebius* out);
EL_API el_status el_moebius_apply(const el_moebius* m, el_complex z, el_complex* out);
EL_API el_status el_moebius_apply_h3(const el_moebius* m, el_h3_point p, el_h3_point* out);
EL_API el_status el_h3_distance(el_h3_point p, el_h3_point q, double* out);
EL_API el_status el_visual_density(el_h3_point p, el_complex z, double* out);

/* conformal metrics on an n x n grid over [-half, half]^2 */
EL_API el_status el_metric_flat(int n, double half, el_metric** out);
EL_API el_status el_metric_poincare(int n, double half, el_metric** out);
/* eta has n*n entries, row-major in the imaginary direction */
EL_API el_status el_metric_from_samples(int n, double half, const double* eta, el_metric** out);
EL_API el_status el_metric_scale(const el_metric* m, double t, el_metric** out);
EL_API void el_metric_free(el_metric* m);
EL_API size_t el_metric_size(const el_metric* m);
/* largest |B(sigma)| over trusted samples */
EL_API el_status el_metric_mobius_deviation(const el_metric* m, double* out);
/* mean curvature of the Epstein surface; values outside the trusted interior are NaN */
EL_API el_status el_metric_mean_curvature(const el_metric* m, double* values, size_t count);

EL_API el_status el_surface_epstein(const el_metric* m, el_surface** out);
EL_API void el_surface_free(el_surface* s);
EL_API size_t el_surface_size(const el_surface* s);
/* NaN heights mark samples outside the trusted interior */
EL_API el_status el_surface_point(const el_surface* s, size_t k, el_h3_point* out);
EL_API int el_surface_is_immersion(const el_surface* s);
/* half-trace of the finite-difference shape operator, NaN where undefined */
EL_API el_status el_surface_mean_curvature_fd(const el_surface* s, double* values, size_t count);

/* genus-2 octagon mesh with dyadic refinement level subdiv */
EL_API el_status el_mesh_octagon(int subdiv, el_mesh** out);
EL_API void el_mesh_free(el_mesh* m);
EL_API el_status el_mesh_counts(const el_mesh* m, int* vertices, int* edges, int* faces);
EL_API el_status el_mesh_area(const el_mesh* m, double* out);
/* solves f u - Delta u = lam; all arrays have one entry per vertex */
EL_API el_status el_mesh_solve_helmholtz(const el_mesh* m, const double* f, const double* lam, double* u);

/* homogeneous CMC residual G(H, v) with constant phi norm */
EL_API el_status el_cmc_homogeneous_residual(double H, double v, double phi_norm, double* out);

/* torus moduli */
EL_API el_status el_torus_extremal_length(el_complex tau, int m, int n, double weight, double* out);
EL_API el_status el_torus_critical_point(int mF, int nF, double wF, int mG, int nG, double wG, el_complex* tau,
                                         double* certificate);

/* Runs a JSON config. *manifest receives the manifest JSON (free with
   el_string_free) whenever the config was valid. *run_status is 0 on pass,
   1 on a failed certificate, 3 on a pipeline error. */
EL_API el_status el_run(const char* config_json, char** manifest, int* run_status);
EL_API void el_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
