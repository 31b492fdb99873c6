/* Exercises the C interface from plain C. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "epstein_lab/epstein_lab.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

#define EXPECT_OK(call) EXPECT((call) == EL_OK)

static void geometry(void) {
  el_moebius m = {{2, 0}, {1, 0}, {0, 0}, {1, 0}}, n, id;
  el_complex w;
  EXPECT_OK(el_moebius_normalize(&m, &n));
  EXPECT_OK(el_moebius_apply(&n, (el_complex){1, 1}, &w));
  EXPECT(fabs(w.re - 3) < 1e-14 && fabs(w.im - 2) < 1e-14);
  el_moebius inv = {{1, 0}, {-1, 0}, {0, 0}, {2, 0}};
  EXPECT_OK(el_moebius_compose(&m, &inv, &id));
  EXPECT_OK(el_moebius_apply(&id, (el_complex){0.3, -0.7}, &w));
  EXPECT(fabs(w.re - 0.3) < 1e-14 && fabs(w.im + 0.7) < 1e-14);

  el_h3_point p = {{0, 0}, 1}, q = {{0, 0}, M_E}, r;
  double d;
  EXPECT_OK(el_h3_distance(p, q, &d));
  EXPECT(fabs(d - 1) < 1e-14);
  EXPECT_OK(el_moebius_apply_h3(&m, p, &r));
  EXPECT(fabs(r.t - 2) < 1e-14);
  EXPECT_OK(el_visual_density(p, (el_complex){0, 0}, &d));
  EXPECT(fabs(d - 2) < 1e-14);

  el_moebius singular = {{1, 0}, {2, 0}, {2, 0}, {4, 0}};
  EXPECT(el_moebius_normalize(&singular, &n) != EL_OK);
  EXPECT(strlen(el_last_error()) > 0);
  EXPECT(el_moebius_normalize(NULL, &n) == EL_INVALID_ARGUMENT);
}

static void surfaces(void) {
  el_metric *flat = NULL, *hyp = NULL, *scaled = NULL;
  EXPECT_OK(el_metric_flat(41, 0.5, &flat));
  EXPECT_OK(el_metric_poincare(161, 0.4, &hyp));
  EXPECT_OK(el_metric_scale(hyp, 0.5, &scaled));
  EXPECT(el_metric_size(flat) == 41 * 41);

  double dev;
  EXPECT_OK(el_metric_mobius_deviation(flat, &dev));
  EXPECT(dev < 1e-12);

  size_t n = el_metric_size(scaled);
  double* H = malloc(n * sizeof *H);
  EXPECT_OK(el_metric_mean_curvature(scaled, H, n));
  int seen = 0;
  for (size_t k = 0; k < n; ++k)
    if (!isnan(H[k])) {
      ++seen;
      if (fabs(H[k] + tanh(0.5)) > 1e-8) {
        ++failures;
        break;
      }
    }
  EXPECT(seen > 0);
  EXPECT(el_metric_mean_curvature(scaled, H, 3) == EL_INVALID_ARGUMENT);

  el_surface* s = NULL;
  EXPECT_OK(el_surface_epstein(flat, &s));
  EXPECT(el_surface_is_immersion(s) == 1);
  el_h3_point p;
  EXPECT_OK(el_surface_point(s, 20 * 41 + 20, &p));
  EXPECT(fabs(p.t - 2) < 1e-12);
  EXPECT_OK(el_surface_point(s, 0, &p));
  EXPECT(isnan(p.t));
  EXPECT(el_surface_point(s, 41 * 41, &p) == EL_INVALID_ARGUMENT);
  free(H);
  H = malloc(el_surface_size(s) * sizeof *H);
  EXPECT_OK(el_surface_mean_curvature_fd(s, H, el_surface_size(s)));
  EXPECT(fabs(H[20 * 41 + 20] + 1) < 1e-6);
  free(H);

  double eta[81];
  for (int k = 0; k < 81; ++k) eta[k] = 0.0;
  el_metric* tiny = NULL;
  EXPECT_OK(el_metric_from_samples(9, 0.5, eta, &tiny));
  EXPECT(el_metric_from_samples(9, -1.0, eta, &tiny) != EL_OK);

  el_surface_free(s);
  el_metric_free(tiny);
  el_metric_free(flat);
  el_metric_free(hyp);
  el_metric_free(scaled);
}

static void mesh(void) {
  el_mesh* m = NULL;
  EXPECT_OK(el_mesh_octagon(2, &m));
  int v, e, f;
  EXPECT_OK(el_mesh_counts(m, &v, &e, &f));
  EXPECT(v - e + f == -2);
  double area;
  EXPECT_OK(el_mesh_area(m, &area));
  EXPECT(fabs(area - 4 * M_PI) < 0.05 * 4 * M_PI);
  double* fv = malloc(v * sizeof *fv);
  double* lam = malloc(v * sizeof *lam);
  double* u = malloc(v * sizeof *u);
  for (int k = 0; k < v; ++k) {
    fv[k] = 2.0;
    lam[k] = 3.0;
  }
  EXPECT_OK(el_mesh_solve_helmholtz(m, fv, lam, u));
  for (int k = 0; k < v; ++k) EXPECT(fabs(u[k] - 1.5) < 1e-10);
  fv[0] = -1.0;
  EXPECT(el_mesh_solve_helmholtz(m, fv, lam, u) == EL_DOMAIN);
  free(fv);
  free(lam);
  free(u);
  el_mesh_free(m);
  EXPECT(el_mesh_octagon(0, &m) == EL_INVALID_ARGUMENT);
}

static void moduli(void) {
  double g;
  for (int k = 0; k <= 20; ++k) {
    EXPECT_OK(el_cmc_homogeneous_residual(-1.0 + 0.1 * k, 0.0, 0.0, &g));
    EXPECT(fabs(g) < 1e-15);
  }
  double ext;
  EXPECT_OK(el_torus_extremal_length((el_complex){0, 2}, 0, 1, 1.0, &ext));
  EXPECT(fabs(ext - 2) < 1e-14);
  EXPECT(el_torus_extremal_length((el_complex){0, -1}, 1, 0, 1.0, &ext) == EL_DOMAIN);
  el_complex tau;
  double cert;
  EXPECT_OK(el_torus_critical_point(1, 0, 1, 0, 1, 1, &tau, &cert));
  EXPECT(fabs(tau.re) < 1e-8 && fabs(tau.im - 1) < 1e-8 && cert < 1e-10);
  EXPECT(el_torus_critical_point(1, 0, 1, 2, 0, 1, &tau, &cert) == EL_NOT_FILLING);
  EXPECT(strcmp(el_status_name(EL_NOT_FILLING), "not_filling") == 0);
}

static void runs(void) {
  char* manifest = NULL;
  int status = -1;
  EXPECT(el_run("{\"command\": \"torus-critical\", \"params\": {\"bogus\": 1}}", &manifest, &status) ==
         EL_INVALID_ARGUMENT);
  EXPECT(strstr(el_last_error(), "params.bogus") != NULL);
  EXPECT(el_run("{", &manifest, &status) == EL_INVALID_ARGUMENT);
  EXPECT(el_run("{\"command\": \"nope\"}", &manifest, &status) == EL_UNKNOWN_COMMAND);
  EXPECT_OK(el_run("{\"command\": \"flat-periods\", \"out\": \"capi_smoke_out\"}", &manifest, &status));
  EXPECT(status == 0);
  EXPECT(manifest && strstr(manifest, "\"status\": \"pass\"") != NULL);
  el_string_free(manifest);
}

int main(void) {
  EXPECT(strlen(el_version()) > 0);
  geometry();
  surfaces();
  mesh();
  moduli();
  runs();
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("capi smoke: all checks passed\n");
  return 0;
}
