#ifndef QGRAPH_H
#define QGRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Bit flags in [`QgBranchPoint::tags`].
#define QG_TAG_START 1

#define QG_TAG_FOLD 2

#define QG_TAG_BRANCH_POINT 4

#define QG_TAG_END 8

typedef enum QgBifurcationKind {
  QG_BIFURCATION_KIND_SADDLE_NODE = 0,
  QG_BIFURCATION_KIND_TRANSCRITICAL = 1,
  QG_BIFURCATION_KIND_PITCHFORK = 2,
  QG_BIFURCATION_KIND_UNRESOLVED = 3,
} QgBifurcationKind;

typedef enum QgDstEventKind {
  QG_DST_EVENT_KIND_PITCHFORK = 0,
  QG_DST_EVENT_KIND_TRANSCRITICAL = 1,
  QG_DST_EVENT_KIND_FOLD = 2,
  QG_DST_EVENT_KIND_SYMMETRY_BREAKING = 3,
  QG_DST_EVENT_KIND_SADDLE_NODE = 4,
} QgDstEventKind;

// Graph families understood by [`qg_graph_new`].
typedef enum QgGraphKind {
  QG_GRAPH_KIND_DUMBBELL = 0,
  QG_GRAPH_KIND_LOLLIPOP = 1,
  QG_GRAPH_KIND_INTERVAL = 2,
} QgGraphKind;

typedef enum QgModeFamily {
  QG_MODE_FAMILY_CONSTANT = 0,
  QG_MODE_FAMILY_EVEN = 1,
  QG_MODE_FAMILY_ODD = 2,
  QG_MODE_FAMILY_LOOP = 3,
} QgModeFamily;

typedef enum QgSide {
  QG_SIDE_BELOW = 0,
  QG_SIDE_ABOVE = 1,
  QG_SIDE_NOT_APPLICABLE = 2,
} QgSide;

typedef enum QgStatus {
  QG_STATUS_OK = 0,
  QG_STATUS_NULL_POINTER = 1,
  QG_STATUS_INVALID_ARGUMENT = 2,
  QG_STATUS_NUMERICAL = 3,
  QG_STATUS_IO = 4,
  QG_STATUS_OUT_OF_RANGE = 5,
  QG_STATUS_PANIC = 6,
} QgStatus;

// A continued branch together with the discretization it lives on.
typedef struct QgBranch QgBranch;

// A metric graph.
typedef struct QgGraph QgGraph;

// Linear dumbbell spectrum.
typedef struct QgModes QgModes;

typedef struct QgMode {
  double k;
  double lambda;
  enum QgModeFamily family;
  size_t multiplicity;
} QgMode;

typedef struct QgContinuationSettings {
  // Target grid spacing.
  double h;
  double ds;
  double ds_min;
  double ds_max;
  double lambda_min;
  double lambda_max;
  size_t max_steps;
  double newton_tol;
  size_t max_newton;
  bool detect_events;
  double psi_tol;
} QgContinuationSettings;

typedef struct QgBranchPoint {
  double s;
  double lambda;
  double q;
  // Bitwise OR of `QG_TAG_*`.
  uint32_t tags;
} QgBranchPoint;

typedef struct QgClassification {
  enum QgBifurcationKind kind;
  enum QgSide side;
  double lambda0;
  // Theta_1 .. Theta_5; entries whose bit is clear in `theta_present` are NaN.
  double theta[5];
  uint32_t theta_present;
  double zero_tol;
} QgClassification;

typedef struct QgDstEvent {
  uint8_t from;
  uint8_t to;
  enum QgDstEventKind kind;
  double theta;
  double omega;
  double q;
} QgDstEvent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *qg_version(void);

// Copy of the last error message on this thread, or NULL if there is none.
// Release with [`qg_string_free`].
char *qg_last_error_message(void);

// # Safety
// `s` must be NULL or a string returned by this library that has not been freed.
void qg_string_free(char *s);

// Build a dumbbell or lollipop (bridge or stem of length `2 length`) or an interval of length `length`.
//
// # Safety
// `out` must be valid for writing a pointer.
enum QgStatus qg_graph_new(enum QgGraphKind kind,
                           double length,
                           struct QgGraph **out);

// Parse a graph JSON document `{vertices, edges, markers}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` valid for writing.
enum QgStatus qg_graph_from_json(const char *json, struct QgGraph **out);

// Serialize to JSON; release the string with [`qg_string_free`].
//
// # Safety
// `graph` must be a live handle and `out` valid for writing.
enum QgStatus qg_graph_to_json(const struct QgGraph *graph, char **out);

// # Safety
// `graph` must be a live handle.
enum QgStatus qg_graph_edge_count(const struct QgGraph *graph, size_t *out);

// # Safety
// `graph` must be a live handle.
enum QgStatus qg_graph_total_length(const struct QgGraph *graph, double *out);

// # Safety
// `graph` must be NULL or a handle not yet freed.
void qg_graph_free(struct QgGraph *graph);

// All dumbbell modes with wavenumber at most `k_max`, sorted by `k`.
//
// # Safety
// `out` must be valid for writing.
enum QgStatus qg_dumbbell_modes(double half_length, double k_max, struct QgModes **out);

// # Safety
// `modes` must be a live handle.
size_t qg_modes_len(const struct QgModes *modes);

// # Safety
// `modes` must be a live handle and `out` valid for writing.
enum QgStatus qg_modes_get(const struct QgModes *modes, size_t index, struct QgMode *out);

// # Safety
// `modes` must be NULL or a handle not yet freed.
void qg_modes_free(struct QgModes *modes);

// Library defaults with grid spacing 0.05.
struct QgContinuationSettings qg_continuation_settings_default(void);

// Continue the constant branch from `min(lambda_max, -ds)` towards decreasing lambda.
//
// # Safety
// `graph` must be a live handle; `settings` and `out` valid pointers.
enum QgStatus qg_continue_constant(const struct QgGraph *graph,
                                   const struct QgContinuationSettings *settings,
                                   struct QgBranch **out);

// # Safety
// `branch` must be NULL or a live handle.
size_t qg_branch_len(const struct QgBranch *branch);

// # Safety
// `branch` must be a live handle and `out` valid for writing.
enum QgStatus qg_branch_point(const struct QgBranch *branch,
                              size_t index,
                              struct QgBranchPoint *out);

// Write the branch CSV (`s, lambda, Q, tags`).
//
// # Safety
// `branch` must be a live handle and `path` a NUL-terminated string.
enum QgStatus qg_branch_write_csv(const struct QgBranch *branch, const char *path);

// Polish point `index` onto the singular point and classify it.
// A non-positive `zero_tol` selects the default `1e-6 max(1, Q)`.
//
// # Safety
// `branch` must be a live handle and `out` valid for writing.
enum QgStatus qg_branch_classify(const struct QgBranch *branch,
                                 size_t index,
                                 double zero_tol,
                                 struct QgClassification *out);

// # Safety
// `branch` must be NULL or a handle not yet freed.
void qg_branch_free(struct QgBranch *branch);

// Write up to `capacity` bowtie events into `out` and the total count into `count`.
// Call with `capacity = 0` to query the count.
//
// # Safety
// `out` must hold `capacity` elements (may be NULL when `capacity` is 0); `count` must be valid.
enum QgStatus qg_bowtie_events(struct QgDstEvent *out, size_t capacity, size_t *count);

// Radius at which the circle-hyperbola intersection count changes from 2 to 4.
//
// # Safety
// `out` must be valid for writing.
enum QgStatus qg_bowtie_intersection_threshold(double *out);

// Shooting function `f(q)` on the dumbbell; NaN when the shot diverges.
//
// # Safety
// `out` must be valid for writing.
enum QgStatus qg_shot_value(double q, double lambda, double half_length, double *out);

// Standing-wave initial values `q` in `(0, q_max]`, sorted. Writes up to `capacity` roots and
// the total into `count`.
//
// # Safety
// `out` must hold `capacity` elements (may be NULL when `capacity` is 0); `count` must be valid.
enum QgStatus qg_shoot_roots(double lambda,
                             double half_length,
                             double q_max,
                             size_t grid,
                             double *out,
                             size_t capacity,
                             size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QGRAPH_H */
