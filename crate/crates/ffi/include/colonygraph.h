#ifndef COLONYGRAPH_H
#define COLONYGRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CgStatus {
  CG_STATUS_OK = 0,
  CG_STATUS_NULL_POINTER = 1,
  CG_STATUS_INVALID_ARGUMENT = 2,
  CG_STATUS_DOMAIN = 3,
  CG_STATUS_CONFIG = 4,
  CG_STATUS_INVARIANT = 5,
  CG_STATUS_CAPACITY = 6,
  CG_STATUS_GRAPH = 7,
  CG_STATUS_SHAPE = 8,
  CG_STATUS_DIVERGED = 9,
  CG_STATUS_IO = 10,
  CG_STATUS_FORMAT = 11,
  CG_STATUS_BUFFER_TOO_SMALL = 12,
  CG_STATUS_PANIC = 13,
} CgStatus;

/**
 * Agent state codes accepted by `cg_state_to_float` and used for the order of
 * `cg_simulation_state_counts`.
 */
typedef enum CgAgentState {
  CG_AGENT_STATE_OBSERVE = 0,
  CG_AGENT_STATE_EXPLORE = 1,
  CG_AGENT_STATE_ASSESS = 2,
  CG_AGENT_STATE_RECRUIT = 3,
  CG_AGENT_STATE_TRAVEL_HUB_OBSERVE = 4,
  CG_AGENT_STATE_TRAVEL_HUB_RECRUIT = 5,
  CG_AGENT_STATE_TRAVEL_SITE = 6,
} CgAgentState;

typedef enum CgPreset {
  CG_PRESET_TABLE2 = 0,
  CG_PRESET_EXPERIMENT1 = 1,
} CgPreset;

typedef enum CgInitialCondition {
  CG_INITIAL_CONDITION_ALL_OBSERVE = 0,
  CG_INITIAL_CONDITION_HALF_EXPLORE_HALF_OBSERVE = 1,
  CG_INITIAL_CONDITION_NINETY_OBSERVE_TEN_RECRUIT_WORST = 2,
  CG_INITIAL_CONDITION_RANDOM = 3,
} CgInitialCondition;

typedef struct CgGraph CgGraph;

typedef struct CgModel CgModel;

typedef struct CgSimulation CgSimulation;

/**
 * Everything needed to start one trial. `preset` and `initial` take the
 * values of `CgPreset` and `CgInitialCondition`.
 */
typedef struct CgWorldSpec {
  uint32_t preset;
  uint32_t initial;
  const double *qualities;
  size_t site_count;
  double site_distance;
  double max_distance;
  size_t agents;
  double threshold;
  uint64_t max_ticks;
  uint64_t seed;
} CgWorldSpec;

/**
 * Where a trial stands. `site` is -1 until a quorum forms.
 */
typedef struct CgRunSummary {
  bool finished;
  int64_t site;
  uint64_t ticks;
} CgRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next library call on the same thread.
 */
const char *cg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cg_version(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void cg_string_free(char *s);

/**
 * Recruit-dwell continuation `2 / (2 + e^(-7q))`.
 *
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum CgStatus cg_compute_x(double q, double *out);

/**
 * Reassessment factor `sqrt(q)`.
 *
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum CgStatus cg_compute_gamma(double q, double *out);

/**
 * Float code of a `CgAgentState`.
 *
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum CgStatus cg_state_to_float(uint32_t state, double *out);

/**
 * `sigmoid(x . y)` for two 3-vectors.
 *
 * # Safety
 * `x` and `y` must each point to 3 doubles; `out` to one.
 */
enum CgStatus cg_edge_score(const double *x, const double *y, double *out);

/**
 * Builds a trial: sites placed at `site_distance` with a rotation drawn from
 * `seed`, colony drawn from the requested initial condition.
 *
 * # Safety
 * `spec` must be valid, `spec.qualities` must point to `spec.site_count`
 * doubles, and `out` must be a valid pointer.
 */
enum CgStatus cg_simulation_new(const struct CgWorldSpec *spec, struct CgSimulation **out);

/**
 * Advances at most `ticks` ticks, stopping early once the trial finishes.
 *
 * # Safety
 * `sim` must come from `cg_simulation_new`; `out` may be NULL.
 */
enum CgStatus cg_simulation_step(struct CgSimulation *sim,
                                 uint64_t ticks,
                                 struct CgRunSummary *out);

/**
 * Runs until quorum or the tick budget.
 *
 * # Safety
 * `sim` must come from `cg_simulation_new`; `out` may be NULL.
 */
enum CgStatus cg_simulation_run(struct CgSimulation *sim, struct CgRunSummary *out);

/**
 * Agent counts per state, written to `out[7]` in `CgAgentState` order.
 *
 * # Safety
 * `sim` must be valid and `out` must point to 7 writable `size_t`.
 */
enum CgStatus cg_simulation_state_counts(const struct CgSimulation *sim, size_t *out);

/**
 * Canonical float tensor of the current colony (40 values for up to 10
 * agents). `written` receives the length; `CG_STATUS_BUFFER_TOO_SMALL`
 * reports it without writing when `capacity` is short.
 *
 * # Safety
 * `sim` must be valid, `out` must point to `capacity` doubles and `written`
 * to a `size_t`.
 */
enum CgStatus cg_simulation_tensor(const struct CgSimulation *sim,
                                   double *out,
                                   size_t capacity,
                                   size_t *written);

/**
 * # Safety
 * `sim` must come from `cg_simulation_new` and not be used afterwards.
 */
void cg_simulation_free(struct CgSimulation *sim);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CgStatus cg_graph_load(const char *path, struct CgGraph **out);

/**
 * # Safety
 * `graph` must be valid and `path` a NUL-terminated string.
 */
enum CgStatus cg_graph_save(const struct CgGraph *graph, const char *path);

/**
 * # Safety
 * `graph` must be valid; `nodes` and `edges` may be NULL.
 */
enum CgStatus cg_graph_counts(const struct CgGraph *graph, size_t *nodes, size_t *edges);

/**
 * Key of the `index`-th node in ascending key order, the row order of
 * `cg_model_embed`. Free the result with `cg_string_free`.
 *
 * # Safety
 * `graph` must be valid and `out` a valid pointer.
 */
enum CgStatus cg_graph_node_key(const struct CgGraph *graph, size_t index, char **out);

/**
 * # Safety
 * `graph` must be valid and `out` a valid pointer.
 */
enum CgStatus cg_graph_largest_component(const struct CgGraph *graph, struct CgGraph **out);

/**
 * # Safety
 * `graph` must come from this library and not be used afterwards.
 */
void cg_graph_free(struct CgGraph *graph);

/**
 * Freshly initialized encoder.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CgStatus cg_model_new(uint64_t seed, struct CgModel **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CgStatus cg_model_load(const char *path, struct CgModel **out);

/**
 * # Safety
 * `model` must be valid and `path` a NUL-terminated string.
 */
enum CgStatus cg_model_save(const struct CgModel *model, const char *path);

/**
 * Embeds every node of `graph` into `out` as row-major `rows x 3` doubles in
 * ascending key order. `rows` receives the node count; a short `capacity`
 * (in doubles) yields `CG_STATUS_BUFFER_TOO_SMALL` without writing.
 *
 * # Safety
 * `model` and `graph` must be valid, `out` must point to `capacity` doubles
 * and `rows` to a `size_t`.
 */
enum CgStatus cg_model_embed(const struct CgModel *model,
                             const struct CgGraph *graph,
                             double *out,
                             size_t capacity,
                             size_t *rows);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void cg_model_free(struct CgModel *model);

/**
 * Runs a campaign described as JSON (the `campaign.json` layout, e.g.
 * `{"preset":"experiment1","trials":20}`) into `out_dir`. On success
 * `report_json`, if not NULL, receives a summary to free with
 * `cg_string_free`.
 *
 * # Safety
 * `campaign_json` and `out_dir` must be NUL-terminated strings;
 * `report_json` may be NULL.
 */
enum CgStatus cg_run_campaign(const char *campaign_json,
                              const char *out_dir,
                              size_t workers,
                              char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLONYGRAPH_H */
