#ifndef SCBF_H
#define SCBF_H

/* Generated with cbindgen:0.26.0 */

/* Generated by cbindgen from the scbf-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Safety-filter verdict, mirroring the library's `QpStatus`.
typedef enum ScbfQpStatus {
  // No barrier was in force; the input passed through untouched.
  SCBF_QP_STATUS_UNCONSTRAINED = 0,
  // The barrier constraint was satisfied by the desired input.
  SCBF_QP_STATUS_INACTIVE = 1,
  // The input was projected onto the constraint boundary.
  SCBF_QP_STATUS_ACTIVE = 2,
  // No admissible input satisfies the constraint; the returned input
  // is zero (stop).
  SCBF_QP_STATUS_INFEASIBLE = 3,
} ScbfQpStatus;

// How a simulation run ended.
typedef enum ScbfRunOutcome {
  SCBF_RUN_OUTCOME_GOAL_REACHED = 0,
  SCBF_RUN_OUTCOME_COLLISION = 1,
  SCBF_RUN_OUTCOME_STUCK = 2,
  SCBF_RUN_OUTCOME_HORIZON_EXHAUSTED = 3,
} ScbfRunOutcome;

// Status code returned by every fallible function of this ABI.
typedef enum ScbfStatus {
  SCBF_STATUS_OK = 0,
  // A required pointer argument was null.
  SCBF_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  SCBF_STATUS_INVALID_UTF8 = 2,
  // Dimensions, ranges, or values outside the documented domain.
  SCBF_STATUS_INVALID_ARGUMENT = 3,
  // A description file failed to parse or validate.
  SCBF_STATUS_PARSE_ERROR = 4,
  // The file system refused a read or write.
  SCBF_STATUS_IO_ERROR = 5,
  // No certified invariant set exists at the requested state.
  SCBF_STATUS_NO_CERTIFIED_SET = 6,
  // Every sampled configuration was unobstructed; there is nothing to
  // certify against (treat the state as unconstrained).
  SCBF_STATUS_NO_SCENARIOS = 7,
  // The numerical kernel failed (eigensolver or SDP breakdown).
  SCBF_STATUS_NUMERICAL_ERROR = 8,
  // An internal panic was caught at the boundary.
  SCBF_STATUS_PANIC = 9,
} ScbfStatus;

// A synthesized barrier certificate: the quadratic barrier plus the ball,
// batch size, and risk bound it was certified with (opaque).
typedef struct ScbfCbf ScbfCbf;

// An n-joint kinematic chain with collision geometry (opaque).
typedef struct ScbfRobot ScbfRobot;

// A set of convex obstacles, fixed or on motion schedules (opaque).
typedef struct ScbfScene ScbfScene;

// Synthesis knobs. Zero-initialize and overwrite, or start from
// [`scbf_synth_config_default`]. `n_samples = 0` sizes the batch from the
// certificate dimension at risk 0.1.
typedef struct ScbfSynthConfig {
  // Control period the reachable ball is sized for, seconds.
  double dt;
  // Scenario batch size; 0 picks the default.
  size_t n_samples;
  uint64_t seed;
  // Class-K gain of the decrease rows (used only with a candidate).
  double alpha;
  // Confidence parameter of the risk bound.
  double beta;
  // Count support constraints exactly (slower, tighter risk).
  bool count_support;
} ScbfSynthConfig;

// Provenance and risk figures of a certificate.
typedef struct ScbfCertificateInfo {
  // Barrier value at its center (the certified apex).
  double d_b;
  // Radius of the reachable ball the barrier is contained in, radians.
  double ball_radius;
  // Control period the ball was sized for, seconds.
  double dt;
  // Scenario batch size behind the certificate.
  size_t n_samples;
  // Complexity the risk bound was evaluated at.
  size_t c_star;
  // Certified upper bound on the violation probability.
  double eps_hi;
  // Confidence parameter backing `eps_hi`.
  double beta;
} ScbfCertificateInfo;

// Simulation knobs; see [`scbf_sim_config_default`]. `n_samples = 0`
// picks the default batch size.
typedef struct ScbfSimConfig {
  // Control period, seconds.
  double dt;
  // Step budget before the run is cut off.
  size_t horizon;
  // Scenario batch size per step; 0 picks the default.
  size_t n_samples;
  uint64_t seed;
  // Class-K gain of the synthesis decrease rows.
  double alpha;
  // Barrier-rate gain of the safety filter, 1/s (`lambda·dt ≤ 1`).
  double lambda;
  // Confidence parameter of the per-step risk certificates.
  double beta;
  // Count support constraints exactly (slower, tighter risk).
  bool count_support;
} ScbfSimConfig;

// End-of-run digest of [`scbf_simulate`].
typedef struct ScbfRunSummary {
  enum ScbfRunOutcome outcome;
  // Executed steps (= trace rows).
  size_t steps;
  // Minimum overall signed distance across the run, meters.
  double min_sd_ov;
  // Smallest certified apex seen; NaN if no step was certified.
  double min_d_b;
  // Waypoints passed, counting the goal.
  size_t waypoints_reached;
  double wall_ms;
  // Total synthesis wall-clock across steps, ms.
  double synth_ms_total;
} ScbfRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Byte length (excluding the terminator) of the calling thread's last
// error message; 0 when there is none.
size_t scbf_last_error_length(void);

// Copies the calling thread's last error message into `buf` (at most
// `cap − 1` bytes plus a NUL terminator) and returns the number of bytes
// written, excluding the terminator. Returns 0 when there is no message,
// `buf` is null, or `cap` is 0.
//
// # Safety
// `buf` must point to at least `cap` writable bytes.
size_t scbf_last_error_message(char *buf, size_t cap);

// The library version as a static NUL-terminated string.
const char *scbf_version(void);

// The description-file format revision this build reads and writes.
uint32_t scbf_format_version(void);

// Parses a robot description from JSON text into a new handle.
//
// # Safety
// `json` must be a valid NUL-terminated string; `out` must be a valid
// pointer. The returned handle must be released with [`scbf_robot_free`].
enum ScbfStatus scbf_robot_parse(const char *json, struct ScbfRobot **out);

// Loads a robot description file into a new handle.
//
// # Safety
// `path` must be a valid NUL-terminated string; `out` must be a valid
// pointer. The returned handle must be released with [`scbf_robot_free`].
enum ScbfStatus scbf_robot_load(const char *path, struct ScbfRobot **out);

// Releases a robot handle; null is a no-op.
//
// # Safety
// `robot` must be null or a pointer returned by `scbf_robot_parse`/
// `scbf_robot_load` that has not been freed.
void scbf_robot_free(struct ScbfRobot *robot);

// Joint count of the chain; 0 when `robot` is null.
//
// # Safety
// `robot` must be null or a live robot handle.
size_t scbf_robot_dof(const struct ScbfRobot *robot);

// Copies the per-joint speed bounds (rad/s) into `out`, which must hold
// exactly `len == dof` values.
//
// # Safety
// `robot` must be a live handle; `out` must be valid for `len` writes.
enum ScbfStatus scbf_robot_speed_bounds(const struct ScbfRobot *robot, double *out, size_t len);

// Parses a scene description from JSON text into a new handle.
//
// # Safety
// As in [`scbf_robot_parse`]; release with [`scbf_scene_free`].
enum ScbfStatus scbf_scene_parse(const char *json, struct ScbfScene **out);

// Loads a scene description file into a new handle.
//
// # Safety
// As in [`scbf_robot_load`]; release with [`scbf_scene_free`].
enum ScbfStatus scbf_scene_load(const char *path, struct ScbfScene **out);

// Releases a scene handle; null is a no-op.
//
// # Safety
// `scene` must be null or a live scene handle not yet freed.
void scbf_scene_free(struct ScbfScene *scene);

// Number of obstacles; 0 when `scene` is null.
//
// # Safety
// `scene` must be null or a live scene handle.
size_t scbf_scene_size(const struct ScbfScene *scene);

// Evaluates the overall signed distance (arm-vs-obstacles and
// self-collision, whichever is smaller) at configuration `q` and scene
// time `t`. Writes a large positive sentinel when nothing constrains the
// arm.
//
// # Safety
// `robot` and `scene` must be live handles, `q` valid for `n` reads,
// `out_sd` a valid pointer.
enum ScbfStatus scbf_overall_sd(const struct ScbfRobot *robot,
                                const struct ScbfScene *scene,
                                const double *q,
                                size_t n,
                                double t,
                                double *out_sd);

// The default synthesis configuration: 10 ms period, automatic batch
// size, seed 0.
struct ScbfSynthConfig scbf_synth_config_default(void);

// Synthesizes a barrier certificate at state `q` against the scene.
// On success writes a new certificate handle to `out` (release with
// [`scbf_cbf_free`]). [`ScbfStatus::NoCertifiedSet`] and
// [`ScbfStatus::NoScenarios`] are expected outcomes, not usage errors.
//
// # Safety
// `robot` and `scene` must be live handles, `q` valid for `n` reads,
// `config` null (defaults) or a valid pointer, `out` a valid pointer.
enum ScbfStatus scbf_synthesize(const struct ScbfRobot *robot,
                                const struct ScbfScene *scene,
                                const double *q,
                                size_t n,
                                const struct ScbfSynthConfig *config,
                                struct ScbfCbf **out);

// Loads a certificate file written by [`scbf_cbf_save`] (or the CLI's
// `synth --out`) into a new handle.
//
// # Safety
// `path` must be a valid NUL-terminated string; `out` a valid pointer.
// Release the handle with [`scbf_cbf_free`].
enum ScbfStatus scbf_cbf_load(const char *path, struct ScbfCbf **out);

// Writes a certificate handle to a JSON file.
//
// # Safety
// `cbf` must be a live handle; `path` a valid NUL-terminated string.
enum ScbfStatus scbf_cbf_save(const struct ScbfCbf *cbf, const char *path);

// Releases a certificate handle; null is a no-op.
//
// # Safety
// `cbf` must be null or a live certificate handle not yet freed.
void scbf_cbf_free(struct ScbfCbf *cbf);

// Fills `out` with the certificate's provenance and risk figures.
//
// # Safety
// `cbf` must be a live handle; `out` a valid pointer.
enum ScbfStatus scbf_cbf_info(const struct ScbfCbf *cbf, struct ScbfCertificateInfo *out);

// Evaluates the barrier at `q`: writes `b(q)` to `out_b` and, when
// `out_grad` is non-null, the gradient to `out_grad[0..n]`.
//
// # Safety
// `cbf` must be a live handle, `q` valid for `n` reads, `out_b` a valid
// pointer, and `out_grad` null or valid for `n` writes.
enum ScbfStatus scbf_cbf_value(const struct ScbfCbf *cbf,
                               const double *q,
                               size_t n,
                               double *out_b,
                               double *out_grad);

// Projects a desired velocity onto the barrier constraint
// `∇b(q)ᵀu + lambda·b(q) ≥ 0` intersected with the robot's speed box,
// writing the filtered input to `out_u` and the verdict to `out_status`.
// An infeasible constraint yields zero input and
// [`ScbfQpStatus::Infeasible`] — with status [`ScbfStatus::Ok`], since
// infeasibility is an outcome, not a usage error.
//
// # Safety
// `robot` and `cbf` must be live handles; `q` and `u_des` valid for `n`
// reads; `out_u` valid for `n` writes; `out_status` a valid pointer.
enum ScbfStatus scbf_filter_input(const struct ScbfRobot *robot,
                                  const struct ScbfCbf *cbf,
                                  const double *q,
                                  const double *u_des,
                                  size_t n,
                                  double lambda,
                                  double *out_u,
                                  enum ScbfQpStatus *out_status);

// Largest `s ∈ [0, 1]` such that applying `s·u` for one period `dt`
// keeps the one-step barrier decrease within `lambda`: the braking
// stage applied after the filter.
//
// # Safety
// `cbf` must be a live handle; `q` and `u` valid for `n` reads;
// `out_scale` a valid pointer.
enum ScbfStatus scbf_decrease_scale(const struct ScbfCbf *cbf,
                                    const double *q,
                                    const double *u,
                                    size_t n,
                                    double lambda,
                                    double dt,
                                    double *out_scale);

// The default simulation configuration: 10 ms period, 20 000-step
// horizon, automatic batch size, `lambda·dt = 0.5`.
struct ScbfSimConfig scbf_sim_config_default(void);

// Runs the closed loop over robot/scene/plan description files, writes
// the trace CSV when `trace_path` is non-null, and fills `out` with the
// run digest. Collision, stuck, and horizon endings are reported in
// `out.outcome` with status [`ScbfStatus::Ok`].
//
// # Safety
// The three path arguments must be valid NUL-terminated strings;
// `config` must be null (defaults) or valid; `trace_path` null or a
// valid string; `out` a valid pointer.
enum ScbfStatus scbf_simulate(const char *robot_path,
                              const char *scene_path,
                              const char *plan_path,
                              const struct ScbfSimConfig *config,
                              const char *trace_path,
                              struct ScbfRunSummary *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SCBF_H */
