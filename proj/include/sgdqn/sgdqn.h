#ifndef SGDQN_SGDQN_H
#define SGDQN_SGDQN_H

/* C interface to the crowd-navigation library. Every call returns a status;
   on failure sgdqn_last_error() holds a message for the calling thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SGDQN_API __declspec(dllexport)
#else
#define SGDQN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgdqn_status {
  SGDQN_OK = 0,
  SGDQN_ERR_INVALID_ARGUMENT = 1,
  SGDQN_ERR_INVALID_STATE = 2,
  SGDQN_ERR_IO = 3,
  SGDQN_ERR_FORMAT = 4,
  SGDQN_ERR_SHAPE = 5,
  SGDQN_ERR_BUFFER_TOO_SMALL = 6,
  SGDQN_ERR_INTERNAL = 7
} sgdqn_status;

SGDQN_API const char* sgdqn_version(void);
SGDQN_API const char* sgdqn_status_string(sgdqn_status status);
/* Valid until the next failing call on the same thread. */
SGDQN_API const char* sgdqn_last_error(void);

/* ---- configuration ---- */

typedef struct sgdqn_config sgdqn_config;

/* Starts from the built-in defaults. */
SGDQN_API sgdqn_status sgdqn_config_create(sgdqn_config** out);
SGDQN_API void sgdqn_config_destroy(sgdqn_config* config);
/* Applies an INI file on top of the current values. */
SGDQN_API sgdqn_status sgdqn_config_load(sgdqn_config* config, const char* path);
/* key is "section.name", e.g. "train.episodes". */
SGDQN_API sgdqn_status sgdqn_config_set(sgdqn_config* config, const char* key, const char* value);
SGDQN_API sgdqn_status sgdqn_config_validate(const sgdqn_config* config);
/* String outputs: writes at most `capacity` bytes including the NUL and
   stores the full length (without NUL) in *length when non-null. */
SGDQN_API sgdqn_status sgdqn_config_get(const sgdqn_config* config, const char* key, char* buffer,
                                        size_t capacity, size_t* length);
SGDQN_API sgdqn_status sgdqn_config_format(const sgdqn_config* config, char* buffer, size_t capacity,
                                           size_t* length);
/* Number of keys and the i-th key name (static storage). */
SGDQN_API size_t sgdqn_config_key_count(void);
SGDQN_API const char* sgdqn_config_key(size_t index);

/* ---- commands; artifacts land in run.output_dir ---- */

typedef void (*sgdqn_progress_fn)(const char* line, void* user);

typedef struct sgdqn_train_result {
  size_t episodes;
  int has_validation;
  double last_success;
  double last_collision;
  /* Episode of the validation whose parameters were saved; 0 means the
     parameters after the last episode. */
  size_t selected_episode;
  double selected_success;
  char checkpoint_hash[17];
} sgdqn_train_result;

SGDQN_API sgdqn_status sgdqn_train(const sgdqn_config* config, sgdqn_progress_fn progress, void* user,
                                   sgdqn_train_result* out);

typedef struct sgdqn_metrics {
  size_t cases;
  double success;
  double collision;
  double timeout;
  double nav_time; /* NaN when nothing succeeded */
  double disc_rate;
  double avg_return;
  double run_time_ms;
} sgdqn_metrics;

/* checkpoint may be NULL for the orca policy. */
SGDQN_API sgdqn_status sgdqn_evaluate(const sgdqn_config* config, const char* checkpoint, int export_trajectories,
                                      int export_attention, sgdqn_metrics* out);

SGDQN_API sgdqn_status sgdqn_export_trajectory(const sgdqn_config* config, const char* checkpoint,
                                               size_t case_index, const char* out_path, size_t* rows);
SGDQN_API sgdqn_status sgdqn_inspect_attention(const sgdqn_config* config, const char* checkpoint,
                                               size_t case_index, size_t step, const char* out_path,
                                               size_t* rows);

typedef struct sgdqn_predictor_result {
  size_t train_samples;
  size_t heldout_samples;
  double untrained_ade;
  double heldout_ade;
  double constant_velocity_ade;
} sgdqn_predictor_result;

SGDQN_API sgdqn_status sgdqn_predict_train(const sgdqn_config* config, sgdqn_progress_fn progress, void* user,
                                           sgdqn_predictor_result* out);

/* ---- policies ---- */

typedef struct sgdqn_policy sgdqn_policy;

/* Uses eval.policy and the planner settings of `config`. */
SGDQN_API sgdqn_status sgdqn_policy_create(const sgdqn_config* config, const char* checkpoint, sgdqn_policy** out);
SGDQN_API void sgdqn_policy_destroy(sgdqn_policy* policy);
/* World-frame observation. robot: px py vx vy radius gx gy v_pref heading.
   pedestrians: count rows of px py vx vy radius. Writes an index in [0, 81). */
SGDQN_API sgdqn_status sgdqn_policy_decide(sgdqn_policy* policy, const double robot[9], const double* pedestrians,
                                           size_t count, size_t* action);
/* Speed and heading (robot-centric, radians) of an action index. */
SGDQN_API sgdqn_status sgdqn_action_info(size_t action, double preferred_speed, double* speed, double* heading);

#ifdef __cplusplus
}
#endif

#endif
