#ifndef SCD_SCD_H
#define SCD_SCD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SCD_API __declspec(dllexport)
#else
#define SCD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scd_status {
  SCD_OK = 0,
  SCD_ERR_INVALID_ARGUMENT = 1,
  SCD_ERR_DIMENSION = 2,
  SCD_ERR_CONTRACT = 3,
  SCD_ERR_CONFIG = 4,
  SCD_ERR_DATA = 5,
  SCD_ERR_UNDEFINED_METRIC = 6,
  SCD_ERR_NUMERIC = 7,
  SCD_ERR_INTERNAL = 8
} scd_status;

typedef struct scd_config scd_config;
typedef struct scd_network scd_network;
/* A JSON document produced by an operation, optionally with a CSV rendering. */
typedef struct scd_report scd_report;

SCD_API const char* scd_version(void);
SCD_API const char* scd_status_name(scd_status status);
/* Message of the most recent failure on the calling thread; never NULL. */
SCD_API const char* scd_last_error(void);

/* ---- configuration ---------------------------------------------------- */

SCD_API scd_status scd_config_create(scd_config** out);
SCD_API scd_status scd_config_load(const char* path, scd_config** out);
SCD_API scd_status scd_config_set(scd_config* config, const char* key, const char* value);
SCD_API void scd_config_destroy(scd_config* config);
/* Rejects keys outside the known set. */
SCD_API scd_status scd_config_check(const scd_config* config);
/* Copies `classes` from the dataset's metadata file when the config leaves
   it unset. */
SCD_API scd_status scd_config_adopt_dataset(scd_config* config, const char* data_dir);

SCD_API size_t scd_config_key_count(void);
SCD_API scd_status scd_config_key(size_t index, const char** key, const char** default_value,
                                  const char** description);

/* ---- data --------------------------------------------------------------- */

/* Writes synth.count synthetic pairs plus metadata under `dir`. */
SCD_API scd_status scd_generate(const scd_config* config, const char* dir);
/* Checks every sample's files and invariants. Report keys: samples, pixels,
   changed_fraction, errors, warnings, ok. Returns SCD_ERR_DATA (with the
   report still produced) when errors were found. */
SCD_API scd_status scd_validate(const scd_config* config, const char* data_dir, scd_report** out);

/* ---- networks ----------------------------------------------------------- */

SCD_API scd_status scd_network_create(const scd_config* config, scd_network** out);
SCD_API void scd_network_destroy(scd_network* net);
SCD_API scd_status scd_network_save(const scd_network* net, const char* path);
SCD_API scd_status scd_network_load(scd_network* net, const char* path);
SCD_API scd_status scd_network_family(const scd_network* net, const char** name);
SCD_API scd_status scd_network_params(const scd_network* net, uint64_t* count);
SCD_API scd_status scd_network_flops(const scd_network* net, size_t height, size_t width, uint64_t* flops);

/* ---- training ------------------------------------------------------------ */

typedef struct scd_epoch_info {
  size_t epoch;
  size_t steps;
  double lr;
  double l_sem1;
  double l_sem2;
  double l_change;
  double l_sc;
  double l_total;
} scd_epoch_info;

typedef void (*scd_epoch_callback)(const scd_epoch_info* info, void* user);

/* Trains in place on the dataset under `data_dir`. Report keys: steps,
   step_losses, epochs. CSV rendering: one `step,l_total` row per step. */
SCD_API scd_status scd_train(scd_network* net, const scd_config* config, const char* data_dir,
                             scd_epoch_callback callback, void* user, scd_report** out);

/* ---- evaluation ------------------------------------------------------------ */

/* Metrics of the network on `data_dir`; predictions are written to
   `prediction_dir` when it is not NULL. */
SCD_API scd_status scd_evaluate(const scd_network* net, const scd_config* config, const char* data_dir,
                                const char* prediction_dir, scd_report** out);
/* Metrics of the label maps in `pred_dir` against `truth_dir`. */
SCD_API scd_status scd_evaluate_dirs(const scd_config* config, const char* pred_dir, const char* truth_dir,
                                     scd_report** out);

/* All five families built from `config`: parameters, FLOPs at
   synth.height x synth.width and, when `data_dir` is set, metrics after
   training each family on it. CSV rendering: header plus one row per family. */
SCD_API scd_status scd_compare(const scd_config* config, const char* data_dir, scd_report** out);

typedef void (*scd_grad_callback)(const char* component, double max_rel_error, size_t elements, void* user);

/* Runs the gradient suite; `max_rel_error` receives the largest error over
   all components. */
SCD_API scd_status scd_gradcheck(uint64_t seed, scd_grad_callback callback, void* user, double* max_rel_error);
SCD_API double scd_gradcheck_tolerance(void);

/* ---- reports ---------------------------------------------------------------- */

/* Pretty-printed JSON, valid until the report is destroyed. */
SCD_API scd_status scd_report_json(const scd_report* report, const char** json);
SCD_API scd_status scd_report_csv(const scd_report* report, const char** csv);
/* Number at a JSON pointer such as "/sek" or "/per_temporal/t1/miou".
   SCD_ERR_UNDEFINED_METRIC when the value is null. */
SCD_API scd_status scd_report_number(const scd_report* report, const char* pointer, double* value);
SCD_API scd_status scd_report_save(const scd_report* report, const char* path);
SCD_API void scd_report_destroy(scd_report* report);

#ifdef __cplusplus
}
#endif

#endif /* SCD_SCD_H */
