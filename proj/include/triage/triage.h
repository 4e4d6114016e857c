/* C interface to the triage engine.
 *
 * Every function returns a triage_status. On failure a message (and, for
 * record errors, the offending field) is available from triage_last_error()
 * on the same thread until the next call. Strings returned through char**
 * are owned by the caller and released with triage_string_free(). */
#ifndef TRIAGE_TRIAGE_H
#define TRIAGE_TRIAGE_H

#include <stddef.h>
#include <stdint.h>

#if defined(TRIAGE_BUILDING_LIBRARY)
#define TRIAGE_API __attribute__((visibility("default")))
#else
#define TRIAGE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum triage_status {
  TRIAGE_OK = 0,
  TRIAGE_ERR_RANGE,
  TRIAGE_ERR_DATA,
  TRIAGE_ERR_INTEGRATION,
  TRIAGE_ERR_INSUFFICIENT_DATA,
  TRIAGE_ERR_REPAIR,
  TRIAGE_ERR_FIT,
  TRIAGE_ERR_SHAPE,
  TRIAGE_ERR_PARSE,
  TRIAGE_ERR_VERSION,
  TRIAGE_ERR_CONFIG,
  TRIAGE_ERR_EVALUATION,
  TRIAGE_ERR_SEARCH,
  TRIAGE_ERR_SPLIT,
  TRIAGE_ERR_SELECTION,
  TRIAGE_ERR_IO,
  TRIAGE_ERR_MODEL_LOAD,
  TRIAGE_ERR_USAGE,
  TRIAGE_ERR_ARGUMENT, /* null handle or bad index */
  TRIAGE_ERR_INTERNAL
} triage_status;

/* Complications in fixed report order. */
enum {
  TRIAGE_CARDIOVASCULAR = 0,
  TRIAGE_RESPIRATORY,
  TRIAGE_NEUROLOGICAL,
  TRIAGE_PSYCHIATRIC,
  TRIAGE_ABDOMINAL,
  TRIAGE_METABOLIC,
  TRIAGE_COMPLICATION_COUNT
};

enum { TRIAGE_FORMAT_TABLE = 0, TRIAGE_FORMAT_CSV = 1 };
enum { TRIAGE_TUNE_NONE = 0, TRIAGE_TUNE_GRID, TRIAGE_TUNE_RANDOM, TRIAGE_TUNE_HALVING };

typedef struct triage_engine triage_engine;
typedef struct triage_cases triage_cases;
typedef struct triage_report triage_report;
typedef struct triage_server triage_server;

TRIAGE_API const char* triage_last_error(void);
TRIAGE_API const char* triage_last_error_field(void);
TRIAGE_API const char* triage_status_name(triage_status status);
TRIAGE_API void triage_string_free(char* s);

TRIAGE_API int triage_schema_version(void);
/* "Cardiovascular", ...; NULL for an invalid index. */
TRIAGE_API const char* triage_complication_name(int complication);
/* "cardiovascular", ... */
TRIAGE_API const char* triage_complication_key(int complication);

/* ---- synthetic data ---------------------------------------------------- */

/* Writes a labeled dataset CSV from the default generator. */
TRIAGE_API triage_status triage_generate_csv(uint64_t seed, size_t n_records, size_t noise_features,
                                             const char* path);

/* ---- training ---------------------------------------------------------- */

typedef void (*triage_progress_fn)(const char* line, void* user);

typedef struct triage_train_options {
  uint64_t seed;
  size_t k_folds;
  int feature_selection; /* nonzero: RFECV */
  size_t rfecv_step;
  int tuning; /* TRIAGE_TUNE_* */
  size_t budget;
  triage_progress_fn progress; /* may be NULL */
  void* progress_user;
} triage_train_options;

TRIAGE_API void triage_train_options_init(triage_train_options* options);

/* Trains on the default generator (n records, data_seed) and writes bundles,
 * manifest and metrics.txt into out_dir. metrics_table may be NULL. */
TRIAGE_API triage_status triage_train_synthetic(uint64_t data_seed, size_t n_records,
                                                const triage_train_options* options, const char* out_dir,
                                                char** metrics_table);
/* Same from a labeled dataset CSV. */
TRIAGE_API triage_status triage_train_dataset(const char* dataset_csv, const triage_train_options* options,
                                              const char* out_dir, char** metrics_table);

/* ---- prediction -------------------------------------------------------- */

TRIAGE_API triage_status triage_engine_load(const char* model_dir, triage_engine** out);
TRIAGE_API void triage_engine_free(triage_engine* engine);

/* Held-out style metrics of the loaded models on a labeled dataset CSV. */
TRIAGE_API triage_status triage_engine_evaluate(const triage_engine* engine, const char* dataset_csv,
                                                char** metrics_table);

TRIAGE_API triage_status triage_cases_load_csv(const char* path, triage_cases** out);
TRIAGE_API triage_status triage_cases_bundled(triage_cases** out);
TRIAGE_API size_t triage_cases_count(const triage_cases* cases);
/* NULL for an out-of-range index. */
TRIAGE_API const char* triage_cases_id(const triage_cases* cases, size_t index);
TRIAGE_API void triage_cases_free(triage_cases* cases);
/* Writes the cases as a test-case CSV. */
TRIAGE_API triage_status triage_cases_write_csv(const triage_cases* cases, const char* path);

/* deviation_percent is ignored unless apply_deviation is nonzero; the
 * deviation rescales all continuous vitals. */
TRIAGE_API triage_status triage_predict_case(const triage_engine* engine, const triage_cases* cases, size_t index,
                                             int apply_deviation, double deviation_percent, triage_report** out);
/* Record given as a JSON object with the canonical field names. */
TRIAGE_API triage_status triage_predict_json(const triage_engine* engine, const char* record_json,
                                             int apply_deviation, double deviation_percent, triage_report** out);

TRIAGE_API int triage_report_has_modified(const triage_report* report);
/* modified selects the what-if report. Percentages are in [0,100]. */
TRIAGE_API triage_status triage_report_probability(const triage_report* report, int modified, int complication,
                                                   double* gbt_pct, double* ann_pct);
/* rank is 0-based; writes the complication index. */
TRIAGE_API triage_status triage_report_ranked(const triage_report* report, int modified, size_t rank,
                                              int* complication);
/* title may be NULL. */
TRIAGE_API triage_status triage_report_render(const triage_report* report, int format, const char* title,
                                              char** out);
TRIAGE_API void triage_report_free(triage_report* report);

/* ---- HTTP service ------------------------------------------------------ */

TRIAGE_API triage_status triage_server_create(const char* model_dir, triage_server** out);
/* Loads (or reloads) the models synchronously. */
TRIAGE_API triage_status triage_server_load(triage_server* server);
/* Loads the models on a background thread. */
TRIAGE_API triage_status triage_server_load_async(triage_server* server);
TRIAGE_API int triage_server_ready(const triage_server* server);
/* Handles one request without a socket. */
TRIAGE_API triage_status triage_server_handle(const triage_server* server, const char* method, const char* path,
                                              const char* body, int* http_status, char** response_body);
/* Blocks until triage_server_stop(). */
TRIAGE_API triage_status triage_server_listen(triage_server* server, const char* host, int port);
/* Serves on an ephemeral port from a background thread. */
TRIAGE_API triage_status triage_server_start(triage_server* server, const char* host, int* port);
TRIAGE_API void triage_server_stop(triage_server* server);
TRIAGE_API void triage_server_free(triage_server* server);

#ifdef __cplusplus
}
#endif

#endif /* TRIAGE_TRIAGE_H */
