#ifndef HKCS_HKCS_H
#define HKCS_HKCS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HKCS_API __declspec(dllexport)
#else
#define HKCS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status values double as process exit codes. */
typedef enum {
  HKCS_OK = 0,
  HKCS_INVALID_ARGUMENT = 1,
  HKCS_CONFIG_ERROR = 2,
  HKCS_RUNTIME_ERROR = 3,
  HKCS_CHECK_FAILED = 4
} hkcs_status;

typedef struct hkcs_scenario hkcs_scenario;
typedef struct hkcs_trajectory hkcs_trajectory;
typedef struct hkcs_report hkcs_report;

typedef struct {
  int check_hypotheses; /* reject configs whose convergence hypotheses fail */
  int override_seed;
  uint64_t seed;
  int override_tolerance;
  double tolerance;
} hkcs_options;

typedef struct {
  const char* id;
  const char* description;
  const char* status; /* "pass", "fail" or "skipped" */
  double margin;      /* NaN when the check was skipped */
  double tolerance;
  const char* note;   /* empty when absent */
} hkcs_check;

HKCS_API const char* hkcs_version(void);

/* Message and kind of the last failure on the calling thread. */
HKCS_API const char* hkcs_last_error(void);
HKCS_API const char* hkcs_last_error_kind(void);

/* Strings handed out through char** parameters. */
HKCS_API void hkcs_string_free(char* s);

HKCS_API hkcs_status hkcs_scenario_load(const char* path, const hkcs_options* options, hkcs_scenario** out);
HKCS_API hkcs_status hkcs_scenario_parse(const char* json, const hkcs_options* options, hkcs_scenario** out);
HKCS_API void hkcs_scenario_free(hkcs_scenario* s);
HKCS_API size_t hkcs_scenario_warning_count(const hkcs_scenario* s);
HKCS_API const char* hkcs_scenario_warning(const hkcs_scenario* s, size_t i);
HKCS_API const char* hkcs_scenario_hash(const hkcs_scenario* s);
HKCS_API int hkcs_scenario_order(const hkcs_scenario* s);
HKCS_API hkcs_status hkcs_scenario_interval_length(const hkcs_scenario* s, double* out);

HKCS_API hkcs_status hkcs_simulate(const hkcs_scenario* s, hkcs_trajectory** out);
HKCS_API hkcs_status hkcs_trajectory_read(const hkcs_scenario* s, const char* path, hkcs_trajectory** out);
HKCS_API hkcs_status hkcs_trajectory_write(const hkcs_trajectory* t, const char* path);
HKCS_API void hkcs_trajectory_free(hkcs_trajectory* t);
HKCS_API size_t hkcs_trajectory_node_count(const hkcs_trajectory* t);
HKCS_API double hkcs_trajectory_horizon(const hkcs_trajectory* t);
/* velocity_diameter may be NULL; it receives NaN for first-order runs. */
HKCS_API hkcs_status hkcs_trajectory_diameter(const hkcs_trajectory* t, double time, double* position_diameter,
                                              double* velocity_diameter);

HKCS_API hkcs_status hkcs_verify(const hkcs_scenario* s, const hkcs_trajectory* t, hkcs_report** out);
HKCS_API int hkcs_report_passed(const hkcs_report* r);
HKCS_API int hkcs_report_degenerate(const hkcs_report* r);
HKCS_API size_t hkcs_report_check_count(const hkcs_report* r);
HKCS_API hkcs_status hkcs_report_check(const hkcs_report* r, size_t i, hkcs_check* out);
HKCS_API hkcs_status hkcs_report_write(const hkcs_report* r, const char* path);
HKCS_API void hkcs_report_free(hkcs_report* r);

/* Text-producing commands. The text is returned even with HKCS_CHECK_FAILED. */
HKCS_API hkcs_status hkcs_bounds(const hkcs_scenario* s, const hkcs_trajectory* t, char** text);
HKCS_API hkcs_status hkcs_run_bundle(const hkcs_scenario* s, const char* dir, int verify, char** summary);
HKCS_API hkcs_status hkcs_sweep(const hkcs_scenario* s, const char* grid, const char* dir, unsigned threads,
                                char** csv);
HKCS_API hkcs_status hkcs_bundle_summary(const char* dir, char** text);

#ifdef __cplusplus
}
#endif

#endif
