#ifndef SOSGAP_H
#define SOSGAP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(SOSGAP_BUILDING)
#define SOSGAP_API __attribute__((visibility("default")))
#else
#define SOSGAP_API
#endif

typedef enum sosgap_status {
    SOSGAP_OK = 0,
    SOSGAP_ERR_INPUT = 1,
    SOSGAP_ERR_CONFIG = 2,
    SOSGAP_ERR_BUDGET = 3,
    SOSGAP_ERR_LOCALITY = 4,
    SOSGAP_ERR_CONTRADICTION = 5,
    SOSGAP_ERR_UNDEFINED = 6,
    SOSGAP_ERR_UNSUPPORTED = 7,
    SOSGAP_ERR_INVARIANT = 8,
    SOSGAP_ERR_INTERNAL = 9
} sosgap_status;

typedef struct sosgap_config sosgap_config;
typedef struct sosgap_report sosgap_report;

SOSGAP_API const char * sosgap_version(void);
SOSGAP_API const char * sosgap_status_name(sosgap_status status);
/* Message of the last failing call on this thread; never NULL. */
SOSGAP_API const char * sosgap_last_error(void);
/* Frees strings returned through char ** out-parameters. */
SOSGAP_API void sosgap_free(char * text);

/* predicate: a name such as "parity3" or a JSON predicate object. */
SOSGAP_API sosgap_status sosgap_predicate_report(const char * predicate, char ** out_json);
SOSGAP_API sosgap_status sosgap_generate(const char * predicate, int n, int m, uint64_t seed, int allow_repeats, char ** out_json);

SOSGAP_API sosgap_status sosgap_config_from_json(const char * json, sosgap_config ** out);
SOSGAP_API sosgap_status sosgap_config_to_json(const sosgap_config * config, char ** out_json);
SOSGAP_API void sosgap_config_destroy(sosgap_config * config);

/* Validates the config (SOSGAP_ERR_CONFIG on failure) and runs every seed. */
SOSGAP_API sosgap_status sosgap_run(const sosgap_config * config, sosgap_report ** out);
/* 0 when no counted check failed, 1 otherwise. */
SOSGAP_API int sosgap_report_exit_code(const sosgap_report * report);
SOSGAP_API size_t sosgap_report_seed_count(const sosgap_report * report);
/* Outcome name ("pass", "fail", "skipped", "error") of the i-th seed record, or NULL. */
SOSGAP_API const char * sosgap_report_seed_status(const sosgap_report * report, size_t index);
/* indent < 0 gives compact output. */
SOSGAP_API sosgap_status sosgap_report_json(const sosgap_report * report, int indent, char ** out_json);
SOSGAP_API void sosgap_report_destroy(sosgap_report * report);

SOSGAP_API sosgap_status sosgap_sweep_csv(const sosgap_config * config, char ** out_csv);

SOSGAP_API int sosgap_worker_count(void);

#ifdef __cplusplus
}
#endif

#endif
