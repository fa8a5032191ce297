/* C interface of the odcast forecasting engine. */
#ifndef ODCAST_ODCAST_H
#define ODCAST_ODCAST_H

#include <stddef.h>

#if defined(_WIN32)
#define ODCAST_API __declspec(dllexport)
#else
#define ODCAST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum odcast_status {
	ODCAST_OK = 0,
	ODCAST_E_INVALID_ARGUMENT = 1,
	ODCAST_E_IO = 2,
	ODCAST_E_PARSE = 3,
	ODCAST_E_NOT_FOUND = 4,
	ODCAST_E_INSUFFICIENT_HISTORY = 5,
	ODCAST_E_SHAPE = 6,
	ODCAST_E_NUMERIC = 7,
	ODCAST_E_CONFIG = 8,
	ODCAST_E_INTERNAL = 9
} odcast_status;

/* Opaque run configuration. */
typedef struct odcast_config odcast_config;
/* Opaque result of a completed backtest. */
typedef struct odcast_run odcast_run;

/* Receives progress lines during a backtest. */
typedef void (*odcast_log_fn)(const char* line, void* user);

ODCAST_API const char* odcast_version(void);

/* Message of the last failed call on this thread ("" if none). */
ODCAST_API const char* odcast_last_error(void);

ODCAST_API const char* odcast_status_name(odcast_status status);

/* Configs: parsed from a JSON file or text, or the built-in default. */
ODCAST_API odcast_status odcast_config_load(const char* path, odcast_config** out);
ODCAST_API odcast_status odcast_config_parse(const char* json_text, odcast_config** out);
ODCAST_API odcast_status odcast_config_default(odcast_config** out);
ODCAST_API void odcast_config_free(odcast_config* config);

/* Resolved config as JSON. Free the string with odcast_string_free. */
ODCAST_API odcast_status odcast_config_to_json(const odcast_config* config, char** out);

/* Writes the synthetic bookings CSV described by the config. */
ODCAST_API odcast_status odcast_generate(const odcast_config* config, const char* out_csv);

/* Runs the full backtest, writing artifacts into out_dir. `log` may be NULL. */
ODCAST_API odcast_status odcast_backtest(const odcast_config* config, const char* out_dir, odcast_log_fn log,
                                         void* user, odcast_run** out);
ODCAST_API void odcast_run_free(odcast_run* run);

/* Test-window summary of a run. `model` is a pool model id or "moe". A
   missing value (e.g. a model unavailable everywhere) yields
   ODCAST_E_NOT_FOUND. */
ODCAST_API odcast_status odcast_run_model_wnrmse(const odcast_run* run, const char* model, double* out);
ODCAST_API odcast_status odcast_run_model_nrmse(const odcast_run* run, const char* model, double* out);
/* Share of significant-cluster ODs where the mixture beats year-over-year. */
ODCAST_API odcast_status odcast_run_moe_beats_yoy(const odcast_run* run, double* out);
ODCAST_API size_t odcast_run_substitutions(const odcast_run* run);

/* Renders the report tables of a run directory. Free with odcast_string_free. */
ODCAST_API odcast_status odcast_report(const char* run_dir, char** out);

ODCAST_API void odcast_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
