/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#ifndef QPBREATHER_H
#define QPBREATHER_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(QPB_BUILDING_LIBRARY)
#    define QPB_API __declspec(dllexport)
#  else
#    define QPB_API __declspec(dllimport)
#  endif
#else
#  define QPB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes of the command-line tool. */
typedef enum qpb_status {
  QPB_OK = 0,
  QPB_GATE_FAILED = 1,      /* a certificate or comparison gate did not pass */
  QPB_INVALID = 2,          /* invalid configuration or malformed input file */
  QPB_RESONANT_BOX = 3,     /* restricted linearized operator singular */
  QPB_NON_CONVERGENCE = 4,  /* residual stagnated or r_max reached */
  QPB_ERROR = 5             /* anything else */
} qpb_status;

typedef struct qpb_config qpb_config;
typedef struct qpb_solution qpb_solution;

QPB_API int qpb_format_version(void);
QPB_API const char* qpb_status_string(qpb_status status);

/* Thread-local; valid until the next call on the same thread. */
QPB_API const char* qpb_last_error(void);
QPB_API const char* qpb_last_log(void);

QPB_API qpb_status qpb_config_preset(const char* name, qpb_config** out);
QPB_API qpb_status qpb_config_load(const char* path, qpb_config** out);
QPB_API qpb_status qpb_config_parse(const char* json_text, qpb_config** out);
QPB_API qpb_status qpb_config_set_threads(qpb_config* config, int threads);
QPB_API qpb_status qpb_config_set_output_dir(qpb_config* config, const char* dir);
/* Caller frees with qpb_string_free. NULL on failure. */
QPB_API char* qpb_config_to_json(const qpb_config* config);
QPB_API void qpb_config_free(qpb_config* config);
QPB_API void qpb_string_free(char* text);

/* Commands. Files land in the configured output directory; the summary is
   available from qpb_last_log. */
QPB_API qpb_status qpb_certify(const qpb_config* config);
QPB_API qpb_status qpb_solve_to_files(const qpb_config* config, int force, int oracle);
QPB_API qpb_status qpb_lde_scan(const qpb_config* config);
QPB_API qpb_status qpb_report(const char* solution_path);
QPB_API qpb_status qpb_oracle_compare(const qpb_config* config);

/* In-memory solve without the certificate gate. */
QPB_API qpb_status qpb_solve(const qpb_config* config, qpb_solution** out);
QPB_API size_t qpb_solution_frequency_count(const qpb_solution* solution);
QPB_API double qpb_solution_frequency(const qpb_solution* solution, size_t l);
QPB_API int qpb_solution_converged(const qpb_solution* solution);
QPB_API double qpb_solution_residual(const qpb_solution* solution);
QPB_API size_t qpb_solution_stages(const qpb_solution* solution);
/* k has b entries, n has d entries. */
QPB_API qpb_status qpb_solution_coefficient(const qpb_solution* solution, const int* k, const int* n,
                                            double* value);
QPB_API void qpb_solution_free(qpb_solution* solution);

#ifdef __cplusplus
}
#endif

#endif /* QPBREATHER_H */
