#ifndef BELL_BELL_H_
#define BELL_BELL_H_

#include <stdint.h>

#if defined(_WIN32)
#define BELL_EXPORT __declspec(dllexport)
#else
#define BELL_EXPORT __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bell_status {
  BELL_OK = 0,
  BELL_ERR_PARSE = 1,
  BELL_ERR_INVALID_MODEL = 2,
  BELL_ERR_DOMAIN = 3,
  BELL_ERR_ARGUMENT = 4,
  BELL_ERR_INTERNAL = 5,
  BELL_ERR_IO = 6,
} bell_status;

/* A parsed model file: contextual model, flat model, averaged model or behavior table. */
typedef struct bell_document bell_document;

/* Message for the last failing call on this thread; empty after success. */
BELL_EXPORT const char* bell_last_error(void);
BELL_EXPORT const char* bell_version(void);

/* Strings returned through char** are owned by the caller. */
BELL_EXPORT void bell_string_free(char* s);

/* validate != 0 also enforces normalization and outcome ranges. */
BELL_EXPORT bell_status bell_document_parse(const char* text, const char* source_name, int validate,
                                            bell_document** out);
BELL_EXPORT bell_status bell_document_load(const char* path, int validate, bell_document** out);
BELL_EXPORT void bell_document_free(bell_document* doc);
/* "contextual", "flat", "averaged" or "behavior". */
BELL_EXPORT const char* bell_document_kind(const bell_document* doc);
BELL_EXPORT bell_status bell_document_print(const bell_document* doc, char** out);
BELL_EXPORT int bell_document_equal(const bell_document* a, const bell_document* b);

/* All issues of a structurally parsed document. BELL_ERR_INVALID_MODEL when any exist;
   the report is written either way. */
BELL_EXPORT bell_status bell_validate(const bell_document* doc, char** json_out);

/* Exact correlation quad and CHSH report. */
BELL_EXPORT bell_status bell_exact(const bell_document* doc, char** json_out);

typedef enum bell_flatten_method {
  BELL_FLATTEN_PRODUCT = 0,
  BELL_FLATTEN_UNIFORM = 1,
  BELL_FLATTEN_AVERAGE = 2,
} bell_flatten_method;

typedef enum bell_refinement {
  BELL_REFINE_COMMON_BREAKPOINTS = 0,
  BELL_REFINE_UNIFORM_GRID = 1,
} bell_refinement;

BELL_EXPORT bell_status bell_flatten(const bell_document* doc, bell_flatten_method method,
                                     bell_refinement refinement, bell_document** out);

/* trials <= 0 omits the finite-sample bound. */
BELL_EXPORT bell_status bell_chsh_quad(const char* const values[4], int64_t trials, char** json_out);
BELL_EXPORT bell_status bell_chsh_document(const bell_document* doc, int64_t trials, char** json_out);

/* Behavior tables only. */
BELL_EXPORT bell_status bell_fine(const bell_document* doc, char** json_out);

typedef enum bell_format {
  BELL_FORMAT_JSON = 0,
  BELL_FORMAT_CSV = 1,
} bell_format;

typedef struct bell_simulate_options {
  int64_t trials;
  uint64_t seed;
  int confound;
  unsigned threads;
  /* Context probabilities in the order xy, xy', x'y, x'y'; NULL entries mean uniform. */
  const char* bias[4];
} bell_simulate_options;

BELL_EXPORT void bell_simulate_defaults(bell_simulate_options* options);
/* Contextual models only. CSV is the trial spreadsheet; JSON is the summary. */
BELL_EXPORT bell_status bell_simulate(const bell_document* doc, const bell_simulate_options* options,
                                      bell_format format, char** out);

typedef struct bell_search_options {
  int source_atoms;
  int instrument_atoms;
  int64_t budget;
  int restarts;
  uint64_t seed;
  const char* min_coincidence;
  const char* max_detection;
  unsigned threads;
} bell_search_options;

BELL_EXPORT void bell_search_defaults(bell_search_options* options);
/* Writes the JSON report; winner_out (optional) receives the winning model. */
BELL_EXPORT bell_status bell_search(const bell_search_options* options, char** json_out,
                                    bell_document** winner_out);

BELL_EXPORT bell_status bell_demo_counterexample(char** json_out);
/* angles = theta_x, theta_x', theta_y, theta_y' in radians; NULL selects the CHSH-optimal set. */
BELL_EXPORT bell_status bell_demo_quantum(const double* angles, char** json_out);

#ifdef __cplusplus
}
#endif

#endif  // BELL_BELL_H_
