#ifndef ICU_ACUITY_H
#define ICU_ACUITY_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define ICU_N_VARIABLES 14

// Return codes.
typedef enum IcuStatus {
  ICU_STATUS_OK = 0,
  ICU_STATUS_NULL_POINTER = 1,
  ICU_STATUS_INVALID_ARGUMENT = 2,
  ICU_STATUS_IO = 3,
  ICU_STATUS_PARSE = 4,
  ICU_STATUS_SHAPE = 5,
  ICU_STATUS_UNDEFINED_AUC = 6,
  ICU_STATUS_PANIC = 7,
} IcuStatus;

typedef struct IcuBedsideTable IcuBedsideTable;

typedef struct IcuModel IcuModel;

// Incremental predictor. Keeps its own copy of the model, so the model
// handle may be freed first.
typedef struct IcuStream IcuStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *icu_last_error(void);

// Library version as a static NUL-terminated string.
const char *icu_version(void);

// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum IcuStatus icu_model_load(const char *path, struct IcuModel **out);

// # Safety
// `model` must come from [`icu_model_load`] and not be used afterwards.
void icu_model_free(struct IcuModel *model);

// Hidden state size, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t icu_model_hidden_dim(const struct IcuModel *model);

// Predicts a whole stay. `grid` holds `n_hours` raw rows. `probs_out`
// receives `n_hours` probabilities; `attention_out`, if not null, receives
// the `n_hours * n_hours` attention matrix row-major.
//
// # Safety
// Buffers must hold the stated number of elements.
enum IcuStatus icu_model_predict(const struct IcuModel *model,
                                 const double *grid,
                                 size_t n_hours,
                                 double *probs_out,
                                 double *attention_out);

// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum IcuStatus icu_stream_new(const struct IcuModel *model, struct IcuStream **out);

// Feeds one raw hour and writes that hour's probability. Earlier outputs
// are never revised.
//
// # Safety
// `row` must hold [`ICU_N_VARIABLES`] values and `prob_out` be valid.
enum IcuStatus icu_stream_push(struct IcuStream *stream, const double *row, double *prob_out);

// Hours fed so far, or 0 for a null handle.
//
// # Safety
// `stream` must be null or a live handle.
size_t icu_stream_hours(const struct IcuStream *stream);

// # Safety
// `stream` must come from [`icu_stream_new`] and not be used afterwards.
void icu_stream_free(struct IcuStream *stream);

// The bundled bedside table.
//
// # Safety
// `out` must be a valid pointer.
enum IcuStatus icu_bedside_default(struct IcuBedsideTable **out);

// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum IcuStatus icu_bedside_load(const char *path, struct IcuBedsideTable **out);

// # Safety
// `table` must be a live handle and `prob_out` valid.
enum IcuStatus icu_bedside_probability(const struct IcuBedsideTable *table,
                                       int32_t total,
                                       double *prob_out);

// # Safety
// `table` must come from a bedside constructor and not be used afterwards.
void icu_bedside_free(struct IcuBedsideTable *table);

// Hourly SOFA over a resampled grid. `observed` may be null, meaning every
// cell was measured. `components_out` receives `n_hours * 6` scores
// (cardiovascular, respiratory, CNS, coagulation, liver, renal) and
// `totals_out`, if not null, `n_hours` totals.
//
// # Safety
// Buffers must hold the stated number of elements.
enum IcuStatus icu_sofa_scores(const double *grid,
                               const uint8_t *observed,
                               size_t n_hours,
                               uint8_t *components_out,
                               uint8_t *totals_out);

// ROC AUC with midrank ties. `labels` are 0 or non-zero.
//
// # Safety
// `scores` and `labels` must hold `n` elements and `auc_out` be valid.
enum IcuStatus icu_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *auc_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ICU_ACUITY_H */
