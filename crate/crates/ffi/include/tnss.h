#ifndef TNSS_H
#define TNSS_H

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum TnssStatus {
  TNSS_STATUS_OK = 0,
  TNSS_STATUS_NULL_POINTER = 1,
  TNSS_STATUS_INVALID_ARGUMENT = 2,
  TNSS_STATUS_IO = 3,
  TNSS_STATUS_NUMERICAL = 4,
  TNSS_STATUS_SEARCH_SPACE_TOO_LARGE = 5,
  TNSS_STATUS_BUFFER_TOO_SMALL = 6,
  TNSS_STATUS_PANIC = 7,
} TnssStatus;

typedef enum TnssAlgorithm {
  TNSS_ALGORITHM_EXHAUSTIVE = 0,
  // Alternating per-variable enumeration.
  TNSS_ALGORITHM_TNALE = 1,
  // Random neighborhood sampling.
  TNSS_ALGORITHM_TNLS = 2,
} TnssAlgorithm;

// Opaque dataset handle.
typedef struct TnssDataset TnssDataset;

// Opaque search result handle.
typedef struct TnssResult TnssResult;

typedef struct TnssEvaluation {
  double objective;
  double phi;
  double mean_relative_error;
  size_t param_count;
} TnssEvaluation;

typedef struct TnssSearchOptions {
  enum TnssAlgorithm algorithm;
  double lambda;
  size_t r_max;
  size_t max_evals;
  size_t patience;
  // Candidates per iteration for `Tnls`.
  size_t n_sample;
  size_t fit_max_iters;
  uint64_t seed;
} TnssSearchOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null if none. The
// pointer stays valid until the next failing call on the same thread.
const char *tnss_last_error_message(void);

// Loads a tensor bundle directory.
//
// # Safety
// `path` must be a nul-terminated string and `out` a valid pointer.
enum TnssStatus tnss_dataset_load(const char *path, struct TnssDataset **out);

// Generates a min-max normalized synthetic dataset at a planted structure.
//
// # Safety
// `shape` must point to `order` values, `ranks` to `n_ranks` values, and
// `out` must be a valid pointer.
enum TnssStatus tnss_dataset_generate(const size_t *shape,
                                      size_t order,
                                      const size_t *ranks,
                                      size_t n_ranks,
                                      size_t samples,
                                      double noise_sigma,
                                      uint64_t seed,
                                      struct TnssDataset **out);

// Writes the dataset as a tensor bundle directory.
//
// # Safety
// `dataset` must come from this library and `path` must be nul-terminated.
enum TnssStatus tnss_dataset_save(const struct TnssDataset *dataset, const char *path);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `dataset` must be null or come from this library.
size_t tnss_dataset_len(const struct TnssDataset *dataset);

// Tensor order, or 0 for a null handle.
//
// # Safety
// `dataset` must be null or come from this library.
size_t tnss_dataset_order(const struct TnssDataset *dataset);

// # Safety
// `dataset` must be null or come from this library and not be used again.
void tnss_dataset_free(struct TnssDataset *dataset);

// Fits every sample at one structure and reports the objective.
//
// # Safety
// `dataset` must come from this library, `ranks` must point to `n_ranks`
// values, and `out` must be a valid pointer.
enum TnssStatus tnss_evaluate(const struct TnssDataset *dataset,
                              const size_t *ranks,
                              size_t n_ranks,
                              double lambda,
                              size_t fit_max_iters,
                              uint64_t seed,
                              struct TnssEvaluation *out);

// Defaults: alternating search, lambda 10, r_max 4, 500 evaluations,
// patience 5, 4 samples per neighborhood, 500 fit iterations, seed 0.
struct TnssSearchOptions tnss_search_options_default(void);

// Searches from the all-ones structure (or the whole box for `Exhaustive`).
//
// # Safety
// `dataset` must come from this library and `options`, `out` must be valid
// pointers.
enum TnssStatus tnss_search(const struct TnssDataset *dataset,
                            const struct TnssSearchOptions *options,
                            struct TnssResult **out);

// Length of the best rank vector, or 0 for a null handle.
//
// # Safety
// `result` must be null or come from this library.
size_t tnss_result_num_ranks(const struct TnssResult *result);

// Copies the best rank vector into `buf`, which holds `capacity` values.
//
// # Safety
// `result` must come from this library and `buf` must have room for
// `capacity` values.
enum TnssStatus tnss_result_ranks(const struct TnssResult *result, size_t *buf, size_t capacity);

// # Safety
// `result` and `out` must be valid pointers.
enum TnssStatus tnss_result_evaluation(const struct TnssResult *result, struct TnssEvaluation *out);

// Distinct structures evaluated, or 0 for a null handle.
//
// # Safety
// `result` must be null or come from this library.
size_t tnss_result_evals_used(const struct TnssResult *result);

// Evaluation index at which the best objective first appeared.
//
// # Safety
// `result` must be null or come from this library.
size_t tnss_result_evals_to_best(const struct TnssResult *result);

// # Safety
// `result` must be null or come from this library and not be used again.
void tnss_result_free(struct TnssResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TNSS_H */
