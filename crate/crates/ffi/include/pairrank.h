#ifndef PAIRRANK_H
#define PAIRRANK_H

/* Generated by cbindgen from the pairrank-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every entry point.
typedef enum PrStatus {
  PR_STATUS_OK = 0,
  // Invalid arguments or configuration.
  PR_STATUS_USAGE = 1,
  // Input data or artifact problem.
  PR_STATUS_DATA = 2,
  // Numeric failure during training.
  PR_STATUS_NUMERIC = 3,
  // A required pointer argument was NULL.
  PR_STATUS_NULL_ARG = 4,
  // Unexpected internal failure.
  PR_STATUS_INTERNAL = 5,
} PrStatus;

// Loss kinds, matching the training losses by name.
typedef enum PrLoss {
  PR_LOSS_BPR = 0,
  PR_LOSS_UBPR = 1,
  PR_LOSS_EBPR = 2,
  PR_LOSS_PUEBPR = 3,
  PR_LOSS_UEBPR = 4,
} PrLoss;

// Explainability matrices, propensities and neighborhoods for one
// neighborhood size, covering the training, merged-retrain and
// evaluation phases.
typedef struct PrComponents PrComponents;

// Binarized, filtered interaction dataset.
typedef struct PrDataset PrDataset;

// Trained latent-factor model.
typedef struct PrModel PrModel;

// Leave-one-out split of a dataset.
typedef struct PrSplit PrSplit;

// Training configuration. `merged_epochs` of 0 trains on the train
// partition with per-epoch validation and early stopping; a positive
// value retrains on the merged train+validation data for exactly that
// many epochs.
typedef struct PrTrainConfig {
  enum PrLoss loss;
  uint32_t latent_dim;
  uint32_t batch_size;
  double l2;
  double learning_rate;
  uint32_t max_epochs;
  uint32_t patience;
  uint64_t seed;
  // Non-zero clamps instance weights into [0, 1].
  uint8_t weight_clip;
  uint32_t merged_epochs;
} PrTrainConfig;

// Full metric table at one cutoff.
typedef struct PrMetrics {
  double hr;
  double ndcg;
  double mep;
  double wmep;
  double efd;
  double avg_pop;
  double div;
} PrMetrics;

// Message describing the most recent error on this thread; empty when
// the last call succeeded. The pointer stays valid until the next
// pairrank call on the same thread.
const char *pr_last_error_message(void);

// Crate version as a static NUL-terminated string.
const char *pr_version(void);

// Load a delimiter-separated interaction log (columns user, item,
// value, timestamp), binarize at `threshold` and drop users with
// fewer than `min_interactions` positives.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum PrStatus pr_dataset_load(const char *path,
                              char delimiter,
                              double threshold,
                              uint32_t min_interactions,
                              struct PrDataset **out);

// # Safety
// `dataset` must come from `pr_dataset_load` and not be used after.
void pr_dataset_free(struct PrDataset *dataset);

// # Safety
// All pointers must be valid.
enum PrStatus pr_dataset_stats(const struct PrDataset *dataset,
                               uint64_t *users,
                               uint64_t *items,
                               uint64_t *interactions);

// Leave-one-out split with `n_negatives` sampled evaluation negatives
// per holdout, deterministic in `seed`.
//
// # Safety
// All pointers must be valid.
enum PrStatus pr_split_create(const struct PrDataset *dataset,
                              uint32_t n_negatives,
                              uint64_t seed,
                              struct PrSplit **out);

// # Safety
// `split` must come from `pr_split_create` and not be used after.
void pr_split_free(struct PrSplit *split);

// Build neighborhoods, explainability matrices and propensities for
// all protocol phases at neighborhood size `eta`.
//
// # Safety
// All pointers must be valid.
enum PrStatus pr_components_build(const struct PrSplit *split,
                                  uint32_t eta,
                                  struct PrComponents **out);

// # Safety
// `components` must come from `pr_components_build`.
void pr_components_free(struct PrComponents *components);

// Train a model on the split with the configured loss.
//
// # Safety
// All pointers must be valid.
enum PrStatus pr_train(const struct PrSplit *split,
                       const struct PrComponents *components,
                       const struct PrTrainConfig *config,
                       struct PrModel **out);

// # Safety
// `model` must come from `pr_train` or `pr_model_load`.
void pr_model_free(struct PrModel *model);

// Dot-product score of one user-item pair.
//
// # Safety
// All pointers must be valid.
enum PrStatus pr_model_score(const struct PrModel *model,
                             uint32_t user,
                             uint32_t item,
                             double *out);

// Persist the model checkpoint (header plus little-endian f32 rows).
//
// # Safety
// All pointers must be valid.
enum PrStatus pr_model_save(const struct PrModel *model, const char *path);

// # Safety
// All pointers must be valid.
enum PrStatus pr_model_load(const char *path, struct PrModel **out);

// Full metric table (HR, NDCG, MEP, WMEP, EFD, Avg_Pop, Div) at
// cutoff `k`.
//
// # Safety
// All pointers must be valid; the split and components must come from
// the same dataset the model was trained on.
enum PrStatus pr_evaluate(const struct PrModel *model,
                          const struct PrSplit *split,
                          const struct PrComponents *components,
                          uint32_t k,
                          struct PrMetrics *out);

// Top-k recommendations for one user over the full catalog minus the
// user's merged train positives. On entry `*len` is the capacity of
// both arrays; on success it holds the number of entries written.
//
// # Safety
// `items` and `scores` must point to at least `*len` elements.
enum PrStatus pr_topk(const struct PrModel *model,
                      const struct PrSplit *split,
                      uint32_t user,
                      uint32_t k,
                      uint32_t *items,
                      double *scores,
                      uintptr_t *len);

// Item-based explanation for (user, item): the explainability value
// plus the interacted neighbors and their similarities,
// similarity-descending. `*len` is the buffer capacity on entry and
// the written count on exit.
//
// # Safety
// `neighbors` and `similarities` must point to at least `*len`
// elements.
enum PrStatus pr_explain(const struct PrSplit *split,
                         const struct PrComponents *components,
                         uint32_t user,
                         uint32_t item,
                         double *e_value,
                         uint32_t *neighbors,
                         double *similarities,
                         uintptr_t *len);

#endif  /* PAIRRANK_H */
