/*
 * C interface to the code co-occurrence rescoring library.
 *
 * Every function returns a cooc_status. On failure, cooc_last_error() returns
 * a message for the calling thread that stays valid until that thread's next
 * call into the library. Handles are opaque and owned by the caller: release
 * them with the matching *_free function. Paths are UTF-8.
 */
#ifndef COOC_COOC_H
#define COOC_COOC_H

#include <stddef.h>
#include <stdint.h>

#if defined(COOC_BUILDING_LIBRARY)
#define COOC_API __attribute__((visibility("default")))
#else
#define COOC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cooc_status {
  COOC_OK = 0,
  COOC_ERROR_INVALID_ARGUMENT = 1, /* null pointer, bad option value */
  COOC_ERROR_PARSE = 2,            /* malformed code, line or file */
  COOC_ERROR_DATA = 3,             /* well-formed input violating a precondition */
  COOC_ERROR_IO = 4,               /* file cannot be opened or written */
  COOC_ERROR_FORMAT_VERSION = 5,   /* unsupported file format version */
  COOC_ERROR_BUFFER_TOO_SMALL = 6, /* output buffer too small; see required size */
  COOC_ERROR_INTERNAL = 99
} cooc_status;

typedef struct cooc_concept_map cooc_concept_map;
typedef struct cooc_model cooc_model;

COOC_API const char* cooc_last_error(void);
COOC_API const char* cooc_version(void);
/* One "name=version" token per file schema, space separated. */
COOC_API const char* cooc_format_versions(void);

/* ---- Codes ------------------------------------------------------------ */

/* Validates and uppercases a 7-axis code into canonical_out (8 bytes incl.
 * NUL). On COOC_ERROR_PARSE, *error_position (if non-null) receives the
 * 0-based offending position. */
COOC_API cooc_status cooc_code_canonical(const char* text, char canonical_out[8],
                                         size_t* error_position);

/* Axis patterns for two codes sharing a two-axis prefix. Writes a
 * NUL-terminated string; when capacity is insufficient returns
 * COOC_ERROR_BUFFER_TOO_SMALL and sets *required (incl. NUL). */
COOC_API cooc_status cooc_axis_match_pattern(const char* pred, const char* given, char* out,
                                             size_t capacity, size_t* required);
COOC_API cooc_status cooc_axis_diff_pattern(const char* pred, const char* given, char* out,
                                            size_t capacity, size_t* required);

/* ---- Concept map ------------------------------------------------------ */

/* concepts_path and descriptions_path may each be null (not both required). */
COOC_API cooc_status cooc_concept_map_load(const char* concepts_path,
                                           const char* descriptions_path, int ngram_order,
                                           cooc_concept_map** out);
COOC_API cooc_status cooc_concept_map_empty(int ngram_order, cooc_concept_map** out);
COOC_API void cooc_concept_map_free(cooc_concept_map* map);
COOC_API size_t cooc_concept_map_size(const cooc_concept_map* map);
/* Concepts for a code (mapped, n-gram fallback, or none), comma separated. */
COOC_API cooc_status cooc_concepts_for(const cooc_concept_map* map, const char* code, char* out,
                                       size_t capacity, size_t* required);

/* ---- Model ------------------------------------------------------------ */

COOC_API cooc_status cooc_model_load(const char* path, cooc_model** out);
COOC_API void cooc_model_free(cooc_model* model);

typedef struct cooc_model_info {
  double lambda;
  double bias;
  uint64_t nonzero_weights;
  uint64_t instances;
  uint64_t iterations;
  double objective;
  int converged;
  int score_features_enabled;
} cooc_model_info;

COOC_API cooc_status cooc_model_get_info(const cooc_model* model, cooc_model_info* info);

/* P(pred | given) with the primary score of pred feeding the score features. */
COOC_API cooc_status cooc_model_predict_pair(const cooc_model* model, const cooc_concept_map* map,
                                             const char* pred, const char* given, double score,
                                             double* probability);

/* ---- Score features --------------------------------------------------- */

typedef struct cooc_score_features {
  const double* thresholds; /* strictly ascending, each in (0, 1) */
  size_t threshold_count;
  int include_raw_score;
  int raw_log_odds;
  int enabled; /* 0 drops every score-derived feature */
} cooc_score_features;

/* Default thresholds 0.1 ... 0.9, raw score on, log-odds off, enabled.
 * The returned thresholds pointer refers to static storage. */
COOC_API cooc_score_features cooc_score_features_default(void);

/* ---- Pipeline stages (file to file) ----------------------------------- */

typedef struct cooc_synth_summary {
  uint64_t train_docs;
  uint64_t test_docs;
  uint64_t inventory_codes;
  double mean_gold;
  double mean_generated;
  double generated_precision;
  double clique_confusion_rate; /* negative when the spec has no cliques */
  uint64_t rng_seed;            /* seed actually used */
} cooc_synth_summary;

/* Writes train.tsv, test.tsv, concepts.tsv and summary.json into out_dir
 * (which must exist). seed_override, when non-null, replaces the spec's
 * rng_seed. summary may be null. */
COOC_API cooc_status cooc_run_synth(const char* spec_path, const char* out_dir,
                                    const uint64_t* seed_override, int workers,
                                    cooc_synth_summary* summary);

typedef struct cooc_gen_options {
  size_t top_k;
  double neg_subsample_rate;
  uint64_t rng_seed;
  int weight_negatives;
  int manual_only_omit_score; /* 0: manual-only candidates use score 0 */
  int workers;
  cooc_score_features score;
} cooc_gen_options;

COOC_API cooc_gen_options cooc_gen_options_default(void);

typedef struct cooc_instance_stats {
  uint64_t positives;
  uint64_t negatives_kept;
  uint64_t negatives_dropped;
  uint64_t distinct_features;
  uint64_t records;
  uint64_t records_skipped;
} cooc_instance_stats;

/* Per-record errors are skipped, counted in stats, and (when errors_path is
 * non-null) written there as doc_id<TAB>message lines. */
COOC_API cooc_status cooc_run_gen_instances(const char* corpus_path, const cooc_concept_map* map,
                                            const cooc_gen_options* options, const char* out_path,
                                            const char* errors_path, cooc_instance_stats* stats);

typedef struct cooc_train_options {
  double lambda;
  int max_iterations;
  double tolerance;
  size_t min_feature_count;
  int workers;
  uint64_t seed; /* recorded in the model metadata */
  cooc_score_features score; /* must match the features in the instance file */
} cooc_train_options;

COOC_API cooc_train_options cooc_train_options_default(void);

typedef struct cooc_train_summary {
  double objective;
  uint64_t nonzero_weights;
  uint64_t iterations;
  uint64_t instances;
  int converged;
} cooc_train_summary;

COOC_API cooc_status cooc_run_train(const char* instances_path, const cooc_train_options* options,
                                    const char* model_out, cooc_train_summary* summary);

typedef struct cooc_rescore_options {
  size_t depth;
  int model_only;
  double interpolation_weight;
  int score_free_init;
  int score_feature_from_current;
  int audit; /* append pop order and factor trail to each output line */
  int workers;
} cooc_rescore_options;

COOC_API cooc_rescore_options cooc_rescore_options_default(void);

typedef struct cooc_rescore_summary {
  uint64_t documents;
  uint64_t documents_skipped;
} cooc_rescore_summary;

COOC_API cooc_status cooc_run_rescore(const char* corpus_path, const cooc_model* model,
                                      const cooc_concept_map* map,
                                      const cooc_rescore_options* options, const char* out_path,
                                      const char* errors_path, cooc_rescore_summary* summary);

typedef struct cooc_eval_options {
  const double* thresholds; /* report rows; null for the default grid */
  size_t threshold_count;
  int interpolate_break_even;
  int predictions_are_corpus; /* predictions file is a corpus; evaluate its GEN lists */
} cooc_eval_options;

/* Default grid 0.1, 0.2, ..., 0.9. */
COOC_API cooc_eval_options cooc_eval_options_default(void);

typedef struct cooc_eval_summary {
  double break_even_f;
  double break_even_threshold;
  double break_even_precision;
  double break_even_recall;
  uint64_t gold_codes;
} cooc_eval_summary;

/* table_path and records_path may each be null. */
COOC_API cooc_status cooc_run_eval(const char* predictions_path, const char* gold_corpus_path,
                                   const cooc_eval_options* options, const char* table_path,
                                   const char* records_path, cooc_eval_summary* summary);

/* corpus_path (for pair counts and naive conditionals) may be null. */
COOC_API cooc_status cooc_run_case_study(const cooc_model* model, const cooc_concept_map* map,
                                         const char* pairs_path, const char* corpus_path,
                                         const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* COOC_COOC_H */
