#include "cooc/cooc.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "cooc/codes.hpp"
#include "cooc/corpus.hpp"
#include "cooc/error.hpp"
#include "cooc/eval.hpp"
#include "cooc/features.hpp"
#include "cooc/instance_gen.hpp"
#include "cooc/model.hpp"
#include "cooc/rescorer.hpp"
#include "cooc/synth.hpp"

#ifndef COOC_VERSION_STRING
#define COOC_VERSION_STRING "0.0.0"
#endif

struct cooc_concept_map {
  cooc::ConceptMap map;
};

struct cooc_model {
  cooc::CoocModel model;
};

namespace {

thread_local std::string last_error;

cooc_status fail(cooc_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs fn, translating core exceptions to status codes.
template <typename Fn>
cooc_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    return fn();
  } catch (const cooc::FormatVersionError& e) {
    return fail(COOC_ERROR_FORMAT_VERSION, e.what());
  } catch (const cooc::ParseError& e) {
    return fail(COOC_ERROR_PARSE, e.what());
  } catch (const cooc::DataError& e) {
    return fail(COOC_ERROR_DATA, e.what());
  } catch (const cooc::IoError& e) {
    return fail(COOC_ERROR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(COOC_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(COOC_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(COOC_ERROR_INTERNAL, "unknown error");
  }
}

#define COOC_REQUIRE(cond, what) \
  if (!(cond)) return fail(COOC_ERROR_INVALID_ARGUMENT, what)

cooc_status copy_out(const std::string& value, char* out, size_t capacity, size_t* required) {
  if (required) *required = value.size() + 1;
  if (!out || capacity < value.size() + 1)
    return fail(COOC_ERROR_BUFFER_TOO_SMALL,
                "buffer needs " + std::to_string(value.size() + 1) + " bytes");
  std::memcpy(out, value.c_str(), value.size() + 1);
  return COOC_OK;
}

cooc::ScoreFeatureConfig to_core(const cooc_score_features& s) {
  cooc::ScoreFeatureConfig cfg;
  if (s.threshold_count > 0 && !s.thresholds)
    throw cooc::ParseError("score thresholds pointer is null");
  cfg.thresholds.assign(s.thresholds, s.thresholds + s.threshold_count);
  cfg.include_raw_score = s.include_raw_score != 0;
  cfg.raw_log_odds = s.raw_log_odds != 0;
  cfg.enabled = s.enabled != 0;
  cfg.validate();
  return cfg;
}

std::ofstream open_output(const char* path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cooc::IoError(std::string("cannot open '") + path + "' for writing");
  return out;
}

void write_errors(const char* path, const std::vector<cooc::RecordError>& errors) {
  if (!path) return;
  auto out = open_output(path);
  for (const auto& e : errors) out << e.doc_id << '\t' << e.message << '\n';
}

const double kDefaultThresholds[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

}  // namespace

extern "C" {

const char* cooc_last_error(void) { return last_error.c_str(); }

const char* cooc_version(void) { return COOC_VERSION_STRING; }

const char* cooc_format_versions(void) {
  static const std::string versions =
      "corpus=1 concepts=1 descriptions=1 instances=" + std::to_string(cooc::kInstanceFormatVersion) +
      " model=" + std::to_string(cooc::kModelFormatVersion) +
      " rescored=1 report=1 synth-spec=1 case-pairs=1";
  return versions.c_str();
}

cooc_status cooc_code_canonical(const char* text, char canonical_out[8], size_t* error_position) {
  last_error.clear();
  COOC_REQUIRE(text && canonical_out, "null argument");
  try {
    auto code = cooc::parse_code(text);
    std::memcpy(canonical_out, code.str().data(), 7);
    canonical_out[7] = '\0';
    return COOC_OK;
  } catch (const cooc::CodeError& e) {
    if (error_position) *error_position = e.position();
    return fail(COOC_ERROR_PARSE, e.what());
  }
}

cooc_status cooc_axis_match_pattern(const char* pred, const char* given, char* out,
                                    size_t capacity, size_t* required) {
  return guarded([&] {
    COOC_REQUIRE(pred && given, "null code");
    return copy_out(cooc::axis_match_pattern(cooc::parse_code(pred), cooc::parse_code(given)),
                    out, capacity, required);
  });
}

cooc_status cooc_axis_diff_pattern(const char* pred, const char* given, char* out,
                                   size_t capacity, size_t* required) {
  return guarded([&] {
    COOC_REQUIRE(pred && given, "null code");
    return copy_out(cooc::axis_diff_pattern(cooc::parse_code(pred), cooc::parse_code(given)),
                    out, capacity, required);
  });
}

cooc_status cooc_concept_map_load(const char* concepts_path, const char* descriptions_path,
                                  int ngram_order, cooc_concept_map** out) {
  return guarded([&] {
    COOC_REQUIRE(out, "null output handle");
    *out = nullptr;
    auto handle = std::make_unique<cooc_concept_map>();
    if (concepts_path)
      handle->map = cooc::load_concept_map(concepts_path, ngram_order);
    else
      handle->map = cooc::ConceptMap(ngram_order);
    if (descriptions_path) cooc::load_descriptions(descriptions_path, handle->map);
    *out = handle.release();
    return COOC_OK;
  });
}

cooc_status cooc_concept_map_empty(int ngram_order, cooc_concept_map** out) {
  return cooc_concept_map_load(nullptr, nullptr, ngram_order, out);
}

void cooc_concept_map_free(cooc_concept_map* map) { delete map; }

size_t cooc_concept_map_size(const cooc_concept_map* map) { return map ? map->map.size() : 0; }

cooc_status cooc_concepts_for(const cooc_concept_map* map, const char* code, char* out,
                              size_t capacity, size_t* required) {
  return guarded([&] {
    COOC_REQUIRE(map && code, "null argument");
    std::string joined;
    for (const auto& c : cooc::concepts_for(cooc::parse_code(code), map->map)) {
      if (!joined.empty()) joined += ',';
      joined += c;
    }
    return copy_out(joined, out, capacity, required);
  });
}

cooc_status cooc_model_load(const char* path, cooc_model** out) {
  return guarded([&] {
    COOC_REQUIRE(path && out, "null argument");
    *out = nullptr;
    auto handle = std::make_unique<cooc_model>();
    handle->model = cooc::load_model(std::string(path));
    *out = handle.release();
    return COOC_OK;
  });
}

void cooc_model_free(cooc_model* model) { delete model; }

cooc_status cooc_model_get_info(const cooc_model* model, cooc_model_info* info) {
  last_error.clear();
  COOC_REQUIRE(model && info, "null argument");
  const auto& m = model->model;
  info->lambda = m.lambda;
  info->bias = m.bias;
  info->nonzero_weights = m.nonzero_count();
  info->instances = m.meta.instances;
  info->iterations = m.meta.iterations;
  info->objective = m.meta.objective;
  info->converged = m.meta.converged ? 1 : 0;
  info->score_features_enabled = m.score_cfg.enabled ? 1 : 0;
  return COOC_OK;
}

cooc_status cooc_model_predict_pair(const cooc_model* model, const cooc_concept_map* map,
                                    const char* pred, const char* given, double score,
                                    double* probability) {
  return guarded([&] {
    COOC_REQUIRE(model && map && pred && given && probability, "null argument");
    auto fv = cooc::extract_full(cooc::parse_code(pred), cooc::parse_code(given), score, map->map,
                                 model->model.score_cfg);
    *probability = cooc::predict(model->model, fv);
    return COOC_OK;
  });
}

cooc_score_features cooc_score_features_default(void) {
  cooc_score_features s{};
  s.thresholds = kDefaultThresholds;
  s.threshold_count = sizeof(kDefaultThresholds) / sizeof(kDefaultThresholds[0]);
  s.include_raw_score = 1;
  s.raw_log_odds = 0;
  s.enabled = 1;
  return s;
}

cooc_status cooc_run_synth(const char* spec_path, const char* out_dir,
                           const uint64_t* seed_override, int workers,
                           cooc_synth_summary* summary) {
  return guarded([&] {
    COOC_REQUIRE(spec_path && out_dir, "null path");
    namespace fs = std::filesystem;
    if (!fs::is_directory(out_dir))
      throw cooc::IoError(std::string("output directory '") + out_dir + "' does not exist");
    auto spec = cooc::load_synth_spec(spec_path);
    if (seed_override) spec.rng_seed = *seed_override;
    auto corpus = cooc::generate_corpus(spec, workers);
    fs::path dir(out_dir);
    {
      auto out = open_output((dir / "train.tsv").c_str());
      cooc::write_corpus(out, corpus.train);
    }
    {
      auto out = open_output((dir / "test.tsv").c_str());
      cooc::write_corpus(out, corpus.test);
    }
    {
      auto out = open_output((dir / "concepts.tsv").c_str());
      cooc::write_concept_map(out, corpus.concepts);
    }
    auto described = cooc::describe_corpus(corpus.train, spec.exclusion_cliques);
    {
      auto out = open_output((dir / "summary.json").c_str());
      cooc::write_summary_json(out, described);
    }
    if (summary) {
      summary->train_docs = corpus.train.size();
      summary->test_docs = corpus.test.size();
      summary->inventory_codes = corpus.inventory.size();
      summary->mean_gold = described.mean_gold;
      summary->mean_generated = described.mean_generated;
      summary->generated_precision = described.generated_precision;
      summary->clique_confusion_rate = described.clique_confusion_rate().value_or(-1.0);
      summary->rng_seed = spec.rng_seed;
    }
    return COOC_OK;
  });
}

cooc_gen_options cooc_gen_options_default(void) {
  cooc_gen_options o{};
  o.top_k = 200;
  o.neg_subsample_rate = 1.0;
  o.rng_seed = 0;
  o.weight_negatives = 1;
  o.manual_only_omit_score = 0;
  o.workers = 0;
  o.score = cooc_score_features_default();
  return o;
}

cooc_status cooc_run_gen_instances(const char* corpus_path, const cooc_concept_map* map,
                                   const cooc_gen_options* options, const char* out_path,
                                   const char* errors_path, cooc_instance_stats* stats) {
  return guarded([&] {
    COOC_REQUIRE(corpus_path && map && options && out_path, "null argument");
    cooc::GenConfig cfg;
    cfg.top_k = options->top_k;
    cfg.neg_subsample_rate = options->neg_subsample_rate;
    cfg.rng_seed = options->rng_seed;
    cfg.weight_negatives = options->weight_negatives != 0;
    cfg.manual_only = options->manual_only_omit_score ? cooc::ManualOnlyScore::kOmitScoreFeatures
                                                      : cooc::ManualOnlyScore::kZero;
    cfg.workers = options->workers;
    cfg.score_cfg = to_core(options->score);
    cfg.validate();

    auto corpus = cooc::load_corpus(corpus_path);
    auto out = open_output(out_path);
    std::string buf = cooc::instance_file_header(cfg.score_cfg);
    auto report = cooc::generate_instances(corpus, map->map, cfg, [&](const auto& inst) {
      cooc::write_instance(buf, inst);
      if (buf.size() > (1u << 20)) {
        out << buf;
        buf.clear();
      }
    });
    out << buf;
    if (!out) throw cooc::IoError(std::string("failed writing '") + out_path + "'");
    write_errors(errors_path, report.errors);
    if (stats) {
      stats->positives = report.stats.positives;
      stats->negatives_kept = report.stats.negatives_kept;
      stats->negatives_dropped = report.stats.negatives_dropped;
      stats->distinct_features = report.stats.distinct_features;
      stats->records = report.stats.records;
      stats->records_skipped = report.stats.records_skipped;
    }
    return COOC_OK;
  });
}

cooc_train_options cooc_train_options_default(void) {
  cooc_train_options o{};
  o.lambda = 1.0;
  o.max_iterations = 500;
  o.tolerance = 1e-7;
  o.min_feature_count = 0;
  o.workers = 0;
  o.seed = 0;
  o.score = cooc_score_features_default();
  return o;
}

cooc_status cooc_run_train(const char* instances_path, const cooc_train_options* options,
                           const char* model_out, cooc_train_summary* summary) {
  return guarded([&] {
    COOC_REQUIRE(instances_path && options && model_out, "null argument");
    std::ifstream in(instances_path);
    if (!in) throw cooc::IoError(std::string("cannot open '") + instances_path + "'");
    cooc::Dataset data;
    std::optional<cooc::ScoreFeatureConfig> header;
    cooc::read_instances(in, data, &header);

    cooc::SolverOptions solver;
    solver.max_iterations = options->max_iterations;
    solver.tolerance = options->tolerance;
    solver.min_feature_count = options->min_feature_count;
    solver.workers = options->workers;
    auto model = cooc::train(data, options->lambda, solver);
    model.score_cfg = header ? *header : to_core(options->score);
    model.meta.seed = options->seed;
    cooc::save_model(model, std::string(model_out));
    if (summary) {
      summary->objective = model.meta.objective;
      summary->nonzero_weights = model.nonzero_count();
      summary->iterations = model.meta.iterations;
      summary->instances = model.meta.instances;
      summary->converged = model.meta.converged ? 1 : 0;
    }
    return COOC_OK;
  });
}

cooc_rescore_options cooc_rescore_options_default(void) {
  cooc_rescore_options o{};
  o.depth = 3;
  o.model_only = 0;
  o.interpolation_weight = 1.0;
  o.score_free_init = 0;
  o.score_feature_from_current = 0;
  o.audit = 0;
  o.workers = 0;
  return o;
}

cooc_status cooc_run_rescore(const char* corpus_path, const cooc_model* model,
                             const cooc_concept_map* map, const cooc_rescore_options* options,
                             const char* out_path, const char* errors_path,
                             cooc_rescore_summary* summary) {
  return guarded([&] {
    COOC_REQUIRE(corpus_path && model && map && options && out_path, "null argument");
    cooc::RescoreConfig cfg;
    cfg.depth = options->depth;
    cfg.mode = options->model_only ? cooc::CombineMode::kModelOnly : cooc::CombineMode::kInterpolate;
    cfg.interpolation_weight = options->interpolation_weight;
    cfg.score_free_init = options->score_free_init != 0;
    cfg.score_feature_from_current = options->score_feature_from_current != 0;
    cfg.validate();
    auto corpus = cooc::load_corpus(corpus_path);
    auto batch = cooc::rescore_corpus(corpus, model->model, map->map, cfg, options->workers);
    auto out = open_output(out_path);
    cooc::write_rescored(out, batch.results, options->audit != 0);
    write_errors(errors_path, batch.errors);
    if (summary) {
      summary->documents = batch.results.size();
      summary->documents_skipped = batch.errors.size();
    }
    return COOC_OK;
  });
}

cooc_eval_options cooc_eval_options_default(void) {
  cooc_eval_options o{};
  o.thresholds = kDefaultThresholds;
  o.threshold_count = sizeof(kDefaultThresholds) / sizeof(kDefaultThresholds[0]);
  o.interpolate_break_even = 0;
  o.predictions_are_corpus = 0;
  return o;
}

cooc_status cooc_run_eval(const char* predictions_path, const char* gold_corpus_path,
                          const cooc_eval_options* options, const char* table_path,
                          const char* records_path, cooc_eval_summary* summary) {
  return guarded([&] {
    COOC_REQUIRE(predictions_path && gold_corpus_path && options, "null argument");
    COOC_REQUIRE(options->threshold_count == 0 || options->thresholds, "null thresholds");
    auto gold_corpus = cooc::load_corpus(gold_corpus_path);
    auto gold = cooc::GoldIndex::from_corpus(gold_corpus);
    std::vector<cooc::DocPredictions> preds;
    if (options->predictions_are_corpus)
      preds = cooc::predictions_from_corpus(cooc::load_corpus(predictions_path));
    else
      preds = cooc::load_predictions(predictions_path);
    std::vector<double> thresholds(options->thresholds,
                                   options->thresholds + options->threshold_count);
    auto report = cooc::evaluate(preds, gold, thresholds, options->interpolate_break_even != 0);
    if (table_path) {
      auto out = open_output(table_path);
      cooc::write_report_table(out, report);
    }
    if (records_path) {
      auto out = open_output(records_path);
      cooc::write_report_records(out, report);
    }
    if (summary) {
      summary->break_even_f = report.break_even.f;
      summary->break_even_threshold = report.break_even.threshold;
      summary->break_even_precision = report.break_even.precision;
      summary->break_even_recall = report.break_even.recall;
      summary->gold_codes = report.total_gold;
    }
    return COOC_OK;
  });
}

cooc_status cooc_run_case_study(const cooc_model* model, const cooc_concept_map* map,
                                const char* pairs_path, const char* corpus_path,
                                const char* out_path) {
  return guarded([&] {
    COOC_REQUIRE(model && map && pairs_path && out_path, "null argument");
    std::ifstream in(pairs_path);
    if (!in) throw cooc::IoError(std::string("cannot open '") + pairs_path + "'");
    auto pairs = cooc::read_case_study_pairs(in);
    std::vector<cooc::CorpusRecord> corpus;
    if (corpus_path) corpus = cooc::load_corpus(corpus_path);
    auto rows = cooc::case_study(model->model, map->map, pairs, corpus);
    auto out = open_output(out_path);
    cooc::write_case_study(out, rows);
    return COOC_OK;
  });
}

}  // extern "C"
