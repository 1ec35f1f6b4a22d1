#pragma once

#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cooc/codes.hpp"
#include "cooc/corpus.hpp"
#include "cooc/model.hpp"

namespace cooc {

enum class CombineMode {
  // CURRENT starts at the primary scores.
  kInterpolate,
  // CURRENT starts at 1; the primary score reaches the result only through
  // the model's score features.
  kModelOnly,
};

struct RescoreConfig {
  std::size_t depth = 3;
  CombineMode mode = CombineMode::kInterpolate;
  // Exponent on each conditional-probability factor; 1 is plain multiplication.
  double interpolation_weight = 1.0;
  // Same effect as kModelOnly on initialization, kept as its own switch.
  bool score_free_init = false;
  // Feed the candidate's current rescored value into the score features
  // instead of its original primary score (sensitivity experiments only).
  bool score_feature_from_current = false;

  bool starts_from_one() const { return score_free_init || mode == CombineMode::kModelOnly; }
  void validate() const;
};

// P(pred | given) as used by the greedy loop. `pred_score` is the score that
// feeds the score features.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual double conditional(const StructuredCode& pred, double pred_score,
                             const StructuredCode& given) const = 0;
  // Natural log of conditional(); overridden where a direct form avoids
  // underflow.
  virtual double log_conditional(const StructuredCode& pred, double pred_score,
                                 const StructuredCode& given) const {
    return std::log(conditional(pred, pred_score, given));
  }
};

class ModelPairScorer final : public PairScorer {
 public:
  ModelPairScorer(const CoocModel& model, const ConceptMap& map) : model_(model), map_(map) {}
  double conditional(const StructuredCode& pred, double pred_score,
                     const StructuredCode& given) const override;
  double log_conditional(const StructuredCode& pred, double pred_score,
                         const StructuredCode& given) const override;

 private:
  const CoocModel& model_;
  const ConceptMap& map_;
};

struct RescoreResult {
  std::string doc_id;
  // In input order.
  std::vector<ScoredCode> final_scores;
  // Natural log of each final score, aligned with final_scores.
  std::vector<double> log_scores;
  // C^1 ... C^d.
  std::vector<StructuredCode> pop_order;
  // Conditional probabilities applied to each code, in application order.
  std::map<StructuredCode, std::vector<double>> factor_log;
  // All final scores tie (score-free start with nothing popped).
  bool ranking_degenerate = false;

  // final_scores by descending score, ties by code.
  std::vector<ScoredCode> ranked() const;
};

// Greedy run-time loop: pop the best code, freeze its score, multiply every
// code still queued by P(code | popped)^alpha, repeat depth times (clamped to
// the number of codes). Products accumulate in log space. The queue orders by
// current score, then original primary score, then code string. Throws
// DataError on empty input, duplicate codes or scores outside [0, 1].
RescoreResult rescore_document(std::span<const ScoredCode> generated, const PairScorer& scorer,
                               const RescoreConfig& cfg);
RescoreResult rescore_document(std::span<const ScoredCode> generated, const CoocModel& model,
                               const ConceptMap& map, const RescoreConfig& cfg);

struct RescoreBatch {
  std::vector<RescoreResult> results;  // input order, failed documents omitted
  std::vector<RecordError> errors;
};

RescoreBatch rescore_corpus(std::span<const CorpusRecord> corpus, const CoocModel& model,
                            const ConceptMap& map, const RescoreConfig& cfg, int workers = 0);

// Per-document predictions as read back for evaluation.
struct DocPredictions {
  std::string doc_id;
  std::vector<ScoredCode> scored;
};

// Rescored output: one document per line,
//   doc_id<TAB>CODE:score,CODE:score,...            (descending score)
// with `audit` adding
//   <TAB>pop=CODE,CODE,...<TAB>factors=CODE:p;p;...|CODE:p;...
void write_rescored(std::ostream& out, std::span<const RescoreResult> results, bool audit);
std::vector<DocPredictions> read_predictions(std::istream& in);
std::vector<DocPredictions> load_predictions(const std::string& path);
// GEN(D) of each record as predictions (the primary baseline).
std::vector<DocPredictions> predictions_from_corpus(std::span<const CorpusRecord> corpus);

}  // namespace cooc
