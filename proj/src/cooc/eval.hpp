#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cooc/corpus.hpp"
#include "cooc/model.hpp"
#include "cooc/rescorer.hpp"

namespace cooc {

// Manual codes per document.
class GoldIndex {
 public:
  static GoldIndex from_corpus(std::span<const CorpusRecord> corpus);

  // nullptr for an unknown document.
  const std::set<StructuredCode>* find(const std::string& doc_id) const;
  std::uint64_t total() const { return total_; }
  std::size_t documents() const { return docs_.size(); }

 private:
  std::unordered_map<std::string, std::set<StructuredCode>> docs_;
  std::uint64_t total_ = 0;
};

struct PrfPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t predicted = 0;
  std::uint64_t correct = 0;
  std::uint64_t gold = 0;
};

// Micro-averaged over all gold documents: a code is predicted when its score
// is >= t. Precision of an empty prediction set is 1. Throws DataError naming
// any predicted document missing from gold, or a document predicting a code
// twice.
PrfPoint pr_at_threshold(std::span<const DocPredictions> predictions, const GoldIndex& gold,
                         double t);

struct BreakEven {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  bool interpolated = false;
};

// Sweeps every distinct predicted score as a threshold and keeps the one with
// the smallest |P - R| (ties: higher F1, then higher threshold). With
// `interpolate`, the first sign change of P - R between adjacent thresholds is
// located linearly instead, falling back to the sweep when P - R never changes
// sign. Throws DataError for empty predictions or empty gold.
BreakEven break_even(std::span<const DocPredictions> predictions, const GoldIndex& gold,
                     bool interpolate = false);

// Every sweep point, by ascending threshold.
std::vector<PrfPoint> threshold_sweep(std::span<const DocPredictions> predictions,
                                      const GoldIndex& gold);

struct EvalReport {
  std::vector<PrfPoint> rows;  // ascending threshold
  BreakEven break_even;
  std::uint64_t total_gold = 0;
};

EvalReport evaluate(std::span<const DocPredictions> predictions, const GoldIndex& gold,
                    std::span<const double> thresholds, bool interpolate = false);

// Aligned plain-text table (Threshold Precision Recall F1 Predicted) followed
// by the break-even line.
void write_report_table(std::ostream& out, const EvalReport& report);
// One `key=value` record per line: `row ...` per threshold, then `break_even ...`.
void write_report_records(std::ostream& out, const EvalReport& report);

std::uint64_t code_count(std::span<const CorpusRecord> corpus, const StructuredCode& code);
std::uint64_t pair_count(std::span<const CorpusRecord> corpus, const StructuredCode& a,
                         const StructuredCode& b);

// count(pred, given) / count(given) over manual code sets. Throws DataError
// when `given` never occurs.
double naive_cond_prob(std::span<const CorpusRecord> corpus, const StructuredCode& pred,
                       const StructuredCode& given);

struct CaseStudyPair {
  StructuredCode pred;
  StructuredCode given;
  double score = 0.9;
};

struct CaseStudyRow {
  CaseStudyPair pair;
  double model = 0.0;
  std::optional<std::uint64_t> pair_count;
  // Empty without a corpus, or when the given code never occurs in it.
  std::optional<double> naive;
};

std::vector<CaseStudyRow> case_study(const CoocModel& model, const ConceptMap& map,
                                     std::span<const CaseStudyPair> pairs,
                                     std::span<const CorpusRecord> corpus = {});
void write_case_study(std::ostream& out, std::span<const CaseStudyRow> rows);

// Pairs file: `PRED<TAB>GIVEN[<TAB>score]`, score defaulting to 0.9.
std::vector<CaseStudyPair> read_case_study_pairs(std::istream& in);

}  // namespace cooc
