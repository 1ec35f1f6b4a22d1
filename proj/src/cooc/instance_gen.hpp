#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cooc/codes.hpp"
#include "cooc/corpus.hpp"
#include "cooc/features.hpp"
#include "cooc/model.hpp"

namespace cooc {

// Score used for a candidate that is manual but absent from GEN(D).
enum class ManualOnlyScore { kZero, kOmitScoreFeatures };

struct GenConfig {
  std::size_t top_k = 200;
  // Probability of keeping each negative, in (0, 1].
  double neg_subsample_rate = 1.0;
  std::uint64_t rng_seed = 0;
  ScoreFeatureConfig score_cfg;
  // Kept negatives carry weight 1/rate; false leaves every weight at 1.
  bool weight_negatives = true;
  ManualOnlyScore manual_only = ManualOnlyScore::kZero;
  int workers = 0;

  void validate() const;
};

struct InstanceStats {
  std::uint64_t positives = 0;
  std::uint64_t negatives_kept = 0;
  std::uint64_t negatives_dropped = 0;
  std::uint64_t distinct_features = 0;
  std::uint64_t records = 0;
  std::uint64_t records_skipped = 0;
  bool operator==(const InstanceStats&) const = default;
};

struct GenerationReport {
  InstanceStats stats;
  std::vector<RecordError> errors;
};

using InstanceSink = std::function<void(const TrainingInstance&)>;

// For each document, each manual code as the given code, and each candidate in
// top_k(GEN) followed by manual codes outside it (excluding the given code
// itself): emit one instance labeled by membership of the candidate in MAN.
// Negatives survive an independent coin flip per instance, seeded from
// (rng_seed, doc_id). Records failing validation are skipped and reported.
// Instances reach the sink in corpus order regardless of cfg.workers.
GenerationReport generate_instances(std::span<const CorpusRecord> corpus, const ConceptMap& map,
                                    const GenConfig& cfg, const InstanceSink& sink);

// Counts over an instance list; negatives_dropped is unknown here and stays 0.
InstanceStats instance_stats(std::span<const TrainingInstance> instances);

inline constexpr int kInstanceFormatVersion = 1;

// Instance file: an optional header line recording the score-feature
// configuration,
//   #cooc-instances 1 enabled=1 raw=1 log_odds=0 thresholds=0.1,0.2,...
// then one instance per line,
//   label<TAB>weight<TAB>name=value<TAB>name=value...
// label is 1 or 0; the value follows the last '=' of each field. Other '#'
// lines are comments.
std::string instance_file_header(const ScoreFeatureConfig& cfg);
void write_instance(std::string& out, const TrainingInstance& instance);
// `header`, when non-null, receives the configuration from the header line if
// one is present.
void read_instances(std::istream& in, Dataset& data,
                    std::optional<ScoreFeatureConfig>* header = nullptr);
std::vector<TrainingInstance> read_instances(std::istream& in,
                                             std::optional<ScoreFeatureConfig>* header = nullptr);

}  // namespace cooc
