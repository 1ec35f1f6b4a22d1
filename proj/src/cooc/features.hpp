#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cooc/codes.hpp"

namespace cooc {

// Sparse map from namespaced feature name to value. Zero values are never
// stored; names are unique.
class FeatureVector {
 public:
  using Map = std::map<std::string, double, std::less<>>;

  // Throws DataError on a duplicate name or a non-finite value.
  void add(std::string name, double value = 1.0);
  void merge(const FeatureVector& other);

  double get(std::string_view name) const;
  bool contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

  bool operator==(const FeatureVector&) const = default;

 private:
  Map entries_;
};

struct ScoreFeatureConfig {
  // Strictly ascending, each in (0, 1).
  std::vector<double> thresholds = default_thresholds();
  bool include_raw_score = true;
  // Emit logit(score) instead of the score for the raw feature.
  bool raw_log_odds = false;
  // false drops every score-derived feature (the no-score ablation).
  bool enabled = true;

  static std::vector<double> default_thresholds();
  // Throws DataError when the thresholds break their invariant.
  void validate() const;
  bool operator==(const ScoreFeatureConfig&) const = default;
};

// Name of the threshold indicator for t, e.g. "score:gt:0.25".
std::string threshold_feature_name(double t);

// Eight pair templates, all binary:
//   pair:<pred>|<given>            predid+gconcept:<pred>|<c>
//   givenid+pconcept:<given>|<c>   ponly:<c>   gonly:<c>   cxc:<cg>|<cp>
//   axmatch:<pattern>              axdiff:<pattern>
// The axis templates fire only when the two-axis prefix is shared.
FeatureVector extract_pair_features(const StructuredCode& pred, const StructuredCode& given,
                                    const ConceptMap& map);

// score:raw plus score:gt:<t> for each threshold strictly below the score.
// Throws DataError unless 0 <= score <= 1.
FeatureVector extract_score_features(double score, const ScoreFeatureConfig& cfg);

// Pair features plus score features. A nullopt score, or cfg.enabled == false,
// yields the pair features alone.
FeatureVector extract_full(const StructuredCode& pred, const StructuredCode& given,
                           std::optional<double> score, const ConceptMap& map,
                           const ScoreFeatureConfig& cfg);

}  // namespace cooc
