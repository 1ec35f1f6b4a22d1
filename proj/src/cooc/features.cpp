#include "cooc/features.hpp"

#include <algorithm>
#include <cmath>

#include "cooc/error.hpp"
#include "cooc/numfmt.hpp"

namespace cooc {

void FeatureVector::add(std::string name, double value) {
  if (!std::isfinite(value)) throw DataError("non-finite value for feature '" + name + "'");
  if (value == 0.0) return;
  auto [it, inserted] = entries_.emplace(std::move(name), value);
  if (!inserted) throw DataError("duplicate feature '" + it->first + "'");
}

void FeatureVector::merge(const FeatureVector& other) {
  for (const auto& [name, value] : other) add(name, value);
}

double FeatureVector::get(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? 0.0 : it->second;
}

std::vector<double> ScoreFeatureConfig::default_thresholds() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

void ScoreFeatureConfig::validate() const {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    double t = thresholds[i];
    if (!(t > 0.0 && t < 1.0))
      throw DataError("score threshold " + format_double(t) + " is outside (0, 1)");
    if (i > 0 && !(thresholds[i - 1] < t))
      throw DataError("score thresholds must be strictly ascending");
  }
}

std::string threshold_feature_name(double t) { return "score:gt:" + format_double(t); }

FeatureVector extract_pair_features(const StructuredCode& pred, const StructuredCode& given,
                                    const ConceptMap& map) {
  FeatureVector fv;
  const auto p = pred.string();
  const auto g = given.string();
  fv.add("pair:" + p + "|" + g);

  const ConceptSet pc = concepts_for(pred, map);
  const ConceptSet gc = concepts_for(given, map);
  for (const auto& c : gc) fv.add("predid+gconcept:" + p + "|" + c);
  for (const auto& c : pc) fv.add("givenid+pconcept:" + g + "|" + c);
  for (const auto& c : pc)
    if (!gc.contains(c)) fv.add("ponly:" + c);
  for (const auto& c : gc)
    if (!pc.contains(c)) fv.add("gonly:" + c);
  for (const auto& cg : gc)
    for (const auto& cp : pc) fv.add("cxc:" + cg + "|" + cp);

  if (shares_two_axis_prefix(pred, given)) {
    fv.add("axmatch:" + axis_match_pattern(pred, given));
    fv.add("axdiff:" + axis_diff_pattern(pred, given));
  }
  return fv;
}

FeatureVector extract_score_features(double score, const ScoreFeatureConfig& cfg) {
  if (!(score >= 0.0 && score <= 1.0))
    throw DataError("score " + format_double(score) + " is outside [0, 1]");
  FeatureVector fv;
  if (cfg.include_raw_score) {
    double raw = score;
    if (cfg.raw_log_odds) {
      constexpr double kEps = 1e-6;
      double s = std::clamp(score, kEps, 1.0 - kEps);
      raw = std::log(s / (1.0 - s));
    }
    fv.add("score:raw", raw);
  }
  for (double t : cfg.thresholds)
    if (score > t) fv.add(threshold_feature_name(t));
  return fv;
}

FeatureVector extract_full(const StructuredCode& pred, const StructuredCode& given,
                           std::optional<double> score, const ConceptMap& map,
                           const ScoreFeatureConfig& cfg) {
  FeatureVector fv = extract_pair_features(pred, given, map);
  if (cfg.enabled && score) fv.merge(extract_score_features(*score, cfg));
  return fv;
}

}  // namespace cooc
