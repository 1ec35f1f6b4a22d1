#include "cooc/rescorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>

#include "cooc/error.hpp"
#include "cooc/numfmt.hpp"
#include "cooc/parallel.hpp"
#include "cooc/text.hpp"

namespace cooc {

void RescoreConfig::validate() const {
  if (!(interpolation_weight >= 0.0) || !std::isfinite(interpolation_weight))
    throw DataError("interpolation weight must be a finite value >= 0");
}

double ModelPairScorer::conditional(const StructuredCode& pred, double pred_score,
                                    const StructuredCode& given) const {
  return predict(model_, extract_full(pred, given, pred_score, map_, model_.score_cfg));
}

double ModelPairScorer::log_conditional(const StructuredCode& pred, double pred_score,
                                        const StructuredCode& given) const {
  return log_sigmoid(
      model_.margin(extract_full(pred, given, pred_score, map_, model_.score_cfg)));
}

std::vector<ScoredCode> RescoreResult::ranked() const {
  auto out = final_scores;
  std::stable_sort(out.begin(), out.end(), [](const ScoredCode& a, const ScoredCode& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.code < b.code;
  });
  return out;
}

RescoreResult rescore_document(std::span<const ScoredCode> generated, const PairScorer& scorer,
                               const RescoreConfig& cfg) {
  cfg.validate();
  if (generated.empty()) throw DataError("no generated codes to rescore");
  {
    std::set<StructuredCode> seen;
    for (const auto& g : generated) {
      if (!seen.insert(g.code).second)
        throw DataError("duplicate generated code " + g.code.string());
      if (!(g.score >= 0.0 && g.score <= 1.0))
        throw DataError("score " + format_double(g.score) + " outside [0, 1] for " +
                        g.code.string());
    }
  }

  const std::size_t n = generated.size();
  const bool from_one = cfg.starts_from_one();
  std::vector<double> log_current(n);
  for (std::size_t i = 0; i < n; ++i)
    log_current[i] = from_one ? 0.0 : std::log(generated[i].score);

  RescoreResult result;
  std::vector<bool> popped(n, false);
  // Codes never multiplied keep their initial value bit-for-bit.
  std::vector<bool> touched(n, false);
  std::vector<std::size_t> pop_index;

  // Higher current score first, then higher primary score, then smaller code.
  auto better = [&](std::size_t a, std::size_t b) {
    if (log_current[a] != log_current[b]) return log_current[a] > log_current[b];
    if (generated[a].score != generated[b].score) return generated[a].score > generated[b].score;
    return generated[a].code < generated[b].code;
  };

  const std::size_t depth = std::min(cfg.depth, n);
  for (std::size_t step = 0; step < depth; ++step) {
    std::size_t top = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!popped[i] && (top == n || better(i, top))) top = i;
    popped[top] = true;
    pop_index.push_back(top);
    result.pop_order.push_back(generated[top].code);

    for (std::size_t k = 0; k < n; ++k) {
      if (popped[k]) continue;
      double feature_score = cfg.score_feature_from_current
                                 ? std::clamp(std::exp(log_current[k]), 0.0, 1.0)
                                 : generated[k].score;
      double log_p = scorer.log_conditional(generated[k].code, feature_score, generated[top].code);
      result.factor_log[generated[k].code].push_back(std::exp(log_p));
      if (cfg.interpolation_weight != 0.0) {
        log_current[k] += cfg.interpolation_weight * log_p;
        touched[k] = true;
      }
    }
  }

  result.final_scores.reserve(n);
  result.log_scores = log_current;
  for (std::size_t i = 0; i < n; ++i) {
    double initial = from_one ? 1.0 : generated[i].score;
    result.final_scores.push_back({generated[i].code, touched[i] ? std::exp(log_current[i]) : initial});
  }
  result.ranking_degenerate = from_one && depth == 0;
  return result;
}

RescoreResult rescore_document(std::span<const ScoredCode> generated, const CoocModel& model,
                               const ConceptMap& map, const RescoreConfig& cfg) {
  return rescore_document(generated, ModelPairScorer(model, map), cfg);
}

RescoreBatch rescore_corpus(std::span<const CorpusRecord> corpus, const CoocModel& model,
                            const ConceptMap& map, const RescoreConfig& cfg, int workers) {
  cfg.validate();
  ModelPairScorer scorer(model, map);
  std::vector<std::optional<RescoreResult>> results(corpus.size());
  std::vector<std::optional<RecordError>> errors(corpus.size());
  parallel_for(corpus.size(), resolve_workers(workers), [&](std::size_t i) {
    try {
      results[i] = rescore_document(corpus[i].generated, scorer, cfg);
      results[i]->doc_id = corpus[i].doc_id;
    } catch (const DataError& e) {
      errors[i] = RecordError{corpus[i].doc_id, e.what()};
    }
  });
  RescoreBatch batch;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (results[i]) batch.results.push_back(std::move(*results[i]));
    if (errors[i]) batch.errors.push_back(std::move(*errors[i]));
  }
  return batch;
}

void write_rescored(std::ostream& out, std::span<const RescoreResult> results, bool audit) {
  std::string buf;
  for (const auto& r : results) {
    buf += r.doc_id;
    buf += '\t';
    auto ranked = r.ranked();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (i) buf += ',';
      buf += ranked[i].code.str();
      buf += ':';
      append_double(buf, ranked[i].score);
    }
    if (audit) {
      buf += "\tpop=";
      for (std::size_t i = 0; i < r.pop_order.size(); ++i) {
        if (i) buf += ',';
        buf += r.pop_order[i].str();
      }
      buf += "\tfactors=";
      bool first = true;
      for (const auto& [code, factors] : r.factor_log) {
        if (!first) buf += '|';
        first = false;
        buf += code.str();
        buf += ':';
        for (std::size_t i = 0; i < factors.size(); ++i) {
          if (i) buf += ';';
          append_double(buf, factors[i]);
        }
      }
    }
    buf += '\n';
  }
  out << buf;
  if (!out) throw IoError("failed writing rescored output");
}

std::vector<DocPredictions> read_predictions(std::istream& in) {
  std::vector<DocPredictions> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = chomp(raw);
    if (is_blank_or_comment(line)) continue;
    auto fields = split(line, '\t');
    if (fields.size() < 2) throw ParseError("expected doc_id<TAB>scored codes", lineno);
    DocPredictions doc;
    doc.doc_id = std::string(trim(fields[0]));
    if (doc.doc_id.empty()) throw ParseError("empty doc_id", lineno);
    if (!trim(fields[1]).empty()) {
      for (auto item : split(fields[1], ',')) {
        auto colon = item.rfind(':');
        if (colon == std::string_view::npos) throw ParseError("expected CODE:score", lineno);
        try {
          doc.scored.push_back(
              {parse_code(trim(item.substr(0, colon))), parse_double(item.substr(colon + 1), lineno)});
        } catch (const CodeError& e) {
          throw ParseError(e.what(), lineno);
        }
      }
    }
    out.push_back(std::move(doc));
  }
  return out;
}

std::vector<DocPredictions> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_predictions(in);
}

std::vector<DocPredictions> predictions_from_corpus(std::span<const CorpusRecord> corpus) {
  std::vector<DocPredictions> out;
  out.reserve(corpus.size());
  for (const auto& rec : corpus) out.push_back({rec.doc_id, rec.generated});
  return out;
}

}  // namespace cooc
