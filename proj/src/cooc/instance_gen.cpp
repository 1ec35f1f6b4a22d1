#include "cooc/instance_gen.hpp"

#include <algorithm>
#include <optional>
#include <unordered_set>

#include "cooc/error.hpp"
#include "cooc/numfmt.hpp"
#include "cooc/parallel.hpp"
#include "cooc/rng.hpp"
#include "cooc/text.hpp"

namespace cooc {

void GenConfig::validate() const {
  if (top_k < 1) throw DataError("top_k must be >= 1");
  if (!(neg_subsample_rate > 0.0 && neg_subsample_rate <= 1.0))
    throw DataError("negative subsampling rate must be in (0, 1]");
  score_cfg.validate();
}

namespace {

struct DocOutput {
  std::vector<TrainingInstance> instances;
  std::uint64_t dropped = 0;
  std::optional<RecordError> error;
};

DocOutput generate_for_document(const CorpusRecord& rec, const ConceptMap& map,
                                const GenConfig& cfg) {
  DocOutput out;
  try {
    rec.validate(/*require_manual=*/true);
  } catch (const DataError& e) {
    out.error = RecordError{rec.doc_id, e.what()};
    return out;
  }

  struct Candidate {
    StructuredCode code;
    std::optional<double> score;
    bool manual;
  };
  auto is_manual = [&](const StructuredCode& c) {
    return std::find(rec.manual.begin(), rec.manual.end(), c) != rec.manual.end();
  };
  std::vector<Candidate> candidates;
  for (const auto& g : top_k(rec.generated, cfg.top_k))
    candidates.push_back({g.code, g.score, is_manual(g.code)});
  for (const auto& m : rec.manual) {
    bool present = std::any_of(candidates.begin(), candidates.end(),
                               [&](const Candidate& c) { return c.code == m; });
    if (present) continue;
    std::optional<double> score;
    auto it = std::find_if(rec.generated.begin(), rec.generated.end(),
                           [&](const ScoredCode& g) { return g.code == m; });
    if (it != rec.generated.end())
      score = it->score;
    else if (cfg.manual_only == ManualOnlyScore::kZero)
      score = 0.0;
    candidates.push_back({m, score, true});
  }

  auto rng = derived_stream(cfg.rng_seed, rec.doc_id);
  const double neg_weight = cfg.weight_negatives ? 1.0 / cfg.neg_subsample_rate : 1.0;
  std::vector<StructuredCode> givens;
  for (const auto& g : rec.manual)
    if (std::find(givens.begin(), givens.end(), g) == givens.end()) givens.push_back(g);

  for (const auto& given : givens) {
    for (const auto& cand : candidates) {
      if (cand.code == given) continue;
      if (!cand.manual) {
        // Drawn for every negative, so the stream is identical across rates.
        double u = uniform01(rng);
        if (!(u < cfg.neg_subsample_rate)) {
          ++out.dropped;
          continue;
        }
      }
      TrainingInstance inst;
      inst.features = extract_full(cand.code, given, cand.score, map, cfg.score_cfg);
      inst.label = cand.manual;
      inst.weight = cand.manual ? 1.0 : neg_weight;
      out.instances.push_back(std::move(inst));
    }
  }
  return out;
}

}  // namespace

GenerationReport generate_instances(std::span<const CorpusRecord> corpus, const ConceptMap& map,
                                    const GenConfig& cfg, const InstanceSink& sink) {
  cfg.validate();
  GenerationReport report;
  std::unordered_set<std::string> features;
  const unsigned workers = resolve_workers(cfg.workers);
  constexpr std::size_t kChunk = 256;

  for (std::size_t start = 0; start < corpus.size(); start += kChunk) {
    std::size_t n = std::min(kChunk, corpus.size() - start);
    std::vector<DocOutput> outputs(n);
    parallel_for(n, workers, [&](std::size_t i) {
      outputs[i] = generate_for_document(corpus[start + i], map, cfg);
    });
    for (auto& o : outputs) {
      ++report.stats.records;
      if (o.error) {
        ++report.stats.records_skipped;
        report.errors.push_back(std::move(*o.error));
        continue;
      }
      report.stats.negatives_dropped += o.dropped;
      for (const auto& inst : o.instances) {
        if (inst.label)
          ++report.stats.positives;
        else
          ++report.stats.negatives_kept;
        for (const auto& [name, value] : inst.features) features.insert(name);
        sink(inst);
      }
    }
  }
  report.stats.distinct_features = features.size();
  return report;
}

InstanceStats instance_stats(std::span<const TrainingInstance> instances) {
  InstanceStats stats;
  std::unordered_set<std::string> features;
  for (const auto& inst : instances) {
    if (inst.label)
      ++stats.positives;
    else
      ++stats.negatives_kept;
    for (const auto& [name, value] : inst.features) features.insert(name);
  }
  stats.distinct_features = features.size();
  return stats;
}

std::string instance_file_header(const ScoreFeatureConfig& cfg) {
  std::string out = "#cooc-instances " + std::to_string(kInstanceFormatVersion);
  out += cfg.enabled ? " enabled=1" : " enabled=0";
  out += cfg.include_raw_score ? " raw=1" : " raw=0";
  out += cfg.raw_log_odds ? " log_odds=1" : " log_odds=0";
  out += " thresholds=";
  if (cfg.thresholds.empty()) out += '-';
  for (std::size_t i = 0; i < cfg.thresholds.size(); ++i) {
    if (i) out += ',';
    append_double(out, cfg.thresholds[i]);
  }
  out += '\n';
  return out;
}

void write_instance(std::string& out, const TrainingInstance& instance) {
  out += instance.label ? '1' : '0';
  out += '\t';
  append_double(out, instance.weight);
  for (const auto& [name, value] : instance.features) {
    out += '\t';
    out += name;
    out += '=';
    append_double(out, value);
  }
  out += '\n';
}

namespace {

constexpr std::string_view kHeaderTag = "#cooc-instances ";

ScoreFeatureConfig parse_header(std::string_view line, std::size_t lineno) {
  auto fields = split(line.substr(kHeaderTag.size()), ' ');
  if (fields.empty() || fields[0] != std::to_string(kInstanceFormatVersion))
    throw FormatVersionError("unsupported instance format version '" +
                             std::string(fields.empty() ? "" : fields[0]) + "'");
  ScoreFeatureConfig cfg;
  auto flag = [&](std::string_view v) {
    if (v != "0" && v != "1") throw ParseError("header flags must be 0 or 1", lineno);
    return v == "1";
  };
  for (std::size_t k = 1; k < fields.size(); ++k) {
    auto eq = fields[k].find('=');
    if (eq == std::string_view::npos) throw ParseError("malformed instance header", lineno);
    auto key = fields[k].substr(0, eq);
    auto value = fields[k].substr(eq + 1);
    if (key == "enabled") {
      cfg.enabled = flag(value);
    } else if (key == "raw") {
      cfg.include_raw_score = flag(value);
    } else if (key == "log_odds") {
      cfg.raw_log_odds = flag(value);
    } else if (key == "thresholds") {
      cfg.thresholds.clear();
      if (value != "-")
        for (auto t : split(value, ',')) cfg.thresholds.push_back(parse_double(t, lineno));
    } else {
      throw ParseError("unknown instance header key '" + std::string(key) + "'", lineno);
    }
  }
  try {
    cfg.validate();
  } catch (const DataError& e) {
    throw ParseError(e.what(), lineno);
  }
  return cfg;
}

template <typename Fn>
void parse_instance_lines(std::istream& in, std::optional<ScoreFeatureConfig>* header,
                          Fn&& on_feature_row) {
  std::string raw;
  std::size_t lineno = 0;
  std::vector<std::pair<std::string_view, double>> feats;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = chomp(raw);
    if (line.starts_with(kHeaderTag)) {
      auto cfg = parse_header(line, lineno);
      if (header) *header = std::move(cfg);
      continue;
    }
    if (is_blank_or_comment(line)) continue;
    auto fields = split(line, '\t');
    if (fields.size() < 2) throw ParseError("expected label<TAB>weight[<TAB>features]", lineno);
    bool label;
    if (fields[0] == "1")
      label = true;
    else if (fields[0] == "0")
      label = false;
    else
      throw ParseError("label must be 0 or 1", lineno);
    double weight = parse_double(fields[1], lineno);
    if (!(weight > 0.0)) throw ParseError("weight must be positive", lineno);
    feats.clear();
    for (std::size_t k = 2; k < fields.size(); ++k) {
      auto eq = fields[k].rfind('=');
      if (eq == std::string_view::npos || eq == 0)
        throw ParseError("expected name=value feature", lineno);
      feats.emplace_back(fields[k].substr(0, eq), parse_double(fields[k].substr(eq + 1), lineno));
    }
    try {
      on_feature_row(feats, label, weight);
    } catch (const DataError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
}

}  // namespace

void read_instances(std::istream& in, Dataset& data,
                    std::optional<ScoreFeatureConfig>* header) {
  std::vector<std::pair<std::uint32_t, double>> row;
  std::unordered_set<std::uint32_t> seen;
  parse_instance_lines(in, header, [&](const auto& feats, bool label, double weight) {
    row.clear();
    seen.clear();
    for (const auto& [name, value] : feats) {
      auto id = data.intern(name);
      if (!seen.insert(id).second) throw DataError("duplicate feature '" + std::string(name) + "'");
      row.emplace_back(id, value);
    }
    data.add_row(row, label, weight);
  });
}

std::vector<TrainingInstance> read_instances(std::istream& in,
                                             std::optional<ScoreFeatureConfig>* header) {
  std::vector<TrainingInstance> out;
  parse_instance_lines(in, header, [&](const auto& feats, bool label, double weight) {
    TrainingInstance inst;
    for (const auto& [name, value] : feats) inst.features.add(std::string(name), value);
    inst.label = label;
    inst.weight = weight;
    out.push_back(std::move(inst));
  });
  return out;
}

}  // namespace cooc
