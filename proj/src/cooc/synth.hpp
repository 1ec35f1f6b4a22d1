#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cooc/codes.hpp"
#include "cooc/corpus.hpp"

namespace cooc {

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
};

// Codes that never co-occur in gold. When the clique fires (probability
// `rate`) exactly one member, chosen uniformly, joins the document.
struct ExclusionClique {
  std::vector<StructuredCode> codes;
  double rate = 0.0;
};

// When `anchor` is in a gold set, `partner` joins with probability `p`.
struct AffinityPair {
  StructuredCode anchor;
  StructuredCode partner;
  double p = 0.0;
};

// Random filler codes: one character drawn uniformly per axis from `axes[i]`,
// each code with a base rate drawn uniformly in [rate_min, rate_max].
struct BackgroundSpec {
  std::size_t count = 0;
  std::array<std::string, StructuredCode::kAxes> axes;
  double rate_min = 0.0;
  double rate_max = 0.0;
};

struct ScorerNoise {
  // Chance that a gold clique member drags one wrong sibling into GEN(D).
  double confusion_prob = 0.0;
  BetaParams correct{8.0, 2.0};
  BetaParams confused{8.0, 2.0};
  BetaParams distractor{2.0, 6.0};
  // Number of random distractors per document, uniform in [min, max].
  std::size_t distractors_min = 0;
  std::size_t distractors_max = 0;
  // Chance that a gold code is scored from the distractor distribution.
  double gold_demoted_prob = 0.0;
  // Scores are rounded to this many decimals.
  int score_decimals = 4;
};

struct SynthSpec {
  std::size_t n_docs = 0;
  // The last `test_docs` documents form the held-out split.
  std::size_t test_docs = 0;
  std::uint64_t rng_seed = 0;
  std::size_t min_gold = 1;
  std::string alphabet = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  BackgroundSpec background;
  // Independent inclusion probabilities for named codes (clique members
  // excluded; their marginal follows from the clique rate).
  std::map<StructuredCode, double> base_rates;
  std::vector<ExclusionClique> exclusion_cliques;
  std::vector<AffinityPair> affinity_pairs;
  ScorerNoise scorer;

  // Throws DataError for an inconsistent spec.
  void validate() const;
};

// JSON schema documented in the README.
SynthSpec parse_synth_spec(std::string_view json_text);
SynthSpec load_synth_spec(const std::string& path);

struct SynthCorpus {
  std::vector<CorpusRecord> train;
  std::vector<CorpusRecord> test;
  // Axis-derived concepts for every inventory code.
  ConceptMap concepts;
  // Every code the generator can emit, sorted.
  std::vector<StructuredCode> inventory;
};

// Deterministic given the spec; independent of `workers`.
SynthCorpus generate_corpus(const SynthSpec& spec, int workers = 0);

// op:<axes 1-3>, site:<axes 1,2,4>, approach:<axes 1,5>, device:<axes 1,6>.
ConceptSet synthetic_concepts(const StructuredCode& code);

struct CorpusSummary {
  std::size_t documents = 0;
  double mean_gold = 0.0;
  double mean_generated = 0.0;
  // Fraction of documents whose gold set holds the code.
  std::map<StructuredCode, double> marginals;
  // Documents whose gold set holds both codes (a < b).
  std::map<std::pair<StructuredCode, StructuredCode>, std::uint64_t> cooccurrence;
  // Fraction of GEN(D) entries that are gold, and of gold codes present in GEN(D).
  double generated_precision = 0.0;
  double gold_coverage = 0.0;
  // Gold codes from an exclusion clique, and how many had a sibling in GEN(D).
  std::uint64_t clique_opportunities = 0;
  std::uint64_t clique_confusions = 0;
  // Gold sets containing two members of one clique (must be 0 for synth output).
  std::uint64_t clique_violations_gold = 0;
  // GEN(D) lists containing two members of one clique.
  std::uint64_t clique_violations_generated = 0;

  std::optional<double> clique_confusion_rate() const {
    if (!clique_opportunities) return std::nullopt;
    return static_cast<double>(clique_confusions) / static_cast<double>(clique_opportunities);
  }
};

// Clique statistics need `cliques`; pass an empty span to skip them.
CorpusSummary describe_corpus(std::span<const CorpusRecord> corpus,
                              std::span<const ExclusionClique> cliques = {});
void write_summary_json(std::ostream& out, const CorpusSummary& summary);

}  // namespace cooc
