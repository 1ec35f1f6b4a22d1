#include "cooc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "cooc/error.hpp"
#include "cooc/parallel.hpp"
#include "cooc/rng.hpp"
#include "json.hpp"

namespace cooc {

using nlohmann::json;

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void check_beta(const BetaParams& b, const char* what) {
  if (!(b.alpha > 0.0 && b.beta > 0.0) || !std::isfinite(b.alpha) || !std::isfinite(b.beta))
    throw DataError(std::string(what) + " beta parameters must be positive");
}

}  // namespace

void SynthSpec::validate() const {
  if (n_docs == 0) throw DataError("n_docs must be positive");
  if (test_docs > n_docs) throw DataError("test_docs exceeds n_docs");
  Alphabet alpha(alphabet);
  auto check_code = [&](const StructuredCode& c) {
    for (std::size_t i = 0; i < StructuredCode::kAxes; ++i)
      if (!alpha.contains(c.axis(i)))
        throw DataError("code " + c.string() + " uses a character outside the alphabet");
  };

  std::set<StructuredCode> clique_members;
  for (const auto& clique : exclusion_cliques) {
    if (clique.codes.size() < 2) throw DataError("exclusion cliques need at least two codes");
    if (!is_probability(clique.rate)) throw DataError("clique rate must be in [0, 1]");
    for (const auto& c : clique.codes) {
      check_code(c);
      if (!clique_members.insert(c).second)
        throw DataError("code " + c.string() + " belongs to more than one exclusion clique");
      if (base_rates.contains(c))
        throw DataError("clique member " + c.string() + " must not carry its own base rate");
    }
  }
  for (const auto& [code, rate] : base_rates) {
    check_code(code);
    if (!is_probability(rate)) throw DataError("base rate for " + code.string() + " outside [0, 1]");
  }
  for (const auto& a : affinity_pairs) {
    check_code(a.anchor);
    check_code(a.partner);
    if (a.anchor == a.partner) throw DataError("affinity pair joins a code with itself");
    if (!is_probability(a.p)) throw DataError("affinity probability must be in [0, 1]");
    if (clique_members.contains(a.anchor) || clique_members.contains(a.partner))
      throw DataError("affinity pair " + a.anchor.string() + "/" + a.partner.string() +
                      " overlaps an exclusion clique");
  }
  if (background.count > 0) {
    for (const auto& axis : background.axes) {
      if (axis.empty()) throw DataError("background axis alphabets must be non-empty");
      for (char ch : axis)
        if (!alpha.contains(ch))
          throw DataError(std::string("background axis character '") + ch + "' not in alphabet");
    }
    if (!(is_probability(background.rate_min) && is_probability(background.rate_max) &&
          background.rate_min <= background.rate_max))
      throw DataError("background rates must satisfy 0 <= rate_min <= rate_max <= 1");
  }
  const auto& s = scorer;
  if (!is_probability(s.confusion_prob) || !is_probability(s.gold_demoted_prob))
    throw DataError("scorer probabilities must be in [0, 1]");
  if (s.distractors_min > s.distractors_max)
    throw DataError("distractors_min exceeds distractors_max");
  if (s.score_decimals < 1 || s.score_decimals > 12)
    throw DataError("score_decimals must be in [1, 12]");
  check_beta(s.correct, "correct");
  check_beta(s.confused, "confused");
  check_beta(s.distractor, "distractor");
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ParseError("unknown key '" + key + "' in " + where);
  }
}

StructuredCode code_from(const json& j, const Alphabet& alpha) {
  try {
    return parse_code(j.get<std::string>(), alpha);
  } catch (const CodeError& e) {
    throw ParseError(e.what());
  }
}

BetaParams beta_from(const json& j, const std::string& where) {
  reject_unknown(j, {"alpha", "beta"}, where);
  return {j.at("alpha").get<double>(), j.at("beta").get<double>()};
}

}  // namespace

SynthSpec parse_synth_spec(std::string_view json_text) {
  SynthSpec spec;
  try {
    json j = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
    reject_unknown(j,
                   {"n_docs", "test_docs", "rng_seed", "min_gold", "alphabet", "background",
                    "base_rates", "exclusion_cliques", "affinity_pairs", "scorer"},
                   "spec");
    spec.n_docs = j.at("n_docs").get<std::size_t>();
    spec.test_docs = j.value("test_docs", std::size_t{0});
    spec.rng_seed = j.value("rng_seed", std::uint64_t{0});
    spec.min_gold = j.value("min_gold", std::size_t{1});
    spec.alphabet = j.value("alphabet", spec.alphabet);
    Alphabet alpha(spec.alphabet);

    if (j.contains("background")) {
      const auto& b = j["background"];
      reject_unknown(b, {"count", "axes", "rate_min", "rate_max"}, "background");
      spec.background.count = b.at("count").get<std::size_t>();
      auto axes = b.at("axes").get<std::vector<std::string>>();
      if (axes.size() != StructuredCode::kAxes)
        throw ParseError("background.axes must list 7 axis alphabets");
      for (std::size_t i = 0; i < axes.size(); ++i) {
        for (auto& ch : axes[i]) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        spec.background.axes[i] = axes[i];
      }
      spec.background.rate_min = b.at("rate_min").get<double>();
      spec.background.rate_max = b.at("rate_max").get<double>();
    }
    if (j.contains("base_rates")) {
      for (const auto& [code, rate] : j["base_rates"].items())
        spec.base_rates[code_from(code, alpha)] = rate.get<double>();
    }
    for (const auto& c : j.value("exclusion_cliques", json::array())) {
      reject_unknown(c, {"codes", "rate"}, "exclusion clique");
      ExclusionClique clique;
      for (const auto& code : c.at("codes")) clique.codes.push_back(code_from(code, alpha));
      clique.rate = c.at("rate").get<double>();
      spec.exclusion_cliques.push_back(std::move(clique));
    }
    for (const auto& a : j.value("affinity_pairs", json::array())) {
      reject_unknown(a, {"anchor", "partner", "p"}, "affinity pair");
      spec.affinity_pairs.push_back(
          {code_from(a.at("anchor"), alpha), code_from(a.at("partner"), alpha), a.at("p").get<double>()});
    }
    if (j.contains("scorer")) {
      const auto& s = j["scorer"];
      reject_unknown(s,
                     {"confusion_prob", "correct_score", "confused_score", "distractor_score",
                      "distractors_min", "distractors_max", "gold_demoted_prob", "score_decimals"},
                     "scorer");
      auto& n = spec.scorer;
      n.confusion_prob = s.value("confusion_prob", n.confusion_prob);
      if (s.contains("correct_score")) n.correct = beta_from(s["correct_score"], "correct_score");
      if (s.contains("confused_score")) n.confused = beta_from(s["confused_score"], "confused_score");
      if (s.contains("distractor_score"))
        n.distractor = beta_from(s["distractor_score"], "distractor_score");
      n.distractors_min = s.value("distractors_min", n.distractors_min);
      n.distractors_max = s.value("distractors_max", n.distractors_max);
      n.gold_demoted_prob = s.value("gold_demoted_prob", n.gold_demoted_prob);
      n.score_decimals = s.value("score_decimals", n.score_decimals);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("synth spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_synth_spec(ss.str());
}

ConceptSet synthetic_concepts(const StructuredCode& code) {
  auto s = code.str();
  return {"op:" + std::string(s.substr(0, 3)),
          "site:" + std::string(s.substr(0, 2)) + s[3],
          std::string("approach:") + s[0] + s[4],
          std::string("device:") + s[0] + s[5]};
}

namespace {

class Generator {
 public:
  explicit Generator(const SynthSpec& spec) : spec_(spec) {
    std::set<StructuredCode> planted;
    for (const auto& c : spec.exclusion_cliques)
      for (const auto& code : c.codes) {
        planted.insert(code);
        clique_of_[code] = &c;
      }
    for (const auto& [code, rate] : spec.base_rates) planted.insert(code);
    for (const auto& a : spec.affinity_pairs) {
      planted.insert(a.anchor);
      planted.insert(a.partner);
    }
    for (const auto& [code, rate] : spec.base_rates) independent_.emplace_back(code, rate);

    // Background inventory.
    const auto& bg = spec.background;
    if (bg.count > 0) {
      auto rng = derived_stream(spec.rng_seed, std::string_view("inventory"));
      Alphabet alpha(spec.alphabet);
      std::set<StructuredCode> made;
      std::size_t attempts = 0;
      while (made.size() < bg.count) {
        if (++attempts > bg.count * 1000)
          throw DataError("background axes cannot produce " + std::to_string(bg.count) +
                          " distinct codes");
        std::string text(StructuredCode::kAxes, '0');
        for (std::size_t i = 0; i < StructuredCode::kAxes; ++i)
          text[i] = bg.axes[i][rng() % bg.axes[i].size()];
        auto code = parse_code(text, alpha);
        if (planted.contains(code) || !made.insert(code).second) continue;
        double rate = bg.rate_min + (bg.rate_max - bg.rate_min) * uniform01(rng);
        independent_.emplace_back(code, rate);
      }
    }
    std::set<StructuredCode> all(planted);
    for (const auto& [code, rate] : independent_) all.insert(code);
    inventory_.assign(all.begin(), all.end());
  }

  const std::vector<StructuredCode>& inventory() const { return inventory_; }

  CorpusRecord document(std::size_t index) const {
    auto rng = derived_stream(spec_.rng_seed, static_cast<std::uint64_t>(index));
    CorpusRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "doc%06zu", index + 1);
    rec.doc_id = id;

    std::set<StructuredCode> gold;
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 10000)
        throw DataError("spec rarely yields " + std::to_string(spec_.min_gold) + " gold codes");
      gold.clear();
      for (const auto& [code, rate] : independent_)
        if (uniform01(rng) < rate) gold.insert(code);
      for (const auto& clique : spec_.exclusion_cliques)
        if (uniform01(rng) < clique.rate) gold.insert(clique.codes[rng() % clique.codes.size()]);
      for (const auto& a : spec_.affinity_pairs)
        if (gold.contains(a.anchor) && !gold.contains(a.partner) && uniform01(rng) < a.p)
          gold.insert(a.partner);
      if (gold.size() >= spec_.min_gold) break;
    }
    rec.manual.assign(gold.begin(), gold.end());

    const auto& noise = spec_.scorer;
    std::map<StructuredCode, double> gen;
    for (const auto& g : rec.manual) {
      bool demoted = uniform01(rng) < noise.gold_demoted_prob;
      gen[g] = draw(rng, demoted ? noise.distractor : noise.correct);
    }
    for (const auto& g : rec.manual) {
      auto it = clique_of_.find(g);
      if (it == clique_of_.end()) continue;
      if (!(uniform01(rng) < noise.confusion_prob)) continue;
      const auto& codes = it->second->codes;
      // Uniform over the siblings of g.
      std::size_t pick = rng() % (codes.size() - 1);
      auto pos = static_cast<std::size_t>(std::find(codes.begin(), codes.end(), g) - codes.begin());
      if (pick >= pos) ++pick;
      if (!gen.contains(codes[pick])) gen[codes[pick]] = draw(rng, noise.confused);
    }
    std::size_t span = noise.distractors_max - noise.distractors_min + 1;
    std::size_t n_distractors = noise.distractors_min + rng() % span;
    n_distractors = std::min(n_distractors, inventory_.size() - std::min(inventory_.size(), gen.size()));
    for (std::size_t k = 0; k < n_distractors;) {
      const auto& code = inventory_[rng() % inventory_.size()];
      if (gen.contains(code)) continue;
      gen[code] = draw(rng, noise.distractor);
      ++k;
    }

    for (const auto& [code, score] : gen) rec.generated.push_back({code, score});
    std::stable_sort(rec.generated.begin(), rec.generated.end(),
                     [](const ScoredCode& a, const ScoredCode& b) {
                       if (a.score != b.score) return a.score > b.score;
                       return a.code < b.code;
                     });
    return rec;
  }

 private:
  double draw(std::mt19937_64& rng, const BetaParams& b) const {
    std::gamma_distribution<double> ga(b.alpha, 1.0), gb(b.beta, 1.0);
    double x = ga(rng);
    double y = gb(rng);
    double v = (x + y) > 0.0 ? x / (x + y) : 0.5;
    double scale = std::pow(10.0, spec_.scorer.score_decimals);
    return std::clamp(std::round(v * scale) / scale, 0.0, 1.0);
  }

  const SynthSpec& spec_;
  std::vector<std::pair<StructuredCode, double>> independent_;
  std::map<StructuredCode, const ExclusionClique*> clique_of_;
  std::vector<StructuredCode> inventory_;
};

}  // namespace

SynthCorpus generate_corpus(const SynthSpec& spec, int workers) {
  spec.validate();
  Generator gen(spec);
  std::vector<CorpusRecord> docs(spec.n_docs);
  parallel_for(spec.n_docs, resolve_workers(workers),
               [&](std::size_t i) { docs[i] = gen.document(i); });

  SynthCorpus out;
  const std::size_t n_train = spec.n_docs - spec.test_docs;
  out.train.assign(std::make_move_iterator(docs.begin()),
                   std::make_move_iterator(docs.begin() + static_cast<std::ptrdiff_t>(n_train)));
  out.test.assign(std::make_move_iterator(docs.begin() + static_cast<std::ptrdiff_t>(n_train)),
                  std::make_move_iterator(docs.end()));
  out.inventory = gen.inventory();
  for (const auto& code : out.inventory) out.concepts.add_concepts(code, synthetic_concepts(code));
  return out;
}

CorpusSummary describe_corpus(std::span<const CorpusRecord> corpus,
                              std::span<const ExclusionClique> cliques) {
  CorpusSummary s;
  s.documents = corpus.size();
  if (corpus.empty()) return s;
  std::map<StructuredCode, std::size_t> clique_index;
  for (std::size_t k = 0; k < cliques.size(); ++k)
    for (const auto& c : cliques[k].codes) clique_index[c] = k;

  std::map<StructuredCode, std::uint64_t> counts;
  std::uint64_t gold_total = 0, gen_total = 0, gen_correct = 0, covered = 0;
  for (const auto& rec : corpus) {
    std::set<StructuredCode> gold(rec.manual.begin(), rec.manual.end());
    std::set<StructuredCode> gen;
    for (const auto& g : rec.generated) gen.insert(g.code);
    gold_total += gold.size();
    gen_total += gen.size();
    for (const auto& c : gold) {
      ++counts[c];
      if (gen.contains(c)) ++covered;
    }
    for (const auto& c : gen)
      if (gold.contains(c)) ++gen_correct;
    for (auto a = gold.begin(); a != gold.end(); ++a)
      for (auto b = std::next(a); b != gold.end(); ++b) ++s.cooccurrence[{*a, *b}];

    if (!cliques.empty()) {
      auto violations = [&](const std::set<StructuredCode>& codes) {
        std::map<std::size_t, int> per_clique;
        for (const auto& c : codes)
          if (auto it = clique_index.find(c); it != clique_index.end()) ++per_clique[it->second];
        for (const auto& [k, n] : per_clique)
          if (n > 1) return true;
        return false;
      };
      if (violations(gold)) ++s.clique_violations_gold;
      if (violations(gen)) ++s.clique_violations_generated;
      for (const auto& c : gold) {
        auto it = clique_index.find(c);
        if (it == clique_index.end()) continue;
        ++s.clique_opportunities;
        for (const auto& sib : cliques[it->second].codes) {
          if (sib != c && gen.contains(sib)) {
            ++s.clique_confusions;
            break;
          }
        }
      }
    }
  }
  const double n = static_cast<double>(corpus.size());
  for (const auto& [code, count] : counts) s.marginals[code] = static_cast<double>(count) / n;
  s.mean_gold = static_cast<double>(gold_total) / n;
  s.mean_generated = static_cast<double>(gen_total) / n;
  s.generated_precision = gen_total ? static_cast<double>(gen_correct) / static_cast<double>(gen_total) : 0.0;
  s.gold_coverage = gold_total ? static_cast<double>(covered) / static_cast<double>(gold_total) : 0.0;
  return s;
}

void write_summary_json(std::ostream& out, const CorpusSummary& s) {
  json j;
  j["documents"] = s.documents;
  j["mean_gold"] = s.mean_gold;
  j["mean_generated"] = s.mean_generated;
  j["generated_precision"] = s.generated_precision;
  j["gold_coverage"] = s.gold_coverage;
  j["clique_opportunities"] = s.clique_opportunities;
  j["clique_confusions"] = s.clique_confusions;
  j["clique_violations_gold"] = s.clique_violations_gold;
  j["clique_violations_generated"] = s.clique_violations_generated;
  if (auto r = s.clique_confusion_rate()) j["clique_confusion_rate"] = *r;
  json marg = json::object();
  for (const auto& [code, m] : s.marginals) marg[code.string()] = m;
  j["marginals"] = marg;
  json pairs = json::array();
  for (const auto& [pair, count] : s.cooccurrence)
    pairs.push_back({pair.first.string(), pair.second.string(), count});
  j["cooccurrence"] = pairs;
  out << j.dump(2) << '\n';
}

}  // namespace cooc
