#include <cmath>
#include <set>
#include <sstream>

#include "cooc/error.hpp"
#include "cooc/eval.hpp"
#include "cooc/synth.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace cooc;
using cooc::testing::code;

namespace {

const char* kSpec = R"({
  "n_docs": 10000,
  "test_docs": 2000,
  "rng_seed": 7,
  "background": {"count": 40, "axes": ["0", "DSH", "BTR", "0123456789", "034", "Z", "XZ"],
                 "rate_min": 0.01, "rate_max": 0.05},
  "base_rates": {"30243K1": 0.2, "BP07ZZZ": 0.1},
  "exclusion_cliques": [{"codes": ["0SR901Z", "0SR902Z", "0SR903Z"], "rate": 0.3},
                        {"codes": ["0SRB01Z", "0SRB03Z"], "rate": 0.2}],
  "affinity_pairs": [{"anchor": "30243K1", "partner": "30243L1", "p": 0.9}],
  "scorer": {"confusion_prob": 0.4, "distractors_min": 0, "distractors_max": 0}
})";

std::string serialize(const SynthCorpus& c) {
  std::ostringstream out;
  write_corpus(out, c.train);
  out << "--\n";
  write_corpus(out, c.test);
  out << "--\n";
  write_concept_map(out, c.concepts);
  return out.str();
}

std::vector<CorpusRecord> all_docs(const SynthCorpus& c) {
  auto v = c.train;
  v.insert(v.end(), c.test.begin(), c.test.end());
  return v;
}

double sigma3(double p, double n) { return 3.0 * std::sqrt(p * (1 - p) / n); }

}  // namespace

TEST_CASE("generation is deterministic and worker independent") {
  auto spec = parse_synth_spec(kSpec);
  spec.n_docs = 3000;
  spec.test_docs = 500;
  auto a = serialize(generate_corpus(spec, 1));
  CHECK(a == serialize(generate_corpus(spec, 1)));
  CHECK(a == serialize(generate_corpus(spec, 4)));
  spec.rng_seed = 8;
  CHECK(a != serialize(generate_corpus(spec, 1)));
}

TEST_CASE("split sizes and document ids") {
  auto spec = parse_synth_spec(kSpec);
  auto c = generate_corpus(spec);
  CHECK(c.train.size() == 8000);
  CHECK(c.test.size() == 2000);
  CHECK(c.train.front().doc_id == "doc000001");
  CHECK(c.test.back().doc_id == "doc010000");
  for (const auto& r : all_docs(c)) {
    CHECK(r.manual.size() >= 1);
    CHECK_NOTHROW(r.validate(true));
  }
  CHECK(c.inventory.size() == 40 + 2 + 5 + 1);
}

TEST_CASE("cliques hold in gold but not in GEN") {
  auto spec = parse_synth_spec(kSpec);
  auto c = generate_corpus(spec);
  auto docs = all_docs(c);
  auto s = describe_corpus(docs, spec.exclusion_cliques);
  CHECK(s.clique_violations_gold == 0);
  CHECK(s.clique_violations_generated > 0);
  // Direct check, independent of describe_corpus.
  for (const auto& r : docs)
    for (const auto& clique : spec.exclusion_cliques) {
      int members = 0;
      for (const auto& m : r.manual)
        if (std::find(clique.codes.begin(), clique.codes.end(), m) != clique.codes.end()) ++members;
      REQUIRE(members <= 1);
    }
}

TEST_CASE("affinity probability recovered within 3 sigma") {
  auto spec = parse_synth_spec(kSpec);
  auto c = generate_corpus(spec);
  auto docs = all_docs(c);
  double n = static_cast<double>(code_count(docs, code("30243K1")));
  REQUIRE(n > 1000);
  double p = naive_cond_prob(docs, code("30243L1"), code("30243K1"));
  CHECK(std::abs(p - 0.9) < sigma3(0.9, n));
  // The partner has no base rate, so it never appears without its anchor.
  CHECK(naive_cond_prob(docs, code("30243K1"), code("30243L1")) == 1.0);
}

TEST_CASE("clique confusion rate recovered within 3 sigma") {
  auto spec = parse_synth_spec(kSpec);
  auto c = generate_corpus(spec);
  auto docs = all_docs(c);
  auto s = describe_corpus(docs, spec.exclusion_cliques);
  REQUIRE(s.clique_opportunities > 1000);
  auto rate = s.clique_confusion_rate();
  REQUIRE(rate.has_value());
  CHECK(std::abs(*rate - 0.4) < sigma3(0.4, static_cast<double>(s.clique_opportunities)));
}

TEST_CASE("base rate marginals are honored") {
  auto spec = parse_synth_spec(kSpec);
  auto c = generate_corpus(spec);
  auto docs = all_docs(c);
  auto s = describe_corpus(docs);
  // BP07ZZZ is an independent code with rate 0.1; conditioning on at least one
  // gold code inflates it by 1/P(nonempty), computed from the draw itself.
  double n = static_cast<double>(docs.size());
  CHECK(s.marginals.at(code("BP07ZZZ")) >= 0.1 - sigma3(0.1, n));
  CHECK(s.marginals.at(code("BP07ZZZ")) < 0.16);
  // A clique member's marginal is rate / size.
  CHECK(s.marginals.at(code("0SRB01Z")) == doctest::Approx(0.1).epsilon(0.2));
}

TEST_CASE("no noise means GEN equals gold") {
  auto spec = parse_synth_spec(kSpec);
  spec.scorer.confusion_prob = 0.0;
  spec.n_docs = 2000;
  spec.test_docs = 0;
  auto c = generate_corpus(spec);
  for (const auto& r : c.train) {
    std::set<StructuredCode> gold(r.manual.begin(), r.manual.end()), gen;
    for (const auto& g : r.generated) {
      gen.insert(g.code);
      CHECK(g.score >= 0.0);
      CHECK(g.score <= 1.0);
      CHECK(std::round(g.score * 1e4) / 1e4 == g.score);
    }
    CHECK(gen == gold);
  }
}

TEST_CASE("single certain code") {
  SynthSpec spec;
  spec.n_docs = 100;
  spec.base_rates[code("BP07ZZZ")] = 1.0;
  auto c = generate_corpus(spec);
  auto s = describe_corpus(c.train);
  CHECK(s.marginals.at(code("BP07ZZZ")) == 1.0);
  CHECK(s.mean_gold == 1.0);
}

TEST_CASE("empty corpus summary") {
  auto s = describe_corpus({});
  CHECK(s.documents == 0);
  CHECK(s.marginals.empty());
  CHECK(s.cooccurrence.empty());
  CHECK_FALSE(s.clique_confusion_rate().has_value());
}

TEST_CASE("distractors come from the inventory with distractor scores") {
  auto spec = parse_synth_spec(kSpec);
  spec.scorer.distractors_min = 3;
  spec.scorer.distractors_max = 3;
  spec.scorer.confusion_prob = 0.0;
  spec.n_docs = 500;
  spec.test_docs = 0;
  auto c = generate_corpus(spec);
  std::set<StructuredCode> inventory(c.inventory.begin(), c.inventory.end());
  double wrong_mean = 0.0, right_mean = 0.0;
  std::size_t wrong = 0, right = 0;
  for (const auto& r : c.train) {
    CHECK(r.generated.size() == r.manual.size() + 3);
    std::set<StructuredCode> gold(r.manual.begin(), r.manual.end());
    for (const auto& g : r.generated) {
      CHECK(inventory.contains(g.code));
      if (gold.contains(g.code)) {
        right_mean += g.score;
        ++right;
      } else {
        wrong_mean += g.score;
        ++wrong;
      }
    }
  }
  // Beta(8,2) has mean 0.8, Beta(2,6) mean 0.25.
  CHECK(right_mean / right == doctest::Approx(0.8).epsilon(0.03));
  CHECK(wrong_mean / wrong == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("synthetic concepts come from axes") {
  CHECK(synthetic_concepts(code("0SR901Z")) ==
        ConceptSet{"op:0SR", "site:0S9", "approach:00", "device:01"});
  auto c = generate_corpus(parse_synth_spec(kSpec));
  REQUIRE(c.concepts.find(code("0SR901Z")));
  CHECK(concepts_for(code("0SR901Z"), c.concepts).contains("device:01"));
}

TEST_CASE("spec parsing and validation errors") {
  CHECK_THROWS_AS(parse_synth_spec("{"), ParseError);
  CHECK_THROWS_AS(parse_synth_spec(R"({"n_docs": 5, "bogus": 1})"), ParseError);
  CHECK_THROWS_AS(parse_synth_spec(R"({"n_docs": 5, "scorer": {"confusion": 0.1}})"), ParseError);
  CHECK_THROWS_AS(parse_synth_spec(R"({"test_docs": 5})"), ParseError);
  CHECK_THROWS_AS(parse_synth_spec(R"({"n_docs": 5, "base_rates": {"BAD": 0.1}})"), ParseError);

  auto spec = parse_synth_spec(kSpec);
  auto bad = spec;
  bad.test_docs = bad.n_docs + 1;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = spec;
  bad.exclusion_cliques[1].codes.push_back(code("0SR901Z"));
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = spec;
  bad.affinity_pairs.push_back({code("0SR901Z"), code("BP07ZZZ"), 0.5});
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = spec;
  bad.base_rates[code("0SR902Z")] = 0.1;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = spec;
  bad.scorer.confusion_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = spec;
  bad.scorer.correct.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = spec;
  bad.exclusion_cliques[0].codes.resize(1);
  CHECK_THROWS_AS(bad.validate(), DataError);

  CHECK_THROWS_AS(load_synth_spec("/nonexistent/spec.json"), IoError);
}

TEST_CASE("summary json is well formed") {
  auto spec = parse_synth_spec(kSpec);
  spec.n_docs = 200;
  spec.test_docs = 0;
  auto c = generate_corpus(spec);
  std::ostringstream out;
  write_summary_json(out, describe_corpus(c.train, spec.exclusion_cliques));
  CHECK(out.str().find("\"clique_confusion_rate\"") != std::string::npos);
  CHECK(out.str().find("\"documents\": 200") != std::string::npos);
}
