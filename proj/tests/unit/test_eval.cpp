#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "cooc/error.hpp"
#include "cooc/eval.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace cooc;
using cooc::testing::code;

namespace {

CorpusRecord gold_doc(std::string id, std::vector<StructuredCode> manual) {
  return {std::move(id), std::move(manual), {}};
}

// Random gold corpus and predictions that overlap it partially.
struct Fixture {
  std::vector<CorpusRecord> corpus;
  std::vector<DocPredictions> preds;
};

Fixture random_fixture(std::uint64_t seed, std::size_t docs) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Fixture f;
  for (std::size_t d = 0; d < docs; ++d) {
    std::set<StructuredCode> gold, pred;
    std::size_t ng = 1 + rng() % 4;
    while (gold.size() < ng) gold.insert(testing::random_code(rng, "0123"));
    DocPredictions p{"d" + std::to_string(d), {}};
    for (const auto& g : gold)
      if (u(rng) < 0.7) {
        pred.insert(g);
        p.scored.push_back({g, std::round(u(rng) * 50) / 50});
      }
    std::size_t extra = rng() % 4;
    for (std::size_t i = 0; i < extra; ++i) {
      auto c = testing::random_code(rng, "0123");
      if (pred.insert(c).second) p.scored.push_back({c, std::round(u(rng) * 50) / 50});
    }
    f.corpus.push_back(gold_doc(p.doc_id, {gold.begin(), gold.end()}));
    f.preds.push_back(std::move(p));
  }
  return f;
}

}  // namespace

TEST_CASE("precision and recall on a single document") {
  std::vector<CorpusRecord> corpus{gold_doc("d", {code("BP07ZZZ"), code("BP08ZZZ")})};
  auto gold = GoldIndex::from_corpus(corpus);
  std::vector<DocPredictions> preds{{"d", {{code("BP07ZZZ"), 0.9}, {code("0SR901Z"), 0.8}}}};
  auto p = pr_at_threshold(preds, gold, 0.5);
  CHECK(p.precision == 0.5);
  CHECK(p.recall == 0.5);
  CHECK(p.f1 == 0.5);

  auto high = pr_at_threshold(preds, gold, 0.95);
  CHECK(high.precision == 1.0);
  CHECK(high.recall == 0.0);
  CHECK(high.f1 == 0.0);
  CHECK(high.predicted == 0);

  // Inclusive threshold.
  CHECK(pr_at_threshold(preds, gold, 0.9).predicted == 1);
}

TEST_CASE("perfect predictions") {
  std::vector<CorpusRecord> corpus{gold_doc("d", {code("BP07ZZZ"), code("BP08ZZZ")})};
  auto gold = GoldIndex::from_corpus(corpus);
  std::vector<DocPredictions> preds{{"d", {{code("BP07ZZZ"), 1.0}, {code("BP08ZZZ"), 1.0}}}};
  auto p = pr_at_threshold(preds, gold, 0.5);
  CHECK(p.precision == 1.0);
  CHECK(p.recall == 1.0);
  CHECK(p.f1 == 1.0);
  auto be = break_even(preds, gold);
  CHECK(be.f == 1.0);
  CHECK(be.threshold == 1.0);
}

TEST_CASE("break-even with one correct prediction and two gold codes") {
  std::vector<CorpusRecord> corpus{gold_doc("d", {code("BP07ZZZ"), code("BP08ZZZ")})};
  auto gold = GoldIndex::from_corpus(corpus);
  std::vector<DocPredictions> preds{{"d", {{code("BP07ZZZ"), 0.6}}}};
  auto be = break_even(preds, gold);
  CHECK(be.threshold == 0.6);
  CHECK(be.precision == 1.0);
  CHECK(be.recall == 0.5);
  CHECK(be.f == doctest::Approx(2.0 / 3.0));
  CHECK_FALSE(be.interpolated);
}

TEST_CASE("errors") {
  std::vector<CorpusRecord> corpus{gold_doc("d", {code("BP07ZZZ")})};
  auto gold = GoldIndex::from_corpus(corpus);
  std::vector<DocPredictions> unknown{{"zzz", {{code("BP07ZZZ"), 0.5}}}};
  CHECK_THROWS_WITH_AS(pr_at_threshold(unknown, gold, 0.5), doctest::Contains("zzz"), DataError);
  std::vector<DocPredictions> dup{{"d", {{code("BP07ZZZ"), 0.5}, {code("BP07ZZZ"), 0.4}}}};
  CHECK_THROWS_AS(pr_at_threshold(dup, gold, 0.5), DataError);
  CHECK_THROWS_AS(break_even({}, gold), DataError);
}

TEST_CASE("sweep is monotone and micro counts equal per-document sums") {
  auto f = random_fixture(41, 400);
  auto gold = GoldIndex::from_corpus(f.corpus);
  auto sweep = threshold_sweep(f.preds, gold);
  REQUIRE(sweep.size() > 10);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    CHECK(sweep[i].threshold > sweep[i - 1].threshold);
    CHECK(sweep[i].recall <= sweep[i - 1].recall);
    CHECK(sweep[i].predicted <= sweep[i - 1].predicted);
  }
  for (const auto& pt : sweep) {
    // Second implementation: one document at a time.
    std::uint64_t predicted = 0, correct = 0, total = 0;
    for (std::size_t d = 0; d < f.corpus.size(); ++d) {
      std::set<StructuredCode> g(f.corpus[d].manual.begin(), f.corpus[d].manual.end());
      total += g.size();
      for (const auto& sc : f.preds[d].scored)
        if (sc.score >= pt.threshold) {
          ++predicted;
          if (g.contains(sc.code)) ++correct;
        }
    }
    CHECK(pt.predicted == predicted);
    CHECK(pt.correct == correct);
    CHECK(pt.gold == total);
    CHECK(pt.precision == doctest::Approx(predicted ? double(correct) / predicted : 1.0));
    CHECK(pt.recall == doctest::Approx(double(correct) / total));
    CHECK(pt.precision >= 0.0);
    CHECK(pt.precision <= 1.0);
    CHECK(pt.f1 <= 1.0);
  }
}

TEST_CASE("break-even matches a brute-force search over distinct scores") {
  for (std::uint64_t seed = 50; seed < 60; ++seed) {
    auto f = random_fixture(seed, 60);
    auto gold = GoldIndex::from_corpus(f.corpus);
    std::set<double> scores;
    for (const auto& p : f.preds)
      for (const auto& sc : p.scored) scores.insert(sc.score);
    PrfPoint best;
    double best_gap = INFINITY;
    for (double t : scores) {
      auto pt = pr_at_threshold(f.preds, gold, t);
      double gap = std::abs(pt.precision - pt.recall);
      if (gap < best_gap || (gap == best_gap && pt.f1 >= best.f1)) {
        best = pt;
        best_gap = gap;
      }
    }
    auto be = break_even(f.preds, gold);
    CHECK(be.threshold == best.threshold);
    CHECK(be.f == best.f1);

    auto interp = break_even(f.preds, gold, true);
    if (interp.interpolated) {
      CHECK(std::abs(interp.precision - interp.recall) < 1e-12);
      CHECK(interp.f == doctest::Approx(interp.precision));
    }
  }
}

TEST_CASE("evaluate builds rows in ascending order") {
  auto f = random_fixture(61, 50);
  auto gold = GoldIndex::from_corpus(f.corpus);
  std::vector<double> grid{0.9, 0.1, 0.5};
  auto report = evaluate(f.preds, gold, grid);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].threshold == 0.1);
  CHECK(report.rows[2].threshold == 0.9);
  CHECK(report.total_gold == gold.total());

  std::ostringstream table, records;
  write_report_table(table, report);
  write_report_records(records, report);
  CHECK(table.str().find("Threshold") != std::string::npos);
  CHECK(table.str().find("Break-even F") != std::string::npos);
  std::istringstream lines(records.str());
  std::string line;
  int rows = 0, be = 0;
  while (std::getline(lines, line)) {
    if (line.starts_with("row ")) ++rows;
    if (line.starts_with("break_even ")) ++be;
  }
  CHECK(rows == 3);
  CHECK(be == 1);
}

TEST_CASE("naive conditional probability") {
  const auto k1 = code("30243K1"), l1 = code("30243L1"), x = code("0SR901Z"), y = code("0SR903Z");
  std::vector<CorpusRecord> corpus;
  for (int i = 0; i < 6; ++i) {
    std::vector<StructuredCode> man{k1};
    if (i == 0) man.push_back(l1);
    if (i % 2) man.push_back(x);
    else man.push_back(y);
    corpus.push_back(gold_doc("d" + std::to_string(i), man));
  }
  CHECK(naive_cond_prob(corpus, l1, k1) == doctest::Approx(1.0 / 6.0));
  CHECK(std::round(naive_cond_prob(corpus, l1, k1) * 10000) / 10000 == 0.1667);
  CHECK(naive_cond_prob(corpus, y, x) == 0.0);
  CHECK(naive_cond_prob(corpus, x, x) == 1.0);
  CHECK(naive_cond_prob(corpus, k1, l1) == 1.0);
  CHECK_THROWS_AS(naive_cond_prob(corpus, k1, code("BP07ZZZ")), DataError);
}

TEST_CASE("naive conditional probability agrees with a double loop") {
  std::mt19937_64 rng(70);
  std::vector<CorpusRecord> corpus;
  for (int d = 0; d < 50; ++d) {
    std::set<StructuredCode> man;
    std::size_t n = 1 + rng() % 5;
    while (man.size() < n) man.insert(testing::random_code(rng, "01"));
    corpus.push_back(gold_doc("d" + std::to_string(d), {man.begin(), man.end()}));
  }
  std::set<StructuredCode> all;
  for (const auto& r : corpus) all.insert(r.manual.begin(), r.manual.end());
  for (const auto& g : all)
    for (const auto& p : all) {
      int both = 0, given = 0;
      for (const auto& r : corpus) {
        bool has_g = false, has_p = false;
        for (const auto& c : r.manual) {
          if (c == g) has_g = true;
          if (c == p) has_p = true;
        }
        given += has_g;
        both += has_g && has_p;
      }
      REQUIRE(given > 0);
      double v = naive_cond_prob(corpus, p, g);
      CHECK(v == double(both) / given);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(pair_count(corpus, p, g) == static_cast<std::uint64_t>(both));
      CHECK(code_count(corpus, g) == static_cast<std::uint64_t>(given));
    }
}

TEST_CASE("case study rows") {
  CoocModel untrained;
  ConceptMap map;
  std::vector<CaseStudyPair> pairs{{code("0SR903Z"), code("0SR901Z"), 0.9},
                                   {code("30243L1"), code("30243K1"), 0.9}};
  std::vector<CorpusRecord> corpus{gold_doc("a", {code("30243K1"), code("30243L1")}),
                                   gold_doc("b", {code("30243K1")})};
  auto rows = case_study(untrained, map, pairs, corpus);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) CHECK(r.model == 0.5);
  CHECK_FALSE(rows[0].naive.has_value());
  CHECK(rows[0].pair_count == 0u);
  CHECK(rows[1].naive == 0.5);
  CHECK(rows[1].pair_count == 1u);
  std::ostringstream out;
  write_case_study(out, rows);
  CHECK(out.str().find("C_pred") != std::string::npos);
  CHECK(out.str().find("30243L1") != std::string::npos);

  auto no_corpus = case_study(untrained, map, pairs);
  CHECK_FALSE(no_corpus[1].naive.has_value());
}

TEST_CASE("case study pairs file") {
  std::istringstream in("# pairs\n0SR903Z\t0SR901Z\n30243L1\t30243K1\t0.5\n");
  auto pairs = read_case_study_pairs(in);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].score == 0.9);
  CHECK(pairs[1].score == 0.5);
  std::istringstream bad("0SR903Z\n");
  CHECK_THROWS_AS(read_case_study_pairs(bad), ParseError);
}
