#include "cooc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cooc/error.hpp"
#include "cooc/numfmt.hpp"
#include "cooc/text.hpp"

namespace cooc {

GoldIndex GoldIndex::from_corpus(std::span<const CorpusRecord> corpus) {
  GoldIndex idx;
  for (const auto& rec : corpus) {
    auto [it, inserted] = idx.docs_.try_emplace(rec.doc_id);
    if (!inserted) throw DataError("document '" + rec.doc_id + "' appears twice in gold");
    it->second.insert(rec.manual.begin(), rec.manual.end());
    idx.total_ += it->second.size();
  }
  return idx;
}

const std::set<StructuredCode>* GoldIndex::find(const std::string& doc_id) const {
  auto it = docs_.find(doc_id);
  return it == docs_.end() ? nullptr : &it->second;
}

namespace {

struct Judged {
  double score;
  bool correct;
};

std::vector<Judged> judge(std::span<const DocPredictions> predictions, const GoldIndex& gold) {
  std::vector<Judged> out;
  std::set<std::string> docs_seen;
  for (const auto& doc : predictions) {
    const auto* g = gold.find(doc.doc_id);
    if (!g) throw DataError("predicted document '" + doc.doc_id + "' has no gold codes");
    if (!docs_seen.insert(doc.doc_id).second)
      throw DataError("document '" + doc.doc_id + "' is predicted twice");
    std::set<StructuredCode> seen;
    for (const auto& s : doc.scored) {
      if (!seen.insert(s.code).second)
        throw DataError("document '" + doc.doc_id + "' predicts " + s.code.string() + " twice");
      out.push_back({s.score, g->contains(s.code)});
    }
  }
  return out;
}

PrfPoint make_point(double t, std::uint64_t predicted, std::uint64_t correct, std::uint64_t gold) {
  PrfPoint p;
  p.threshold = t;
  p.predicted = predicted;
  p.correct = correct;
  p.gold = gold;
  p.precision = predicted ? static_cast<double>(correct) / static_cast<double>(predicted) : 1.0;
  p.recall = gold ? static_cast<double>(correct) / static_cast<double>(gold) : 0.0;
  p.f1 = (p.precision + p.recall) > 0.0 && correct > 0
             ? 2.0 * p.precision * p.recall / (p.precision + p.recall)
             : 0.0;
  return p;
}

}  // namespace

PrfPoint pr_at_threshold(std::span<const DocPredictions> predictions, const GoldIndex& gold,
                         double t) {
  std::uint64_t predicted = 0, correct = 0;
  for (const auto& j : judge(predictions, gold)) {
    if (j.score >= t) {
      ++predicted;
      if (j.correct) ++correct;
    }
  }
  return make_point(t, predicted, correct, gold.total());
}

std::vector<PrfPoint> threshold_sweep(std::span<const DocPredictions> predictions,
                                      const GoldIndex& gold) {
  auto judged = judge(predictions, gold);
  std::sort(judged.begin(), judged.end(),
            [](const Judged& a, const Judged& b) { return a.score > b.score; });
  std::vector<PrfPoint> points;
  std::uint64_t predicted = 0, correct = 0;
  for (std::size_t i = 0; i < judged.size();) {
    double s = judged[i].score;
    for (; i < judged.size() && judged[i].score == s; ++i) {
      ++predicted;
      if (judged[i].correct) ++correct;
    }
    points.push_back(make_point(s, predicted, correct, gold.total()));
  }
  std::reverse(points.begin(), points.end());
  return points;
}

BreakEven break_even(std::span<const DocPredictions> predictions, const GoldIndex& gold,
                     bool interpolate) {
  if (gold.total() == 0) throw DataError("break-even needs at least one gold code");
  auto points = threshold_sweep(predictions, gold);
  if (points.empty()) throw DataError("break-even needs at least one prediction");

  if (interpolate) {
    // Walk from the highest threshold down, where P - R starts non-negative.
    for (std::size_t k = points.size() - 1; k > 0; --k) {
      const auto& hi = points[k];
      const auto& lo = points[k - 1];
      double d_hi = hi.precision - hi.recall;
      double d_lo = lo.precision - lo.recall;
      if (d_hi >= 0.0 && d_lo <= 0.0 && d_hi != d_lo) {
        double frac = d_hi / (d_hi - d_lo);
        BreakEven be;
        be.interpolated = true;
        be.threshold = hi.threshold + frac * (lo.threshold - hi.threshold);
        be.precision = hi.precision + frac * (lo.precision - hi.precision);
        be.recall = hi.recall + frac * (lo.recall - hi.recall);
        be.f = be.precision;
        return be;
      }
    }
  }

  const PrfPoint* best = nullptr;
  for (auto it = points.rbegin(); it != points.rend(); ++it) {
    if (!best) {
      best = &*it;
      continue;
    }
    double gap = std::abs(it->precision - it->recall);
    double best_gap = std::abs(best->precision - best->recall);
    if (gap < best_gap || (gap == best_gap && it->f1 > best->f1)) best = &*it;
  }
  return {best->threshold, best->precision, best->recall, best->f1, false};
}

EvalReport evaluate(std::span<const DocPredictions> predictions, const GoldIndex& gold,
                    std::span<const double> thresholds, bool interpolate) {
  EvalReport report;
  report.total_gold = gold.total();
  std::vector<double> ts(thresholds.begin(), thresholds.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  for (double t : ts) report.rows.push_back(pr_at_threshold(predictions, gold, t));
  report.break_even = break_even(predictions, gold, interpolate);
  return report;
}

namespace {

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

void write_report_table(std::ostream& out, const EvalReport& report) {
  std::string buf;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-10s %-10s %-10s %10s\n", "Threshold", "Precision",
                "Recall", "F1", "Predicted");
  buf += line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof(line), "%-10s %-10s %-10s %-10s %10llu\n",
                  fixed(r.threshold, 2).c_str(), fixed(r.precision).c_str(),
                  fixed(r.recall).c_str(), fixed(r.f1).c_str(),
                  static_cast<unsigned long long>(r.predicted));
    buf += line;
  }
  const auto& be = report.break_even;
  std::snprintf(line, sizeof(line),
                "Break-even F %s at threshold %s (precision %s, recall %s%s); gold codes %llu\n",
                fixed(be.f).c_str(), fixed(be.threshold, 4).c_str(), fixed(be.precision).c_str(),
                fixed(be.recall).c_str(), be.interpolated ? ", interpolated" : "",
                static_cast<unsigned long long>(report.total_gold));
  buf += line;
  out << buf;
}

void write_report_records(std::ostream& out, const EvalReport& report) {
  std::string buf;
  for (const auto& r : report.rows) {
    buf += "row threshold=" + format_double(r.threshold) +
           " precision=" + format_double(r.precision) + " recall=" + format_double(r.recall) +
           " f1=" + format_double(r.f1) + " predicted=" + std::to_string(r.predicted) +
           " correct=" + std::to_string(r.correct) + " gold=" + std::to_string(r.gold) + "\n";
  }
  const auto& be = report.break_even;
  buf += "break_even threshold=" + format_double(be.threshold) +
         " precision=" + format_double(be.precision) + " recall=" + format_double(be.recall) +
         " f=" + format_double(be.f) + " interpolated=" + (be.interpolated ? "1" : "0") +
         " gold=" + std::to_string(report.total_gold) + "\n";
  out << buf;
}

std::uint64_t code_count(std::span<const CorpusRecord> corpus, const StructuredCode& code) {
  std::uint64_t n = 0;
  for (const auto& rec : corpus)
    if (std::find(rec.manual.begin(), rec.manual.end(), code) != rec.manual.end()) ++n;
  return n;
}

std::uint64_t pair_count(std::span<const CorpusRecord> corpus, const StructuredCode& a,
                         const StructuredCode& b) {
  std::uint64_t n = 0;
  for (const auto& rec : corpus) {
    bool has_a = std::find(rec.manual.begin(), rec.manual.end(), a) != rec.manual.end();
    bool has_b = std::find(rec.manual.begin(), rec.manual.end(), b) != rec.manual.end();
    if (has_a && has_b) ++n;
  }
  return n;
}

double naive_cond_prob(std::span<const CorpusRecord> corpus, const StructuredCode& pred,
                       const StructuredCode& given) {
  auto given_count = code_count(corpus, given);
  if (given_count == 0)
    throw DataError("code " + given.string() + " never occurs; conditional is undefined");
  return static_cast<double>(pair_count(corpus, pred, given)) / static_cast<double>(given_count);
}

std::vector<CaseStudyRow> case_study(const CoocModel& model, const ConceptMap& map,
                                     std::span<const CaseStudyPair> pairs,
                                     std::span<const CorpusRecord> corpus) {
  std::vector<CaseStudyRow> rows;
  for (const auto& p : pairs) {
    CaseStudyRow row;
    row.pair = p;
    row.model = predict(model, extract_full(p.pred, p.given, p.score, map, model.score_cfg));
    if (!corpus.empty()) {
      row.pair_count = pair_count(corpus, p.pred, p.given);
      if (code_count(corpus, p.given) > 0) row.naive = naive_cond_prob(corpus, p.pred, p.given);
    }
    rows.push_back(row);
  }
  return rows;
}

void write_case_study(std::ostream& out, std::span<const CaseStudyRow> rows) {
  std::string buf;
  char line[200];
  std::snprintf(line, sizeof(line), "%-8s %-8s %-14s %-12s %-8s %-8s\n", "C_pred", "C_given",
                "Primary score", "Pair count", "Model", "Naive");
  buf += line;
  for (const auto& r : rows) {
    std::string count = r.pair_count ? std::to_string(*r.pair_count) : "-";
    std::string naive = r.naive ? fixed(*r.naive) : "-";
    std::snprintf(line, sizeof(line), "%-8s %-8s %-14s %-12s %-8s %-8s\n",
                  r.pair.pred.string().c_str(), r.pair.given.string().c_str(),
                  fixed(r.pair.score, 2).c_str(), count.c_str(), fixed(r.model).c_str(),
                  naive.c_str());
    buf += line;
  }
  out << buf;
}

std::vector<CaseStudyPair> read_case_study_pairs(std::istream& in) {
  std::vector<CaseStudyPair> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = chomp(raw);
    if (is_blank_or_comment(line)) continue;
    auto fields = split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3)
      throw ParseError("expected PRED<TAB>GIVEN[<TAB>score]", lineno);
    CaseStudyPair p;
    try {
      p.pred = parse_code(trim(fields[0]));
      p.given = parse_code(trim(fields[1]));
    } catch (const CodeError& e) {
      throw ParseError(e.what(), lineno);
    }
    if (fields.size() == 3) p.score = parse_double(trim(fields[2]), lineno);
    if (!(p.score >= 0.0 && p.score <= 1.0)) throw ParseError("score outside [0, 1]", lineno);
    out.push_back(p);
  }
  return out;
}

}  // namespace cooc
