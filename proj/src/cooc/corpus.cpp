#include "cooc/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "cooc/error.hpp"
#include "cooc/numfmt.hpp"
#include "cooc/text.hpp"

namespace cooc {

void CorpusRecord::validate(bool require_manual) const {
  if (require_manual && manual.empty())
    throw DataError("document '" + doc_id + "' has no manual codes");
  std::set<StructuredCode> seen;
  for (const auto& g : generated) {
    if (!seen.insert(g.code).second)
      throw DataError("document '" + doc_id + "' repeats generated code " + g.code.string());
    if (!(g.score >= 0.0 && g.score <= 1.0))
      throw DataError("document '" + doc_id + "' has score " + format_double(g.score) +
                      " outside [0, 1] for " + g.code.string());
  }
}

namespace {

StructuredCode parse_field_code(std::string_view s, std::size_t lineno, const Alphabet& alphabet) {
  try {
    return parse_code(trim(s), alphabet);
  } catch (const CodeError& e) {
    throw ParseError(e.what(), lineno);
  }
}

}  // namespace

std::vector<CorpusRecord> read_corpus(std::istream& in, const Alphabet& alphabet) {
  std::vector<CorpusRecord> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = chomp(raw);
    if (is_blank_or_comment(line)) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3)
      throw ParseError("expected 3 tab-separated fields, got " + std::to_string(fields.size()),
                       lineno);
    CorpusRecord rec;
    rec.doc_id = std::string(trim(fields[0]));
    if (rec.doc_id.empty()) throw ParseError("empty doc_id", lineno);
    if (!trim(fields[1]).empty())
      for (auto c : split(fields[1], ','))
        rec.manual.push_back(parse_field_code(c, lineno, alphabet));
    if (!trim(fields[2]).empty()) {
      for (auto item : split(fields[2], ',')) {
        auto colon = item.rfind(':');
        if (colon == std::string_view::npos)
          throw ParseError("expected CODE:score in generated list", lineno);
        rec.generated.push_back({parse_field_code(item.substr(0, colon), lineno, alphabet),
                                 parse_double(trim(item.substr(colon + 1)), lineno)});
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<CorpusRecord> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_corpus(in);
}

void write_corpus_record(std::string& out, const CorpusRecord& record) {
  out += record.doc_id;
  out += '\t';
  for (std::size_t i = 0; i < record.manual.size(); ++i) {
    if (i) out += ',';
    out += record.manual[i].str();
  }
  out += '\t';
  for (std::size_t i = 0; i < record.generated.size(); ++i) {
    if (i) out += ',';
    out += record.generated[i].code.str();
    out += ':';
    append_double(out, record.generated[i].score);
  }
  out += '\n';
}

void write_corpus(std::ostream& out, std::span<const CorpusRecord> corpus) {
  std::string buf;
  for (const auto& rec : corpus) {
    write_corpus_record(buf, rec);
    if (buf.size() > (1u << 16)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
  if (!out) throw IoError("failed writing corpus");
}

std::vector<ScoredCode> top_k(std::span<const ScoredCode> generated, std::size_t k) {
  std::vector<ScoredCode> sorted(generated.begin(), generated.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const ScoredCode& a, const ScoredCode& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.code < b.code;
  });
  if (sorted.size() > k) sorted.resize(k);
  return sorted;
}

}  // namespace cooc
