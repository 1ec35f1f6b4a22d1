#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cooc/codes.hpp"

namespace cooc {

struct ScoredCode {
  StructuredCode code;
  double score = 0.0;
  bool operator==(const ScoredCode&) const = default;
};

// One document: manually assigned codes MAN(D) and the primary auto-coder's
// scored output GEN(D).
struct CorpusRecord {
  std::string doc_id;
  std::vector<StructuredCode> manual;
  std::vector<ScoredCode> generated;

  // Throws DataError naming the document when generated codes repeat, a score
  // leaves [0, 1], or (when required) the manual set is empty.
  void validate(bool require_manual) const;
  bool operator==(const CorpusRecord&) const = default;
};

// Per-record failure reported by batch operations that skip bad records.
struct RecordError {
  std::string doc_id;
  std::string message;
};

// Corpus file: one document per line,
//   doc_id<TAB>CODE,CODE,...<TAB>CODE:score,CODE:score,...
// Either list may be empty. '#' lines are comments. Errors carry the line number.
std::vector<CorpusRecord> read_corpus(std::istream& in,
                                      const Alphabet& alphabet = Alphabet::standard());
std::vector<CorpusRecord> load_corpus(const std::string& path);
void write_corpus(std::ostream& out, std::span<const CorpusRecord> corpus);
void write_corpus_record(std::string& out, const CorpusRecord& record);

// GEN sorted by descending score, ties by code, truncated to top_k.
std::vector<ScoredCode> top_k(std::span<const ScoredCode> generated, std::size_t k);

}  // namespace cooc
