#pragma once

#include <array>
#include <bitset>
#include <compare>
#include <cstddef>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>

namespace cooc {

// Characters accepted on each axis of a structured code. Input is uppercased
// before the check, so the alphabet only needs the uppercase forms.
class Alphabet {
 public:
  // 0-9 plus A-Z.
  static const Alphabet& standard();
  explicit Alphabet(std::string_view chars);

  bool contains(char c) const {
    auto u = static_cast<unsigned char>(c);
    return u < 128 && allowed_[u];
  }
  std::string chars() const;

 private:
  std::bitset<128> allowed_;
};

// A 7-axis procedure code in canonical (uppercase) form, e.g. 0DBJ3ZZ.
// Axis positions are 0-based throughout the API.
class StructuredCode {
 public:
  static constexpr std::size_t kAxes = 7;

  StructuredCode() = default;

  char axis(std::size_t i) const { return axes_.at(i); }
  std::string_view str() const { return {axes_.data(), kAxes}; }
  std::string string() const { return std::string(str()); }

  auto operator<=>(const StructuredCode&) const = default;
  bool operator==(const StructuredCode&) const = default;

 private:
  friend StructuredCode parse_code(std::string_view, const Alphabet&);
  std::array<char, kAxes> axes_{};
};

// Uppercases and validates. Throws CodeError carrying the offending position:
// for a length error that is the first index past the shorter of the input and
// the required length.
StructuredCode parse_code(std::string_view text,
                          const Alphabet& alphabet = Alphabet::standard());

bool shares_two_axis_prefix(const StructuredCode& a, const StructuredCode& b);

// Shared two-axis prefix followed by one binary digit per remaining axis
// (1 = same value). Throws DataError unless the prefix is shared.
std::string axis_match_pattern(const StructuredCode& a, const StructuredCode& b);

// Like axis_match_pattern, but mismatched axes render as {x/y} with x taken
// from `a` and y from `b`.
std::string axis_diff_pattern(const StructuredCode& a, const StructuredCode& b);

// Lexicographically ordered, deduplicated concept identifiers.
using ConceptSet = std::set<std::string, std::less<>>;

// Code-to-concept crosswalk plus optional free-text descriptions used for the
// n-gram fallback. Immutable once loaded.
class ConceptMap {
 public:
  static constexpr int kDefaultNgramOrder = 2;

  ConceptMap() = default;
  explicit ConceptMap(int ngram_order);

  void add_concepts(const StructuredCode& code, const ConceptSet& concepts);
  void set_description(const StructuredCode& code, std::string description);

  // nullptr when the code has no entry.
  const ConceptSet* find(const StructuredCode& code) const;
  const std::string* description(const StructuredCode& code) const;

  int ngram_order() const { return ngram_order_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t description_count() const { return descriptions_.size(); }
  bool empty() const { return entries_.empty() && descriptions_.empty(); }

  // Entries in code order, for serialization.
  std::map<StructuredCode, ConceptSet> sorted_entries() const;

 private:
  struct CodeHash {
    std::size_t operator()(const StructuredCode& c) const {
      return std::hash<std::string_view>{}(c.str());
    }
  };
  int ngram_order_ = kDefaultNgramOrder;
  std::unordered_map<StructuredCode, ConceptSet, CodeHash> entries_;
  std::unordered_map<StructuredCode, std::string, CodeHash> descriptions_;
};

// Mapped concepts if present; otherwise "ngram:"-prefixed token n-grams of
// orders 1..ngram_order from the lowercased, whitespace-tokenized description
// (tokens of a multi-token n-gram are joined with '_'); otherwise empty.
ConceptSet concepts_for(const StructuredCode& code, const ConceptMap& map,
                        int ngram_order);
inline ConceptSet concepts_for(const StructuredCode& code, const ConceptMap& map) {
  return concepts_for(code, map, map.ngram_order());
}

// `CODE<TAB>concept1,concept2,...`; '#' lines are comments; duplicate codes
// merge. Errors carry the 1-based line number.
void read_concept_map(std::istream& in, ConceptMap& map,
                      const Alphabet& alphabet = Alphabet::standard());
// `CODE<TAB>free text`.
void read_descriptions(std::istream& in, ConceptMap& map,
                       const Alphabet& alphabet = Alphabet::standard());

ConceptMap load_concept_map(const std::string& path,
                            int ngram_order = ConceptMap::kDefaultNgramOrder);
void load_descriptions(const std::string& path, ConceptMap& map);

void write_concept_map(std::ostream& out, const ConceptMap& map);

}  // namespace cooc
