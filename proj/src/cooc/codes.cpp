#include "cooc/codes.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

#include "cooc/error.hpp"
#include "cooc/text.hpp"

namespace cooc {

const Alphabet& Alphabet::standard() {
  static const Alphabet kStandard("0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ");
  return kStandard;
}

Alphabet::Alphabet(std::string_view chars) {
  for (char c : chars) {
    auto u = static_cast<unsigned char>(std::toupper(static_cast<unsigned char>(c)));
    if (u >= 128 || !std::isalnum(u))
      throw ParseError(std::string("alphabet may only contain alphanumerics, got '") + c + "'");
    allowed_.set(u);
  }
  if (allowed_.none()) throw ParseError("alphabet is empty");
}

std::string Alphabet::chars() const {
  std::string out;
  for (std::size_t i = 0; i < allowed_.size(); ++i)
    if (allowed_[i]) out.push_back(static_cast<char>(i));
  return out;
}

StructuredCode parse_code(std::string_view text, const Alphabet& alphabet) {
  if (text.size() != StructuredCode::kAxes) {
    auto pos = std::min(text.size(), StructuredCode::kAxes);
    throw CodeError("code '" + std::string(text) + "' has length " +
                        std::to_string(text.size()) + ", expected 7 (position " +
                        std::to_string(pos) + ")",
                    pos);
  }
  StructuredCode code;
  for (std::size_t i = 0; i < StructuredCode::kAxes; ++i) {
    char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
    if (!alphabet.contains(c))
      throw CodeError("code '" + std::string(text) + "' has invalid character '" +
                          std::string(1, text[i]) + "' at position " + std::to_string(i),
                      i);
    code.axes_[i] = c;
  }
  return code;
}

bool shares_two_axis_prefix(const StructuredCode& a, const StructuredCode& b) {
  return a.axis(0) == b.axis(0) && a.axis(1) == b.axis(1);
}

namespace {

void require_shared_prefix(const StructuredCode& a, const StructuredCode& b) {
  if (!shares_two_axis_prefix(a, b))
    throw DataError("codes " + a.string() + " and " + b.string() +
                    " do not share a two-axis prefix");
}

}  // namespace

std::string axis_match_pattern(const StructuredCode& a, const StructuredCode& b) {
  require_shared_prefix(a, b);
  std::string out(a.str().substr(0, 2));
  for (std::size_t i = 2; i < StructuredCode::kAxes; ++i)
    out.push_back(a.axis(i) == b.axis(i) ? '1' : '0');
  return out;
}

std::string axis_diff_pattern(const StructuredCode& a, const StructuredCode& b) {
  require_shared_prefix(a, b);
  std::string out(a.str().substr(0, 2));
  for (std::size_t i = 2; i < StructuredCode::kAxes; ++i) {
    if (a.axis(i) == b.axis(i)) {
      out.push_back('1');
    } else {
      out += '{';
      out += a.axis(i);
      out += '/';
      out += b.axis(i);
      out += '}';
    }
  }
  return out;
}

ConceptMap::ConceptMap(int ngram_order) : ngram_order_(ngram_order) {
  if (ngram_order < 1) throw DataError("ngram order must be >= 1");
}

void ConceptMap::add_concepts(const StructuredCode& code, const ConceptSet& concepts) {
  entries_[code].insert(concepts.begin(), concepts.end());
}

void ConceptMap::set_description(const StructuredCode& code, std::string description) {
  descriptions_[code] = std::move(description);
}

const ConceptSet* ConceptMap::find(const StructuredCode& code) const {
  auto it = entries_.find(code);
  return it == entries_.end() ? nullptr : &it->second;
}

const std::string* ConceptMap::description(const StructuredCode& code) const {
  auto it = descriptions_.find(code);
  return it == descriptions_.end() ? nullptr : &it->second;
}

std::map<StructuredCode, ConceptSet> ConceptMap::sorted_entries() const {
  return {entries_.begin(), entries_.end()};
}

ConceptSet concepts_for(const StructuredCode& code, const ConceptMap& map,
                        int ngram_order) {
  if (ngram_order < 1) throw DataError("ngram order must be >= 1");
  if (const auto* mapped = map.find(code)) return *mapped;
  ConceptSet out;
  const auto* desc = map.description(code);
  if (!desc) return out;

  std::vector<std::string> tokens;
  std::istringstream words(*desc);
  for (std::string w; words >> w;) {
    for (auto& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    tokens.push_back(std::move(w));
  }
  for (int n = 1; n <= ngram_order; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string gram = "ngram:" + tokens[i];
      for (int k = 1; k < n; ++k) gram += "_" + tokens[i + k];
      out.insert(std::move(gram));
    }
  }
  return out;
}

namespace {

// Splits `CODE<TAB>rest`, skipping comments and blank lines. Returns false for
// lines to skip.
bool split_code_line(std::string_view raw, std::size_t lineno, const Alphabet& alphabet,
                     StructuredCode& code, std::string_view& rest) {
  auto line = chomp(raw);
  if (is_blank_or_comment(line)) return false;
  auto tab = line.find('\t');
  if (tab == std::string_view::npos)
    throw ParseError("expected CODE<TAB>value", lineno);
  try {
    code = parse_code(trim(line.substr(0, tab)), alphabet);
  } catch (const CodeError& e) {
    throw ParseError(e.what(), lineno);
  }
  rest = line.substr(tab + 1);
  return true;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

}  // namespace

void read_concept_map(std::istream& in, ConceptMap& map, const Alphabet& alphabet) {
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    StructuredCode code;
    std::string_view rest;
    if (!split_code_line(raw, lineno, alphabet, code, rest)) continue;
    ConceptSet concepts;
    for (auto c : split(rest, ',')) {
      auto t = trim(c);
      if (t.empty()) throw ParseError("empty concept identifier", lineno);
      if (t.find('\t') != std::string_view::npos)
        throw ParseError("concept identifier contains a tab", lineno);
      concepts.emplace(t);
    }
    map.add_concepts(code, concepts);
  }
}

void read_descriptions(std::istream& in, ConceptMap& map, const Alphabet& alphabet) {
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    StructuredCode code;
    std::string_view rest;
    if (!split_code_line(raw, lineno, alphabet, code, rest)) continue;
    map.set_description(code, std::string(trim(rest)));
  }
}

ConceptMap load_concept_map(const std::string& path, int ngram_order) {
  ConceptMap map(ngram_order);
  auto in = open_input(path);
  read_concept_map(in, map);
  return map;
}

void load_descriptions(const std::string& path, ConceptMap& map) {
  auto in = open_input(path);
  read_descriptions(in, map);
}

void write_concept_map(std::ostream& out, const ConceptMap& map) {
  for (const auto& [code, concepts] : map.sorted_entries()) {
    out << code.str() << '\t';
    bool first = true;
    for (const auto& c : concepts) {
      if (!first) out << ',';
      out << c;
      first = false;
    }
    out << '\n';
  }
}

}  // namespace cooc
