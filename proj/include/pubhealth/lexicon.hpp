#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pubhealth/corpus.hpp"
#include "pubhealth/error.hpp"
#include "pubhealth/text.hpp"

namespace pubhealth {

struct TermList {
  std::string source;
  std::vector<std::string> terms;
};

/// Reads a term list: one term per line, '#' comment lines and blanks ignored.
inline TermList load_term_list(const std::string& path, std::string source = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open term list: " + path);
  TermList list{source.empty() ? path : std::move(source), {}};
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    list.terms.push_back(t);
  }
  return list;
}

/// Lowercase, trimmed, internally single-spaced.
inline std::string normalize_term(std::string_view term) { return text::to_lower(text::normalize_space(term)); }

struct LexiconMatchResult {
  std::set<std::string> matched_terms;
  std::size_t count = 0;
};

class HealthLexicon {
 public:
  const std::set<std::string>& terms() const { return terms_; }
  const std::map<std::string, std::size_t>& source_counts() const { return source_counts_; }
  std::size_t size() const { return terms_.size(); }
  bool contains(const std::string& term) const { return terms_.count(term) > 0; }

  /// Every entry occurring as a contiguous token subsequence of `text`; each
  /// entry counted once however often it occurs.
  LexiconMatchResult match(std::string_view input) const {
    const std::vector<std::string> tokens = text::tokenize(input);
    LexiconMatchResult result;
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
      const auto it = by_first_token_.find(tokens[pos]);
      if (it == by_first_token_.end()) continue;
      for (std::size_t idx : it->second) {
        const Entry& e = entries_[idx];
        if (pos + e.tokens.size() > tokens.size()) continue;
        bool hit = true;
        for (std::size_t k = 1; k < e.tokens.size() && hit; ++k) hit = tokens[pos + k] == e.tokens[k];
        if (hit) result.matched_terms.insert(e.term);
      }
    }
    result.count = result.matched_terms.size();
    return result;
  }

 private:
  friend HealthLexicon build_lexicon(const std::vector<TermList>&, const std::vector<std::string>&);

  struct Entry {
    std::string term;
    std::vector<std::string> tokens;
  };

  void index() {
    entries_.clear();
    by_first_token_.clear();
    for (const auto& term : terms_) {
      entries_.push_back({term, text::tokenize(term)});
      by_first_token_[entries_.back().tokens.front()].push_back(entries_.size() - 1);
    }
  }

  std::set<std::string> terms_;
  std::map<std::string, std::size_t> source_counts_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_token_;
};

/// Union of all normalized terms. Terms without any word token are dropped.
inline HealthLexicon build_lexicon(const std::vector<TermList>& term_lists,
                                   const std::vector<std::string>& supplements) {
  HealthLexicon lex;
  auto add_all = [&](const std::string& source, const std::vector<std::string>& terms) {
    std::set<std::string> from_source;
    for (const auto& raw : terms) {
      std::string term = normalize_term(raw);
      if (term.empty() || text::tokenize(term).empty()) continue;
      from_source.insert(term);
      lex.terms_.insert(std::move(term));
    }
    lex.source_counts_[source] += from_source.size();
  };
  for (const auto& list : term_lists) add_all(list.source, list.terms);
  if (!supplements.empty()) add_all("supplements", supplements);
  if (lex.terms_.empty()) throw Error(ErrorCode::DegenerateInput, "health lexicon is empty");
  lex.index();
  return lex;
}

inline LexiconMatchResult match_terms(std::string_view input, const HealthLexicon& lex) {
  return lex.match(input);
}

/// A record is health-related when either its article or its claim mentions
/// more than this many unique lexicon terms.
inline constexpr std::size_t kHealthTermThreshold = 3;

struct HealthFilterResult {
  bool passed = false;
  std::size_t article_count = 0;
  std::size_t claim_count = 0;
};

inline HealthFilterResult passes_health_filter(const ClaimRecord& record, const HealthLexicon& lex) {
  HealthFilterResult r;
  r.article_count = lex.match(record.article_text).count;
  r.claim_count = lex.match(record.claim_text).count;
  r.passed = r.article_count > kHealthTermThreshold || r.claim_count > kHealthTermThreshold;
  return r;
}

}  // namespace pubhealth
