#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "pubhealth/error.hpp"
#include "pubhealth/evidence.hpp"
#include "pubhealth/text.hpp"

namespace pubhealth {

struct TextStats {
  std::size_t sentences = 0;
  std::size_t words = 0;
  std::size_t syllables = 0;
  std::size_t difficult_words = 0;
};

struct ReadabilityReport {
  double fk_mean = 0.0;
  double fk_std = 0.0;
  double dc_mean = 0.0;
  double dc_std = 0.0;
  std::size_t n_texts = 0;
  std::size_t skipped = 0;
};

/// The Dale-Chall familiar-word list, lowercased.
class EasyWords {
 public:
  EasyWords() = default;
  explicit EasyWords(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  static EasyWords from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingInput, "cannot open easy-word list: " + path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      std::string w = text::to_lower(text::trim(line));
      if (!w.empty() && w.front() != '#') words.insert(std::move(w));
    }
    return EasyWords(std::move(words));
  }

  bool empty() const { return words_.empty(); }
  std::size_t size() const { return words_.size(); }
  bool contains(const std::string& w) const { return words_.count(w) > 0; }

  /// Exact lookup, then regular inflections (-s, -es, -ed, -ing) of a listed word.
  bool is_easy(std::string_view word) const {
    const std::string w = text::to_lower(word);
    if (contains(w)) return true;
    auto stem_in = [&](std::string_view suffix, std::string_view restore = {}) {
      if (w.size() <= suffix.size() + 1 || !std::string_view(w).ends_with(suffix)) return false;
      return contains(w.substr(0, w.size() - suffix.size()) + std::string(restore));
    };
    return stem_in("s") || stem_in("es") || stem_in("ed") || stem_in("d") || stem_in("ing") ||
           stem_in("ing", "e");
  }

 private:
  std::unordered_set<std::string> words_;
};

/// Whitespace-delimited tokens with surrounding punctuation removed; tokens
/// with no word character are not words.
inline std::vector<std::string> readability_words(std::string_view input) {
  std::vector<std::string> words;
  const std::u32string cps = text::decode(input);
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && text::is_space(cps[i])) ++i;
    std::size_t j = i;
    while (j < cps.size() && !text::is_space(cps[j])) ++j;
    std::size_t b = i, e = j;
    while (b < e && !text::is_word_char(cps[b])) ++b;
    while (e > b && !text::is_word_char(cps[e - 1])) --e;
    if (b < e) words.push_back(text::encode(std::u32string_view(cps).substr(b, e - b)));
    i = j;
  }
  return words;
}

/// Maximal vowel groups (a, e, i, o, u, y), minus one for a terminal 'e' as
/// long as that leaves at least one; never below 1.
inline std::size_t count_syllables(std::string_view word) {
  std::size_t groups = 0;
  bool in_vowel = false;
  char last_letter = 0;
  for (char c : text::to_lower(word)) {
    const bool letter = c >= 'a' && c <= 'z';
    const bool vowel = c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
    if (vowel && !in_vowel) ++groups;
    in_vowel = vowel;
    if (letter) last_letter = c;
  }
  if (last_letter == 'e' && groups > 1) --groups;
  return groups == 0 ? 1 : groups;
}

inline bool has_letter(std::string_view word) {
  for (std::size_t pos = 0; pos < word.size();) {
    const char32_t cp = text::next_codepoint(word, pos);
    if (text::is_word_char(cp) && !(cp >= U'0' && cp <= U'9')) return true;
  }
  return false;
}

/// Words without any letter (numerals) are counted as familiar.
inline TextStats text_stats(std::string_view input, const EasyWords* easy = nullptr) {
  TextStats st;
  st.sentences = segment_sentences(input).size();
  for (const auto& w : readability_words(input)) {
    ++st.words;
    st.syllables += count_syllables(w);
    if (easy && has_letter(w) && !easy->is_easy(w)) ++st.difficult_words;
  }
  return st;
}

inline double flesch_reading_ease(const TextStats& st) {
  if (st.sentences == 0 || st.words == 0)
    throw Error(ErrorCode::DegenerateInput, "reading ease needs at least one sentence and one word");
  const double words = static_cast<double>(st.words);
  return 206.835 - 1.015 * (words / static_cast<double>(st.sentences)) -
         84.6 * (static_cast<double>(st.syllables) / words);
}

inline double flesch_kincaid_reading_ease(std::string_view input) {
  return flesch_reading_ease(text_stats(input));
}

inline double dale_chall_score(const TextStats& st) {
  if (st.sentences == 0 || st.words == 0)
    throw Error(ErrorCode::DegenerateInput, "Dale-Chall needs at least one sentence and one word");
  const double words = static_cast<double>(st.words);
  const double pct_difficult = 100.0 * static_cast<double>(st.difficult_words) / words;
  double score = 0.1579 * pct_difficult + 0.0496 * (words / static_cast<double>(st.sentences));
  if (pct_difficult > 5.0) score += 3.6365;
  return score;
}

inline double dale_chall(std::string_view input, const EasyWords& easy) {
  if (easy.empty()) throw Error(ErrorCode::InvalidArgument, "Dale-Chall needs a nonempty easy-word list");
  return dale_chall_score(text_stats(input, &easy));
}

/// Mean and population standard deviation of both scores. Texts with no
/// sentence or no word are skipped and counted.
inline ReadabilityReport corpus_readability(const std::vector<std::string>& texts, const EasyWords& easy) {
  if (texts.empty()) throw Error(ErrorCode::DegenerateInput, "corpus_readability: empty corpus");
  if (easy.empty()) throw Error(ErrorCode::InvalidArgument, "corpus_readability: empty easy-word list");
  std::vector<double> fk, dc;
  ReadabilityReport r;
  for (const auto& t : texts) {
    const TextStats st = text_stats(t, &easy);
    if (st.sentences == 0 || st.words == 0) {
      ++r.skipped;
      continue;
    }
    fk.push_back(flesch_reading_ease(st));
    dc.push_back(dale_chall_score(st));
  }
  if (fk.empty()) throw Error(ErrorCode::DegenerateInput, "corpus_readability: every text was skipped");
  auto mean_std = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return std::pair{mean, std::sqrt(var / static_cast<double>(xs.size()))};
  };
  std::tie(r.fk_mean, r.fk_std) = mean_std(fk);
  std::tie(r.dc_mean, r.dc_std) = mean_std(dc);
  r.n_texts = fk.size();
  return r;
}

}  // namespace pubhealth
