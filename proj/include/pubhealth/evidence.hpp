#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pubhealth/error.hpp"
#include "pubhealth/text.hpp"

namespace pubhealth {

// ---------------------------------------------------------------------------
// Sentence segmentation

struct Sentence {
  std::size_t index = 0;
  std::string text;
  bool operator==(const Sentence&) const = default;
};

using SentenceList = std::vector<Sentence>;

// Tokens ending in '.' that do not end a sentence.
inline constexpr std::array<std::string_view, 56> kAbbreviations = {
    "Mr.",   "Mrs.",  "Ms.",   "Dr.",    "Prof.", "Sr.",   "Jr.",   "St.",   "Sen.",  "Rep.",
    "Gov.",  "Gen.",  "Lt.",   "Col.",   "Capt.", "Sgt.",  "Pres.", "Rev.",  "U.S.",  "U.K.",
    "U.N.",  "E.U.",  "D.C.",  "U.S.A.", "Inc.",  "Ltd.",  "Co.",   "Corp.", "No.",   "vs.",
    "etc.",  "e.g.",  "i.e.",  "Jan.",   "Feb.",  "Mar.",  "Apr.",  "Jun.",  "Jul.",  "Aug.",
    "Sep.",  "Sept.", "Oct.",  "Nov.",   "Dec.",  "a.m.",  "p.m.",  "approx.", "Ph.D.", "M.D.",
    "Mt.",   "Ave.",  "Dept.", "Univ.",  "Fig.",  "al."};

namespace detail {

inline bool is_terminal(char32_t cp) { return cp == U'.' || cp == U'!' || cp == U'?'; }

inline bool is_closer(char32_t cp) {
  return cp == U'"' || cp == U'\'' || cp == U')' || cp == U']' || cp == 0x201D || cp == 0x2019;
}

inline bool is_opener(char32_t cp) {
  return cp == U'"' || cp == U'\'' || cp == U'(' || cp == U'[' || cp == 0x201C || cp == 0x2018;
}

// The whitespace-delimited token ending at `end` (exclusive), minus leading
// opening punctuation.
inline std::u32string token_before(const std::u32string& cps, std::size_t end) {
  std::size_t b = end;
  while (b > 0 && !text::is_space(cps[b - 1])) --b;
  while (b < end && is_opener(cps[b])) ++b;
  return cps.substr(b, end - b);
}

inline bool is_abbreviation(const std::u32string& token) {
  const std::string t = text::encode(token);
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), t) != kAbbreviations.end();
}

}  // namespace detail

/// Splits after '.', '!' or '?' (plus any closing quotes or brackets) when
/// followed by whitespace and an uppercase letter, or by end of text. A '.'
/// that closes a listed abbreviation never splits.
inline SentenceList segment_sentences(std::string_view input) {
  const std::u32string cps = text::decode(input);
  SentenceList out;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    std::string s = text::trim(text::encode(std::u32string_view(cps).substr(start, end - start)));
    if (!s.empty()) out.push_back({out.size(), std::move(s)});
    start = end;
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (!detail::is_terminal(cps[i])) continue;
    std::size_t j = i + 1;
    while (j < cps.size() && (detail::is_terminal(cps[j]) || detail::is_closer(cps[j]))) ++j;
    std::size_t m = j;
    while (m < cps.size() && text::is_space(cps[m])) ++m;
    bool boundary = false;
    if (m == cps.size()) {
      boundary = true;
    } else if (m > j) {
      std::size_t n = m;
      while (n < cps.size() && detail::is_opener(cps[n])) ++n;
      boundary = n < cps.size() && text::is_upper(cps[n]);
    }
    if (boundary && cps[i] == U'.' && detail::is_abbreviation(detail::token_before(cps, i + 1)))
      boundary = false;
    if (boundary) {
      emit(j);
      i = j - 1;
    }
  }
  if (start < cps.size()) emit(cps.size());
  return out;
}

// ---------------------------------------------------------------------------
// Vectors

using Embedding = std::vector<double>;

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw Error(ErrorCode::InvalidArgument, "cosine: dimension mismatch (" + std::to_string(u.size()) +
                                                " vs " + std::to_string(v.size()) + ")");
  const double nu = l2_norm(u), nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorCode::InvalidArgument, "cosine: zero vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Embedding backends

/// Maps a batch of texts to equal-dimension vectors. Implementations must be
/// deterministic and safe to call concurrently.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) const = 0;
};

/// Hashed unigram+bigram TF-IDF with IDF taken over the batch, L2-normalized.
/// IDF is the smoothed form ln((1 + N) / (1 + df)) + 1.
class HashedTfidfBackend final : public EmbeddingBackend {
 public:
  static constexpr std::size_t kDefaultDimension = std::size_t{1} << 18;

  explicit HashedTfidfBackend(std::size_t dimension = kDefaultDimension) : dim_(dimension) {
    if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
  }

  std::size_t dimension() const { return dim_; }

  std::vector<Embedding> embed(const std::vector<std::string>& texts) const override {
    std::vector<std::vector<std::pair<std::size_t, double>>> counts(texts.size());
    std::vector<double> df(dim_, 0.0);
    for (std::size_t d = 0; d < texts.size(); ++d) {
      std::vector<std::size_t> feats = features(texts[d]);
      std::sort(feats.begin(), feats.end());
      for (std::size_t i = 0; i < feats.size();) {
        std::size_t j = i;
        while (j < feats.size() && feats[j] == feats[i]) ++j;
        counts[d].emplace_back(feats[i], static_cast<double>(j - i));
        df[feats[i]] += 1.0;
        i = j;
      }
    }
    const double n = static_cast<double>(texts.size());
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& doc : counts) {
      Embedding v(dim_, 0.0);
      double norm2 = 0.0;
      for (const auto& [idx, tf] : doc) {
        const double w = tf * (std::log((1.0 + n) / (1.0 + df[idx])) + 1.0);
        v[idx] = w;
        norm2 += w * w;
      }
      if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (const auto& [idx, tf] : doc) v[idx] *= inv;
      }
      out.push_back(std::move(v));
    }
    return out;
  }

 private:
  std::vector<std::size_t> features(const std::string& s) const {
    const auto tokens = text::tokenize(s);
    std::vector<std::size_t> feats;
    feats.reserve(tokens.size() * 2);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      feats.push_back(text::fnv1a(tokens[i]) % dim_);
      if (i + 1 < tokens.size()) feats.push_back(text::fnv1a(tokens[i] + ' ' + tokens[i + 1]) % dim_);
    }
    return feats;
  }

  std::size_t dim_;
};

// ---------------------------------------------------------------------------
// Ranking

struct ScoredSentence {
  std::size_t index = 0;
  double score = 0.0;
  bool operator==(const ScoredSentence&) const = default;
};

struct EvidenceRanking {
  std::string claim_id;
  std::vector<ScoredSentence> ranked;
  std::size_t k = 5;

  std::span<const ScoredSentence> selected() const {
    return std::span<const ScoredSentence>(ranked).first(std::min(k, ranked.size()));
  }
};

inline constexpr std::size_t kDefaultEvidenceCount = 5;

/// Embeds the claim and every sentence in one backend call and orders the
/// sentences by cosine similarity to the claim, ties by document index.
/// Sentences whose vector (or the claim's) is all zeros score 0.
inline EvidenceRanking rank_evidence(std::string claim_id, const std::string& claim,
                                     const SentenceList& sentences, const EmbeddingBackend& backend,
                                     std::size_t k = kDefaultEvidenceCount) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "rank_evidence: k must be >= 1");
  EvidenceRanking ranking{std::move(claim_id), {}, k};
  if (sentences.empty()) return ranking;

  std::vector<std::string> batch;
  batch.reserve(sentences.size() + 1);
  batch.push_back(claim);
  for (const auto& s : sentences) batch.push_back(s.text);
  const std::vector<Embedding> vecs = backend.embed(batch);
  if (vecs.size() != batch.size())
    throw Error(ErrorCode::BackendError, "embedding backend returned " + std::to_string(vecs.size()) +
                                             " vectors for " + std::to_string(batch.size()) + " texts");
  const std::size_t dim = vecs.front().size();
  for (const auto& v : vecs)
    if (v.size() != dim || dim == 0)
      throw Error(ErrorCode::BackendError, "embedding backend returned inconsistent dimensions");

  const bool claim_zero = l2_norm(vecs.front()) == 0.0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& v = vecs[i + 1];
    const double score = (claim_zero || l2_norm(v) == 0.0) ? 0.0 : cosine(vecs.front(), v);
    ranking.ranked.push_back({sentences[i].index, score});
  }
  std::stable_sort(ranking.ranked.begin(), ranking.ranked.end(),
                   [](const ScoredSentence& a, const ScoredSentence& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.index < b.index;
                   });
  return ranking;
}

}  // namespace pubhealth
