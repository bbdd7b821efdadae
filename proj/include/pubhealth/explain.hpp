#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pubhealth/error.hpp"
#include "pubhealth/evidence.hpp"
#include "pubhealth/text.hpp"

namespace pubhealth {

enum class ExplanationMethod { Gold, Lead3, Oracle, Abstractive };

inline std::string_view to_string(ExplanationMethod m) {
  switch (m) {
    case ExplanationMethod::Gold: return "gold";
    case ExplanationMethod::Lead3: return "lead3";
    case ExplanationMethod::Oracle: return "oracle";
    case ExplanationMethod::Abstractive: return "abstractive";
  }
  return "";
}

inline std::optional<ExplanationMethod> parse_method(std::string_view s) {
  for (auto m : {ExplanationMethod::Gold, ExplanationMethod::Lead3, ExplanationMethod::Oracle,
                 ExplanationMethod::Abstractive})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

struct Explanation {
  std::string claim_id;
  std::vector<std::string> sentences;
  ExplanationMethod method = ExplanationMethod::Gold;

  std::string text() const { return text::join(sentences, " "); }
  bool operator==(const Explanation&) const = default;
};

/// Gold explanations are the segmented explanation text.
inline Explanation gold_explanation(std::string claim_id, std::string_view explanation_text) {
  Explanation e{std::move(claim_id), {}, ExplanationMethod::Gold};
  for (auto& s : segment_sentences(explanation_text)) e.sentences.push_back(std::move(s.text));
  return e;
}

class SummarizerBackend {
 public:
  virtual ~SummarizerBackend() = default;
  virtual std::vector<std::string> summarize(const std::string& claim,
                                             const std::vector<std::string>& article_sentences) const = 0;
};

// ---------------------------------------------------------------------------
// ROUGE

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline PrecisionRecallF1 make_prf(std::size_t matched, std::size_t cand_total, std::size_t ref_total) {
  PrecisionRecallF1 s;
  if (cand_total == 0 || ref_total == 0 || matched == 0) return s;
  s.precision = static_cast<double>(matched) / static_cast<double>(cand_total);
  s.recall = static_cast<double>(matched) / static_cast<double>(ref_total);
  s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

namespace detail {

inline std::unordered_map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& tokens,
                                                                 std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) (key += '\x1f') += tokens[i + k];
    ++counts[key];
  }
  return counts;
}

}  // namespace detail

/// Clipped n-gram overlap on pre-tokenized input.
inline PrecisionRecallF1 rouge_n(const std::vector<std::string>& candidate,
                                 const std::vector<std::string>& reference, std::size_t n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "rouge_n: order must be >= 1");
  const auto cand = detail::ngram_counts(candidate, n);
  const auto ref = detail::ngram_counts(reference, n);
  std::size_t matched = 0;
  for (const auto& [gram, c] : cand) {
    const auto it = ref.find(gram);
    if (it != ref.end()) matched += std::min(c, it->second);
  }
  const std::size_t cand_total = candidate.size() >= n ? candidate.size() - n + 1 : 0;
  const std::size_t ref_total = reference.size() >= n ? reference.size() - n + 1 : 0;
  return make_prf(matched, cand_total, ref_total);
}

inline PrecisionRecallF1 rouge_n(std::string_view candidate, std::string_view reference, std::size_t n) {
  return rouge_n(text::tokenize(candidate), text::tokenize(reference), n);
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline PrecisionRecallF1 rouge_l(const std::vector<std::string>& candidate,
                                 const std::vector<std::string>& reference) {
  return make_prf(lcs_length(candidate, reference), candidate.size(), reference.size());
}

inline PrecisionRecallF1 rouge_l(std::string_view candidate, std::string_view reference) {
  return rouge_l(text::tokenize(candidate), text::tokenize(reference));
}

struct RougeScore {
  PrecisionRecallF1 r1, r2, rl;
};

inline RougeScore rouge(std::string_view candidate, std::string_view reference) {
  const auto c = text::tokenize(candidate), r = text::tokenize(reference);
  return {rouge_n(c, r, 1), rouge_n(c, r, 2), rouge_l(c, r)};
}

// ---------------------------------------------------------------------------
// Extractive baselines

inline Explanation lead3(std::string claim_id, const SentenceList& article) {
  if (article.empty()) throw Error(ErrorCode::DegenerateInput, "lead3: empty article");
  Explanation e{std::move(claim_id), {}, ExplanationMethod::Lead3};
  for (std::size_t i = 0; i < std::min<std::size_t>(3, article.size()); ++i) e.sentences.push_back(article[i].text);
  return e;
}

inline constexpr std::size_t kOracleMaxSentences = 3;

/// mean(ROUGE-1 F1, ROUGE-2 F1) of the selected sentences, in document order,
/// against the reference tokens.
inline double oracle_objective(const SentenceList& article, const std::vector<std::size_t>& selected,
                               const std::vector<std::string>& reference) {
  std::vector<std::size_t> order = selected;
  std::sort(order.begin(), order.end());
  std::vector<std::string> tokens;
  for (std::size_t i : order)
    for (auto& t : text::tokenize(article[i].text)) tokens.push_back(std::move(t));
  return 0.5 * (rouge_n(tokens, reference, 1).f1 + rouge_n(tokens, reference, 2).f1);
}

struct OracleTrace {
  std::vector<std::size_t> picks;  // article positions in selection order
  std::vector<double> objectives;  // objective after each pick
};

/// Greedy oracle selection: the first pick is the best single sentence (lowest
/// position on ties); each later pick must raise the objective strictly.
inline OracleTrace oracle_trace(const SentenceList& article, const Explanation& gold,
                                std::size_t max_sents = kOracleMaxSentences) {
  if (article.empty()) throw Error(ErrorCode::DegenerateInput, "oracle_extractive: empty article");
  if (gold.sentences.empty()) throw Error(ErrorCode::DegenerateInput, "oracle_extractive: empty gold explanation");
  if (max_sents < 1) throw Error(ErrorCode::InvalidArgument, "oracle_extractive: max_sents must be >= 1");

  const auto reference = text::tokenize(gold.text());
  OracleTrace trace;
  std::vector<bool> used(article.size(), false);
  double current = 0.0;
  while (trace.picks.size() < std::min(max_sents, article.size())) {
    std::optional<std::size_t> best;
    double best_value = 0.0;
    for (std::size_t i = 0; i < article.size(); ++i) {
      if (used[i]) continue;
      auto trial = trace.picks;
      trial.push_back(i);
      const double v = oracle_objective(article, trial, reference);
      if (!best || v > best_value) {
        best = i;
        best_value = v;
      }
    }
    if (!trace.picks.empty() && !(best_value > current)) break;
    trace.picks.push_back(*best);
    trace.objectives.push_back(best_value);
    used[*best] = true;
    current = best_value;
  }
  return trace;
}

/// Greedy extractive upper bound against the gold explanation, emitted in
/// document order.
inline Explanation oracle_extractive(const SentenceList& article, const Explanation& gold,
                                     std::size_t max_sents = kOracleMaxSentences) {
  auto picks = oracle_trace(article, gold, max_sents).picks;
  std::sort(picks.begin(), picks.end());
  Explanation e{gold.claim_id, {}, ExplanationMethod::Oracle};
  for (std::size_t i : picks) e.sentences.push_back(article[i].text);
  return e;
}

// ---------------------------------------------------------------------------
// Corpus scoring

struct CorpusRouge {
  double r1_f = 0.0;
  double r2_f = 0.0;
  double rl_f = 0.0;
  std::size_t pairs = 0;
};

/// Arithmetic mean of per-pair F1 scores, pairing candidates and golds by
/// claim_id. Texts are the sentence lists joined by single spaces.
inline CorpusRouge score_corpus(const std::vector<Explanation>& candidates, const std::vector<Explanation>& golds) {
  if (candidates.empty()) throw Error(ErrorCode::DegenerateInput, "score_corpus: no explanations");
  std::map<std::string, const Explanation*> by_id;
  for (const auto& g : golds)
    if (!by_id.emplace(g.claim_id, &g).second)
      throw Error(ErrorCode::InvalidInput, "score_corpus: duplicate gold claim_id " + g.claim_id);
  if (golds.size() != candidates.size())
    throw Error(ErrorCode::InvalidInput, "score_corpus: candidate and gold sets differ in size");

  CorpusRouge out;
  std::map<std::string, bool> seen;
  for (const auto& c : candidates) {
    const auto it = by_id.find(c.claim_id);
    if (it == by_id.end()) throw Error(ErrorCode::InvalidInput, "score_corpus: no gold for claim_id " + c.claim_id);
    if (!seen.emplace(c.claim_id, true).second)
      throw Error(ErrorCode::InvalidInput, "score_corpus: duplicate candidate claim_id " + c.claim_id);
    const RougeScore s = rouge(c.text(), it->second->text());
    out.r1_f += s.r1.f1;
    out.r2_f += s.r2.f1;
    out.rl_f += s.rl.f1;
  }
  out.pairs = candidates.size();
  const double n = static_cast<double>(out.pairs);
  out.r1_f /= n;
  out.r2_f /= n;
  out.rl_f /= n;
  return out;
}

}  // namespace pubhealth
