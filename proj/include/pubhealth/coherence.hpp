#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pubhealth/corpus.hpp"
#include "pubhealth/error.hpp"
#include "pubhealth/explain.hpp"
#include "pubhealth/text.hpp"

namespace pubhealth {

enum class NliRelation { Entails, Contradicts, Neutral };

inline std::string_view to_string(NliRelation r) {
  switch (r) {
    case NliRelation::Entails: return "entails";
    case NliRelation::Contradicts: return "contradicts";
    case NliRelation::Neutral: return "neutral";
  }
  return "";
}

inline std::optional<NliRelation> parse_relation(std::string_view s) {
  for (auto r : {NliRelation::Entails, NliRelation::Contradicts, NliRelation::Neutral})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

struct NliPair {
  std::string premise;
  std::string hypothesis;
};

struct NliResult {
  NliRelation relation = NliRelation::Neutral;
  std::optional<std::array<double, 3>> probs;  // entails, contradicts, neutral
};

class NliBackend {
 public:
  virtual ~NliBackend() = default;
  /// One result per pair, in request order.
  virtual std::vector<NliResult> relate(const std::vector<NliPair>& pairs) const = 0;

  NliRelation relate(const std::string& premise, const std::string& hypothesis) const {
    return relate(std::vector<NliPair>{{premise, hypothesis}}).at(0).relation;
  }
};

class ConstantNliBackend final : public NliBackend {
 public:
  explicit ConstantNliBackend(NliRelation r) : relation_(r) {}
  using NliBackend::relate;
  std::vector<NliResult> relate(const std::vector<NliPair>& pairs) const override {
    return std::vector<NliResult>(pairs.size(), NliResult{relation_, std::nullopt});
  }

 private:
  NliRelation relation_;
};

/// Rule-based stand-in for an NLI model. When more than half of the
/// hypothesis' distinct tokens occur in the premise the pair entails, or
/// contradicts if exactly one side carries a negation word; otherwise neutral.
class TokenOverlapNliBackend final : public NliBackend {
 public:
  using NliBackend::relate;

  std::vector<NliResult> relate(const std::vector<NliPair>& pairs) const override {
    std::vector<NliResult> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back({classify(p.premise, p.hypothesis), std::nullopt});
    return out;
  }

  static double overlap(const std::string& premise, const std::string& hypothesis) {
    const auto pt = text::tokenize(premise), ht = text::tokenize(hypothesis);
    const std::set<std::string> ps(pt.begin(), pt.end()), hs(ht.begin(), ht.end());
    if (hs.empty()) return 0.0;
    std::size_t shared = 0;
    for (const auto& t : hs) shared += ps.count(t);
    return static_cast<double>(shared) / static_cast<double>(hs.size());
  }

  static bool negated(const std::string& s) {
    static const std::set<std::string> kNegations = {"not",     "no",   "never", "none",   "nobody", "nothing",
                                                     "neither", "nor",  "cannot", "t",     "false"};
    for (const auto& t : text::tokenize(s))
      if (kNegations.count(t)) return true;
    return false;
  }

  static NliRelation classify(const std::string& premise, const std::string& hypothesis) {
    if (overlap(premise, hypothesis) <= 0.5) return NliRelation::Neutral;
    return negated(premise) != negated(hypothesis) ? NliRelation::Contradicts : NliRelation::Entails;
  }
};

// ---------------------------------------------------------------------------
// Relation matrix and properties

struct RelationMatrix {
  /// Premise = explanation sentence i, hypothesis = claim.
  std::vector<NliRelation> to_claim;
  /// Premise = sentence i, hypothesis = sentence j, for every ordered i != j.
  std::map<std::pair<std::size_t, std::size_t>, NliRelation> pairwise;
  /// to_claim indices neutralized by apply_reassignment.
  std::vector<std::size_t> reassigned;

  bool operator==(const RelationMatrix&) const = default;
};

inline RelationMatrix build_relation_matrix(const std::string& claim, const Explanation& expl,
                                            const NliBackend& backend) {
  const std::size_t n = expl.sentences.size();
  if (n == 0) throw Error(ErrorCode::DegenerateInput, "build_relation_matrix: empty explanation");
  std::vector<NliPair> batch;
  batch.reserve(n * n);
  for (const auto& s : expl.sentences) batch.push_back({s, claim});
  std::vector<std::pair<std::size_t, std::size_t>> keys;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) {
        batch.push_back({expl.sentences[i], expl.sentences[j]});
        keys.emplace_back(i, j);
      }
  const std::vector<NliResult> results = backend.relate(batch);
  if (results.size() != batch.size())
    throw Error(ErrorCode::BackendError, "NLI backend returned " + std::to_string(results.size()) +
                                             " relations for " + std::to_string(batch.size()) + " pairs");
  RelationMatrix m;
  for (std::size_t i = 0; i < n; ++i) m.to_claim.push_back(results[i].relation);
  for (std::size_t k = 0; k < keys.size(); ++k) m.pairwise.emplace(keys[k], results[n + k].relation);
  return m;
}

/// For false-labelled claims, an explanation sentence contradicting the claim
/// counts as neutral. Entailments and the pairwise relations are untouched.
inline RelationMatrix apply_reassignment(RelationMatrix m, VeracityLabel label) {
  if (label != VeracityLabel::False) return m;
  for (std::size_t i = 0; i < m.to_claim.size(); ++i) {
    if (m.to_claim[i] == NliRelation::Contradicts) {
      m.to_claim[i] = NliRelation::Neutral;
      m.reassigned.push_back(i);
    }
  }
  std::sort(m.reassigned.begin(), m.reassigned.end());
  return m;
}

/// Strong global coherence: every sentence entails the claim.
inline bool check_sgc(const RelationMatrix& m) {
  return std::all_of(m.to_claim.begin(), m.to_claim.end(), [](NliRelation r) { return r == NliRelation::Entails; });
}

/// Weak global coherence: no sentence contradicts the claim.
inline bool check_wgc(const RelationMatrix& m) {
  return std::none_of(m.to_claim.begin(), m.to_claim.end(),
                      [](NliRelation r) { return r == NliRelation::Contradicts; });
}

/// Local coherence: no ordered sentence pair contradicts.
inline bool check_lc(const RelationMatrix& m) {
  return std::none_of(m.pairwise.begin(), m.pairwise.end(),
                      [](const auto& kv) { return kv.second == NliRelation::Contradicts; });
}

struct CoherenceVerdict {
  bool sgc = false;
  bool wgc = false;
  bool lc = false;
  std::vector<std::size_t> reassigned_indices;
};

inline CoherenceVerdict verdict_of(const RelationMatrix& m) {
  return {check_sgc(m), check_wgc(m), check_lc(m), m.reassigned};
}

inline CoherenceVerdict evaluate_coherence(const std::string& claim, VeracityLabel label, const Explanation& expl,
                                           const NliBackend& backend) {
  return verdict_of(apply_reassignment(build_relation_matrix(claim, expl, backend), label));
}

struct CoherenceInput {
  std::string claim;
  VeracityLabel label;
  Explanation explanation;
};

struct CoherenceSummary {
  double sgc_pct = 0.0;
  double wgc_pct = 0.0;
  double lc_pct = 0.0;
  std::size_t evaluated = 0;
  std::size_t failed = 0;
  std::vector<std::string> failed_ids;
};

/// Percentages over records the backend could evaluate; records whose backend
/// call fails are excluded and listed.
inline CoherenceSummary corpus_coherence(const std::vector<CoherenceInput>& records, const NliBackend& backend) {
  if (records.empty()) throw Error(ErrorCode::DegenerateInput, "corpus_coherence: no records");
  CoherenceSummary s;
  std::size_t sgc = 0, wgc = 0, lc = 0;
  for (const auto& r : records) {
    CoherenceVerdict v;
    try {
      v = evaluate_coherence(r.claim, r.label, r.explanation, backend);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BackendError && e.code() != ErrorCode::DegenerateInput) throw;
      ++s.failed;
      s.failed_ids.push_back(r.explanation.claim_id);
      continue;
    }
    ++s.evaluated;
    sgc += v.sgc;
    wgc += v.wgc;
    lc += v.lc;
  }
  if (s.evaluated > 0) {
    const double n = static_cast<double>(s.evaluated);
    s.sgc_pct = 100.0 * static_cast<double>(sgc) / n;
    s.wgc_pct = 100.0 * static_cast<double>(wgc) / n;
    s.lc_pct = 100.0 * static_cast<double>(lc) / n;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Annotator agreement

struct AnnotatedItem {
  std::string item_id;
  std::vector<std::size_t> ratings;  // one category per annotator
};

struct AnnotationSet {
  std::size_t arity = 2;
  std::vector<AnnotatedItem> items;
};

struct Agreement {
  double kappa = 0.0;
  double overall_agreement = 0.0;
  std::size_t items = 0;
};

/// Randolph's free-marginal kappa: chance agreement is fixed at 1/k.
inline double kappa_from_agreement(double overall_agreement, std::size_t arity) {
  if (arity < 2) throw Error(ErrorCode::InvalidArgument, "kappa: arity must be >= 2");
  const double chance = 1.0 / static_cast<double>(arity);
  return (overall_agreement - chance) / (1.0 - chance);
}

/// Overall agreement is the mean over items of the fraction of agreeing
/// annotator pairs.
inline Agreement randolph_kappa(const AnnotationSet& set) {
  if (set.arity < 2 || set.arity > 4)
    throw Error(ErrorCode::InvalidArgument, "randolph_kappa: arity must be 2, 3 or 4");
  if (set.items.empty()) throw Error(ErrorCode::DegenerateInput, "randolph_kappa: no items");
  double po_sum = 0.0;
  for (const auto& item : set.items) {
    const std::size_t n = item.ratings.size();
    if (n < 2) throw Error(ErrorCode::InvalidInput, "randolph_kappa: item '" + item.item_id + "' has fewer than 2 ratings");
    std::vector<std::size_t> counts(set.arity, 0);
    for (std::size_t r : item.ratings) {
      if (r >= set.arity)
        throw Error(ErrorCode::InvalidInput, "randolph_kappa: rating out of range for item '" + item.item_id + "'");
      ++counts[r];
    }
    double agreeing = 0.0;
    for (std::size_t c : counts) agreeing += static_cast<double>(c) * static_cast<double>(c > 0 ? c - 1 : 0);
    po_sum += agreeing / (static_cast<double>(n) * static_cast<double>(n - 1));
  }
  Agreement a;
  a.items = set.items.size();
  a.overall_agreement = po_sum / static_cast<double>(a.items);
  a.kappa = kappa_from_agreement(a.overall_agreement, set.arity);
  return a;
}

struct AnnotationRow {
  std::string item_id;
  std::string annotator_id;
  std::string question_id;
  std::size_t arity = 0;
  std::size_t choice = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::size_t parse_count(const std::string& s, const char* what, std::size_t lineno) {
  const std::string t = text::trim(s);
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(t, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (t.empty() || pos != t.size() || t.front() == '-')
    throw Error(ErrorCode::InvalidInput,
                "annotations line " + std::to_string(lineno) + ": bad " + what + " '" + t + "'");
  return v;
}

}  // namespace detail

/// CSV with header item_id,annotator_id,question_id,arity,choice (any column order).
inline std::vector<AnnotationRow> read_annotations_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidInput, "annotations: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[text::trim(header[i])] = i;
  for (const char* name : {"item_id", "annotator_id", "question_id", "arity", "choice"})
    if (!col.count(name)) throw Error(ErrorCode::InvalidInput, std::string("annotations: missing column ") + name);

  std::vector<AnnotationRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size())
      throw Error(ErrorCode::InvalidInput, "annotations line " + std::to_string(lineno) + ": wrong field count");
    AnnotationRow r;
    r.item_id = text::trim(f[col["item_id"]]);
    r.annotator_id = text::trim(f[col["annotator_id"]]);
    r.question_id = text::trim(f[col["question_id"]]);
    r.arity = detail::parse_count(f[col["arity"]], "arity", lineno);
    r.choice = detail::parse_count(f[col["choice"]], "choice", lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<AnnotationRow> read_annotations_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open annotations: " + path);
  return read_annotations_csv(in);
}

/// Groups rows into one AnnotationSet per question arity. An item is one
/// (item_id, question_id) pair; each annotator may answer it once.
inline std::map<std::size_t, AnnotationSet> group_by_arity(const std::vector<AnnotationRow>& rows) {
  struct Pending {
    std::size_t arity;
    std::map<std::string, std::size_t> by_annotator;
  };
  std::map<std::pair<std::string, std::string>, Pending> items;
  for (const auto& r : rows) {
    auto [it, fresh] = items.try_emplace({r.item_id, r.question_id}, Pending{r.arity, {}});
    if (!fresh && it->second.arity != r.arity)
      throw Error(ErrorCode::InvalidInput, "annotations: inconsistent arity for item " + r.item_id + "/" + r.question_id);
    if (!it->second.by_annotator.emplace(r.annotator_id, r.choice).second)
      throw Error(ErrorCode::InvalidInput,
                  "annotations: annotator " + r.annotator_id + " rated " + r.item_id + "/" + r.question_id + " twice");
  }
  std::map<std::size_t, AnnotationSet> sets;
  for (const auto& [key, pending] : items) {
    auto& set = sets[pending.arity];
    set.arity = pending.arity;
    AnnotatedItem item{key.first + "/" + key.second, {}};
    for (const auto& [annotator, choice] : pending.by_annotator) item.ratings.push_back(choice);
    set.items.push_back(std::move(item));
  }
  return sets;
}

}  // namespace pubhealth
