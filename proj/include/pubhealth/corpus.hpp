#pragma once

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pubhealth/error.hpp"
#include "pubhealth/text.hpp"

namespace pubhealth {

using json = nlohmann::json;

enum class VeracityLabel { True, False, Mixture, Unproven };

inline constexpr std::array<VeracityLabel, 4> kAllLabels = {
    VeracityLabel::True, VeracityLabel::False, VeracityLabel::Mixture, VeracityLabel::Unproven};

inline std::string_view to_string(VeracityLabel label) {
  switch (label) {
    case VeracityLabel::True: return "true";
    case VeracityLabel::False: return "false";
    case VeracityLabel::Mixture: return "mixture";
    case VeracityLabel::Unproven: return "unproven";
  }
  return "";
}

inline std::optional<VeracityLabel> parse_label(std::string_view token) {
  for (auto label : kAllLabels)
    if (to_string(label) == token) return label;
  return std::nullopt;
}

inline std::size_t label_index(VeracityLabel label) { return static_cast<std::size_t>(label); }

enum class SourceSite { ApNews, FactCheck, FullFact, Hnr, Politifact, Reuters, Snopes, TruthOrFiction };

inline constexpr std::array<SourceSite, 8> kAllSites = {
    SourceSite::ApNews,  SourceSite::FactCheck, SourceSite::FullFact, SourceSite::Hnr,
    SourceSite::Politifact, SourceSite::Reuters, SourceSite::Snopes, SourceSite::TruthOrFiction};

inline std::string_view to_string(SourceSite site) {
  switch (site) {
    case SourceSite::ApNews: return "apnews";
    case SourceSite::FactCheck: return "factcheck";
    case SourceSite::FullFact: return "fullfact";
    case SourceSite::Hnr: return "hnr";
    case SourceSite::Politifact: return "politifact";
    case SourceSite::Reuters: return "reuters";
    case SourceSite::Snopes: return "snopes";
    case SourceSite::TruthOrFiction: return "truthorfiction";
  }
  return "";
}

inline std::optional<SourceSite> parse_site(std::string_view token) {
  for (auto site : kAllSites)
    if (to_string(site) == token) return site;
  return std::nullopt;
}

inline bool is_news_site(SourceSite site) {
  return site == SourceSite::ApNews || site == SourceSite::Reuters;
}

using Date = std::chrono::year_month_day;

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

inline std::optional<Date> parse_date(std::string_view s) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  const std::string str(s);
  if (str.size() != 10 || std::sscanf(str.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3)
    return std::nullopt;
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

// Pre-normalization staging record; `label` is whatever the source site used.
struct RawRecord {
  std::string claim_id;
  std::string claim_text;
  std::string article_text;
  std::string explanation_text;
  std::string label;
  std::optional<Date> date_published;
  std::vector<std::string> tags;
  std::vector<std::string> fact_checkers;
  SourceSite source_site = SourceSite::Snopes;
  std::vector<std::string> source_urls;
};

struct ClaimRecord {
  std::string claim_id;
  std::string claim_text;
  std::string article_text;
  std::string explanation_text;
  VeracityLabel label = VeracityLabel::Unproven;
  std::optional<Date> date_published;
  std::vector<std::string> tags;
  std::vector<std::string> fact_checkers;
  SourceSite source_site = SourceSite::Snopes;
  std::vector<std::string> source_urls;

  bool operator==(const ClaimRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Label standardization

/// Raw site label -> standardized 4-way label, loaded from the bundled TSV.
class LabelMap {
 public:
  LabelMap() = default;

  static LabelMap from_stream(std::istream& in) {
    LabelMap map;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw Error(ErrorCode::InvalidInput,
                    "label map line " + std::to_string(lineno) + ": expected two tab-separated columns");
      const std::string raw = key(line.substr(0, tab));
      if (lineno == 1 && raw == "raw_label") continue;  // header row
      const auto label = parse_label(text::trim(line.substr(tab + 1)));
      if (!label)
        throw Error(ErrorCode::InvalidInput,
                    "label map line " + std::to_string(lineno) + ": unknown standard label");
      const auto [it, inserted] = map.table_.emplace(raw, *label);
      if (!inserted && it->second != *label)
        throw Error(ErrorCode::InvalidInput, "label map: conflicting rows for '" + raw + "'");
    }
    return map;
  }

  static LabelMap from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingInput, "cannot open label map: " + path);
    return from_stream(in);
  }

  std::optional<VeracityLabel> lookup(std::string_view raw) const {
    const auto it = table_.find(key(raw));
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, VeracityLabel>& entries() const { return table_; }
  std::size_t size() const { return table_.size(); }

 private:
  static std::string key(std::string_view raw) { return text::to_lower(text::trim(raw)); }

  std::map<std::string, VeracityLabel> table_;
};

/// Exact match after lowercasing and trimming. std::nullopt means the label is
/// unmappable and the record is discounted.
inline std::optional<VeracityLabel> normalize_label(std::string_view raw, const LabelMap& map) {
  return map.lookup(raw);
}

// ---------------------------------------------------------------------------
// Rejection reasons (closed set, counted in the curation report)

enum class RejectReason {
  UnmappableLabel,
  NewsPrefix,
  TooShortClaim,
  TooLongClaim,
  ShortExplanation,
  Interrogative,
  NotHealthRelated,
  DuplicateId,
};

inline constexpr std::array<RejectReason, 8> kAllRejectReasons = {
    RejectReason::UnmappableLabel, RejectReason::NewsPrefix,       RejectReason::TooShortClaim,
    RejectReason::TooLongClaim,    RejectReason::ShortExplanation, RejectReason::Interrogative,
    RejectReason::NotHealthRelated, RejectReason::DuplicateId};

inline std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::UnmappableLabel: return "UnmappableLabel";
    case RejectReason::NewsPrefix: return "NewsPrefix";
    case RejectReason::TooShortClaim: return "TooShortClaim";
    case RejectReason::TooLongClaim: return "TooLongClaim";
    case RejectReason::ShortExplanation: return "ShortExplanation";
    case RejectReason::Interrogative: return "Interrogative";
    case RejectReason::NotHealthRelated: return "NotHealthRelated";
    case RejectReason::DuplicateId: return "DuplicateId";
  }
  return "";
}

struct Rejected {
  RejectReason reason;
  bool operator==(const Rejected&) const = default;
};

inline constexpr std::array<std::string_view, 4> kNewsRejectPrefixes = {
    "AP EXCLUSIVE", "Correction", "AP Interview", "AP FACT CHECK"};

/// News headlines are taken as verified, except for the excluded prefixes.
inline std::variant<VeracityLabel, Rejected> assign_news_label(const RawRecord& record) {
  if (!is_news_site(record.source_site))
    throw Error(ErrorCode::InvalidArgument,
                "assign_news_label called on non-news record " + record.claim_id + " (" +
                    std::string(to_string(record.source_site)) + ")");
  for (auto prefix : kNewsRejectPrefixes)
    if (std::string_view(record.claim_text).starts_with(prefix)) return Rejected{RejectReason::NewsPrefix};
  return VeracityLabel::True;
}

// ---------------------------------------------------------------------------
// Structural cleaning

inline constexpr std::size_t kMinClaimChars = 25;
inline constexpr std::size_t kMaxClaimChars = 400;
inline constexpr std::size_t kMinExplanationChars = 25;

inline bool is_closing_quote(char32_t cp) {
  return cp == U'"' || cp == U'\'' || cp == 0x201D || cp == 0x2019 || cp == 0xBB || cp == 0x203A;
}

/// True when the last character, ignoring trailing whitespace and closing
/// quotes, is a question mark.
inline bool ends_with_question(std::string_view s) {
  const std::u32string cps = text::decode(s);
  std::size_t e = cps.size();
  while (e > 0 && (text::is_space(cps[e - 1]) || is_closing_quote(cps[e - 1]))) --e;
  return e > 0 && (cps[e - 1] == U'?' || cps[e - 1] == 0xFF1F);
}

/// Whitespace-normalizes claim and explanation, then enforces the length and
/// interrogative rules. Bounds are inclusive: [25, 400] characters.
inline std::variant<ClaimRecord, Rejected> clean(const RawRecord& raw, VeracityLabel label) {
  ClaimRecord rec;
  rec.claim_id = raw.claim_id;
  rec.claim_text = text::normalize_space(raw.claim_text);
  rec.article_text = text::trim(raw.article_text);
  rec.explanation_text = text::normalize_space(raw.explanation_text);
  rec.label = label;
  rec.date_published = raw.date_published;
  rec.tags = raw.tags;
  rec.fact_checkers = raw.fact_checkers;
  rec.source_site = raw.source_site;
  rec.source_urls = raw.source_urls;

  const std::size_t claim_len = text::char_count(rec.claim_text);
  if (claim_len < kMinClaimChars) return Rejected{RejectReason::TooShortClaim};
  if (claim_len > kMaxClaimChars) return Rejected{RejectReason::TooLongClaim};
  if (text::char_count(rec.explanation_text) < kMinExplanationChars)
    return Rejected{RejectReason::ShortExplanation};
  if (ends_with_question(rec.claim_text) || ends_with_question(rec.explanation_text))
    return Rejected{RejectReason::Interrogative};
  return rec;
}

inline RawRecord to_raw(const ClaimRecord& rec) {
  return RawRecord{rec.claim_id,       rec.claim_text, rec.article_text,  rec.explanation_text,
                   std::string(to_string(rec.label)), rec.date_published, rec.tags,
                   rec.fact_checkers,  rec.source_site, rec.source_urls};
}

/// ClaimRecord invariants; used by tests and by readers of curated corpora.
inline bool satisfies_invariants(const ClaimRecord& rec) {
  const std::size_t n = text::char_count(rec.claim_text);
  return !rec.claim_id.empty() && n >= kMinClaimChars && n <= kMaxClaimChars &&
         text::char_count(rec.explanation_text) >= kMinExplanationChars &&
         !ends_with_question(rec.claim_text) && !ends_with_question(rec.explanation_text);
}

// ---------------------------------------------------------------------------
// JSON-lines serialization

namespace detail {

inline std::vector<std::string> string_list(const json& j, const char* field) {
  if (!j.contains(field)) return {};
  const json& v = j.at(field);
  if (!v.is_array()) throw Error(ErrorCode::InvalidInput, std::string("field '") + field + "' must be an array");
  std::vector<std::string> out;
  for (const auto& item : v) out.push_back(item.get<std::string>());
  return out;
}

inline std::string required_string(const json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_string())
    throw Error(ErrorCode::InvalidInput, std::string("missing string field '") + field + "'");
  return j.at(field).get<std::string>();
}

template <typename Record>
void fill_common(const json& j, Record& r) {
  r.claim_id = required_string(j, "claim_id");
  if (r.claim_id.empty()) throw Error(ErrorCode::InvalidInput, "empty claim_id");
  r.claim_text = required_string(j, "claim_text");
  r.article_text = j.value("article_text", std::string());
  r.explanation_text = j.value("explanation_text", std::string());
  if (j.contains("date_published") && !j.at("date_published").is_null()) {
    const auto s = j.at("date_published").get<std::string>();
    r.date_published = parse_date(s);
    if (!r.date_published) throw Error(ErrorCode::InvalidInput, "bad ISO-8601 date '" + s + "'");
  }
  r.tags = string_list(j, "tags");
  r.fact_checkers = string_list(j, "fact_checkers");
  const auto site = required_string(j, "source_site");
  const auto parsed = parse_site(site);
  if (!parsed) throw Error(ErrorCode::InvalidInput, "unknown source_site '" + site + "'");
  r.source_site = *parsed;
  r.source_urls = string_list(j, "source_urls");
}

template <typename Record>
json common_to_json(const Record& r) {
  json j;
  j["claim_id"] = r.claim_id;
  j["claim_text"] = r.claim_text;
  j["article_text"] = r.article_text;
  j["explanation_text"] = r.explanation_text;
  if (r.date_published) j["date_published"] = format_date(*r.date_published);
  j["tags"] = r.tags;
  j["fact_checkers"] = r.fact_checkers;
  j["source_site"] = std::string(to_string(r.source_site));
  j["source_urls"] = r.source_urls;
  return j;
}

}  // namespace detail

inline json to_json(const ClaimRecord& r) {
  json j = detail::common_to_json(r);
  j["label"] = std::string(to_string(r.label));
  return j;
}

inline json to_json(const RawRecord& r) {
  json j = detail::common_to_json(r);
  j["label"] = r.label;
  return j;
}

inline ClaimRecord claim_from_json(const json& j) {
  ClaimRecord r;
  detail::fill_common(j, r);
  const auto token = detail::required_string(j, "label");
  const auto label = parse_label(token);
  if (!label) throw Error(ErrorCode::InvalidInput, "label '" + token + "' is not a standardized label");
  r.label = *label;
  return r;
}

inline RawRecord raw_from_json(const json& j) {
  RawRecord r;
  detail::fill_common(j, r);
  r.label = j.value("label", std::string());
  return r;
}

}  // namespace pubhealth
