#include "pubhealth/corpus.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "test_support.hpp"

namespace pubhealth {
namespace {

const LabelMap& bundled_map() {
  static const LabelMap map = LabelMap::from_file(testing::data_path("label_map.tsv"));
  return map;
}

RawRecord raw(std::string claim, std::string explanation, SourceSite site = SourceSite::Snopes) {
  RawRecord r;
  r.claim_id = "c1";
  r.claim_text = std::move(claim);
  r.article_text = "Article body.";
  r.explanation_text = std::move(explanation);
  r.source_site = site;
  return r;
}

TEST(NormalizeLabel, TableExamples) {
  EXPECT_EQ(normalize_label("pants-on-fire!", bundled_map()), VeracityLabel::False);
  EXPECT_EQ(normalize_label("half-true", bundled_map()), VeracityLabel::Mixture);
  EXPECT_EQ(normalize_label("no evidence", bundled_map()), VeracityLabel::Unproven);
  EXPECT_EQ(normalize_label("TRUE", bundled_map()), VeracityLabel::True);
  EXPECT_EQ(normalize_label("hilarious nonsense", bundled_map()), std::nullopt);
}

TEST(NormalizeLabel, TrimsAndLowercases) {
  EXPECT_EQ(normalize_label("  Mostly-False \t", bundled_map()), VeracityLabel::False);
  EXPECT_EQ(normalize_label("5 STAR", bundled_map()), VeracityLabel::True);
  EXPECT_EQ(normalize_label("truth! & fiction!", bundled_map()), VeracityLabel::Mixture);
}

TEST(NormalizeLabel, NoFuzzyMatching) {
  EXPECT_EQ(normalize_label("half true", bundled_map()), std::nullopt);
  EXPECT_EQ(normalize_label("pants-on-fire", bundled_map()), std::nullopt);
  EXPECT_EQ(normalize_label("", bundled_map()), std::nullopt);
}

TEST(NormalizeLabel, BundledMapRoundTrips) {
  std::ifstream in(testing::data_path("label_map.tsv"));
  std::string line;
  std::getline(in, line);  // header
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos);
    const auto expected = parse_label(line.substr(tab + 1));
    ASSERT_TRUE(expected);
    EXPECT_EQ(normalize_label(line.substr(0, tab), bundled_map()), expected) << line;
    ++rows;
  }
  EXPECT_EQ(rows, bundled_map().size());
  EXPECT_EQ(rows, 99u);
}

TEST(NormalizeLabel, TotalOnRandomStrings) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> ch(32, 126), len(0, 20);
  for (int i = 0; i < 2000; ++i) {
    std::string s(static_cast<std::size_t>(len(rng)), ' ');
    for (auto& c : s) c = static_cast<char>(ch(rng));
    const auto a = normalize_label(s, bundled_map());
    EXPECT_EQ(a, normalize_label(s, bundled_map()));
  }
}

TEST(LabelMap, RejectsConflictingRows) {
  std::istringstream in("raw_label\tstandard_label\nfoo\ttrue\nFOO\tfalse\n");
  EXPECT_THROW(LabelMap::from_stream(in), Error);
}

TEST(LabelMap, RejectsUnknownStandardLabel) {
  std::istringstream in("foo\tmaybe\n");
  EXPECT_THROW(LabelMap::from_stream(in), Error);
}

TEST(AssignNewsLabel, HeadlinesAreTrue) {
  auto r = raw("Families tell U.S. lawmakers of heparin deaths.", "x", SourceSite::ApNews);
  EXPECT_EQ(std::get<VeracityLabel>(assign_news_label(r)), VeracityLabel::True);
}

TEST(AssignNewsLabel, RejectedPrefixes) {
  for (const char* h : {"AP EXCLUSIVE: New virus data", "Correction: story update", "AP Interview: health chief",
                        "AP FACT CHECK: Trump on drug prices"}) {
    auto r = raw(h, "x", SourceSite::Reuters);
    ASSERT_TRUE(std::holds_alternative<Rejected>(assign_news_label(r))) << h;
    EXPECT_EQ(std::get<Rejected>(assign_news_label(r)).reason, RejectReason::NewsPrefix);
  }
}

TEST(AssignNewsLabel, PrefixMatchIsCaseSensitive) {
  auto r = raw("correction of vitamin deficiency helps patients", "x", SourceSite::ApNews);
  EXPECT_TRUE(std::holds_alternative<VeracityLabel>(assign_news_label(r)));
}

TEST(AssignNewsLabel, ErrorsOnNonNewsSite) {
  EXPECT_THROW(assign_news_label(raw("Anything at all here", "x", SourceSite::Politifact)), Error);
}

TEST(Clean, LengthBoundsAreInclusive) {
  const std::string expl(60, 'e');
  auto reason = [&](std::string claim) {
    const auto out = clean(raw(std::move(claim), expl), VeracityLabel::True);
    return std::holds_alternative<Rejected>(out) ? std::optional(std::get<Rejected>(out).reason) : std::nullopt;
  };
  EXPECT_EQ(reason(std::string(24, 'a')), RejectReason::TooShortClaim);
  EXPECT_EQ(reason(std::string(25, 'a')), std::nullopt);
  EXPECT_EQ(reason(std::string(400, 'a')), std::nullopt);
  EXPECT_EQ(reason(std::string(401, 'a')), RejectReason::TooLongClaim);
}

TEST(Clean, CountsCharactersNotBytes) {
  // 24 curly apostrophes are 72 bytes but 24 characters.
  std::string claim;
  for (int i = 0; i < 24; ++i) claim += "\xE2\x80\x99";
  const auto out = clean(raw(claim, std::string(60, 'e')), VeracityLabel::True);
  ASSERT_TRUE(std::holds_alternative<Rejected>(out));
  EXPECT_EQ(std::get<Rejected>(out).reason, RejectReason::TooShortClaim);
}

TEST(Clean, ShortExplanation) {
  const auto out = clean(raw(std::string(100, 'a'), std::string(24, 'e')), VeracityLabel::False);
  EXPECT_EQ(std::get<Rejected>(out).reason, RejectReason::ShortExplanation);
}

TEST(Clean, Interrogatives) {
  const std::string expl = "This explanation is long enough to keep.";
  EXPECT_EQ(std::get<Rejected>(clean(raw("Is Peppa Pig linked to autism?", expl), VeracityLabel::False)).reason,
            RejectReason::Interrogative);
  EXPECT_EQ(std::get<Rejected>(clean(raw("He asked: is Peppa Pig linked to autism?\"  ", expl),
                                     VeracityLabel::False)).reason,
            RejectReason::Interrogative);
  EXPECT_EQ(std::get<Rejected>(clean(raw("Peppa Pig is linked to autism in children.", "Who knows whether this is so?"),
                                     VeracityLabel::False)).reason,
            RejectReason::Interrogative);
  // Only the final character counts.
  EXPECT_TRUE(std::holds_alternative<ClaimRecord>(
      clean(raw("Is it safe? Officials say the vaccine is safe.", expl), VeracityLabel::True)));
}

TEST(Clean, AcceptsDeclarativeRecord) {
  const std::string claim =
      "Drinking eight glasses of water each day is needed for good health in most healthy adults, they say.";
  ASSERT_EQ(text::char_count(claim), 100u);
  const auto out = clean(raw(claim, std::string(60, 'e')), VeracityLabel::Mixture);
  ASSERT_TRUE(std::holds_alternative<ClaimRecord>(out));
  EXPECT_EQ(std::get<ClaimRecord>(out).label, VeracityLabel::Mixture);
}

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
  static const std::string alphabet = "abc XYZ?!.\"' \t\n";
  static const std::vector<std::string> wide = {"\xE2\x80\x9D", "\xE2\x80\x99", "\xC3\xA9", " "};
  std::uniform_int_distribution<std::size_t> len(0, max_len), pick(0, alphabet.size() + wide.size() - 1);
  std::string s;
  for (std::size_t i = len(rng); i > 0; --i) {
    const std::size_t k = pick(rng);
    if (k < alphabet.size()) s.push_back(alphabet[k]);
    else s += wide[k - alphabet.size()];
  }
  return s;
}

TEST(Clean, PropertyAcceptedRecordsSatisfyInvariantsAndAreFixedPoints) {
  std::mt19937_64 rng(42);
  std::size_t accepted = 0;
  for (int i = 0; i < 5000; ++i) {
    RawRecord r = raw(random_text(rng, 450), random_text(rng, 80));
    const auto out = clean(r, VeracityLabel::True);
    if (!std::holds_alternative<ClaimRecord>(out)) continue;
    ++accepted;
    const ClaimRecord& rec = std::get<ClaimRecord>(out);
    EXPECT_TRUE(satisfies_invariants(rec));
    const auto again = clean(to_raw(rec), rec.label);
    ASSERT_TRUE(std::holds_alternative<ClaimRecord>(again));
    EXPECT_EQ(std::get<ClaimRecord>(again), rec);
  }
  EXPECT_GT(accepted, 100u);
}

TEST(Json, ClaimRecordRoundTrip) {
  ClaimRecord r;
  r.claim_id = "pf-1";
  r.claim_text = "Salt lamps impart myriad health benefits.";
  r.article_text = "A";
  r.explanation_text = "E";
  r.label = VeracityLabel::False;
  r.date_published = parse_date("2016-12-22");
  r.tags = {"medical", "salt lamps"};
  r.source_site = SourceSite::Snopes;
  const json j = to_json(r);
  EXPECT_EQ(j.at("label"), "false");
  EXPECT_EQ(j.at("date_published"), "2016-12-22");
  EXPECT_EQ(claim_from_json(j), r);
}

TEST(Json, AbsentOptionalFieldsAreOmitted) {
  ClaimRecord r;
  r.claim_id = "x";
  r.claim_text = "c";
  EXPECT_FALSE(to_json(r).contains("date_published"));
}

TEST(Json, RejectsBadInput) {
  EXPECT_THROW(claim_from_json(json{{"claim_id", "a"}, {"claim_text", "c"}, {"label", "maybe"},
                                    {"source_site", "snopes"}}),
               Error);
  EXPECT_THROW(claim_from_json(json{{"claim_id", "a"}, {"claim_text", "c"}, {"label", "true"},
                                    {"source_site", "bbc"}}),
               Error);
  EXPECT_THROW(raw_from_json(json{{"claim_id", "a"}, {"claim_text", "c"}, {"source_site", "snopes"},
                                  {"date_published", "2019-02-30"}}),
               Error);
  EXPECT_THROW(raw_from_json(json{{"claim_id", ""}, {"claim_text", "c"}, {"source_site", "snopes"}}), Error);
}

}  // namespace
}  // namespace pubhealth
