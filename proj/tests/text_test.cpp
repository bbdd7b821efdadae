#include "pubhealth/text.hpp"

#include <gtest/gtest.h>

namespace pubhealth::text {
namespace {

TEST(Text, CharCountUsesScalarValues) {
  EXPECT_EQ(char_count("abc"), 3u);
  EXPECT_EQ(char_count("\xE2\x80\x9C" "hi" "\xE2\x80\x9D"), 4u);  // curly quotes
  EXPECT_EQ(char_count(""), 0u);
}

TEST(Text, MalformedUtf8DoesNotThrow) {
  EXPECT_EQ(char_count("\xFF\xFE" "a"), 3u);
  EXPECT_EQ(tokenize("\xC3"), std::vector<std::string>{});
}

TEST(Text, NormalizeSpaceCollapsesRuns) {
  EXPECT_EQ(normalize_space("  a \t b\n\nc  "), "a b c");
  EXPECT_EQ(normalize_space(""), "");
  EXPECT_EQ(normalize_space(normalize_space(" x  y ")), "x y");
}

TEST(Text, TokenizeSplitsOnNonAlphanumeric) {
  EXPECT_EQ(tokenize("Anti-vaxxer's X-ray, COVID-19!"),
            (std::vector<std::string>{"anti", "vaxxer", "s", "x", "ray", "covid", "19"}));
  EXPECT_EQ(tokenize("\xE2\x80\x9C" "Electric smog" "\xE2\x80\x9D"),
            (std::vector<std::string>{"electric", "smog"}));
}

TEST(Text, TokenizeKeepsAccentedLetters) {
  EXPECT_EQ(tokenize("Caf\xC3\x89 na\xC3\xAFve"), (std::vector<std::string>{"caf\xC3\xA9", "na\xC3\xAFve"}));
}

TEST(Text, Fnv1aIsStable) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

}  // namespace
}  // namespace pubhealth::text
