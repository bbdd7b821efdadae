#include "pubhealth/pipeline.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

namespace pubhealth {
namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pubhealth_pipeline_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<ClaimRecord> corpus_of(std::size_t n) {
  std::vector<ClaimRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].claim_id = "id" + std::to_string(i);
    out[i].label = kAllLabels[i % 4];
  }
  return out;
}

PipelineConfig fixture_config() { return load_config(fs::path(PUBHEALTH_CONFIG_DIR) / "fixture.json"); }

TEST(SplitSizes, PaperCountsAndSmallCorpus) {
  EXPECT_EQ(split_sizes(11832, {0.8, 0.1, 0.1}), (std::array<std::size_t, 3>{9466, 1183, 1183}));
  EXPECT_EQ(split_sizes(10, {0.8, 0.1, 0.1}), (std::array<std::size_t, 3>{8, 1, 1}));
  EXPECT_EQ(split_sizes(25, {0.8, 0.1, 0.1}), (std::array<std::size_t, 3>{20, 3, 2}));
}

TEST(SplitSizes, WithinOneOfProportions) {
  for (std::size_t n = 1; n < 500; ++n) {
    const std::array<double, 3> f{0.7, 0.2, 0.1};
    const auto s = split_sizes(n, f);
    EXPECT_EQ(s[0] + s[1] + s[2], n);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_LE(std::abs(double(s[i]) - double(n) * f[i]), 1.0);
  }
}

TEST(Split, PartitionAndDeterminism) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 40 + rng() % 200;
    const auto corpus = corpus_of(n);
    for (bool stratify : {false, true}) {
      const SplitConfig cfg{{0.8, 0.1, 0.1}, stratify};
      const auto a = split_corpus(corpus, cfg, trial);
      ASSERT_EQ(a.size(), n);
      for (const auto& r : corpus) EXPECT_EQ(a.count(r.claim_id), 1u);
      EXPECT_EQ(a, split_corpus(corpus, cfg, trial));
      if (!stratify) {
        std::array<std::size_t, 3> counts{};
        for (const auto& [id, s] : a) ++counts[static_cast<std::size_t>(s)];
        EXPECT_EQ(counts, split_sizes(n, cfg.fractions));
      }
    }
  }
}

TEST(Split, SeedChangesAssignmentButNotInputOrder) {
  auto corpus = corpus_of(100);
  const SplitConfig cfg;
  const auto a = split_corpus(corpus, cfg, 1);
  EXPECT_NE(a, split_corpus(corpus, cfg, 2));
  std::reverse(corpus.begin(), corpus.end());
  EXPECT_EQ(a, split_corpus(corpus, cfg, 1));
}

TEST(Split, Errors) {
  EXPECT_THROW(split_corpus({}, {}, 1), Error);
  EXPECT_THROW(split_corpus(corpus_of(2), {}, 1), Error);
  auto dup = corpus_of(10);
  dup[1].claim_id = dup[0].claim_id;
  EXPECT_THROW(split_corpus(dup, {}, 1), Error);
}

TEST(Config, LoadsFixtureAndResolvesPaths) {
  const auto c = fixture_config();
  EXPECT_TRUE(fs::exists(c.raw_corpus));
  EXPECT_TRUE(fs::exists(c.label_map));
  EXPECT_TRUE(fs::exists(c.easy_words));
  EXPECT_EQ(c.k, 5u);
  EXPECT_EQ(c.backend, "stub");
}

TEST(Config, Rejections) {
  auto expect_config_error = [](const json& j) {
    try {
      config_from_json(j, ".");
      ADD_FAILURE() << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConfigError) << j.dump();
    }
  };
  expect_config_error({{"split", {{"train", 0.5}, {"validation", 0.1}, {"test", 0.1}}}});
  expect_config_error({{"k", 0}});
  expect_config_error({{"unknown_key", 1}});
  expect_config_error({{"seed", "abc"}});
  expect_config_error(json::array());
  EXPECT_THROW(load_config("/nonexistent/config.json"), Error);
}

TEST(Pipeline, CurateRawFixtureCountsDrops) {
  auto cfg = fixture_config();
  cfg.raw_corpus = testing::fixture_path("raw_50.jsonl");
  const auto out = fresh_dir("curate");
  Pipeline(cfg, out).run({Stage::Curate});
  const auto cur = read_json(out / artifacts::kCuration);
  EXPECT_EQ(cur.at("input_records"), 50);
  EXPECT_EQ(cur.at("kept"), 34);
  const auto& d = cur.at("dropped");
  EXPECT_EQ(d.at("NewsPrefix"), 4);
  EXPECT_EQ(d.at("UnmappableLabel"), 3);
  EXPECT_EQ(d.at("TooShortClaim"), 2);
  EXPECT_EQ(d.at("TooLongClaim"), 1);
  EXPECT_EQ(d.at("ShortExplanation"), 1);
  EXPECT_EQ(d.at("Interrogative"), 2);
  EXPECT_EQ(d.at("NotHealthRelated"), 2);
  EXPECT_EQ(d.at("DuplicateId"), 1);
  EXPECT_EQ(read_jsonl(out / artifacts::kCorpus).size(), 34u);
  EXPECT_EQ(read_jsonl(out / artifacts::kRejected).size(), 16u);
  for (const auto& row : read_jsonl(out / artifacts::kCorpus)) EXPECT_TRUE(satisfies_invariants(claim_from_json(row)));
}

TEST(Pipeline, PredictWithoutRankIsMissingInput) {
  const auto out = fresh_dir("missing");
  Pipeline p(fixture_config(), out);
  p.run({Stage::Curate});
  try {
    p.run({Stage::Predict});
    FAIL() << "expected MissingInput";
  } catch (const StageError& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingInput);
    EXPECT_EQ(e.stage(), Stage::Predict);
  }
}

TEST(Pipeline, SchemaVersionIsChecked) {
  const auto out = fresh_dir("schema");
  Pipeline(fixture_config(), out).run({Stage::Curate});
  json manifest = read_json(out / artifacts::kManifest);
  manifest[artifacts::kCorpus]["schema_version"] = kSchemaVersion + 1;
  write_json(out / artifacts::kManifest, manifest);
  try {
    Pipeline(fixture_config(), out).run({Stage::Rank});
    FAIL() << "expected SchemaMismatch";
  } catch (const StageError& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
  }
}

TEST(Pipeline, FullRunIsDeterministic) {
  const auto a = fresh_dir("full_a"), b = fresh_dir("full_b");
  const std::vector<Stage> all(kAllStages.begin(), kAllStages.end());
  Pipeline(fixture_config(), a).run(all);
  Pipeline(fixture_config(), b).run(all);
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    if (name == artifacts::kMetadata) continue;
    EXPECT_EQ(slurp(entry.path()), slurp(b / name)) << name;
    ++compared;
  }
  EXPECT_GE(compared, 12u);

  const auto report = read_json(a / artifacts::kReport);
  for (const char* key : {"readability", "curation", "veracity", "explanation", "coherence", "config"})
    EXPECT_TRUE(report.contains(key)) << key;
  EXPECT_EQ(report.at("curation").at("kept"), 25);
  EXPECT_TRUE(report.at("coherence").contains("agreement"));
  EXPECT_TRUE(fs::exists(a / artifacts::kMetadata));
}

TEST(Pipeline, SeedOverrideChangesSplit) {
  auto cfg = fixture_config();
  const auto a = fresh_dir("seed_a"), b = fresh_dir("seed_b");
  Pipeline(cfg, a).run({Stage::Curate});
  cfg.seed = 99;
  Pipeline(cfg, b).run({Stage::Curate});
  EXPECT_NE(slurp(a / artifacts::kSplit), slurp(b / artifacts::kSplit));
  EXPECT_EQ(slurp(a / artifacts::kCorpus), slurp(b / artifacts::kCorpus));
}

TEST(ErrorRecord, WritesMachineReadableJson) {
  const auto out = fresh_dir("error");
  write_error_record(out, "predict", Error(ErrorCode::MissingInput, "missing artifact rank.jsonl"));
  const auto j = read_json(out / artifacts::kError);
  EXPECT_EQ(j.at("stage"), "predict");
  EXPECT_EQ(j.at("code"), std::string(to_string(ErrorCode::MissingInput)));
}

}  // namespace
}  // namespace pubhealth
