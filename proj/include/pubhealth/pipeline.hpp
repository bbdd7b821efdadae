#pragma once

// Stage orchestration: configuration, deterministic splitting, JSON-lines
// artifacts, and the merged report.
//
// Every stage reads its predecessors from the output directory and writes its
// own artifact. manifest.json records the schema version of each artifact and
// is checked on read. Run timestamps go to run_metadata.json so that every
// other file is byte-identical across reruns with the same inputs.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pubhealth/coherence.hpp"
#include "pubhealth/corpus.hpp"
#include "pubhealth/error.hpp"
#include "pubhealth/evidence.hpp"
#include "pubhealth/explain.hpp"
#include "pubhealth/lexicon.hpp"
#include "pubhealth/readability.hpp"
#include "pubhealth/service_client.hpp"
#include "pubhealth/veracity.hpp"

namespace pubhealth {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Configuration

enum class Split { Train, Validation, Test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "";
}

inline std::optional<Split> parse_split(std::string_view s) {
  for (auto x : {Split::Train, Split::Validation, Split::Test})
    if (to_string(x) == s) return x;
  return std::nullopt;
}

struct SplitConfig {
  std::array<double, 3> fractions{0.8, 0.1, 0.1};  // train, validation, test
  bool stratify = false;
};

struct PipelineConfig {
  fs::path raw_corpus;
  fs::path label_map;
  std::vector<fs::path> term_lists;
  fs::path supplement_terms;
  fs::path easy_words;
  fs::path annotations;  // optional
  std::size_t k = kDefaultEvidenceCount;
  SplitConfig split;
  std::string backend = "stub";  // "stub" or a service base URL
  std::uint64_t seed = 13;
  BaselineConfig baseline;

  void validate() const {
    if (k < 1) throw Error(ErrorCode::ConfigError, "config: k must be >= 1");
    double sum = 0.0;
    for (double f : split.fractions) {
      if (!(f >= 0.0) || !std::isfinite(f)) throw Error(ErrorCode::ConfigError, "config: split fractions must be >= 0");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::ConfigError, "config: split fractions must sum to 1");
    if (backend.empty()) throw Error(ErrorCode::ConfigError, "config: backend must be 'stub' or a URL");
    if (baseline.features.hash_dimension == 0 || baseline.features.max_ngram == 0)
      throw Error(ErrorCode::ConfigError, "config: baseline feature space is empty");
    if (baseline.l2_lambda < 0.0) throw Error(ErrorCode::ConfigError, "config: l2_lambda must be >= 0");
  }
};

inline fs::path default_data_dir() {
#ifdef PUBHEALTH_DATA_DIR
  return fs::path(PUBHEALTH_DATA_DIR);
#else
  return fs::path("data");
#endif
}

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T config_value(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigError, std::string("config: bad value for '") + key + "'");
  }
}

}  // namespace detail

/// Paths in the document are relative to `base_dir`; unset data paths fall
/// back to the bundled data directory.
inline PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config: expected a JSON object");
  static const std::set<std::string> known = {"raw_corpus", "label_map", "lexicon",  "easy_words", "annotations",
                                              "k",          "split",     "backend",  "seed",       "baseline"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw Error(ErrorCode::ConfigError, "config: unknown key '" + key + "'");

  const fs::path data = default_data_dir();
  PipelineConfig c;
  if (j.contains("raw_corpus")) c.raw_corpus = detail::resolve(base_dir, detail::config_value<std::string>(j, "raw_corpus", ""));
  c.label_map = j.contains("label_map") ? detail::resolve(base_dir, detail::config_value<std::string>(j, "label_map", ""))
                                        : data / "label_map.tsv";
  c.easy_words = j.contains("easy_words")
                     ? detail::resolve(base_dir, detail::config_value<std::string>(j, "easy_words", ""))
                     : data / "dale_chall_easy_words.txt";
  if (j.contains("annotations"))
    c.annotations = detail::resolve(base_dir, detail::config_value<std::string>(j, "annotations", ""));

  const json lex = j.value("lexicon", json::object());
  if (!lex.is_object()) throw Error(ErrorCode::ConfigError, "config: 'lexicon' must be an object");
  if (lex.contains("term_lists")) {
    for (const auto& p : detail::config_value<std::vector<std::string>>(lex, "term_lists", {}))
      c.term_lists.push_back(detail::resolve(base_dir, p));
  } else {
    c.term_lists.push_back(data / "lexicon" / "core_terms.txt");
  }
  c.supplement_terms = lex.contains("supplements")
                           ? detail::resolve(base_dir, detail::config_value<std::string>(lex, "supplements", ""))
                           : data / "lexicon" / "supplement_terms.txt";

  const auto k = detail::config_value<long long>(j, "k", static_cast<long long>(kDefaultEvidenceCount));
  if (k < 1) throw Error(ErrorCode::ConfigError, "config: k must be >= 1");
  c.k = static_cast<std::size_t>(k);

  const json split = j.value("split", json::object());
  if (!split.is_object()) throw Error(ErrorCode::ConfigError, "config: 'split' must be an object");
  c.split.fractions = {detail::config_value<double>(split, "train", 0.8),
                       detail::config_value<double>(split, "validation", 0.1),
                       detail::config_value<double>(split, "test", 0.1)};
  c.split.stratify = detail::config_value<bool>(split, "stratify", false);

  c.backend = detail::config_value<std::string>(j, "backend", "stub");
  const auto seed = detail::config_value<long long>(j, "seed", 13);
  if (seed < 0) throw Error(ErrorCode::ConfigError, "config: seed must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);

  const json base = j.value("baseline", json::object());
  if (!base.is_object()) throw Error(ErrorCode::ConfigError, "config: 'baseline' must be an object");
  c.baseline.l2_lambda = detail::config_value<double>(base, "l2_lambda", c.baseline.l2_lambda);
  c.baseline.max_epochs = detail::config_value<std::size_t>(base, "max_epochs", c.baseline.max_epochs);
  c.baseline.features.hash_dimension =
      detail::config_value<std::uint32_t>(base, "hash_dimension", c.baseline.features.hash_dimension);
  c.baseline.features.max_ngram = detail::config_value<std::size_t>(base, "max_ngram", c.baseline.features.max_ngram);

  c.validate();
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, fs::absolute(path).parent_path());
}

// ---------------------------------------------------------------------------
// Splitting

/// Largest-remainder apportionment of n items; ties go to the earlier split.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& fractions) {
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * fractions[i];
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % 3, ++assigned) ++sizes[order[i]];
  return sizes;
}

namespace detail {

/// Unbiased draw from [0, bound) by rejection; unlike the standard
/// distributions its output is fixed across standard library vendors.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return x % bound;
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

}  // namespace detail

using SplitAssignment = std::map<std::string, Split>;

/// Sort by claim_id, shuffle with the seeded generator, cut at the configured
/// proportions. With stratification each label is apportioned separately.
inline SplitAssignment split_corpus(const std::vector<ClaimRecord>& corpus, const SplitConfig& cfg,
                                    std::uint64_t seed) {
  if (corpus.empty()) throw Error(ErrorCode::DegenerateInput, "split: empty corpus");
  std::map<std::string, VeracityLabel> ids;
  for (const auto& r : corpus)
    if (!ids.emplace(r.claim_id, r.label).second)
      throw Error(ErrorCode::InvalidInput, "split: duplicate claim_id " + r.claim_id);

  std::vector<std::vector<std::string>> groups;
  if (cfg.stratify) {
    std::map<VeracityLabel, std::vector<std::string>> by_label;
    for (const auto& [id, label] : ids) by_label[label].push_back(id);
    for (auto& [label, g] : by_label) groups.push_back(std::move(g));
  } else {
    groups.emplace_back();
    for (const auto& [id, label] : ids) groups.back().push_back(id);
  }

  std::mt19937_64 rng(seed);
  SplitAssignment out;
  std::array<std::size_t, 3> totals{};
  for (auto& g : groups) {
    detail::seeded_shuffle(g, rng);
    const auto sizes = split_sizes(g.size(), cfg.fractions);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t i = 0; i < sizes[s]; ++i) out.emplace(g[pos++], static_cast<Split>(s));
      totals[s] += sizes[s];
    }
  }
  for (std::size_t s = 0; s < 3; ++s)
    if (totals[s] == 0)
      throw Error(ErrorCode::DegenerateInput,
                  "split: the " + std::string(to_string(static_cast<Split>(s))) + " split would be empty");
  return out;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace artifacts {
inline constexpr const char* kCorpus = "corpus.jsonl";
inline constexpr const char* kRejected = "rejected.jsonl";
inline constexpr const char* kSplit = "split.jsonl";
inline constexpr const char* kCuration = "curation.json";
inline constexpr const char* kRank = "rank.jsonl";
inline constexpr const char* kPredictions = "predictions.jsonl";
inline constexpr const char* kPredictMetrics = "predict_metrics.json";
inline constexpr const char* kExplanations = "explanations.jsonl";
inline constexpr const char* kExplainMetrics = "explain_metrics.json";
inline constexpr const char* kCoherence = "coherence.jsonl";
inline constexpr const char* kCoherenceMetrics = "coherence_metrics.json";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kMetadata = "run_metadata.json";
inline constexpr const char* kError = "error.json";
}  // namespace artifacts

inline std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidInput, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::InvalidInput, "write failed: " + path.string());
}

inline void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
  std::string buf;
  for (const auto& r : rows) (buf += r.dump()) += '\n';
  write_text(path, buf);
}

inline void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, path.string() + ": " + e.what());
  }
}

/// Output directory plus its manifest of artifact schema versions.
class ArtifactStore {
 public:
  explicit ArtifactStore(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::InvalidInput, "cannot create output directory " + dir_.string());
    if (fs::exists(dir_ / artifacts::kManifest)) manifest_ = read_json(dir_ / artifacts::kManifest);
    if (!manifest_.is_object()) manifest_ = json::object();
  }

  const fs::path& dir() const { return dir_; }
  fs::path path(const std::string& name) const { return dir_ / name; }

  void put_jsonl(const std::string& name, const std::vector<json>& rows, std::string_view stage) {
    write_jsonl(path(name), rows);
    record(name, stage, rows.size());
  }

  void put_json(const std::string& name, json doc, std::string_view stage) {
    doc["schema_version"] = kSchemaVersion;
    write_json(path(name), doc);
    record(name, stage, 1);
  }

  std::vector<json> get_jsonl(const std::string& name) const {
    check(name);
    return read_jsonl(path(name));
  }

  json get_json(const std::string& name) const {
    check(name);
    json doc = read_json(path(name));
    if (doc.value("schema_version", -1) != kSchemaVersion)
      throw Error(ErrorCode::SchemaMismatch, name + ": unsupported schema_version");
    return doc;
  }

  bool has(const std::string& name) const { return manifest_.contains(name) && fs::exists(path(name)); }

 private:
  void record(const std::string& name, std::string_view stage, std::size_t records) {
    manifest_[name] = {{"schema_version", kSchemaVersion}, {"stage", stage}, {"records", records}};
    write_json(path(artifacts::kManifest), manifest_);
  }

  void check(const std::string& name) const {
    if (!fs::exists(path(name)) || !manifest_.contains(name))
      throw Error(ErrorCode::MissingInput, "missing artifact " + name + " in " + dir_.string());
    if (manifest_.at(name).value("schema_version", -1) != kSchemaVersion)
      throw Error(ErrorCode::SchemaMismatch, name + ": schema_version " +
                                                 manifest_.at(name).value("schema_version", json()).dump() +
                                                 " is not " + std::to_string(kSchemaVersion));
  }

  fs::path dir_;
  json manifest_ = json::object();
};

// ---------------------------------------------------------------------------
// Backends

/// Model heads for a run. "stub" selects the in-process substitutes; a URL
/// selects the service for every head it advertises on /v1/health.
struct Backends {
  std::unique_ptr<EmbeddingBackend> embed;
  std::unique_ptr<NliBackend> nli;
  std::unique_ptr<HttpClassifierBackend> classify;     // null: train the baseline
  std::unique_ptr<HttpSummarizerBackend> summarize;    // null: no abstractive explanations
  json description = json::object();
};

inline Backends make_backends(const std::string& spec) {
  Backends b;
  std::set<std::string> heads;
  if (spec != "stub") {
    const ServiceOptions opts{spec};
    const json health = ServiceClient(opts).health();
    if (health.contains("models") && health.at("models").is_object()) {
      for (const auto& [name, id] : health.at("models").items()) heads.insert(name);
    } else {
      heads = {"embed", "nli", "classify", "summarize"};
    }
    if (heads.count("embed")) b.embed = std::make_unique<HttpEmbeddingBackend>(opts);
    if (heads.count("nli")) b.nli = std::make_unique<HttpNliBackend>(opts);
    if (heads.count("classify")) b.classify = std::make_unique<HttpClassifierBackend>(opts);
    if (heads.count("summarize")) b.summarize = std::make_unique<HttpSummarizerBackend>(opts);
  }
  if (!b.embed) b.embed = std::make_unique<HashedTfidfBackend>();
  if (!b.nli) b.nli = std::make_unique<TokenOverlapNliBackend>();
  b.description = {{"embed", heads.count("embed") ? "service" : "hashed-tfidf"},
                   {"nli", heads.count("nli") ? "service" : "token-overlap"},
                   {"classify", b.classify ? "service" : "softmax-baseline"},
                   {"summarize", b.summarize ? "service" : "none"}};
  return b;
}

// ---------------------------------------------------------------------------
// Stages

enum class Stage { Curate, Rank, Predict, Explain, Cohere, Report };

inline constexpr std::array<Stage, 6> kAllStages = {Stage::Curate,  Stage::Rank,   Stage::Predict,
                                                    Stage::Explain, Stage::Cohere, Stage::Report};

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Curate: return "curate";
    case Stage::Rank: return "rank";
    case Stage::Predict: return "predict";
    case Stage::Explain: return "explain";
    case Stage::Cohere: return "cohere";
    case Stage::Report: return "report";
  }
  return "";
}

inline std::optional<Stage> parse_stage(std::string_view s) {
  for (auto x : kAllStages)
    if (to_string(x) == s) return x;
  return std::nullopt;
}

/// A stage failure, carrying the stage name for the error record.
class StageError : public Error {
 public:
  StageError(Stage stage, const Error& cause)
      : Error(cause.code(), std::string(to_string(stage)) + ": " + cause.what()), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, fs::path out_dir) : cfg_(std::move(cfg)), store_(std::move(out_dir)) {
    cfg_.validate();
  }

  const PipelineConfig& config() const { return cfg_; }
  const ArtifactStore& store() const { return store_; }

  void run(const std::vector<Stage>& stages) {
    const auto started = std::chrono::system_clock::now();
    for (Stage s : stages) {
      try {
        run_stage(s);
      } catch (const StageError&) {
        throw;
      } catch (const Error& e) {
        throw StageError(s, e);
      } catch (const json::exception& e) {
        throw StageError(s, Error(ErrorCode::InvalidInput, e.what()));
      }
    }
    write_metadata(started, stages);
  }

  void run_stage(Stage s) {
    switch (s) {
      case Stage::Curate: curate(); break;
      case Stage::Rank: rank(); break;
      case Stage::Predict: predict(); break;
      case Stage::Explain: explain(); break;
      case Stage::Cohere: cohere(); break;
      case Stage::Report: report(); break;
    }
  }

  // -- curate ---------------------------------------------------------------

  void curate() {
    if (cfg_.raw_corpus.empty()) throw Error(ErrorCode::ConfigError, "curate needs 'raw_corpus' in the config");
    const auto map = LabelMap::from_file(cfg_.label_map.string());
    std::vector<TermList> lists;
    for (const auto& p : cfg_.term_lists) lists.push_back(load_term_list(p.string(), p.stem().string()));
    const auto supplements = load_term_list(cfg_.supplement_terms.string(), "supplements");
    const auto lexicon = build_lexicon(lists, supplements.terms);

    std::map<std::string, std::size_t> drops;
    for (auto r : kAllRejectReasons) drops[std::string(to_string(r))] = 0;
    std::vector<json> kept, rejected;
    std::vector<ClaimRecord> records;
    std::set<std::string> seen;
    std::size_t input = 0;
    auto reject = [&](const RawRecord& raw, RejectReason reason) {
      ++drops[std::string(to_string(reason))];
      rejected.push_back({{"claim_id", raw.claim_id}, {"reason", to_string(reason)}});
    };
    for (const auto& row : read_jsonl(cfg_.raw_corpus)) {
      ++input;
      const RawRecord raw = raw_from_json(row);
      VeracityLabel label;
      if (is_news_site(raw.source_site)) {
        const auto assigned = assign_news_label(raw);
        if (const auto* r = std::get_if<Rejected>(&assigned)) {
          reject(raw, r->reason);
          continue;
        }
        label = std::get<VeracityLabel>(assigned);
      } else {
        const auto mapped = normalize_label(raw.label, map);
        if (!mapped) {
          reject(raw, RejectReason::UnmappableLabel);
          continue;
        }
        label = *mapped;
      }
      auto cleaned = clean(raw, label);
      if (const auto* r = std::get_if<Rejected>(&cleaned)) {
        reject(raw, r->reason);
        continue;
      }
      auto& rec = std::get<ClaimRecord>(cleaned);
      if (!passes_health_filter(rec, lexicon).passed) {
        reject(raw, RejectReason::NotHealthRelated);
        continue;
      }
      if (!seen.insert(rec.claim_id).second) {
        reject(raw, RejectReason::DuplicateId);
        continue;
      }
      kept.push_back(to_json(rec));
      records.push_back(std::move(rec));
    }
    if (records.empty()) throw Error(ErrorCode::DegenerateInput, "curation kept no records");

    const auto assignment = split_corpus(records, cfg_.split, cfg_.seed);
    std::vector<json> split_rows;
    std::map<std::string, std::size_t> split_counts{{"train", 0}, {"validation", 0}, {"test", 0}};
    for (const auto& [id, s] : assignment) {
      split_rows.push_back({{"claim_id", id}, {"split", to_string(s)}});
      ++split_counts[std::string(to_string(s))];
    }
    std::map<std::string, std::size_t> label_counts;
    for (auto l : kAllLabels) label_counts[std::string(to_string(l))] = 0;
    for (const auto& r : records) ++label_counts[std::string(to_string(r.label))];

    store_.put_jsonl(artifacts::kCorpus, kept, "curate");
    store_.put_jsonl(artifacts::kRejected, rejected, "curate");
    store_.put_jsonl(artifacts::kSplit, split_rows, "curate");
    store_.put_json(artifacts::kCuration,
                    {{"input_records", input},
                     {"kept", records.size()},
                     {"dropped", drops},
                     {"labels", label_counts},
                     {"splits", split_counts},
                     {"seed", cfg_.seed},
                     {"lexicon_terms", lexicon.size()}},
                    "curate");
  }

  // -- rank -----------------------------------------------------------------

  void rank() {
    const auto corpus = load_corpus();
    const auto split = load_split();
    auto& b = backends();
    std::vector<json> rows;
    for (const auto& rec : corpus) {
      const auto sents = segment_sentences(rec.article_text);
      const auto ranking = rank_evidence(rec.claim_id, rec.claim_text, sents, *b.embed, cfg_.k);
      json ranked = json::array(), evidence = json::array();
      for (const auto& s : ranking.ranked) ranked.push_back({{"index", s.index}, {"score", s.score}});
      for (const auto& s : ranking.selected()) evidence.push_back(sents[s.index].text);
      rows.push_back({{"claim_id", rec.claim_id},
                      {"split", to_string(split.at(rec.claim_id))},
                      {"k", ranking.k},
                      {"ranked", ranked},
                      {"evidence", evidence}});
    }
    store_.put_jsonl(artifacts::kRank, rows, "rank");
  }

  // -- predict --------------------------------------------------------------

  void predict() {
    const auto ranks = store_.get_jsonl(artifacts::kRank);
    const auto corpus = load_corpus();
    std::map<std::string, const ClaimRecord*> by_id;
    for (const auto& r : corpus) by_id[r.claim_id] = &r;

    struct Item {
      std::string id;
      Split split;
      TrainingExample ex;
    };
    std::vector<Item> items;
    for (const auto& row : ranks) {
      const auto id = row.at("claim_id").get<std::string>();
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw Error(ErrorCode::InvalidInput, "rank artifact names unknown claim_id " + id);
      const auto split = parse_split(row.at("split").get<std::string>());
      if (!split) throw Error(ErrorCode::InvalidInput, "rank artifact: bad split for " + id);
      items.push_back({id, *split, {it->second->claim_text, row.at("evidence").get<std::vector<std::string>>(),
                                    it->second->label}});
    }

    auto& b = backends();
    std::function<LabelProbs(const TrainingExample&)> classify;
    std::optional<BaselineClassifier> baseline;
    json model_info;
    if (b.classify) {
      classify = [&](const TrainingExample& ex) { return b.classify->predict(ex.claim, ex.evidence); };
      model_info = {{"kind", "service"}};
    } else {
      std::vector<TrainingExample> train;
      for (const auto& it : items)
        if (it.split == Split::Train) train.push_back(it.ex);
      baseline.emplace(train_baseline(train, cfg_.baseline));
      const auto& hist = baseline->model().loss_history;
      model_info = {{"kind", "softmax-baseline"},
                    {"train_examples", train.size()},
                    {"epochs", hist.size() - 1},
                    {"initial_loss", hist.front()},
                    {"final_loss", hist.back()},
                    {"hash_dimension", cfg_.baseline.features.hash_dimension},
                    {"l2_lambda", cfg_.baseline.l2_lambda}};
      classify = [&](const TrainingExample& ex) { return baseline->predict(ex.claim, ex.evidence); };
    }

    std::vector<json> rows;
    std::map<Split, std::pair<std::vector<VeracityLabel>, std::vector<VeracityLabel>>> by_split;
    for (const auto& it : items) {
      if (it.split == Split::Train) continue;
      const auto probs = classify(it.ex);
      const auto pred = argmax_label(probs);
      by_split[it.split].first.push_back(pred);
      by_split[it.split].second.push_back(it.ex.label);
      rows.push_back({{"claim_id", it.id},
                      {"split", to_string(it.split)},
                      {"probs", probs},
                      {"predicted", to_string(pred)},
                      {"gold", to_string(it.ex.label)}});
    }
    json metrics = json::object();
    for (const auto& [split, pg] : by_split) metrics[std::string(to_string(split))] = metrics_json(evaluate(pg.first, pg.second));
    store_.put_jsonl(artifacts::kPredictions, rows, "predict");
    store_.put_json(artifacts::kPredictMetrics, {{"model", model_info}, {"metrics", metrics}}, "predict");
  }

  // -- explain --------------------------------------------------------------

  void explain() {
    const auto corpus = load_corpus();
    const auto split = load_split();
    auto& b = backends();
    std::map<ExplanationMethod, std::vector<Explanation>> by_method;
    std::vector<json> rows;
    for (const auto& rec : corpus) {
      if (split.at(rec.claim_id) != Split::Test) continue;
      const auto article = segment_sentences(rec.article_text);
      const auto gold = gold_explanation(rec.claim_id, rec.explanation_text);
      if (article.empty() || gold.sentences.empty()) continue;
      std::vector<Explanation> made = {gold, lead3(rec.claim_id, article), oracle_extractive(article, gold)};
      if (b.summarize) {
        std::vector<std::string> sents;
        for (const auto& s : article) sents.push_back(s.text);
        made.push_back({rec.claim_id, b.summarize->summarize(rec.claim_text, sents), ExplanationMethod::Abstractive});
      }
      for (auto& e : made) {
        rows.push_back({{"claim_id", e.claim_id}, {"method", to_string(e.method)}, {"sentences", e.sentences}});
        by_method[e.method].push_back(std::move(e));
      }
    }
    if (rows.empty()) throw Error(ErrorCode::DegenerateInput, "explain: no test records with article and explanation");
    json scores = json::object();
    for (const auto& [method, expls] : by_method) {
      if (method == ExplanationMethod::Gold) continue;
      const auto s = score_corpus(expls, by_method.at(ExplanationMethod::Gold));
      scores[std::string(to_string(method))] = {
          {"rouge1_f", s.r1_f}, {"rouge2_f", s.r2_f}, {"rougeL_f", s.rl_f}, {"pairs", s.pairs}};
    }
    store_.put_jsonl(artifacts::kExplanations, rows, "explain");
    store_.put_json(artifacts::kExplainMetrics, {{"rouge", scores}}, "explain");
  }

  // -- cohere ---------------------------------------------------------------

  void cohere() {
    const auto rows = store_.get_jsonl(artifacts::kExplanations);
    const auto corpus = load_corpus();
    std::map<std::string, const ClaimRecord*> by_id;
    for (const auto& r : corpus) by_id[r.claim_id] = &r;
    auto& b = backends();

    std::map<std::string, std::vector<CoherenceInput>> by_method;
    std::vector<json> out;
    for (const auto& row : rows) {
      const auto id = row.at("claim_id").get<std::string>();
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw Error(ErrorCode::InvalidInput, "explanations artifact names unknown claim_id " + id);
      const auto method = parse_method(row.at("method").get<std::string>());
      if (!method) throw Error(ErrorCode::InvalidInput, "explanations artifact: bad method for " + id);
      Explanation e{id, row.at("sentences").get<std::vector<std::string>>(), *method};
      by_method[std::string(to_string(*method))].push_back({it->second->claim_text, it->second->label, e});
      json verdict;
      try {
        const auto v = evaluate_coherence(it->second->claim_text, it->second->label, e, *b.nli);
        verdict = {{"sgc", v.sgc}, {"wgc", v.wgc}, {"lc", v.lc}, {"reassigned", v.reassigned_indices}};
      } catch (const Error& err) {
        if (err.code() != ErrorCode::BackendError && err.code() != ErrorCode::DegenerateInput) throw;
        verdict = {{"error", err.what()}};
      }
      out.push_back({{"claim_id", id}, {"method", to_string(*method)}, {"verdict", verdict}});
    }
    json summary = json::object();
    for (const auto& [method, inputs] : by_method) {
      const auto s = corpus_coherence(inputs, *b.nli);
      summary[method] = {{"sgc_pct", s.sgc_pct},     {"wgc_pct", s.wgc_pct},   {"lc_pct", s.lc_pct},
                         {"evaluated", s.evaluated}, {"failed", s.failed},     {"failed_ids", s.failed_ids}};
    }
    json doc{{"coherence", summary}};
    if (!cfg_.annotations.empty()) doc["agreement"] = agreement_json();
    store_.put_jsonl(artifacts::kCoherence, out, "cohere");
    store_.put_json(artifacts::kCoherenceMetrics, doc, "cohere");
  }

  // -- report ---------------------------------------------------------------

  void report() {
    const auto corpus = load_corpus();
    const auto easy = EasyWords::from_file(cfg_.easy_words.string());
    std::vector<std::string> claims;
    for (const auto& r : corpus) claims.push_back(r.claim_text);
    const auto rd = corpus_readability(claims, easy);
    json doc{{"readability",
              {{"flesch_reading_ease", {{"mean", rd.fk_mean}, {"std", rd.fk_std}}},
               {"dale_chall", {{"mean", rd.dc_mean}, {"std", rd.dc_std}}},
               {"texts", rd.n_texts},
               {"skipped", rd.skipped}}}};
    doc["curation"] = strip(store_.get_json(artifacts::kCuration));
    const std::pair<const char*, const char*> optional_parts[] = {{"veracity", artifacts::kPredictMetrics},
                                                                   {"explanation", artifacts::kExplainMetrics},
                                                                   {"coherence", artifacts::kCoherenceMetrics}};
    for (const auto& [key, name] : optional_parts)
      if (store_.has(name)) doc[key] = strip(store_.get_json(name));
    doc["config"] = {{"seed", cfg_.seed},
                     {"k", cfg_.k},
                     {"split", {{"train", cfg_.split.fractions[0]},
                                {"validation", cfg_.split.fractions[1]},
                                {"test", cfg_.split.fractions[2]},
                                {"stratify", cfg_.split.stratify}}},
                     {"backends", backend_description()}};
    store_.put_json(artifacts::kReport, doc, "report");
  }

 private:
  static json strip(json doc) {
    doc.erase("schema_version");
    return doc;
  }

  static json metrics_json(const ClassificationMetrics& m) {
    json per_class = json::object();
    for (auto l : kAllLabels) {
      const auto& c = m.per_class[label_index(l)];
      per_class[std::string(to_string(l))] = {{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1},
                                              {"support", c.support},     {"predicted", c.predicted}};
    }
    return {{"macro_precision", m.macro_precision},
            {"macro_recall", m.macro_recall},
            {"macro_f1", m.macro_f1},
            {"accuracy", m.accuracy},
            {"total", m.total},
            {"per_class", per_class}};
  }

  json agreement_json() const {
    const auto sets = group_by_arity(read_annotations_csv(cfg_.annotations.string()));
    json out = json::object();
    for (const auto& [arity, set] : sets) {
      const auto a = randolph_kappa(set);
      out[std::to_string(arity)] = {{"kappa", a.kappa}, {"overall_agreement", a.overall_agreement}, {"items", a.items}};
    }
    return out;
  }

  std::vector<ClaimRecord> load_corpus() const {
    std::vector<ClaimRecord> out;
    for (const auto& row : store_.get_jsonl(artifacts::kCorpus)) out.push_back(claim_from_json(row));
    return out;
  }

  std::map<std::string, Split> load_split() const {
    std::map<std::string, Split> out;
    for (const auto& row : store_.get_jsonl(artifacts::kSplit)) {
      const auto s = parse_split(row.at("split").get<std::string>());
      if (!s) throw Error(ErrorCode::InvalidInput, "split artifact: bad split value");
      out[row.at("claim_id").get<std::string>()] = *s;
    }
    return out;
  }

  Backends& backends() {
    if (!backends_) backends_ = std::make_unique<Backends>(make_backends(cfg_.backend));
    return *backends_;
  }

  json backend_description() {
    if (cfg_.backend == "stub") return backends().description;
    return json{{"service", cfg_.backend}};
  }

  void write_metadata(std::chrono::system_clock::time_point started, const std::vector<Stage>& stages) const {
    const auto finished = std::chrono::system_clock::now();
    auto iso = [](std::chrono::system_clock::time_point t) {
      const std::time_t tt = std::chrono::system_clock::to_time_t(t);
      std::tm tm{};
      gmtime_r(&tt, &tm);
      char buf[32];
      std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
      return std::string(buf);
    };
    json names = json::array();
    for (auto s : stages) names.push_back(to_string(s));
    write_json(store_.path(artifacts::kMetadata),
               {{"started_at", iso(started)},
                {"finished_at", iso(finished)},
                {"elapsed_seconds", std::chrono::duration<double>(finished - started).count()},
                {"stages", names}});
  }

  PipelineConfig cfg_;
  ArtifactStore store_;
  std::unique_ptr<Backends> backends_;
};

/// Machine-readable failure record written next to the artifacts.
inline void write_error_record(const fs::path& out_dir, std::string_view stage, const Error& e) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  write_json(out_dir / artifacts::kError, {{"stage", stage}, {"code", to_string(e.code())}, {"message", e.what()}});
}

}  // namespace pubhealth
