#include "pubhealth/service_client.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "test_support.hpp"

namespace pubhealth {
namespace {

using nlohmann::json;

// In-process stand-in for the inference service. Answers are a pure function
// of each item so batch and singleton calls can be compared.
class FakeService {
 public:
  std::atomic<int> forced_status{0};
  std::atomic<bool> drop_last{false};
  std::atomic<bool> bad_probs{false};

  FakeService() {
    server_.Post("/v1/embed", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [this](const json& body) {
        json vectors = json::array();
        for (const auto& t : body.at("texts")) vectors.push_back(vector_of(t.get<std::string>()));
        trim(vectors);
        return json{{"vectors", vectors}, {"dim", 4}};
      });
    });
    server_.Post("/v1/nli", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [this](const json& body) {
        json rel = json::array(), probs = json::array();
        for (const auto& p : body.at("pairs")) {
          const bool same = p.at("premise") == p.at("hypothesis");
          rel.push_back(same ? "entails" : "neutral");
          probs.push_back(bad_probs ? json{0.5, 0.5, 0.5} : same ? json{0.9, 0.05, 0.05} : json{0.1, 0.1, 0.8});
        }
        trim(rel);
        return json{{"relations", rel}, {"probs", probs}};
      });
    });
    server_.Post("/v1/classify", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [this](const json& body) {
        json probs = json::array(), labels = json::array();
        for (const auto& it : body.at("items")) {
          const double e = static_cast<double>(it.at("evidence").size());
          const double p0 = 1.0 / (2.0 + e);
          probs.push_back({p0, (1.0 - p0) / 3.0, (1.0 - p0) / 3.0, (1.0 - p0) / 3.0});
          labels.push_back(p0 > 0.25 ? "true" : "false");
        }
        trim(probs);
        return json{{"probs", probs}, {"labels", labels}};
      });
    });
    server_.Post("/v1/summarize", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [this](const json& body) {
        json out = json::array();
        for (const auto& it : body.at("items")) {
          json s = json::array();
          if (!it.at("sentences").empty()) s.push_back(it.at("sentences")[0]);
          out.push_back(s);
        }
        trim(out);
        return json{{"summaries", out}};
      });
    });
    server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"status", "ok"}, {"models", {{"nli", "fake-nli-1"}}}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeService() {
    server_.stop();
    thread_.join();
  }

  ServiceOptions options() const { return {"http://127.0.0.1:" + std::to_string(port_), 2, 10}; }

 private:
  static json vector_of(const std::string& t) {
    const auto h = text::fnv1a(t);
    return json{double(h & 0xff) + 1.0, double((h >> 8) & 0xff), double((h >> 16) & 0xff), double((h >> 24) & 0xff)};
  }

  void trim(json& a) const {
    if (drop_last && !a.empty()) a.erase(a.size() - 1);
  }

  template <typename F>
  void handle(const httplib::Request& req, httplib::Response& res, F&& respond) {
    if (const int s = forced_status.load(); s != 0) {
      res.status = s;
      res.set_content(json{{"error", "forced"}}.dump(), "application/json");
      return;
    }
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      res.status = 400;
      res.set_content(json{{"error", "malformed JSON"}}.dump(), "application/json");
      return;
    }
    try {
      res.set_content(respond(body).dump(), "application/json");
    } catch (const json::exception&) {
      res.status = 422;
      res.set_content(json{{"error", "schema violation"}}.dump(), "application/json");
    }
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

FakeService& service() {
  static FakeService s;
  return s;
}

struct ResetService : ::testing::Test {
  void SetUp() override {
    service().forced_status = 0;
    service().drop_last = false;
    service().bad_probs = false;
  }
};

using ServiceClientTest = ResetService;

TEST_F(ServiceClientTest, EmbedRoundTrip) {
  const HttpEmbeddingBackend backend(service().options());
  const auto v = backend.embed({"a", "a", "b"});
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].size(), 4u);
  EXPECT_EQ(v[0], v[1]);
  EXPECT_TRUE(backend.embed({}).empty());
}

TEST_F(ServiceClientTest, EmbedDrivesEvidenceRanking) {
  const HttpEmbeddingBackend backend(service().options());
  const SentenceList sents = {{0, "Other text."}, {1, "flu vaccine"}, {2, "More text."}};
  const auto r = rank_evidence("c", "flu vaccine", sents, backend);
  EXPECT_EQ(r.ranked[0].index, 1u);
  EXPECT_NEAR(r.ranked[0].score, 1.0, 1e-12);
}

TEST_F(ServiceClientTest, NliRoundTripAndIdentity) {
  const HttpNliBackend backend(service().options());
  const auto r = backend.relate(std::vector<NliPair>{{"x", "x"}, {"x", "y"}});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].relation, NliRelation::Entails);
  EXPECT_EQ(r[1].relation, NliRelation::Neutral);
  ASSERT_TRUE(r[0].probs.has_value());
  EXPECT_DOUBLE_EQ((*r[0].probs)[0], 0.9);
  EXPECT_EQ(backend.relate("same", "same"), NliRelation::Entails);
}

TEST_F(ServiceClientTest, ClassifyRoundTrip) {
  const HttpClassifierBackend backend(service().options());
  const auto p = backend.predict("claim", {"e1", "e2"});
  EXPECT_TRUE(is_probability_vector(p));
  EXPECT_DOUBLE_EQ(p[0], 0.25);
}

TEST_F(ServiceClientTest, SummarizeRoundTrip) {
  const HttpSummarizerBackend backend(service().options());
  EXPECT_EQ(backend.summarize("c", {"First.", "Second."}), (std::vector<std::string>{"First."}));
  EXPECT_TRUE(backend.summarize("c", {}).empty());
}

TEST_F(ServiceClientTest, Health) {
  const auto h = ServiceClient(service().options()).health();
  EXPECT_EQ(h.at("models").at("nli"), "fake-nli-1");
}

TEST_F(ServiceClientTest, BatchMatchesSingletons) {
  std::mt19937_64 rng(41);
  const HttpEmbeddingBackend embed(service().options());
  const HttpNliBackend nli(service().options());
  const HttpClassifierBackend cls(service().options());
  const HttpSummarizerBackend sum(service().options());
  for (int batch = 0; batch < 20; ++batch) {
    std::uniform_int_distribution<int> size(1, 6);
    std::vector<std::string> texts;
    std::vector<NliPair> pairs;
    std::vector<ClassifyItem> items;
    for (int i = size(rng); i > 0; --i) {
      texts.push_back(testing::random_sentence(rng));
      pairs.push_back({texts.back(), i % 2 ? texts.back() : testing::random_sentence(rng)});
      items.push_back({texts.back(), std::vector<std::string>(static_cast<std::size_t>(i), "ev")});
    }
    const auto vb = embed.embed(texts);
    const auto nb = nli.relate(pairs);
    const auto cb = cls.predict_batch(items);
    const auto sb = sum.summarize_batch(items);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      EXPECT_EQ(vb[i], embed.embed({texts[i]}).at(0));
      EXPECT_EQ(nb[i].relation, nli.relate(pairs[i].premise, pairs[i].hypothesis));
      EXPECT_EQ(cb[i], cls.predict(items[i].claim, items[i].evidence));
      EXPECT_EQ(sb[i], sum.summarize(items[i].claim, items[i].evidence));
    }
  }
}

TEST_F(ServiceClientTest, ErrorStatusesBecomeBackendErrors) {
  const HttpNliBackend backend(service().options());
  for (int status : {400, 422, 503}) {
    service().forced_status = status;
    try {
      backend.relate("a", "b");
      ADD_FAILURE() << "expected an error for status " << status;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BackendError);
      EXPECT_NE(std::string(e.what()).find(std::to_string(status)), std::string::npos);
    }
  }
}

TEST_F(ServiceClientTest, ServerSideMalformedAndSchemaErrors) {
  const ServiceClient client(service().options());
  try {
    client.post("/v1/nli", json{{"wrong", 1}});
    ADD_FAILURE() << "expected 422";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("422"), std::string::npos);
  }
  httplib::Client raw(service().options().base_url);
  const auto res = raw.Post("/v1/nli", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(ServiceClientTest, LengthMismatchIsRejected) {
  service().drop_last = true;
  EXPECT_THROW(HttpEmbeddingBackend(service().options()).embed({"a", "b"}), Error);
  EXPECT_THROW(HttpNliBackend(service().options()).relate(std::vector<NliPair>{{"a", "b"}}), Error);
  EXPECT_THROW(HttpClassifierBackend(service().options()).predict("c", {}), Error);
  EXPECT_THROW(HttpSummarizerBackend(service().options()).summarize("c", {"A."}), Error);
}

TEST_F(ServiceClientTest, ProbabilityRowsMustSumToOne) {
  service().bad_probs = true;
  EXPECT_THROW(HttpNliBackend(service().options()).relate("a", "b"), Error);
}

TEST(ServiceClient, UnreachableAndBadConfig) {
  EXPECT_THROW(ServiceClient({""}), Error);
  const HttpNliBackend backend({"http://127.0.0.1:1", 1, 1});
  try {
    backend.relate("a", "b");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendError);
  }
}

}  // namespace
}  // namespace pubhealth
