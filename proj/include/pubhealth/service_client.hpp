#pragma once

// HTTP clients for the model inference service. Each backend posts JSON to one
// endpoint and validates the positional contract: one result per request item,
// probability rows summing to 1.

#include <httplib.h>
#include <json.hpp>

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "pubhealth/coherence.hpp"
#include "pubhealth/error.hpp"
#include "pubhealth/evidence.hpp"
#include "pubhealth/explain.hpp"
#include "pubhealth/veracity.hpp"

namespace pubhealth {

inline constexpr const char* kBackendUrlEnv = "PUBHEALTH_BACKEND_URL";
inline constexpr double kServiceProbTolerance = 1e-6;

struct ServiceOptions {
  std::string base_url;  // e.g. http://localhost:8080
  int connect_timeout_s = 5;
  int read_timeout_s = 300;
};

/// Thin JSON-over-HTTP wrapper. Transport failures and non-200 statuses
/// surface as BackendError; malformed response bodies do too.
class ServiceClient {
 public:
  explicit ServiceClient(ServiceOptions opts) : opts_(std::move(opts)) {
    if (opts_.base_url.empty()) throw Error(ErrorCode::ConfigError, "service client: empty base URL");
    while (!opts_.base_url.empty() && opts_.base_url.back() == '/') opts_.base_url.pop_back();
  }

  const std::string& base_url() const { return opts_.base_url; }

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
    auto cli = make_client();
    const auto res = cli.Post(path, body.dump(), "application/json");
    return decode(path, res);
  }

  nlohmann::json get(const std::string& path) const {
    auto cli = make_client();
    const auto res = cli.Get(path);
    return decode(path, res);
  }

  /// Model identifiers and versions reported by the service.
  nlohmann::json health() const { return get("/v1/health"); }

 private:
  httplib::Client make_client() const {
    httplib::Client cli(opts_.base_url);
    if (!cli.is_valid()) throw Error(ErrorCode::ConfigError, "service client: invalid base URL " + opts_.base_url);
    cli.set_connection_timeout(opts_.connect_timeout_s, 0);
    cli.set_read_timeout(opts_.read_timeout_s, 0);
    return cli;
  }

  static std::string status_meaning(int status) {
    switch (status) {
      case 400: return "malformed request";
      case 422: return "schema violation";
      case 503: return "service not ready";
      default: return "unexpected status";
    }
  }

  nlohmann::json decode(const std::string& path, const httplib::Result& res) const {
    if (!res)
      throw Error(ErrorCode::BackendError,
                  "service " + opts_.base_url + path + ": " + httplib::to_string(res.error()));
    if (res->status != 200) {
      std::string detail = res->body.size() > 300 ? res->body.substr(0, 300) : res->body;
      throw Error(ErrorCode::BackendError, "service " + path + " returned " + std::to_string(res->status) + " (" +
                                               status_meaning(res->status) + "): " + detail);
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BackendError, "service " + path + ": response is not JSON: " + e.what());
    }
  }

  ServiceOptions opts_;
};

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* name, const std::string& path) {
  if (!j.is_object() || !j.contains(name))
    throw Error(ErrorCode::BackendError, "service " + path + ": response lacks '" + name + "'");
  return j.at(name);
}

inline const nlohmann::json& array_of(const nlohmann::json& j, const char* name, std::size_t expected,
                                      const std::string& path) {
  const auto& a = field(j, name, path);
  if (!a.is_array() || a.size() != expected)
    throw Error(ErrorCode::BackendError, "service " + path + ": '" + name + "' has " +
                                             std::to_string(a.is_array() ? a.size() : 0) + " entries for " +
                                             std::to_string(expected) + " request items");
  return a;
}

template <std::size_t N>
std::array<double, N> prob_row(const nlohmann::json& row, const std::string& path) {
  if (!row.is_array() || row.size() != N)
    throw Error(ErrorCode::BackendError, "service " + path + ": probability row must have " + std::to_string(N) +
                                             " entries");
  std::array<double, N> out{};
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (!row[i].is_number()) throw Error(ErrorCode::BackendError, "service " + path + ": non-numeric probability");
    out[i] = row[i].get<double>();
    if (!(out[i] >= 0.0) || !std::isfinite(out[i]))
      throw Error(ErrorCode::BackendError, "service " + path + ": probability out of range");
    sum += out[i];
  }
  if (std::abs(sum - 1.0) > kServiceProbTolerance)
    throw Error(ErrorCode::BackendError, "service " + path + ": probability row sums to " + std::to_string(sum));
  return out;
}

inline std::vector<std::string> string_list(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw Error(ErrorCode::BackendError, "service " + path + ": expected a string array");
  std::vector<std::string> out;
  for (const auto& s : j) {
    if (!s.is_string()) throw Error(ErrorCode::BackendError, "service " + path + ": expected a string array");
    out.push_back(s.get<std::string>());
  }
  return out;
}

}  // namespace detail

class HttpEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(ServiceOptions opts) : client_(std::move(opts)) {}

  std::vector<Embedding> embed(const std::vector<std::string>& texts) const override {
    static const std::string path = "/v1/embed";
    if (texts.empty()) return {};
    const auto res = client_.post(path, {{"texts", texts}});
    const auto& vectors = detail::array_of(res, "vectors", texts.size(), path);
    const auto& dim_field = detail::field(res, "dim", path);
    if (!dim_field.is_number_integer() || dim_field.get<long long>() <= 0)
      throw Error(ErrorCode::BackendError, "service " + path + ": 'dim' must be a positive integer");
    const auto dim = static_cast<std::size_t>(dim_field.get<long long>());
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& v : vectors) {
      if (!v.is_array() || v.size() != dim)
        throw Error(ErrorCode::BackendError, "service " + path + ": vector length differs from 'dim'");
      Embedding e;
      e.reserve(dim);
      for (const auto& x : v) {
        if (!x.is_number()) throw Error(ErrorCode::BackendError, "service " + path + ": non-numeric vector entry");
        e.push_back(x.get<double>());
      }
      out.push_back(std::move(e));
    }
    return out;
  }

 private:
  ServiceClient client_;
};

class HttpNliBackend final : public NliBackend {
 public:
  explicit HttpNliBackend(ServiceOptions opts) : client_(std::move(opts)) {}
  using NliBackend::relate;

  std::vector<NliResult> relate(const std::vector<NliPair>& pairs) const override {
    static const std::string path = "/v1/nli";
    if (pairs.empty()) return {};
    nlohmann::json body{{"pairs", nlohmann::json::array()}};
    for (const auto& p : pairs) body["pairs"].push_back({{"premise", p.premise}, {"hypothesis", p.hypothesis}});
    const auto res = client_.post(path, body);
    const auto& relations = detail::array_of(res, "relations", pairs.size(), path);
    const auto& probs = detail::array_of(res, "probs", pairs.size(), path);
    std::vector<NliResult> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto rel = relations[i].is_string() ? parse_relation(relations[i].get<std::string>()) : std::nullopt;
      if (!rel) throw Error(ErrorCode::BackendError, "service " + path + ": unknown relation " + relations[i].dump());
      out.push_back({*rel, detail::prob_row<3>(probs[i], path)});
    }
    return out;
  }

 private:
  ServiceClient client_;
};

struct ClassifyItem {
  std::string claim;
  std::vector<std::string> evidence;
};

/// Probability columns follow the canonical label order true, false, mixture,
/// unproven.
class HttpClassifierBackend final : public ClassifierBackend {
 public:
  explicit HttpClassifierBackend(ServiceOptions opts) : client_(std::move(opts)) {}

  LabelProbs predict(const std::string& claim, const std::vector<std::string>& evidence) const override {
    return predict_batch({{claim, evidence}}).at(0);
  }

  std::vector<LabelProbs> predict_batch(const std::vector<ClassifyItem>& items) const {
    static const std::string path = "/v1/classify";
    if (items.empty()) return {};
    nlohmann::json body{{"items", nlohmann::json::array()}};
    for (const auto& it : items) body["items"].push_back({{"claim", it.claim}, {"evidence", it.evidence}});
    const auto res = client_.post(path, body);
    const auto& probs = detail::array_of(res, "probs", items.size(), path);
    const auto& labels = detail::array_of(res, "labels", items.size(), path);
    std::vector<LabelProbs> out;
    out.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!labels[i].is_string() || !parse_label(labels[i].get<std::string>()))
        throw Error(ErrorCode::BackendError, "service " + path + ": unknown label " + labels[i].dump());
      out.push_back(detail::prob_row<kNumLabels>(probs[i], path));
    }
    return out;
  }

 private:
  ServiceClient client_;
};

class HttpSummarizerBackend final : public SummarizerBackend {
 public:
  explicit HttpSummarizerBackend(ServiceOptions opts) : client_(std::move(opts)) {}

  std::vector<std::string> summarize(const std::string& claim,
                                     const std::vector<std::string>& article_sentences) const override {
    return summarize_batch({{claim, article_sentences}}).at(0);
  }

  /// Items reuse ClassifyItem's shape: a claim plus its article sentences.
  std::vector<std::vector<std::string>> summarize_batch(const std::vector<ClassifyItem>& items) const {
    static const std::string path = "/v1/summarize";
    if (items.empty()) return {};
    nlohmann::json body{{"items", nlohmann::json::array()}};
    for (const auto& it : items) body["items"].push_back({{"claim", it.claim}, {"sentences", it.evidence}});
    const auto res = client_.post(path, body);
    const auto& summaries = detail::array_of(res, "summaries", items.size(), path);
    std::vector<std::vector<std::string>> out;
    out.reserve(items.size());
    for (const auto& s : summaries) out.push_back(detail::string_list(s, path));
    return out;
  }

 private:
  ServiceClient client_;
};

}  // namespace pubhealth
