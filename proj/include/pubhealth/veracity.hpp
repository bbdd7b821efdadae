#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pubhealth/corpus.hpp"
#include "pubhealth/error.hpp"
#include "pubhealth/text.hpp"

namespace pubhealth {

inline constexpr std::size_t kNumLabels = kAllLabels.size();

/// Indexed by label_index(): true, false, mixture, unproven.
using LabelProbs = std::array<double, kNumLabels>;

inline VeracityLabel argmax_label(const LabelProbs& p) {
  return kAllLabels[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
}

inline bool is_probability_vector(const LabelProbs& p, double tol = 1e-6) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual LabelProbs predict(const std::string& claim, const std::vector<std::string>& evidence) const = 0;
};

// ---------------------------------------------------------------------------
// Hashed n-gram features

using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

struct FeatureConfig {
  std::size_t max_ngram = 2;
  std::size_t hash_dimension = std::size_t{1} << 18;
};

inline constexpr std::string_view kSegmentMarker = "\x1f" "sep";

/// Claim tokens, a boundary marker, then evidence tokens; hashed n-grams of
/// orders 1..max_ngram with raw counts, L2-normalized.
inline SparseVector extract_features(const std::string& claim, const std::vector<std::string>& evidence,
                                     const FeatureConfig& cfg) {
  std::vector<std::string> tokens = text::tokenize(claim);
  tokens.emplace_back(kSegmentMarker);
  for (const auto& e : evidence)
    for (auto& t : text::tokenize(e)) tokens.push_back(std::move(t));

  std::vector<std::uint32_t> idx;
  for (std::size_t n = 1; n <= cfg.max_ngram; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::uint64_t h = text::fnv1a(std::to_string(n));
      for (std::size_t k = 0; k < n; ++k) h = text::fnv1a(tokens[i + k], h ^ 0x9e3779b97f4a7c15ULL);
      idx.push_back(static_cast<std::uint32_t>(h % cfg.hash_dimension));
    }
  }
  std::sort(idx.begin(), idx.end());
  SparseVector x;
  double norm2 = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && idx[j] == idx[i]) ++j;
    const double c = static_cast<double>(j - i);
    x.emplace_back(idx[i], c);
    norm2 += c * c;
    i = j;
  }
  if (norm2 > 0.0)
    for (auto& [i, v] : x) v /= std::sqrt(norm2);
  return x;
}

// ---------------------------------------------------------------------------
// Softmax regression

struct BaselineConfig {
  FeatureConfig features;
  double l2_lambda = 1e-4;
  std::size_t max_epochs = 500;
  /// 0 selects 1/L, where L bounds the loss curvature; that step never
  /// increases the loss.
  double step_size = 0.0;
  double tolerance = 1e-7;
};

/// Weights are row-major, one row of `dimension` per label.
struct SoftmaxParams {
  std::size_t dimension = 0;
  std::vector<double> weights;
  LabelProbs bias{};

  explicit SoftmaxParams(std::size_t dim = 0) : dimension(dim), weights(kNumLabels * dim, 0.0) {}

  std::span<double> row(std::size_t c) { return std::span<double>(weights).subspan(c * dimension, dimension); }
  std::span<const double> row(std::size_t c) const {
    return std::span<const double>(weights).subspan(c * dimension, dimension);
  }
};

struct LabeledVectors {
  std::vector<SparseVector> x;
  std::vector<std::size_t> y;
};

inline LabelProbs softmax_probs(const SoftmaxParams& p, const SparseVector& x) {
  LabelProbs z = p.bias;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const auto w = p.row(c);
    for (const auto& [i, v] : x) z[c] += w[i] * v;
  }
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) sum += (v = std::exp(v - m));
  for (double& v : z) v /= sum;
  return z;
}

/// Mean cross-entropy plus (lambda / 2) * ||W||^2; bias is not regularized.
/// Writes the gradient into `grad` when given.
inline double softmax_loss(const SoftmaxParams& p, const LabeledVectors& data, double lambda,
                           SoftmaxParams* grad = nullptr) {
  const double inv_n = 1.0 / static_cast<double>(data.x.size());
  if (grad) *grad = SoftmaxParams(p.dimension);
  double loss = 0.0;
  for (std::size_t s = 0; s < data.x.size(); ++s) {
    const LabelProbs prob = softmax_probs(p, data.x[s]);
    loss -= std::log(std::max(prob[data.y[s]], std::numeric_limits<double>::min()));
    if (!grad) continue;
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      const double r = (prob[c] - (c == data.y[s] ? 1.0 : 0.0)) * inv_n;
      grad->bias[c] += r;
      auto g = grad->row(c);
      for (const auto& [i, v] : data.x[s]) g[i] += r * v;
    }
  }
  loss *= inv_n;
  double reg = 0.0;
  for (double w : p.weights) reg += w * w;
  loss += 0.5 * lambda * reg;
  if (grad)
    for (std::size_t k = 0; k < p.weights.size(); ++k) grad->weights[k] += lambda * p.weights[k];
  return loss;
}

struct BaselineModel {
  SoftmaxParams params;
  FeatureConfig features;
  double l2_lambda = 0.0;
  std::vector<double> loss_history;  // one entry per epoch, starting at the initial loss

  explicit BaselineModel(FeatureConfig cfg = {}, double lambda = 0.0)
      : params(cfg.hash_dimension), features(cfg), l2_lambda(lambda) {}

  LabelProbs predict(const std::string& claim, const std::vector<std::string>& evidence) const {
    return softmax_probs(params, extract_features(claim, evidence, features));
  }
};

struct TrainingExample {
  std::string claim;
  std::vector<std::string> evidence;
  VeracityLabel label;
};

/// Full-batch gradient descent from zero weights. Stops when the relative loss
/// change drops below the tolerance or after max_epochs.
inline BaselineModel train_baseline(const std::vector<TrainingExample>& train, const BaselineConfig& cfg = {}) {
  if (train.empty()) throw Error(ErrorCode::DegenerateInput, "train_baseline: empty training set");
  bool two_labels = false;
  for (const auto& ex : train) two_labels = two_labels || ex.label != train.front().label;
  if (!two_labels) throw Error(ErrorCode::InvalidArgument, "train_baseline: training data has a single label");
  if (cfg.features.hash_dimension == 0 || cfg.features.max_ngram == 0)
    throw Error(ErrorCode::InvalidArgument, "train_baseline: empty feature space");

  LabeledVectors data;
  double max_norm2 = 0.0;
  for (const auto& ex : train) {
    data.x.push_back(extract_features(ex.claim, ex.evidence, cfg.features));
    data.y.push_back(label_index(ex.label));
    double n2 = 0.0;
    for (const auto& [i, v] : data.x.back()) n2 += v * v;
    max_norm2 = std::max(max_norm2, n2);
  }
  const double curvature = 0.5 * (max_norm2 + 1.0) + cfg.l2_lambda;
  const double step = cfg.step_size > 0.0 ? cfg.step_size : 1.0 / curvature;

  BaselineModel model(cfg.features, cfg.l2_lambda);
  SoftmaxParams grad;
  double loss = softmax_loss(model.params, data, cfg.l2_lambda, &grad);
  model.loss_history.push_back(loss);
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    for (std::size_t k = 0; k < model.params.weights.size(); ++k) model.params.weights[k] -= step * grad.weights[k];
    for (std::size_t c = 0; c < kNumLabels; ++c) model.params.bias[c] -= step * grad.bias[c];
    const double next = softmax_loss(model.params, data, cfg.l2_lambda, &grad);
    model.loss_history.push_back(next);
    const double rel = std::abs(loss - next) / std::max(std::abs(loss), 1e-300);
    loss = next;
    if (rel < cfg.tolerance) break;
  }
  return model;
}

class BaselineClassifier final : public ClassifierBackend {
 public:
  explicit BaselineClassifier(BaselineModel model) : model_(std::move(model)) {}
  LabelProbs predict(const std::string& claim, const std::vector<std::string>& evidence) const override {
    return model_.predict(claim, evidence);
  }
  const BaselineModel& model() const { return model_; }

 private:
  BaselineModel model_;
};

// ---------------------------------------------------------------------------
// Metrics

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold instances
  std::size_t predicted = 0;
};

struct ClassificationMetrics {
  std::array<ClassMetrics, kNumLabels> per_class{};
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t total = 0;
  std::vector<VeracityLabel> averaged_classes;
};

enum class MacroScope { AllClasses, GoldPresent };

/// Zero denominators give 0: precision of a never-predicted class, recall of
/// a class absent from gold, and F1 when P + R = 0.
inline ClassificationMetrics evaluate(const std::vector<VeracityLabel>& preds,
                                      const std::vector<VeracityLabel>& golds,
                                      MacroScope scope = MacroScope::AllClasses) {
  if (preds.size() != golds.size())
    throw Error(ErrorCode::InvalidArgument, "evaluate: predictions and gold labels differ in length");
  if (preds.empty()) throw Error(ErrorCode::DegenerateInput, "evaluate: empty input");

  ClassificationMetrics m;
  m.total = preds.size();
  std::array<std::size_t, kNumLabels> tp{};
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto p = label_index(preds[i]), g = label_index(golds[i]);
    ++m.per_class[p].predicted;
    ++m.per_class[g].support;
    if (p == g) {
      ++tp[p];
      ++correct;
    }
  }
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    auto& cm = m.per_class[c];
    cm.precision = cm.predicted ? static_cast<double>(tp[c]) / static_cast<double>(cm.predicted) : 0.0;
    cm.recall = cm.support ? static_cast<double>(tp[c]) / static_cast<double>(cm.support) : 0.0;
    cm.f1 = (cm.precision + cm.recall) > 0.0 ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;
    if (scope == MacroScope::AllClasses || cm.support > 0) m.averaged_classes.push_back(kAllLabels[c]);
  }
  for (auto label : m.averaged_classes) {
    const auto& cm = m.per_class[label_index(label)];
    m.macro_precision += cm.precision;
    m.macro_recall += cm.recall;
    m.macro_f1 += cm.f1;
  }
  const double k = static_cast<double>(m.averaged_classes.size());
  m.macro_precision /= k;
  m.macro_recall /= k;
  m.macro_f1 /= k;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);
  return m;
}

}  // namespace pubhealth
