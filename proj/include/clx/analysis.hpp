#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "clx/common.hpp"
#include "clx/corpus.hpp"
#include "clx/linalg.hpp"
#include "clx/model.hpp"

namespace clx {

// ---------------------------------------------------------------------------
// Micro-F1 over aspect spans: a prediction counts only when start, end, and
// sentiment all match a gold span.
// ---------------------------------------------------------------------------

struct SentenceSpans {
  std::string id;
  std::string language;
  std::vector<SpanAnnotation> spans;
};

struct EvalCounts {
  std::size_t tp = 0, fp = 0, fn = 0;

  double precision() const {
    return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  double recall() const {
    return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
};

struct EvalReport {
  EvalCounts total;
  std::map<std::string, EvalCounts> per_language;

  double precision() const { return total.precision(); }
  double recall() const { return total.recall(); }
  double micro_f1() const { return total.f1(); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["tp"] = total.tp;
    j["fp"] = total.fp;
    j["fn"] = total.fn;
    j["precision"] = precision();
    j["recall"] = recall();
    j["micro_f1"] = micro_f1();
    nlohmann::ordered_json langs;
    for (const auto& [lang, c] : per_language) {
      nlohmann::ordered_json lj;
      lj["tp"] = c.tp;
      lj["fp"] = c.fp;
      lj["fn"] = c.fn;
      lj["precision"] = c.precision();
      lj["recall"] = c.recall();
      lj["micro_f1"] = c.f1();
      langs[lang] = lj;
    }
    j["languages"] = langs;
    return j;
  }
};

inline EvalReport micro_f1(const std::vector<SentenceSpans>& predicted,
                           const std::vector<SentenceSpans>& gold) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("micro_f1: " + std::to_string(predicted.size()) +
                          " predictions for " + std::to_string(gold.size()) +
                          " gold sentences");
  }
  std::set<std::string> seen;
  EvalReport report;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i].id != gold[i].id) {
      throw ValidationError("micro_f1: sentence id mismatch at index " +
                            std::to_string(i) + ": " + predicted[i].id +
                            " vs " + gold[i].id);
    }
    if (!seen.insert(gold[i].id).second) {
      throw ValidationError("micro_f1: duplicate sentence id " + gold[i].id);
    }
    // Spans are non-overlapping within a sentence, so exact matching is set
    // intersection.
    std::set<SpanAnnotation> gold_set(gold[i].spans.begin(), gold[i].spans.end());
    std::size_t tp = 0;
    for (const auto& span : predicted[i].spans) {
      if (gold_set.count(span)) ++tp;
    }
    EvalCounts& lang = report.per_language[gold[i].language];
    lang.tp += tp;
    lang.fp += predicted[i].spans.size() - tp;
    lang.fn += gold[i].spans.size() - tp;
    report.total.tp += tp;
    report.total.fp += predicted[i].spans.size() - tp;
    report.total.fn += gold[i].spans.size() - tp;
  }
  return report;
}

// Predict + score a labeled dataset in one call.
inline EvalReport evaluate_model(const Model& model, const Dataset& data,
                                 std::size_t eval_batch = 64) {
  if (data.sentences.empty()) throw ValidationError("evaluate_model: empty dataset");
  if (!data.labeled()) throw ValidationError("evaluate_model: dataset is unlabeled");
  const auto predictions = predict_spans(model, data.sentences, eval_batch);
  std::vector<SentenceSpans> pred, gold;
  pred.reserve(data.size());
  gold.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.sentences[i];
    pred.push_back({s.id, s.language, predictions[i]});
    gold.push_back({s.id, s.language, s.spans()});
  }
  return micro_f1(pred, gold);
}

// ---------------------------------------------------------------------------
// Semantic-space analysis.
// ---------------------------------------------------------------------------

struct SpaceSample {
  std::string id;
  std::string language;
  std::vector<double> representation;
};

// Mean pooling of final-layer hidden states over valid tokens.
inline SpaceSample sentence_representation(const Model& model,
                                           const AnnotatedSentence& sentence) {
  if (sentence.tokens.empty()) {
    throw ValidationError("sentence_representation: empty sentence " + sentence.id);
  }
  const TokenBatch batch = make_token_batch({&sentence}, model.encoder->vocab(),
                                            model.encoder->max_len());
  const Tensor3 hidden = model.encoder->encode(batch);
  const std::size_t h = model.encoder->hidden_dim();
  const std::size_t n = batch.len(0);
  SpaceSample out{sentence.id, sentence.language, std::vector<double>(h, 0.0)};
  for (std::size_t t = 0; t < n; ++t) {
    axpy(1.0 / static_cast<double>(n), hidden.at(0, t), out.representation.data(), h);
  }
  return out;
}

inline std::vector<SpaceSample> sentence_representations(
    const Model& model, const std::vector<AnnotatedSentence>& sentences) {
  std::vector<SpaceSample> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(sentence_representation(model, s));
  return out;
}

// ---------------------------------------------------------------------------
// Calinski-Harabasz index: [tr(B)/(k-1)] / [tr(W)/(n-k)]. Degenerate inputs
// are flagged rather than thrown so batch analysis survives pathological
// models: W == 0 yields +inf, zero total dispersion yields 0.
// ---------------------------------------------------------------------------

struct ChResult {
  double value = 0.0;
  bool degenerate = false;
};

inline ChResult calinski_harabasz_points(const std::vector<std::vector<double>>& points,
                                         const std::vector<int>& labels) {
  const std::size_t n = points.size();
  if (labels.size() != n) throw ValidationError("calinski_harabasz: label/point mismatch");
  if (n == 0) throw ValidationError("calinski_harabasz: no points");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ValidationError("calinski_harabasz: mixed dimensions");
  }

  std::map<int, std::size_t> counts;
  for (const int l : labels) ++counts[l];
  const std::size_t k = counts.size();
  if (k < 2) throw ValidationError("calinski_harabasz: need at least 2 clusters");
  if (n == k) throw ValidationError("calinski_harabasz: need more points than clusters");

  std::map<int, std::vector<double>> means;
  for (const auto& [l, c] : counts) means[l] = std::vector<double>(dim, 0.0);
  std::vector<double> global(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    axpy(1.0, points[i].data(), means[labels[i]].data(), dim);
    axpy(1.0, points[i].data(), global.data(), dim);
  }
  for (auto& [l, m] : means) {
    for (auto& v : m) v /= static_cast<double>(counts[l]);
  }
  for (auto& v : global) v /= static_cast<double>(n);

  double tr_w = 0.0, tr_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = means[labels[i]];
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = points[i][d] - m[d];
      tr_w += diff * diff;
    }
  }
  for (const auto& [l, m] : means) {
    double sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = m[d] - global[d];
      sq += diff * diff;
    }
    tr_b += static_cast<double>(counts[l]) * sq;
  }

  if (tr_w == 0.0 && tr_b == 0.0) return {0.0, true};  // no dispersion at all
  if (tr_w == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {(tr_b / static_cast<double>(k - 1)) / (tr_w / static_cast<double>(n - k)),
          false};
}

// Clusters are the sample languages.
inline ChResult calinski_harabasz(const std::vector<SpaceSample>& samples) {
  std::map<std::string, int> lang_ids;
  std::vector<std::vector<double>> points;
  std::vector<int> labels;
  points.reserve(samples.size());
  for (const auto& s : samples) {
    const auto [it, inserted] =
        lang_ids.emplace(s.language, static_cast<int>(lang_ids.size()));
    points.push_back(s.representation);
    labels.push_back(it->second);
  }
  return calinski_harabasz_points(points, labels);
}

// ---------------------------------------------------------------------------
// 2D PCA via covariance eigendecomposition. Deterministic sign convention:
// the largest-magnitude coordinate of each principal direction is positive.
// ---------------------------------------------------------------------------

struct PcaPoint {
  std::string id;
  std::string language;
  double x = 0.0;
  double y = 0.0;
};

struct PcaResult {
  std::vector<PcaPoint> points;
  double variance_x = 0.0;  // top-2 covariance eigenvalues
  double variance_y = 0.0;
  bool rank_deficient = false;
};

inline PcaResult pca_2d(const std::vector<SpaceSample>& samples,
                        std::vector<std::string>* warnings = nullptr) {
  const std::size_t n = samples.size();
  if (n < 3) throw ValidationError("pca_2d: need at least 3 samples");
  const std::size_t dim = samples.front().representation.size();
  if (dim < 2) throw ValidationError("pca_2d: need dimension >= 2");
  for (const auto& s : samples) {
    if (s.representation.size() != dim) {
      throw ValidationError("pca_2d: mixed dimensions");
    }
  }

  std::vector<double> mean(dim, 0.0);
  for (const auto& s : samples) axpy(1.0, s.representation.data(), mean.data(), dim);
  for (auto& v : mean) v /= static_cast<double>(n);

  Mat centered(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      centered(i, d) = samples[i].representation[d] - mean[d];
    }
  }
  Mat cov(dim, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = centered.row(i);
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = a; b < dim; ++b) cov(a, b) += row[a] * row[b];
    }
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = a; b < dim; ++b) {
      cov(a, b) /= denom;
      cov(b, a) = cov(a, b);
    }
  }

  const EigenSym eig = jacobi_eigensym(cov);
  PcaResult result;
  result.variance_x = eig.values[0];
  result.variance_y = eig.values[1];

  // Rank check relative to total variance.
  double total = 0.0;
  for (const double v : eig.values) total += std::max(v, 0.0);
  if (eig.values[1] <= 1e-12 * std::max(total, 1.0)) {
    result.rank_deficient = true;
    result.variance_y = 0.0;
    emit_warning(warnings, "pca_2d: data rank < 2, second coordinate zeroed");
  }

  auto direction = [&](std::size_t j) {
    std::vector<double> v(dim);
    for (std::size_t d = 0; d < dim; ++d) v[d] = eig.vectors(d, j);
    std::size_t arg = 0;
    for (std::size_t d = 1; d < dim; ++d) {
      if (std::abs(v[d]) > std::abs(v[arg])) arg = d;
    }
    if (v[arg] < 0.0) {
      for (auto& x : v) x = -x;
    }
    return v;
  };
  const auto dir_x = direction(0);
  const auto dir_y = direction(1);

  result.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    PcaPoint p;
    p.id = samples[i].id;
    p.language = samples[i].language;
    p.x = dot(centered.row(i), dir_x.data(), dim);
    p.y = result.rank_deficient ? 0.0 : dot(centered.row(i), dir_y.data(), dim);
    result.points.push_back(std::move(p));
  }
  return result;
}

inline std::string pca_to_csv(const PcaResult& result) {
  std::string out = "id,language,x,y\n";
  char buf[64];
  for (const auto& p : result.points) {
    out += p.id;
    out += ',';
    out += p.language;
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", p.x, p.y);
    out += buf;
  }
  return out;
}

}  // namespace clx
