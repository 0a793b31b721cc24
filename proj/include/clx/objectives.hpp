#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clx/common.hpp"
#include "clx/linalg.hpp"
#include "clx/model.hpp"
#include "clx/tags.hpp"

namespace clx {

// ---------------------------------------------------------------------------
// Cross-entropy: mean over sentences of the mean over valid tokens of
// -log g[gold]. Probabilities are floored at 1e-12 inside the log.
// ---------------------------------------------------------------------------

inline double cross_entropy(const Tensor3& probs, const TokenBatch& batch) {
  if (!batch.has_gold()) throw ValidationError("cross_entropy: batch has no gold tags");
  if (batch.valid_tokens() == 0) throw ValidationError("cross_entropy: no valid tokens");
  double total = 0.0;
  for (std::size_t b = 0; b < batch.batch_size(); ++b) {
    const std::size_t n = batch.len(b);
    if (n == 0) throw ValidationError("cross_entropy: empty sentence in batch");
    double sent = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double p = std::max(probs.at(b, t)[batch.gold[b][t]], 1e-12);
      sent -= std::log(p);
    }
    total += sent / static_cast<double>(n);
  }
  return total / static_cast<double>(batch.batch_size());
}

// dL/dlogits for the loss above: w * (g - onehot(gold)) per valid token with
// w = 1 / (num_sentences * sentence_len).
inline Tensor3 cross_entropy_grad_logits(const Tensor3& probs, const TokenBatch& batch) {
  Tensor3 dz(probs.b, probs.t, kNumTags);
  const double inv_sentences = 1.0 / static_cast<double>(batch.batch_size());
  for (std::size_t b = 0; b < batch.batch_size(); ++b) {
    const std::size_t n = batch.len(b);
    const double w = inv_sentences / static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double* g = probs.at(b, t);
      double* d = dz.at(b, t);
      for (int k = 0; k < kNumTags; ++k) d[k] = w * g[k];
      d[batch.gold[b][t]] -= w;
    }
  }
  return dz;
}

// ---------------------------------------------------------------------------
// Supervised contrastive objective over probability vectors. Grouping key is
// the full 13-tag identity at token level, or the 4-way sentiment projection
// at sentiment level; similarity is always cosine over the full 13-dim row.
// ---------------------------------------------------------------------------

enum class ContrastiveLevel { token, sentiment };

struct ContrastiveConfig {
  ContrastiveLevel level = ContrastiveLevel::token;
  double temperature = 0.07;
  double alpha = 0.5;
  bool include_o = true;
  std::optional<std::size_t> max_o_per_batch;  // cap on O tokens in the pool

  void validate() const {
    if (!(temperature > 0.0)) {
      throw ValidationError("contrastive temperature must be > 0");
    }
    if (alpha < 0.0 || alpha > 1.0) {
      throw ValidationError("contrastive alpha must be in [0, 1]");
    }
  }
};

struct ContrastiveBatch {
  Mat probs;               // K x 13, rows on the simplex
  std::vector<int> groups; // per-row label key
  std::vector<std::pair<std::size_t, std::size_t>> positions;  // (b, t) provenance

  std::size_t size() const { return groups.size(); }
};

// Pools every valid token of every sentence in the batch. O tokens are kept
// as their own class by default; max_o_per_batch keeps only the first N in
// batch order (deterministic).
inline ContrastiveBatch make_contrastive_batch(const Tensor3& probs,
                                               const TokenBatch& batch,
                                               const ContrastiveConfig& cfg) {
  if (!batch.has_gold()) {
    throw ValidationError("make_contrastive_batch: batch has no gold tags");
  }
  ContrastiveBatch out;
  std::size_t o_taken = 0;
  std::vector<const double*> rows;
  for (std::size_t b = 0; b < batch.batch_size(); ++b) {
    for (std::size_t t = 0; t < batch.len(b); ++t) {
      const LabelTag tag = LabelTag::from_index(batch.gold[b][t]);
      if (tag.is_o()) {
        if (!cfg.include_o) continue;
        if (cfg.max_o_per_batch && o_taken >= *cfg.max_o_per_batch) continue;
        ++o_taken;
      }
      const int key = cfg.level == ContrastiveLevel::token
                          ? tag.index()
                          : static_cast<int>(sentiment_projection(tag));
      rows.push_back(probs.at(b, t));
      out.groups.push_back(key);
      out.positions.emplace_back(b, t);
    }
  }
  out.probs = Mat(rows.size(), kNumTags);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i], rows[i] + kNumTags, out.probs.row(i));
  }
  return out;
}

namespace detail {

// Pairwise cosine similarities divided by temperature; diagonal unused.
inline Mat scaled_cosine(const Mat& g, double temperature) {
  const std::size_t k = g.rows;
  std::vector<double> norms(k);
  for (std::size_t i = 0; i < k; ++i) norms[i] = norm2(g.row(i), g.cols);
  Mat f(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double s = dot(g.row(i), g.row(j), g.cols) / (norms[i] * norms[j]);
      f(i, j) = s / temperature;
      f(j, i) = f(i, j);
    }
  }
  return f;
}

}  // namespace detail

// L = sum_i -(1/|P_i|) sum_{p in P_i} log[ exp(f_ip) / sum_{k != i} exp(f_ik) ]
// with f = cos-sim / tau; anchors with an empty positive set contribute 0.
inline double contrastive_loss(const ContrastiveBatch& batch,
                               const ContrastiveConfig& cfg,
                               std::vector<std::string>* warnings = nullptr) {
  cfg.validate();
  const std::size_t k = batch.size();
  if (k < 2) {
    emit_warning(warnings, "contrastive_loss: fewer than 2 tokens, loss is 0");
    return 0.0;
  }
  const Mat f = detail::scaled_cosine(batch.probs, cfg.temperature);
  double loss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t pos = 0;
    double pos_sum = 0.0;
    double m = -1e300;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      m = std::max(m, f(i, j));
      if (batch.groups[j] == batch.groups[i]) {
        ++pos;
        pos_sum += f(i, j);
      }
    }
    if (pos == 0) continue;
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) denom += std::exp(f(i, j) - m);
    }
    loss += m + std::log(denom) - pos_sum / static_cast<double>(pos);
  }
  return loss;
}

// dL/dg for the loss above (gradient w.r.t. the probability rows).
inline Mat contrastive_grad_probs(const ContrastiveBatch& batch,
                                  const ContrastiveConfig& cfg) {
  cfg.validate();
  const std::size_t k = batch.size();
  Mat grad(k, kNumTags);
  if (k < 2) return grad;

  const Mat& g = batch.probs;
  const Mat f = detail::scaled_cosine(g, cfg.temperature);
  std::vector<double> norms(k);
  for (std::size_t i = 0; i < k; ++i) norms[i] = norm2(g.row(i), g.cols);

  for (std::size_t i = 0; i < k; ++i) {
    std::size_t pos = 0;
    double m = -1e300;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      m = std::max(m, f(i, j));
      if (batch.groups[j] == batch.groups[i]) ++pos;
    }
    if (pos == 0) continue;
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) denom += std::exp(f(i, j) - m);
    }
    const double inv_pos = 1.0 / static_cast<double>(pos);
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      // dL/df(i,j), then chain through cosine similarity.
      double c = std::exp(f(i, j) - m) / denom;
      if (batch.groups[j] == batch.groups[i]) c -= inv_pos;
      const double w = c / cfg.temperature;
      const double sim = f(i, j) * cfg.temperature;
      const double* gi = g.row(i);
      const double* gj = g.row(j);
      double* di = grad.row(i);
      double* dj = grad.row(j);
      const double inv_ninj = 1.0 / (norms[i] * norms[j]);
      const double inv_ni2 = 1.0 / (norms[i] * norms[i]);
      const double inv_nj2 = 1.0 / (norms[j] * norms[j]);
      for (int c13 = 0; c13 < kNumTags; ++c13) {
        di[c13] += w * (gj[c13] * inv_ninj - sim * gi[c13] * inv_ni2);
        dj[c13] += w * (gi[c13] * inv_ninj - sim * gj[c13] * inv_nj2);
      }
    }
  }
  return grad;
}

// Scatter the contrastive gradient back to per-token logits.
inline void contrastive_grad_logits_acc(const ContrastiveBatch& batch,
                                        const ContrastiveConfig& cfg,
                                        const Tensor3& probs, double scale,
                                        Tensor3& dlogits) {
  const Mat dg = contrastive_grad_probs(batch, cfg);
  std::vector<double> dz(kNumTags);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto [b, t] = batch.positions[i];
    softmax_chain(probs.at(b, t), dg.row(i), dz.data(), kNumTags);
    axpy(scale, dz.data(), dlogits.at(b, t), kNumTags);
  }
}

// Eq-style weighting of the two objectives.
inline double combined_loss(double ce, double cl, double alpha) {
  return alpha * cl + (1.0 - alpha) * ce;
}

}  // namespace clx
