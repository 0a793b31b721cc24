#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "clx/common.hpp"
#include "clx/corpus.hpp"
#include "clx/linalg.hpp"
#include "clx/model.hpp"
#include "clx/trainer.hpp"

namespace clx {

// Per-sentence fused teacher distribution, one row per token.
struct SoftLabelRecord {
  std::string id;
  Mat probs;  // n x 13
};

struct TeacherEnsemble {
  std::vector<Model> teachers;
  std::vector<std::string> descriptors;  // training-data provenance, free text
  std::vector<double> weights;

  void validate() const {
    if (teachers.empty()) throw ValidationError("ensemble has no teachers");
    if (weights.size() != teachers.size()) {
      throw ValidationError("ensemble has " + std::to_string(teachers.size()) +
                            " teachers but " + std::to_string(weights.size()) +
                            " weights");
    }
    double sum = 0.0;
    for (const double w : weights) {
      if (w < 0.0) throw ValidationError("teacher weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("teacher weights must sum to 1 (got " +
                            std::to_string(sum) + ")");
    }
  }
};

// Elementwise convex combination of aligned teacher outputs.
inline Mat fuse_teachers(const std::vector<Mat>& per_teacher_probs,
                         const std::vector<double>& weights) {
  if (per_teacher_probs.empty()) throw ValidationError("fuse_teachers: no teachers");
  if (per_teacher_probs.size() != weights.size()) {
    throw ValidationError("fuse_teachers: teacher/weight count mismatch");
  }
  double sum = 0.0;
  for (const double w : weights) {
    if (w < 0.0) throw ValidationError("fuse_teachers: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("fuse_teachers: weights sum to " + std::to_string(sum));
  }
  const Mat& first = per_teacher_probs.front();
  for (const auto& m : per_teacher_probs) {
    if (!m.same_shape(first)) {
      throw ValidationError("fuse_teachers: teacher output shape mismatch");
    }
  }
  Mat fused(first.rows, first.cols);
  for (std::size_t k = 0; k < per_teacher_probs.size(); ++k) {
    axpy(weights[k], per_teacher_probs[k].a.data(), fused.a.data(), fused.size());
  }
  return fused;
}

// ---------------------------------------------------------------------------
// Distillation loss: mean over sentences of the per-sentence mean over tokens
// of the per-token MSE between fused soft labels and student probabilities
// (averaged over the 13 entries).
// ---------------------------------------------------------------------------

inline double distill_loss(const std::vector<const Mat*>& soft_labels,
                           const Tensor3& student_probs, const TokenBatch& batch) {
  if (batch.batch_size() == 0) throw ValidationError("distill_loss: empty batch");
  if (soft_labels.size() != batch.batch_size()) {
    throw ValidationError("distill_loss: soft label / batch size mismatch");
  }
  double total = 0.0;
  for (std::size_t b = 0; b < batch.batch_size(); ++b) {
    const std::size_t n = batch.len(b);
    if (n == 0) throw ValidationError("distill_loss: empty sentence");
    if (soft_labels[b]->rows < n || soft_labels[b]->cols != kNumTags) {
      throw ValidationError("distill_loss: soft label shape mismatch for " +
                            batch.sentence_ids[b]);
    }
    double sent = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double* gt = soft_labels[b]->row(t);
      const double* gs = student_probs.at(b, t);
      double mse = 0.0;
      for (int c = 0; c < kNumTags; ++c) {
        const double d = gt[c] - gs[c];
        mse += d * d;
      }
      sent += mse / kNumTags;
    }
    total += sent / static_cast<double>(n);
  }
  return total / static_cast<double>(batch.batch_size());
}

inline Tensor3 distill_grad_logits(const std::vector<const Mat*>& soft_labels,
                                   const Tensor3& student_probs,
                                   const TokenBatch& batch) {
  Tensor3 dz(student_probs.b, student_probs.t, kNumTags);
  const double inv_sentences = 1.0 / static_cast<double>(batch.batch_size());
  std::vector<double> dg(kNumTags), dzrow(kNumTags);
  for (std::size_t b = 0; b < batch.batch_size(); ++b) {
    const std::size_t n = batch.len(b);
    const double w = 2.0 * inv_sentences / (static_cast<double>(n) * kNumTags);
    for (std::size_t t = 0; t < n; ++t) {
      const double* gt = soft_labels[b]->row(t);
      const double* gs = student_probs.at(b, t);
      for (int c = 0; c < kNumTags; ++c) dg[c] = w * (gs[c] - gt[c]);
      softmax_chain(gs, dg.data(), dzrow.data(), kNumTags);
      std::copy(dzrow.begin(), dzrow.end(), dz.at(b, t));
    }
  }
  return dz;
}

// ---------------------------------------------------------------------------
// Soft-label materialization. Teachers run once over the unlabeled pool; the
// records are written to disk so a student run can restart without re-running
// teacher inference.
// ---------------------------------------------------------------------------

inline std::vector<SoftLabelRecord> precompute_soft_labels(
    const TeacherEnsemble& ensemble, const Dataset& unlabeled,
    std::size_t inference_batch = 64) {
  ensemble.validate();
  if (unlabeled.role != DatasetRole::unlabeled) {
    throw ValidationError("precompute_soft_labels: dataset role must be unlabeled");
  }
  std::vector<SoftLabelRecord> records;
  records.reserve(unlabeled.size());
  const auto& sentences = unlabeled.sentences;
  for (std::size_t start = 0; start < sentences.size(); start += inference_batch) {
    const std::size_t stop = std::min(sentences.size(), start + inference_batch);
    std::vector<const AnnotatedSentence*> chunk;
    for (std::size_t i = start; i < stop; ++i) chunk.push_back(&sentences[i]);

    // Each teacher tokenizes with its own vocabulary over the same words.
    std::vector<Tensor3> outputs;
    std::vector<TokenBatch> batches;
    for (const auto& teacher : ensemble.teachers) {
      TokenBatch tb = make_token_batch(chunk, teacher.encoder->vocab(),
                                       teacher.encoder->max_len());
      outputs.push_back(teacher.head.classify(teacher.encoder->encode(tb), tb));
      batches.push_back(std::move(tb));
    }
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const std::size_t n = batches.front().len(i);
      for (const auto& tb : batches) {
        if (tb.len(i) != n) {
          throw ValidationError("teacher tokenizations disagree for sentence " +
                                chunk[i]->id);
        }
      }
      std::vector<Mat> per_teacher;
      for (const auto& out : outputs) {
        Mat m(n, kNumTags);
        for (std::size_t t = 0; t < n; ++t) {
          std::copy(out.at(i, t), out.at(i, t) + kNumTags, m.row(t));
        }
        per_teacher.push_back(std::move(m));
      }
      records.push_back({chunk[i]->id, fuse_teachers(per_teacher, ensemble.weights)});
    }
  }
  return records;
}

// Soft-label file: JSONL {"id": str, "probs": [[13 floats]]}; the header line
// carries the tag-index map hash for integrity.
inline void save_soft_labels(const std::vector<SoftLabelRecord>& records,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_soft_labels: cannot open " + path);
  nlohmann::ordered_json header;
  header["format"] = "clx-soft-labels-v1";
  header["tag_map_hash"] = tag_map_hash();
  out << header.dump() << "\n";
  for (const auto& r : records) {
    nlohmann::ordered_json rec;
    rec["id"] = r.id;
    auto rows = nlohmann::json::array();
    for (std::size_t t = 0; t < r.probs.rows; ++t) {
      rows.push_back(std::vector<double>(r.probs.row(t), r.probs.row(t) + kNumTags));
    }
    rec["probs"] = rows;
    out << rec.dump() << "\n";
  }
}

inline std::vector<SoftLabelRecord> load_soft_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_soft_labels: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("load_soft_labels: " + path + " is empty");
  }
  const auto header = nlohmann::json::parse(line);
  if (header.value("format", "") != "clx-soft-labels-v1") {
    throw ValidationError("load_soft_labels: bad header in " + path);
  }
  if (header.value("tag_map_hash", "") != tag_map_hash()) {
    throw ValidationError("load_soft_labels: tag-index map hash mismatch in " + path);
  }
  std::vector<SoftLabelRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto rec = nlohmann::json::parse(line);
    SoftLabelRecord r;
    r.id = rec.at("id").get<std::string>();
    const auto& rows = rec.at("probs");
    r.probs = Mat(rows.size(), kNumTags);
    for (std::size_t t = 0; t < rows.size(); ++t) {
      const auto row = rows[t].get<std::vector<double>>();
      if (row.size() != kNumTags) {
        throw ValidationError("load_soft_labels: " + path + ":" +
                              std::to_string(line_no) + ": row is not 13-wide");
      }
      std::copy(row.begin(), row.end(), r.probs.row(t));
    }
    records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Student training against frozen fused soft labels. Teachers are read-only
// after the precompute phase; the student uses the token classification path
// only (no contrastive term), minimizing the MSE loss above. Model selection
// follows the trainer's last-window rule on dev Micro-F1.
// ---------------------------------------------------------------------------

struct DistillResult {
  Model model;
  RunLog log;
  std::vector<SoftLabelRecord> soft_labels;
};

inline DistillResult run_distillation(const TeacherEnsemble& ensemble,
                                      const Dataset& unlabeled,
                                      const Model& student_init,
                                      const Dataset& dev_data, TrainConfig cfg,
                                      std::vector<std::string>* warnings = nullptr) {
  ensemble.validate();
  if (unlabeled.role != DatasetRole::unlabeled) {
    throw ValidationError("run_distillation: pool role must be unlabeled");
  }
  if (unlabeled.sentences.empty()) {
    throw ValidationError("run_distillation: empty unlabeled pool");
  }
  if (dev_data.sentences.empty() || !dev_data.labeled()) {
    throw ValidationError("run_distillation: need a labeled dev set");
  }
  cfg.level = TrainLevel::none;
  cfg.validate();

  // Phase 1: materialize soft labels once.
  DistillResult result;
  result.soft_labels = precompute_soft_labels(ensemble, unlabeled);
  std::unordered_map<std::string, const Mat*> soft_by_id;
  for (const auto& r : result.soft_labels) soft_by_id[r.id] = &r.probs;

  // Phase 2: student training.
  Model work = student_init.deep_copy();
  auto opt = make_optimizer(cfg.optimizer, cfg.learning_rate);
  BatchSampler sampler(unlabeled.size(), cfg.batch_size, cfg.seed);

  RunLog& log = result.log;
  Model best;
  double best_f1 = -1.0;
  std::size_t best_step = 0;
  const std::size_t window_start = cfg.max_steps - cfg.selection_window;

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    const auto idxs = sampler.next();
    std::vector<const AnnotatedSentence*> chunk;
    chunk.reserve(idxs.size());
    for (const auto i : idxs) chunk.push_back(&unlabeled.sentences[i]);
    const TokenBatch tb = make_token_batch(chunk, work.encoder->vocab(),
                                           work.encoder->max_len(), warnings);

    std::vector<const Mat*> soft;
    soft.reserve(chunk.size());
    for (const auto* s : chunk) {
      const auto it = soft_by_id.find(s->id);
      if (it == soft_by_id.end()) {
        throw ValidationError("run_distillation: no soft labels for sentence " +
                              s->id);
      }
      soft.push_back(it->second);
    }

    const Tensor3 hidden = work.encoder->forward_train(tb);
    const Tensor3 logits = work.head.logits(hidden, tb);
    const Tensor3 probs = ClassificationHead::probabilities(logits, tb);
    const double kd = distill_loss(soft, probs, tb);
    if (!std::isfinite(kd)) {
      throw std::runtime_error("run_distillation: non-finite loss at step " +
                               std::to_string(step));
    }

    RunLog::Step ev;
    ev.step = step;
    ev.kd = kd;
    ev.loss = kd;
    log.steps.push_back(ev);

    work.zero_grad();
    const Tensor3 dlogits = distill_grad_logits(soft, probs, tb);
    const Tensor3 dhidden = work.head.backward(hidden, tb, dlogits);
    work.encoder->backward(tb, dhidden);
    opt->step(work.params());

    if (step % cfg.eval_interval == 0 || step == cfg.max_steps) {
      const double f1 = evaluate_model(work, dev_data, cfg.eval_batch).micro_f1();
      log.evals.push_back({step, f1});
      if (step > window_start && f1 > best_f1) {
        best_f1 = f1;
        best_step = step;
        best = work.deep_copy();
      }
    }
  }

  log.selected_step = best_step;
  log.selected_dev_f1 = best_f1;
  result.model = std::move(best);
  return result;
}

}  // namespace clx
