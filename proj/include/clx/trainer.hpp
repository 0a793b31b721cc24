#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "clx/analysis.hpp"
#include "clx/common.hpp"
#include "clx/corpus.hpp"
#include "clx/model.hpp"
#include "clx/objectives.hpp"

namespace clx {

enum class TrainLevel { token, sentiment, none };

inline const char* level_name(TrainLevel l) {
  switch (l) {
    case TrainLevel::token: return "token";
    case TrainLevel::sentiment: return "sentiment";
    default: return "none";
  }
}

inline TrainLevel level_from_name(const std::string& name) {
  if (name == "token") return TrainLevel::token;
  if (name == "sentiment") return TrainLevel::sentiment;
  if (name == "none") return TrainLevel::none;
  throw ValidationError("unknown contrastive level: " + name);
}

struct TrainConfig {
  double learning_rate = 5e-5;
  std::size_t batch_size = 16;
  std::size_t max_steps = 2000;
  std::size_t eval_interval = 100;
  std::size_t selection_window = 500;
  double temperature = 0.07;
  double alpha = 0.5;
  TrainLevel level = TrainLevel::none;
  bool include_o = true;
  std::optional<std::size_t> max_o_per_batch;
  std::string optimizer = "adam";
  std::uint64_t seed = 0;
  std::vector<std::string> languages;  // multilingual runs, informational
  std::size_t eval_batch = 64;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
    if (batch_size == 0) throw ValidationError("batch size must be >= 1");
    if (max_steps == 0) throw ValidationError("max steps must be >= 1");
    if (eval_interval == 0) throw ValidationError("eval interval must be >= 1");
    if (selection_window > max_steps) {
      throw ValidationError("selection window must be <= max steps");
    }
    ContrastiveConfig c;
    c.temperature = temperature;
    c.alpha = alpha;
    c.validate();
  }

  ContrastiveConfig contrastive() const {
    ContrastiveConfig c;
    c.level = level == TrainLevel::sentiment ? ContrastiveLevel::sentiment
                                             : ContrastiveLevel::token;
    c.temperature = temperature;
    c.alpha = alpha;
    c.include_o = include_o;
    c.max_o_per_batch = max_o_per_batch;
    return c;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["learning_rate"] = learning_rate;
    j["batch_size"] = batch_size;
    j["max_steps"] = max_steps;
    j["eval_interval"] = eval_interval;
    j["selection_window"] = selection_window;
    j["temperature"] = temperature;
    j["alpha"] = alpha;
    j["level"] = level_name(level);
    j["include_o"] = include_o;
    if (max_o_per_batch) {
      j["max_o_per_batch"] = *max_o_per_batch;
    } else {
      j["max_o_per_batch"] = nullptr;
    }
    j["optimizer"] = optimizer;
    j["seed"] = seed;
    j["languages"] = languages;
    j["eval_batch"] = eval_batch;
    return j;
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("max_steps")) c.max_steps = j["max_steps"].get<std::size_t>();
    if (j.contains("eval_interval")) c.eval_interval = j["eval_interval"].get<std::size_t>();
    if (j.contains("selection_window")) {
      c.selection_window = j["selection_window"].get<std::size_t>();
    }
    if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("level")) c.level = level_from_name(j["level"].get<std::string>());
    if (j.contains("include_o")) c.include_o = j["include_o"].get<bool>();
    if (j.contains("max_o_per_batch") && !j["max_o_per_batch"].is_null()) {
      c.max_o_per_batch = j["max_o_per_batch"].get<std::size_t>();
    }
    if (j.contains("optimizer")) c.optimizer = j["optimizer"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("languages")) {
      c.languages = j["languages"].get<std::vector<std::string>>();
    }
    if (j.contains("eval_batch")) c.eval_batch = j["eval_batch"].get<std::size_t>();
    return c;
  }
};

// Append-only event log; serialized as a JSONL stream. Deliberately carries
// no timestamps so a rerun with the same seed reproduces it byte-for-byte.
struct RunLog {
  struct Step {
    std::size_t step = 0;
    std::optional<double> ce;
    std::optional<double> cl;
    std::optional<double> kd;
    double loss = 0.0;
  };
  struct Eval {
    std::size_t step = 0;
    double dev_f1 = 0.0;
  };

  std::vector<Step> steps;
  std::vector<Eval> evals;
  std::size_t selected_step = 0;
  double selected_dev_f1 = 0.0;

  std::string to_jsonl() const {
    std::string out;
    std::size_t next_eval = 0;
    for (const auto& s : steps) {
      nlohmann::ordered_json j;
      j["event"] = "step";
      j["step"] = s.step;
      if (s.ce) j["ce"] = *s.ce;
      if (s.cl) j["cl"] = *s.cl;
      if (s.kd) j["kd"] = *s.kd;
      j["loss"] = s.loss;
      out += j.dump();
      out += '\n';
      while (next_eval < evals.size() && evals[next_eval].step == s.step) {
        nlohmann::ordered_json e;
        e["event"] = "eval";
        e["step"] = evals[next_eval].step;
        e["dev_f1"] = evals[next_eval].dev_f1;
        out += e.dump();
        out += '\n';
        ++next_eval;
      }
    }
    nlohmann::ordered_json sel;
    sel["event"] = "selected";
    sel["step"] = selected_step;
    sel["dev_f1"] = selected_dev_f1;
    out += sel.dump();
    out += '\n';
    return out;
  }
};

// ---------------------------------------------------------------------------
// First-order optimizers; the choice is a config field.
// ---------------------------------------------------------------------------

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(const std::vector<Param*>& params) = 0;
};

class SgdOptimizer final : public Optimizer {
 public:
  explicit SgdOptimizer(double lr) : lr_(lr) {}
  void step(const std::vector<Param*>& params) override {
    for (auto* p : params) {
      axpy(-lr_, p->g.a.data(), p->w.a.data(), p->w.size());
    }
  }

 private:
  double lr_;
};

class AdaGradOptimizer final : public Optimizer {
 public:
  explicit AdaGradOptimizer(double lr) : lr_(lr) {}
  void step(const std::vector<Param*>& params) override {
    if (acc_.empty()) {
      for (const auto* p : params) acc_.emplace_back(p->w.size(), 0.0);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      auto& acc = acc_[i];
      for (std::size_t j = 0; j < p.w.size(); ++j) {
        const double g = p.g.a[j];
        acc[j] += g * g;
        p.w.a[j] -= lr_ * g / (std::sqrt(acc[j]) + 1e-8);
      }
    }
  }

 private:
  double lr_;
  std::vector<std::vector<double>> acc_;
};

class AdamOptimizer final : public Optimizer {
 public:
  explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Param*>& params) override {
    if (m_.empty()) {
      for (const auto* p : params) {
        m_.emplace_back(p->w.size(), 0.0);
        v_.emplace_back(p->w.size(), 0.0);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < p.w.size(); ++j) {
        const double g = p.g.a[j];
        m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
        v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
        p.w.a[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
      }
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

inline std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double lr) {
  if (name == "adam") return std::make_unique<AdamOptimizer>(lr);
  if (name == "adagrad") return std::make_unique<AdaGradOptimizer>(lr);
  if (name == "sgd") return std::make_unique<SgdOptimizer>(lr);
  throw ValidationError("unknown optimizer: " + name);
}

// Epoch-wise sampling without replacement with a seed-deterministic shuffle.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
      : batch_(batch_size), rng_(seed, /*stream=*/0x5A17) {
    indices_.resize(n);
    for (std::size_t i = 0; i < n; ++i) indices_[i] = i;
    rng_.shuffle(indices_);
  }

  std::vector<std::size_t> next() {
    std::vector<std::size_t> out;
    out.reserve(batch_);
    while (out.size() < batch_) {
      if (cursor_ == indices_.size()) {
        rng_.shuffle(indices_);
        cursor_ = 0;
        if (!out.empty()) break;  // partial tail batch closes the epoch
      }
      out.push_back(indices_[cursor_++]);
    }
    return out;
  }

 private:
  std::size_t batch_;
  Rng rng_;
  std::vector<std::size_t> indices_;
  std::size_t cursor_ = 0;
};

// ---------------------------------------------------------------------------
// Supervised training: per step, combined cross-entropy + contrastive loss;
// dev Micro-F1 every eval_interval steps; the returned checkpoint is the best
// dev evaluation inside the final selection window.
// ---------------------------------------------------------------------------

struct TrainResult {
  Model model;
  RunLog log;
};

inline TrainResult train(const Model& init, const Dataset& train_data,
                         const Dataset& dev_data, const TrainConfig& cfg,
                         std::vector<std::string>* warnings = nullptr) {
  cfg.validate();
  if (!train_data.labeled()) throw ValidationError("train: training data is unlabeled");
  if (train_data.sentences.empty()) throw ValidationError("train: empty training set");
  if (dev_data.sentences.empty()) throw ValidationError("train: empty dev set");
  if (!dev_data.labeled()) throw ValidationError("train: dev set is unlabeled");

  Model work = init.deep_copy();
  auto opt = make_optimizer(cfg.optimizer, cfg.learning_rate);
  BatchSampler sampler(train_data.size(), cfg.batch_size, cfg.seed);
  const ContrastiveConfig ccfg = cfg.contrastive();
  const bool use_contrastive = cfg.level != TrainLevel::none && cfg.alpha > 0.0;
  const bool track_contrastive = cfg.level != TrainLevel::none;

  RunLog log;
  Model best;
  double best_f1 = -1.0;
  std::size_t best_step = 0;
  const std::size_t window_start =
      cfg.max_steps - cfg.selection_window;  // window is (window_start, max]

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    const auto idxs = sampler.next();
    std::vector<const AnnotatedSentence*> chunk;
    chunk.reserve(idxs.size());
    for (const auto i : idxs) chunk.push_back(&train_data.sentences[i]);
    const TokenBatch tb = make_token_batch(chunk, work.encoder->vocab(),
                                           work.encoder->max_len(), warnings);

    const Tensor3 hidden = work.encoder->forward_train(tb);
    const Tensor3 logits = work.head.logits(hidden, tb);
    const Tensor3 probs = ClassificationHead::probabilities(logits, tb);

    const double ce = cross_entropy(probs, tb);
    double cl = 0.0;
    ContrastiveBatch cb;
    if (track_contrastive) {
      cb = make_contrastive_batch(probs, tb, ccfg);
      cl = contrastive_loss(cb, ccfg, warnings);
    }
    const double loss =
        track_contrastive ? combined_loss(ce, cl, cfg.alpha) : ce;
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train: non-finite loss at step " +
                               std::to_string(step));
    }

    RunLog::Step ev;
    ev.step = step;
    ev.ce = ce;
    if (track_contrastive) ev.cl = cl;
    ev.loss = loss;
    log.steps.push_back(ev);

    work.zero_grad();
    Tensor3 dlogits = cross_entropy_grad_logits(probs, tb);
    if (use_contrastive) {
      const double ce_scale = 1.0 - cfg.alpha;
      for (auto& v : dlogits.a) v *= ce_scale;
      contrastive_grad_logits_acc(cb, ccfg, probs, cfg.alpha, dlogits);
    }
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
  return {std::move(best), std::move(log)};
}

// ---------------------------------------------------------------------------
// Batch-size grid: one full training run per setting, best dev F1 flagged.
// ---------------------------------------------------------------------------

struct GridRow {
  std::size_t batch_size = 0;
  double dev_f1 = 0.0;
  std::size_t selected_step = 0;
  bool best = false;
};

inline std::vector<GridRow> grid_search(const std::function<Model()>& model_factory,
                                        const Dataset& data, const Dataset& dev,
                                        const TrainConfig& base_config,
                                        std::vector<std::size_t> batch_sizes) {
  if (batch_sizes.empty()) throw ValidationError("grid_search: no batch sizes");
  std::sort(batch_sizes.begin(), batch_sizes.end());
  std::vector<GridRow> rows;
  for (const auto bs : batch_sizes) {
    TrainConfig cfg = base_config;
    cfg.batch_size = bs;
    const TrainResult r = train(model_factory(), data, dev, cfg);
    rows.push_back({bs, r.log.selected_dev_f1, r.log.selected_step, false});
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].dev_f1 > rows[best].dev_f1) best = i;
  }
  rows[best].best = true;
  return rows;
}

// ---------------------------------------------------------------------------
// Multilingual mode: all per-language datasets are merged into one shuffled
// stream, so batches may mix languages and contrastive positives can span
// them. Otherwise identical to train().
// ---------------------------------------------------------------------------

inline TrainResult train_multilingual(
    const Model& init,
    const std::map<std::string, std::vector<Dataset>>& per_language_data,
    const Dataset& dev_data, const TrainConfig& cfg,
    std::vector<std::string>* warnings = nullptr) {
  if (per_language_data.empty()) {
    throw ValidationError("train_multilingual: no datasets");
  }
  std::vector<Dataset> all;
  std::size_t expected = 0;
  TrainConfig merged_cfg = cfg;
  merged_cfg.languages.clear();
  for (const auto& [lang, datasets] : per_language_data) {
    merged_cfg.languages.push_back(lang);
    for (const auto& ds : datasets) {
      expected += ds.size();
      all.push_back(ds);
    }
  }
  const Dataset merged = merge(all, cfg.seed);
  if (merged.size() != expected) {
    throw std::runtime_error("train_multilingual: merge lost sentences");
  }
  return train(init, merged, dev_data, merged_cfg, warnings);
}

}  // namespace clx
