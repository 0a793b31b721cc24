#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "clx/common.hpp"
#include "clx/corpus.hpp"
#include "clx/linalg.hpp"
#include "clx/tags.hpp"

namespace clx {

// ---------------------------------------------------------------------------
// Vocabulary: token string <-> id, UNK at id 0. Ids are assigned in first-
// appearance order over the building corpus so vocab construction is
// deterministic.
// ---------------------------------------------------------------------------

class Vocab {
 public:
  static constexpr int kUnkId = 0;

  Vocab() { add("<unk>"); }

  static Vocab build(const std::vector<const Dataset*>& datasets) {
    Vocab v;
    for (const auto* ds : datasets) {
      for (const auto& s : ds->sentences) {
        for (const auto& tok : s.tokens) v.add(tok);
      }
    }
    return v;
  }

  int add(const std::string& token) {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    const int id = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(token);
    token_to_id_.emplace(token, id);
    return id;
  }

  int lookup(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
  }

  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  static Vocab from_tokens(std::vector<std::string> tokens) {
    if (tokens.empty() || tokens.front() != "<unk>") {
      throw ValidationError("vocab list must start with <unk>");
    }
    Vocab v;
    v.id_to_token_.clear();
    v.token_to_id_.clear();
    for (auto& t : tokens) {
      const int id = static_cast<int>(v.id_to_token_.size());
      if (!v.token_to_id_.emplace(t, id).second) {
        throw ValidationError("duplicate vocab token: " + t);
      }
      v.id_to_token_.push_back(std::move(t));
    }
    return v;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

// One learnable tensor plus its gradient accumulator.
struct Param {
  Mat w;
  Mat g;

  Param() = default;
  Param(std::size_t rows, std::size_t cols) : w(rows, cols), g(rows, cols) {}
  void zero_grad() { g.zero(); }
};

// ---------------------------------------------------------------------------
// A flattened training batch: ragged token-id rows, gold tag indices, and the
// originating sentence ids. K (valid_tokens) counts real positions only.
// ---------------------------------------------------------------------------

struct TokenBatch {
  std::vector<std::string> sentence_ids;
  std::vector<std::vector<int>> token_ids;  // [B][len_b]
  std::vector<std::vector<int>> gold;       // tag indices; empty when unlabeled
  std::size_t max_len = 0;                  // longest row in this batch

  std::size_t batch_size() const { return token_ids.size(); }
  std::size_t len(std::size_t b) const { return token_ids[b].size(); }
  bool valid(std::size_t b, std::size_t t) const { return t < token_ids[b].size(); }
  bool has_gold() const { return !gold.empty(); }

  std::size_t valid_tokens() const {
    std::size_t k = 0;
    for (const auto& row : token_ids) k += row.size();
    return k;
  }
};

inline TokenBatch make_token_batch(const std::vector<const AnnotatedSentence*>& sentences,
                                   const Vocab& vocab, std::size_t max_len,
                                   std::vector<std::string>* warnings = nullptr) {
  TokenBatch batch;
  for (const auto* s : sentences) {
    std::size_t n = s->tokens.size();
    if (n > max_len) {
      emit_warning(warnings, "sentence " + s->id + " truncated from " +
                                 std::to_string(n) + " to " +
                                 std::to_string(max_len) + " tokens");
      n = max_len;
    }
    std::vector<int> ids(n);
    for (std::size_t t = 0; t < n; ++t) ids[t] = vocab.lookup(s->tokens[t]);
    batch.sentence_ids.push_back(s->id);
    batch.token_ids.push_back(std::move(ids));
    if (s->tags) {
      std::vector<int> g(n);
      for (std::size_t t = 0; t < n; ++t) g[t] = (*s->tags)[t].index();
      batch.gold.push_back(std::move(g));
    }
    batch.max_len = std::max(batch.max_len, n);
  }
  if (!batch.gold.empty() && batch.gold.size() != batch.token_ids.size()) {
    throw ValidationError("make_token_batch: mixed labeled/unlabeled sentences");
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Contextual encoder contract. Implementations map token-id sequences to
// hidden states [B, T, H]; positions past a sentence's length are padding and
// must be ignored by every consumer. encode() is const and deterministic.
// ---------------------------------------------------------------------------

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual const Vocab& vocab() const = 0;
  virtual std::size_t hidden_dim() const = 0;
  virtual std::size_t max_len() const = 0;
  virtual Tensor3 encode(const TokenBatch& batch) const = 0;
};

// Trainable extension: forward with cached intermediates, backward pass that
// accumulates gradients. Training is single-writer; the cached state belongs
// to the most recent forward_train call.
class TrainableEncoder : public Encoder {
 public:
  virtual Tensor3 forward_train(const TokenBatch& batch) = 0;
  virtual void backward(const TokenBatch& batch, const Tensor3& dhidden) = 0;
  virtual std::vector<Param*> params() = 0;
  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }
};

// ---------------------------------------------------------------------------
// Desk-scale encoder: embedding table plus two additive bidirectional tanh
// recurrent layers. Small enough to train from scratch on a CPU in seconds,
// with full-sentence receptive field.
// ---------------------------------------------------------------------------

class ToyEncoder final : public TrainableEncoder {
 public:
  struct Layer {
    Param wf, uf, bf;  // forward direction
    Param wr, ur, br;  // reverse direction
  };

  ToyEncoder(Vocab vocab, std::size_t hidden_dim, std::size_t max_len,
             std::uint64_t seed)
      : vocab_(std::move(vocab)), hidden_(hidden_dim), max_len_(max_len) {
    embedding_ = Param(vocab_.size(), hidden_);
    layers_.resize(kLayers);
    for (auto& l : layers_) {
      l.wf = Param(hidden_, hidden_);
      l.uf = Param(hidden_, hidden_);
      l.bf = Param(1, hidden_);
      l.wr = Param(hidden_, hidden_);
      l.ur = Param(hidden_, hidden_);
      l.br = Param(1, hidden_);
    }
    init_weights(seed);
  }

  const Vocab& vocab() const override { return vocab_; }
  std::size_t hidden_dim() const override { return hidden_; }
  std::size_t max_len() const override { return max_len_; }

  Tensor3 encode(const TokenBatch& batch) const override {
    Cache scratch;
    return run_forward(batch, scratch);
  }

  Tensor3 forward_train(const TokenBatch& batch) override {
    cache_ = Cache();
    return run_forward(batch, cache_);
  }

  void backward(const TokenBatch& batch, const Tensor3& dhidden) override {
    const std::size_t bs = batch.batch_size();
    if (cache_.inputs.size() != kLayers + 1 || cache_.inputs[0].b != bs) {
      throw std::runtime_error("ToyEncoder::backward without matching forward");
    }
    const std::size_t big_t = dhidden.t;
    // d w.r.t. the current layer's output, updated layer by layer.
    Tensor3 dout = dhidden;
    for (int li = kLayers - 1; li >= 0; --li) {
      Tensor3 dinput(bs, big_t, hidden_);
      backward_layer(layers_[li], cache_.inputs[li], cache_.fwd[li],
                     cache_.rev[li], batch, dout, dinput);
      dout = std::move(dinput);
    }
    // Embedding rows.
    for (std::size_t b = 0; b < bs; ++b) {
      for (std::size_t t = 0; t < batch.len(b); ++t) {
        axpy(1.0, dout.at(b, t), embedding_.g.row(batch.token_ids[b][t]), hidden_);
      }
    }
  }

  std::vector<Param*> params() override {
    std::vector<Param*> out = {&embedding_};
    for (auto& l : layers_) {
      out.push_back(&l.wf);
      out.push_back(&l.uf);
      out.push_back(&l.bf);
      out.push_back(&l.wr);
      out.push_back(&l.ur);
      out.push_back(&l.br);
    }
    return out;
  }

  std::unique_ptr<ToyEncoder> clone() const {
    return std::make_unique<ToyEncoder>(*this);
  }

  // Serialization (weights only; gradients and caches are transient).
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["type"] = "toy";
    j["hidden_dim"] = hidden_;
    j["max_len"] = max_len_;
    j["vocab"] = vocab_.tokens();
    j["embedding"] = embedding_.w.a;
    auto layers = nlohmann::ordered_json::array();
    for (const auto& l : layers_) {
      nlohmann::ordered_json lj;
      lj["wf"] = l.wf.w.a;
      lj["uf"] = l.uf.w.a;
      lj["bf"] = l.bf.w.a;
      lj["wr"] = l.wr.w.a;
      lj["ur"] = l.ur.w.a;
      lj["br"] = l.br.w.a;
      layers.push_back(lj);
    }
    j["layers"] = layers;
    return j;
  }

  static std::unique_ptr<ToyEncoder> from_json(const nlohmann::json& j) {
    if (j.at("type").get<std::string>() != "toy") {
      throw ValidationError("unsupported encoder type: " +
                            j.at("type").get<std::string>());
    }
    auto vocab = Vocab::from_tokens(j.at("vocab").get<std::vector<std::string>>());
    auto enc = std::make_unique<ToyEncoder>(std::move(vocab),
                                            j.at("hidden_dim").get<std::size_t>(),
                                            j.at("max_len").get<std::size_t>(),
                                            /*seed=*/0);
    auto load = [](Param& p, const nlohmann::json& src) {
      auto vals = src.get<std::vector<double>>();
      if (vals.size() != p.w.a.size()) {
        throw ValidationError("encoder weight shape mismatch in checkpoint");
      }
      p.w.a = std::move(vals);
    };
    load(enc->embedding_, j.at("embedding"));
    const auto& layers = j.at("layers");
    if (layers.size() != kLayers) {
      throw ValidationError("encoder layer count mismatch in checkpoint");
    }
    for (std::size_t i = 0; i < kLayers; ++i) {
      load(enc->layers_[i].wf, layers[i].at("wf"));
      load(enc->layers_[i].uf, layers[i].at("uf"));
      load(enc->layers_[i].bf, layers[i].at("bf"));
      load(enc->layers_[i].wr, layers[i].at("wr"));
      load(enc->layers_[i].ur, layers[i].at("ur"));
      load(enc->layers_[i].br, layers[i].at("br"));
    }
    return enc;
  }

 private:
  static constexpr std::size_t kLayers = 2;

  struct Cache {
    // inputs[l] feeds layer l; inputs[kLayers] is the final output.
    std::vector<Tensor3> inputs;
    std::vector<Tensor3> fwd;  // per-layer forward-direction states
    std::vector<Tensor3> rev;  // per-layer reverse-direction states
  };

  void init_weights(std::uint64_t seed) {
    Rng rng(seed, /*stream=*/0x1217);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hidden_));
    auto init = [&](Param& p, double s) {
      for (auto& v : p.w.a) v = rng.normal() * s;
    };
    init(embedding_, 0.5);
    for (auto& l : layers_) {
      init(l.wf, scale);
      init(l.uf, scale * 0.5);
      init(l.wr, scale);
      init(l.ur, scale * 0.5);
      // biases stay zero
    }
  }

  Tensor3 run_forward(const TokenBatch& batch, Cache& cache) const {
    const std::size_t bs = batch.batch_size();
    const std::size_t big_t = std::max<std::size_t>(batch.max_len, 1);
    cache.inputs.clear();
    cache.fwd.clear();
    cache.rev.clear();

    Tensor3 x(bs, big_t, hidden_);
    for (std::size_t b = 0; b < bs; ++b) {
      for (std::size_t t = 0; t < batch.len(b); ++t) {
        const int id = batch.token_ids[b][t];
        const double* e = embedding_.w.row(static_cast<std::size_t>(id));
        std::copy(e, e + hidden_, x.at(b, t));
      }
    }
    cache.inputs.push_back(x);

    for (std::size_t li = 0; li < kLayers; ++li) {
      const Tensor3& in = cache.inputs.back();
      Tensor3 f(bs, big_t, hidden_), r(bs, big_t, hidden_), out(bs, big_t, hidden_);
      std::vector<double> pre(hidden_);
      for (std::size_t b = 0; b < bs; ++b) {
        const std::size_t n = batch.len(b);
        for (std::size_t t = 0; t < n; ++t) {  // forward sweep
          std::copy(layers_[li].bf.w.a.begin(), layers_[li].bf.w.a.end(), pre.begin());
          matvec_acc(layers_[li].wf.w, in.at(b, t), pre.data());
          if (t > 0) matvec_acc(layers_[li].uf.w, f.at(b, t - 1), pre.data());
          double* ft = f.at(b, t);
          for (std::size_t k = 0; k < hidden_; ++k) ft[k] = std::tanh(pre[k]);
        }
        for (std::size_t ti = n; ti > 0; --ti) {  // reverse sweep
          const std::size_t t = ti - 1;
          std::copy(layers_[li].br.w.a.begin(), layers_[li].br.w.a.end(), pre.begin());
          matvec_acc(layers_[li].wr.w, in.at(b, t), pre.data());
          if (t + 1 < n) matvec_acc(layers_[li].ur.w, r.at(b, t + 1), pre.data());
          double* rt = r.at(b, t);
          for (std::size_t k = 0; k < hidden_; ++k) rt[k] = std::tanh(pre[k]);
        }
        for (std::size_t t = 0; t < n; ++t) {
          const double* ft = f.at(b, t);
          const double* rt = r.at(b, t);
          double* ot = out.at(b, t);
          for (std::size_t k = 0; k < hidden_; ++k) ot[k] = ft[k] + rt[k];
        }
      }
      cache.fwd.push_back(std::move(f));
      cache.rev.push_back(std::move(r));
      cache.inputs.push_back(std::move(out));
    }
    return cache.inputs.back();
  }

  void backward_layer(Layer& layer, const Tensor3& in, const Tensor3& f,
                      const Tensor3& r, const TokenBatch& batch,
                      const Tensor3& dout, Tensor3& dinput) {
    const std::size_t bs = batch.batch_size();
    std::vector<double> dstate(hidden_), delta(hidden_);
    for (std::size_t b = 0; b < bs; ++b) {
      const std::size_t n = batch.len(b);
      // Forward direction runs BPTT from the last token backwards.
      std::vector<double> carry(hidden_, 0.0);
      for (std::size_t ti = n; ti > 0; --ti) {
        const std::size_t t = ti - 1;
        const double* ft = f.at(b, t);
        for (std::size_t k = 0; k < hidden_; ++k) {
          dstate[k] = dout.at(b, t)[k] + carry[k];
          delta[k] = dstate[k] * (1.0 - ft[k] * ft[k]);
        }
        outer_acc(layer.wf.g, delta.data(), in.at(b, t));
        if (t > 0) outer_acc(layer.uf.g, delta.data(), f.at(b, t - 1));
        axpy(1.0, delta.data(), layer.bf.g.row(0), hidden_);
        matvec_transpose_acc(layer.wf.w, delta.data(), dinput.at(b, t));
        std::fill(carry.begin(), carry.end(), 0.0);
        if (t > 0) matvec_transpose_acc(layer.uf.w, delta.data(), carry.data());
      }
      // Reverse direction runs BPTT from the first token forwards.
      std::fill(carry.begin(), carry.end(), 0.0);
      for (std::size_t t = 0; t < n; ++t) {
        const double* rt = r.at(b, t);
        for (std::size_t k = 0; k < hidden_; ++k) {
          dstate[k] = dout.at(b, t)[k] + carry[k];
          delta[k] = dstate[k] * (1.0 - rt[k] * rt[k]);
        }
        outer_acc(layer.wr.g, delta.data(), in.at(b, t));
        if (t + 1 < n) outer_acc(layer.ur.g, delta.data(), r.at(b, t + 1));
        axpy(1.0, delta.data(), layer.br.g.row(0), hidden_);
        matvec_transpose_acc(layer.wr.w, delta.data(), dinput.at(b, t));
        std::fill(carry.begin(), carry.end(), 0.0);
        if (t + 1 < n) matvec_transpose_acc(layer.ur.w, delta.data(), carry.data());
      }
    }
  }

  Vocab vocab_;
  std::size_t hidden_;
  std::size_t max_len_;
  Param embedding_;
  std::vector<Layer> layers_;
  Cache cache_;
};

// ---------------------------------------------------------------------------
// Softmax classification head over the 13 tags.
// ---------------------------------------------------------------------------

class ClassificationHead {
 public:
  ClassificationHead() : w_(kNumTags, 1), b_(1, kNumTags) {}
  ClassificationHead(std::size_t hidden_dim, std::uint64_t seed)
      : w_(kNumTags, hidden_dim), b_(1, kNumTags) {
    Rng rng(seed, /*stream=*/0x4EAD);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (auto& v : w_.w.a) v = rng.normal() * scale;
  }

  std::size_t hidden_dim() const { return w_.w.cols; }

  Tensor3 logits(const Tensor3& hidden, const TokenBatch& batch) const {
    Tensor3 z(hidden.b, hidden.t, kNumTags);
    for (std::size_t b = 0; b < hidden.b; ++b) {
      for (std::size_t t = 0; t < batch.len(b); ++t) {
        const double* h = hidden.at(b, t);
        for (std::size_t k = 0; k < hidden.h; ++k) {
          if (!std::isfinite(h[k])) {
            throw std::runtime_error("classify: non-finite hidden state");
          }
        }
        double* zr = z.at(b, t);
        std::copy(b_.w.a.begin(), b_.w.a.end(), zr);
        matvec_acc(w_.w, h, zr);
      }
    }
    return z;
  }

  // Per-token probability rows on the 13-simplex; padded rows stay zero.
  static Tensor3 probabilities(const Tensor3& logits, const TokenBatch& batch) {
    Tensor3 p = logits;
    for (std::size_t b = 0; b < p.b; ++b) {
      for (std::size_t t = 0; t < batch.len(b); ++t) {
        softmax_inplace(p.at(b, t), kNumTags);
      }
    }
    return p;
  }

  Tensor3 classify(const Tensor3& hidden, const TokenBatch& batch) const {
    return probabilities(logits(hidden, batch), batch);
  }

  // Backward for z = W h + b. Returns dL/dhidden; accumulates dW, db.
  Tensor3 backward(const Tensor3& hidden, const TokenBatch& batch,
                   const Tensor3& dlogits) {
    Tensor3 dhidden(hidden.b, hidden.t, hidden.h);
    for (std::size_t b = 0; b < hidden.b; ++b) {
      for (std::size_t t = 0; t < batch.len(b); ++t) {
        const double* dz = dlogits.at(b, t);
        outer_acc(w_.g, dz, hidden.at(b, t));
        axpy(1.0, dz, b_.g.row(0), kNumTags);
        matvec_transpose_acc(w_.w, dz, dhidden.at(b, t));
      }
    }
    return dhidden;
  }

  Param& weight() { return w_; }
  Param& bias() { return b_; }
  const Param& weight() const { return w_; }
  const Param& bias() const { return b_; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["hidden_dim"] = w_.w.cols;
    j["W"] = w_.w.a;
    j["b"] = b_.w.a;
    return j;
  }

  static ClassificationHead from_json(const nlohmann::json& j) {
    ClassificationHead head(j.at("hidden_dim").get<std::size_t>(), 0);
    auto w = j.at("W").get<std::vector<double>>();
    auto b = j.at("b").get<std::vector<double>>();
    if (w.size() != head.w_.w.a.size() || b.size() != head.b_.w.a.size()) {
      throw ValidationError("head weight shape mismatch in checkpoint");
    }
    head.w_.w.a = std::move(w);
    head.b_.w.a = std::move(b);
    return head;
  }

 private:
  Param w_;  // [13 x H]
  Param b_;  // [1 x 13]
};

// ---------------------------------------------------------------------------
// Model = trainable encoder + head. The tag-index map is fixed library-wide
// and serialized with every checkpoint so separately trained models can be
// compared at the probability level.
// ---------------------------------------------------------------------------

struct Model {
  std::shared_ptr<ToyEncoder> encoder;
  ClassificationHead head;

  Model deep_copy() const {
    Model m;
    m.encoder = encoder->clone();
    m.head = head;
    return m;
  }

  std::vector<Param*> params() {
    auto out = encoder->params();
    out.push_back(&head.weight());
    out.push_back(&head.bias());
    return out;
  }

  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }
};

inline Model make_toy_model(Vocab vocab, std::size_t hidden_dim,
                            std::size_t max_len, std::uint64_t seed) {
  Model m;
  m.encoder = std::make_shared<ToyEncoder>(std::move(vocab), hidden_dim, max_len, seed);
  m.head = ClassificationHead(hidden_dim, seed);
  return m;
}

inline nlohmann::ordered_json tag_index_map_json() {
  nlohmann::ordered_json j;
  for (int i = 0; i < kNumTags; ++i) j[LabelTag::from_index(i).name()] = i;
  return j;
}

inline std::string tag_map_hash() {
  return hash_bytes(tag_index_map_json().dump());
}

inline void save_checkpoint(const Model& model, const std::string& path,
                            const std::string& config_hash = "") {
  nlohmann::ordered_json j;
  j["format"] = "clx-checkpoint-v1";
  j["tag_index_map"] = tag_index_map_json();
  j["tag_map_hash"] = tag_map_hash();
  j["config_hash"] = config_hash;
  j["encoder"] = model.encoder->to_json();
  j["head"] = model.head.to_json();
  write_file(path, j.dump() + "\n");
}

inline Model load_checkpoint(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  if (!j.contains("format") || j.at("format") != "clx-checkpoint-v1") {
    throw ValidationError("checkpoint " + path + " has unknown format");
  }
  if (j.at("tag_index_map") != nlohmann::json(tag_index_map_json())) {
    throw ValidationError("checkpoint " + path + " tag-index map mismatch");
  }
  Model m;
  m.encoder = ToyEncoder::from_json(j.at("encoder"));
  m.head = ClassificationHead::from_json(j.at("head"));
  if (m.head.hidden_dim() != m.encoder->hidden_dim()) {
    throw ValidationError("checkpoint " + path + " encoder/head dim mismatch");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Prediction: per-token argmax with lowest-index tie break (so exact ties
// fall back to O first).
// ---------------------------------------------------------------------------

inline std::vector<std::vector<LabelTag>> predict_tags(const Tensor3& probs,
                                                       const TokenBatch& batch) {
  std::vector<std::vector<LabelTag>> out(batch.batch_size());
  for (std::size_t b = 0; b < batch.batch_size(); ++b) {
    out[b].reserve(batch.len(b));
    for (std::size_t t = 0; t < batch.len(b); ++t) {
      const double* row = probs.at(b, t);
      int best = 0;
      for (int k = 1; k < kNumTags; ++k) {
        if (row[k] > row[best]) best = k;
      }
      out[b].push_back(LabelTag::from_index(best));
    }
  }
  return out;
}

// Runs the full pipeline over a dataset in fixed-size inference batches.
inline std::vector<std::vector<SpanAnnotation>> predict_spans(
    const Model& model, const std::vector<AnnotatedSentence>& sentences,
    std::size_t eval_batch = 64) {
  std::vector<std::vector<SpanAnnotation>> out;
  out.reserve(sentences.size());
  for (std::size_t start = 0; start < sentences.size(); start += eval_batch) {
    const std::size_t stop = std::min(sentences.size(), start + eval_batch);
    std::vector<const AnnotatedSentence*> chunk;
    for (std::size_t i = start; i < stop; ++i) chunk.push_back(&sentences[i]);
    const TokenBatch batch =
        make_token_batch(chunk, model.encoder->vocab(), model.encoder->max_len());
    const Tensor3 hidden = model.encoder->encode(batch);
    const Tensor3 probs = model.head.classify(hidden, batch);
    for (auto& tags : predict_tags(probs, batch)) {
      out.push_back(decode_tags(tags));
    }
  }
  return out;
}

}  // namespace clx
