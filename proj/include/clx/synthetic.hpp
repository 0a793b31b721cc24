#pragma once

#include <set>
#include <string>
#include <vector>

#include "clx/common.hpp"
#include "clx/corpus.hpp"
#include "clx/tags.hpp"

namespace clx {

// ---------------------------------------------------------------------------
// Deterministic bilingual demo corpus: templated restaurant-review sentences
// in a made-up source language, with a second language produced by bijective
// vocabulary substitution (word -> "z" + word, "." shared). Aspect spans stay
// aligned 1:1 under the substitution, which gives exact span alignments for
// code-switch construction. Used by the CLI `synth` command and the
// end-to-end test suite.
// ---------------------------------------------------------------------------

struct SyntheticConfig {
  std::size_t train_sentences = 400;
  std::size_t dev_sentences = 100;
  std::size_t test_sentences = 120;
  std::size_t unlabeled_sentences = 400;
  std::size_t space_pairs = 100;  // parallel pool for semantic-space analysis
  std::uint64_t seed = 1;
  std::string source_language = "aa";
  std::string target_language = "ab";
  // Restrict aspects to one token. Sentiment-level grouping treats all
  // boundary variants of one sentiment as positives, so multi-token spans are
  // structurally at odds with it; the single-token corpus makes the token- and
  // sentiment-level objectives coincide and keeps transfer runs comparable
  // across levels.
  bool single_token_aspects = false;
  // Fraction of translated training sentences whose span sentiments are
  // re-rolled (deterministically). Mimics pseudo-label noise in translated
  // data.
  double target_label_noise = 0.0;
};

struct SyntheticCorpus {
  Dataset source_train;       // D_S
  Dataset source_dev;         // model-selection dev set (source language)
  Dataset target_train;       // D_T: translation of source_train, span-aligned
  std::vector<AlignmentRecord> train_alignments;
  std::vector<ParallelPair> train_pairs;
  Dataset target_test;        // held-out labeled target data
  Dataset target_unlabeled;   // unlabeled pool for distillation
  Dataset space_source;       // parallel sentences for cross-language analysis
  Dataset space_target;
};

namespace detail {

struct SynthDraw {
  std::vector<std::string> tokens;
  std::vector<SpanAnnotation> spans;
};

class SynthSampler {
 public:
  SynthSampler(std::uint64_t seed, bool single_token_aspects)
      : rng_(seed, /*stream=*/0x5EED), single_token_(single_token_aspects) {}

  SynthDraw draw() {
    const double r = rng_.uniform();
    if (r < 0.10) return no_aspect();
    if (r < 0.72) return one_aspect();
    return two_aspects();
  }

 private:
  using Tokens = std::vector<std::string>;

  const std::vector<Tokens>& aspects() const {
    static const std::vector<Tokens> all = {
        {"pizza"}, {"pasta"}, {"salad"}, {"coffee"}, {"wine"},
        {"soup"},  {"bread"}, {"steak"}, {"sushi"},  {"cake"},
        {"tea"},   {"ribs"},  {"ice", "cream"}, {"spring", "rolls"},
        {"fish", "tacos"}, {"lamb", "stew"}};
    static const std::vector<Tokens> single = {
        {"pizza"}, {"pasta"}, {"salad"}, {"coffee"}, {"wine"},
        {"soup"},  {"bread"}, {"steak"}, {"sushi"},  {"cake"},
        {"tea"},   {"ribs"}};
    return single_token_ ? single : all;
  }

  const std::vector<std::string>& adjectives(Polarity p) const {
    static const std::vector<std::string> pos = {"great",  "tasty",    "lovely",
                                                 "fresh",  "superb",   "delicious"};
    static const std::vector<std::string> neu = {"average", "ordinary", "standard",
                                                 "plain",   "passable"};
    static const std::vector<std::string> neg = {"awful", "bland",    "stale",
                                                 "cold",  "terrible", "soggy"};
    switch (p) {
      case Polarity::POS: return pos;
      case Polarity::NEU: return neu;
      default: return neg;
    }
  }

  Polarity random_polarity() { return static_cast<Polarity>(rng_.uniform_int(3)); }

  std::pair<Tokens, Polarity> random_aspect_adj() {
    const Polarity p = random_polarity();
    const auto& adj = adjectives(p);
    return {Tokens{adj[rng_.uniform_int(adj.size())]}, p};
  }

  SynthDraw no_aspect() {
    static const std::vector<Tokens> plain = {
        {"we", "came", "back", "again", "."},
        {"overall", "a", "quiet", "visit", "."},
        {"i", "thought", "about", "it", "."},
        {"the", "evening", "went", "by", "."},
        {"we", "will", "see", "."}};
    SynthDraw d;
    d.tokens = plain[rng_.uniform_int(plain.size())];
    return d;
  }

  SynthDraw one_aspect() {
    const Tokens aspect = aspects()[rng_.uniform_int(aspects().size())];
    const auto [adj, pol] = random_aspect_adj();
    SynthDraw d;
    switch (rng_.uniform_int(6)) {
      case 0:
        d.tokens = cat({{"the"}, aspect, {"was"}, adj, {"."}});
        d.spans = {{1, aspect.size(), pol}};
        break;
      case 1:
        d.tokens = cat({adj, aspect, {"."}});
        d.spans = {{1, aspect.size(), pol}};
        break;
      case 2:
        d.tokens = cat({{"i", "thought", "the"}, aspect, {"was"}, adj, {"."}});
        d.spans = {{3, 2 + aspect.size(), pol}};
        break;
      case 3:
        d.tokens = cat({{"the"}, aspect, {"came", "out"}, adj, {"."}});
        d.spans = {{1, aspect.size(), pol}};
        break;
      case 4:
        d.tokens = cat({{"we", "found", "the"}, aspect, {"quite"}, adj, {"."}});
        d.spans = {{3, 2 + aspect.size(), pol}};
        break;
      default:
        d.tokens = cat({{"honestly", "the"}, aspect, {"was"}, adj, {"again", "."}});
        d.spans = {{2, 1 + aspect.size(), pol}};
        break;
    }
    return d;
  }

  SynthDraw two_aspects() {
    const Tokens a1 = aspects()[rng_.uniform_int(aspects().size())];
    Tokens a2 = aspects()[rng_.uniform_int(aspects().size())];
    while (a2 == a1) a2 = aspects()[rng_.uniform_int(aspects().size())];
    const auto [j1, p1] = random_aspect_adj();
    const auto [j2, p2] = random_aspect_adj();
    SynthDraw d;
    if (rng_.uniform_int(2) == 0) {
      // the A1 was J1 and the A2 was J2 .
      d.tokens = cat({{"the"}, a1, {"was"}, j1, {"and", "the"}, a2, {"was"}, j2, {"."}});
      const std::size_t s2 = 1 + a1.size() + 3;
      d.spans = {{1, a1.size(), p1}, {s2 + 1, s2 + a2.size(), p2}};
    } else {
      // J1 A1 but the A2 was J2 .
      d.tokens = cat({j1, a1, {"but", "the"}, a2, {"was"}, j2, {"."}});
      const std::size_t s2 = 1 + a1.size() + 2;
      d.spans = {{1, a1.size(), p1}, {s2, s2 + a2.size() - 1, p2}};
    }
    return d;
  }

  static Tokens cat(const std::vector<Tokens>& parts) {
    Tokens out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
  }

  Rng rng_;
  bool single_token_;
};

inline std::string substitute_token(const std::string& tok) {
  return tok == "." ? tok : "z" + tok;
}

}  // namespace detail

// Word-for-word "translation" into the substituted vocabulary; tags carry
// over unchanged because the substitution is 1:1.
inline AnnotatedSentence translate_synthetic(const AnnotatedSentence& s,
                                             const std::string& target_language,
                                             const std::string& new_id) {
  AnnotatedSentence out;
  out.id = new_id;
  out.language = target_language;
  out.tokens.reserve(s.tokens.size());
  for (const auto& tok : s.tokens) out.tokens.push_back(detail::substitute_token(tok));
  out.tags = s.tags;
  return out;
}

inline SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& cfg) {
  detail::SynthSampler sampler(cfg.seed, cfg.single_token_aspects);
  Rng noise_rng(cfg.seed, /*stream=*/0xBAD);
  std::set<std::string> used;

  auto unique_draw = [&]() {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      detail::SynthDraw d = sampler.draw();
      std::string key;
      for (const auto& t : d.tokens) {
        key += t;
        key += ' ';
      }
      for (const auto& s : d.spans) key += span_to_string(s);
      if (used.insert(key).second) return d;
    }
    throw std::runtime_error("synthetic corpus: template space exhausted");
  };

  auto make_sentence = [&](const std::string& id) {
    const detail::SynthDraw d = unique_draw();
    AnnotatedSentence s;
    s.id = id;
    s.language = cfg.source_language;
    s.tokens = d.tokens;
    s.tags = encode_spans(d.tokens.size(), d.spans);
    return s;
  };

  SyntheticCorpus out;
  const std::string& src = cfg.source_language;
  const std::string& tgt = cfg.target_language;

  out.source_train.role = DatasetRole::source;
  out.source_train.source_language = src;
  out.target_train.role = DatasetRole::translated;
  out.target_train.source_language = src;
  out.target_train.target_language = tgt;
  for (std::size_t i = 0; i < cfg.train_sentences; ++i) {
    const std::string sid = src + "-train-" + std::to_string(i);
    const std::string tid = tgt + "-train-" + std::to_string(i);
    AnnotatedSentence s = make_sentence(sid);
    AnnotatedSentence t = translate_synthetic(s, tgt, tid);
    if (cfg.target_label_noise > 0.0 &&
        noise_rng.uniform() < cfg.target_label_noise) {
      auto spans = t.spans();
      for (auto& span : spans) {
        span.sentiment = static_cast<Polarity>(noise_rng.uniform_int(3));
      }
      t.tags = encode_spans(t.tokens.size(), spans);
    }
    const std::size_t n_spans = decode_tags(*s.tags).size();
    AlignmentRecord rec;
    rec.source_id = sid;
    rec.target_id = tid;
    for (std::size_t k = 0; k < n_spans; ++k) rec.alignments.emplace_back(k, k);
    out.train_pairs.push_back({s, t, rec.alignments});
    out.train_alignments.push_back(std::move(rec));
    out.source_train.sentences.push_back(std::move(s));
    out.target_train.sentences.push_back(std::move(t));
  }

  out.source_dev.role = DatasetRole::source;
  out.source_dev.source_language = src;
  for (std::size_t i = 0; i < cfg.dev_sentences; ++i) {
    out.source_dev.sentences.push_back(make_sentence(src + "-dev-" + std::to_string(i)));
  }

  out.target_test.role = DatasetRole::translated;
  out.target_test.source_language = src;
  out.target_test.target_language = tgt;
  for (std::size_t i = 0; i < cfg.test_sentences; ++i) {
    const AnnotatedSentence s = make_sentence(src + "-test-" + std::to_string(i));
    out.target_test.sentences.push_back(
        translate_synthetic(s, tgt, tgt + "-test-" + std::to_string(i)));
  }

  Dataset pool;
  pool.role = DatasetRole::translated;
  for (std::size_t i = 0; i < cfg.unlabeled_sentences; ++i) {
    const AnnotatedSentence s = make_sentence(src + "-pool-" + std::to_string(i));
    pool.sentences.push_back(
        translate_synthetic(s, tgt, tgt + "-pool-" + std::to_string(i)));
  }
  out.target_unlabeled = strip_labels(pool);
  out.target_unlabeled.source_language = src;
  out.target_unlabeled.target_language = tgt;

  out.space_source.role = DatasetRole::source;
  out.space_source.source_language = src;
  out.space_target.role = DatasetRole::translated;
  out.space_target.source_language = src;
  out.space_target.target_language = tgt;
  for (std::size_t i = 0; i < cfg.space_pairs; ++i) {
    AnnotatedSentence s = make_sentence(src + "-space-" + std::to_string(i));
    out.space_target.sentences.push_back(
        translate_synthetic(s, tgt, tgt + "-space-" + std::to_string(i)));
    out.space_source.sentences.push_back(std::move(s));
  }

  return out;
}

}  // namespace clx
