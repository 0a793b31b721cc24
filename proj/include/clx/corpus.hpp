#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clx/common.hpp"
#include "clx/tags.hpp"

namespace clx {

// One tokenized sentence with optional gold tags (absent for unlabeled pools).
struct AnnotatedSentence {
  std::string id;
  std::string language;
  std::vector<std::string> tokens;
  std::optional<std::vector<LabelTag>> tags;

  bool labeled() const { return tags.has_value(); }

  std::vector<SpanAnnotation> spans() const {
    if (!tags) throw ValidationError("spans(): sentence " + id + " is unlabeled");
    return decode_tags(*tags);
  }
};

enum class DatasetRole {
  source,
  translated,
  code_switched_st,
  code_switched_ts,
  unlabeled,
  mixed,  // result of merging datasets with different roles
};

inline const char* role_name(DatasetRole r) {
  switch (r) {
    case DatasetRole::source: return "source";
    case DatasetRole::translated: return "translated";
    case DatasetRole::code_switched_st: return "code_switched_st";
    case DatasetRole::code_switched_ts: return "code_switched_ts";
    case DatasetRole::unlabeled: return "unlabeled";
    default: return "mixed";
  }
}

struct Dataset {
  std::vector<AnnotatedSentence> sentences;
  DatasetRole role = DatasetRole::source;
  std::string source_language;                 // best-effort metadata
  std::optional<std::string> target_language;  // set for translated/switched data

  std::size_t size() const { return sentences.size(); }
  bool labeled() const { return role != DatasetRole::unlabeled; }
};

// A source sentence, its translation, and a bijection between their decoded
// aspect spans (indices into the respective span lists).
struct ParallelPair {
  AnnotatedSentence source;
  AnnotatedSentence target;
  std::vector<std::pair<std::size_t, std::size_t>> alignment;
};

// ---------------------------------------------------------------------------
// JSONL load/save.
// Record schema: {"id": str, "language": str, "tokens": [str], "tags": [str]},
// "tags" absent for unlabeled data.
// ---------------------------------------------------------------------------

inline Dataset load_corpus(const std::string& path, DatasetRole expect_role,
                           std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_corpus: cannot open " + path);

  const bool want_tags = expect_role != DatasetRole::unlabeled;
  Dataset ds;
  ds.role = expect_role;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);

    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": invalid JSON: " + e.what());
    }

    AnnotatedSentence s;
    try {
      s.id = rec.at("id").get<std::string>();
      s.language = rec.at("language").get<std::string>();
      s.tokens = rec.at("tokens").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": bad record: " + e.what());
    }

    if (want_tags) {
      if (!rec.contains("tags")) {
        throw ValidationError(where + ": labeled dataset record has no tags");
      }
      std::vector<std::string> names;
      try {
        names = rec.at("tags").get<std::vector<std::string>>();
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(where + ": bad tags field: " + e.what());
      }
      if (names.size() != s.tokens.size()) {
        throw ValidationError(where + ": " + std::to_string(names.size()) +
                              " tags for " + std::to_string(s.tokens.size()) +
                              " tokens");
      }
      std::vector<LabelTag> tags;
      tags.reserve(names.size());
      for (const auto& name : names) {
        try {
          tags.push_back(LabelTag::from_name(name));
        } catch (const ValidationError& e) {
          throw ValidationError(where + ": " + e.what());
        }
      }
      // Well-formedness: tags must survive a decode/encode round trip.
      if (encode_spans(tags.size(), decode_tags(tags)) != tags) {
        throw ValidationError(where + ": ill-formed tag sequence");
      }
      s.tags = std::move(tags);
    } else if (rec.contains("tags") && !rec.at("tags").is_null()) {
      throw ValidationError(where + ": unlabeled dataset record carries tags");
    }

    ds.sentences.push_back(std::move(s));
  }

  if (ds.sentences.empty()) {
    emit_warning(warnings, "load_corpus: " + path + " is empty");
  } else {
    ds.source_language = ds.sentences.front().language;
  }
  return ds;
}

inline std::string sentence_to_jsonl(const AnnotatedSentence& s) {
  nlohmann::ordered_json rec;
  rec["id"] = s.id;
  rec["language"] = s.language;
  rec["tokens"] = s.tokens;
  if (s.tags) {
    std::vector<std::string> names;
    names.reserve(s.tags->size());
    for (const auto& t : *s.tags) names.push_back(t.name());
    rec["tags"] = names;
  }
  return rec.dump();
}

inline void save_corpus(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_corpus: cannot open " + path);
  for (const auto& s : ds.sentences) out << sentence_to_jsonl(s) << "\n";
  if (!out) throw std::runtime_error("save_corpus: write failed: " + path);
}

// ---------------------------------------------------------------------------
// Alignment files pair source/target sentences and map span indices.
// Record schema: {"source_id": str, "target_id": str,
//                 "alignments": [[src_span_idx, tgt_span_idx]]}
// ---------------------------------------------------------------------------

struct AlignmentRecord {
  std::string source_id;
  std::string target_id;
  std::vector<std::pair<std::size_t, std::size_t>> alignments;
};

inline std::vector<AlignmentRecord> load_alignments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_alignments: cannot open " + path);
  std::vector<AlignmentRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    try {
      auto rec = nlohmann::json::parse(line);
      AlignmentRecord r;
      r.source_id = rec.at("source_id").get<std::string>();
      r.target_id = rec.at("target_id").get<std::string>();
      for (const auto& pair : rec.at("alignments")) {
        if (!pair.is_array() || pair.size() != 2) {
          throw ValidationError(where + ": alignment entry is not a pair");
        }
        r.alignments.emplace_back(pair[0].get<std::size_t>(),
                                  pair[1].get<std::size_t>());
      }
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": bad alignment record: " + e.what());
    }
  }
  return records;
}

inline void save_alignments(const std::vector<AlignmentRecord>& records,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_alignments: cannot open " + path);
  for (const auto& r : records) {
    nlohmann::ordered_json rec;
    rec["source_id"] = r.source_id;
    rec["target_id"] = r.target_id;
    auto pairs = nlohmann::json::array();
    for (const auto& [a, b] : r.alignments) pairs.push_back({a, b});
    rec["alignments"] = pairs;
    out << rec.dump() << "\n";
  }
}

inline std::vector<ParallelPair> make_parallel_pairs(
    const Dataset& source, const Dataset& target,
    const std::vector<AlignmentRecord>& records) {
  std::unordered_map<std::string, const AnnotatedSentence*> by_source, by_target;
  for (const auto& s : source.sentences) by_source[s.id] = &s;
  for (const auto& s : target.sentences) by_target[s.id] = &s;

  std::vector<ParallelPair> pairs;
  pairs.reserve(records.size());
  for (const auto& r : records) {
    const auto src = by_source.find(r.source_id);
    if (src == by_source.end()) {
      throw ValidationError("alignment references unknown source id: " +
                            r.source_id);
    }
    const auto tgt = by_target.find(r.target_id);
    if (tgt == by_target.end()) {
      throw ValidationError("alignment references unknown target id: " +
                            r.target_id);
    }
    pairs.push_back({*src->second, *tgt->second, r.alignments});
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Code-switched corpus construction: keep one side's context and swap every
// aligned aspect span's tokens for the other side's.
// ---------------------------------------------------------------------------

enum class SwitchDirection { source_to_target, target_to_source };

struct CodeSwitchResult {
  Dataset dataset;
  std::size_t skipped_pairs = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// Checks that `alignment` is a bijection between span lists of the given
// sizes and that aligned spans agree on sentiment. Returns an error message
// or empty string.
inline std::string check_alignment(
    const std::vector<SpanAnnotation>& src_spans,
    const std::vector<SpanAnnotation>& tgt_spans,
    const std::vector<std::pair<std::size_t, std::size_t>>& alignment) {
  if (alignment.size() != src_spans.size() ||
      alignment.size() != tgt_spans.size()) {
    return "alignment covers " + std::to_string(alignment.size()) +
           " spans, sentence pair has " + std::to_string(src_spans.size()) +
           "/" + std::to_string(tgt_spans.size());
  }
  std::vector<bool> src_seen(src_spans.size(), false),
      tgt_seen(tgt_spans.size(), false);
  for (const auto& [si, ti] : alignment) {
    if (si >= src_spans.size() || ti >= tgt_spans.size()) {
      return "alignment index out of range";
    }
    if (src_seen[si] || tgt_seen[ti]) return "alignment is not a bijection";
    src_seen[si] = true;
    tgt_seen[ti] = true;
    if (src_spans[si].sentiment != tgt_spans[ti].sentiment) {
      return "aligned spans disagree on sentiment at " + span_to_string(src_spans[si]);
    }
  }
  return "";
}

}  // namespace detail

inline CodeSwitchResult build_code_switched(const std::vector<ParallelPair>& pairs,
                                            SwitchDirection direction) {
  CodeSwitchResult result;
  result.dataset.role = direction == SwitchDirection::source_to_target
                            ? DatasetRole::code_switched_st
                            : DatasetRole::code_switched_ts;

  for (const auto& pair : pairs) {
    if (!pair.source.labeled() || !pair.target.labeled()) {
      ++result.skipped_pairs;
      result.warnings.push_back("pair " + pair.source.id + ": unlabeled side");
      continue;
    }
    const bool s2t = direction == SwitchDirection::source_to_target;
    const AnnotatedSentence& base = s2t ? pair.source : pair.target;
    const AnnotatedSentence& donor = s2t ? pair.target : pair.source;

    const auto base_spans = base.spans();
    const auto donor_spans = donor.spans();
    const auto& src_spans = s2t ? base_spans : donor_spans;
    const auto& tgt_spans = s2t ? donor_spans : base_spans;
    const std::string err =
        detail::check_alignment(src_spans, tgt_spans, pair.alignment);
    if (!err.empty()) {
      ++result.skipped_pairs;
      result.warnings.push_back("pair " + base.id + ": " + err);
      continue;
    }

    // donor span index for each base span index
    std::vector<std::size_t> donor_of(base_spans.size());
    for (const auto& [si, ti] : pair.alignment) {
      if (s2t) {
        donor_of[si] = ti;
      } else {
        donor_of[ti] = si;
      }
    }

    AnnotatedSentence out;
    out.id = base.id;
    out.language = base.language;
    std::vector<SpanAnnotation> out_spans;
    std::size_t cursor = 0;  // next base token to copy
    for (std::size_t k = 0; k < base_spans.size(); ++k) {
      const auto& span = base_spans[k];  // base spans come out sorted
      for (std::size_t i = cursor; i < span.start; ++i) {
        out.tokens.push_back(base.tokens[i]);
      }
      const auto& rep = donor_spans[donor_of[k]];
      const std::size_t new_start = out.tokens.size();
      for (std::size_t i = rep.start; i <= rep.end; ++i) {
        out.tokens.push_back(donor.tokens[i]);
      }
      out_spans.push_back({new_start, out.tokens.size() - 1, span.sentiment});
      cursor = span.end + 1;
    }
    for (std::size_t i = cursor; i < base.tokens.size(); ++i) {
      out.tokens.push_back(base.tokens[i]);
    }
    out.tags = encode_spans(out.tokens.size(), out_spans);
    result.dataset.sentences.push_back(std::move(out));
  }

  if (!pairs.empty()) {
    result.dataset.source_language = pairs.front().source.language;
    result.dataset.target_language = pairs.front().target.language;
  }
  return result;
}

// Drops all gold tags; tokens are preserved verbatim. Idempotent.
inline Dataset strip_labels(const Dataset& ds) {
  Dataset out = ds;
  out.role = DatasetRole::unlabeled;
  for (auto& s : out.sentences) s.tags.reset();
  return out;
}

// Concatenates datasets and applies a seed-deterministic shuffle. All inputs
// must agree on labeledness.
inline Dataset merge(const std::vector<Dataset>& datasets, std::uint64_t shuffle_seed) {
  if (datasets.empty()) throw ValidationError("merge: no datasets given");
  const bool labeled = datasets.front().labeled();
  for (const auto& ds : datasets) {
    if (ds.labeled() != labeled) {
      throw ValidationError("merge: cannot mix labeled and unlabeled datasets");
    }
  }

  Dataset out;
  out.role = datasets.front().role;
  out.source_language = datasets.front().source_language;
  out.target_language = datasets.front().target_language;
  for (const auto& ds : datasets) {
    if (ds.role != out.role) out.role = labeled ? DatasetRole::mixed : DatasetRole::unlabeled;
    out.sentences.insert(out.sentences.end(), ds.sentences.begin(),
                         ds.sentences.end());
  }

  Rng rng(shuffle_seed, /*stream=*/0xC0C0);
  rng.shuffle(out.sentences);
  return out;
}

}  // namespace clx
