#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clx/common.hpp"

namespace clx {

// Span boundary role within the tagging scheme. O carries no sentiment.
enum class Boundary : std::uint8_t { O = 0, B = 1, I = 2, E = 3, S = 4 };

// Sentiment carried by an aspect span.
enum class Polarity : std::uint8_t { POS = 0, NEU = 1, NEG = 2 };

// Token-level sentiment classes: the three polarities plus O. Indices are
// stable (O=0) because they key contrastive grouping.
enum class SentimentClass : std::uint8_t { O = 0, POS = 1, NEU = 2, NEG = 3 };

constexpr int kNumTags = 13;
constexpr int kNumSentimentClasses = 4;

namespace detail {
inline const std::array<std::string, kNumTags>& tag_names() {
  static const std::array<std::string, kNumTags> names = {
      "O",     "B-POS", "B-NEU", "B-NEG", "I-POS", "I-NEU", "I-NEG",
      "E-POS", "E-NEU", "E-NEG", "S-POS", "S-NEU", "S-NEG"};
  return names;
}
}  // namespace detail

// One of the 13 token tags. Index layout is fixed and serialized alongside
// every model: O=0, then B/I/E/S x POS/NEU/NEG.
class LabelTag {
 public:
  constexpr LabelTag() = default;  // O

  static constexpr LabelTag o() { return LabelTag(); }

  static LabelTag make(Boundary b, Polarity p) {
    if (b == Boundary::O) {
      throw ValidationError("LabelTag: O carries no sentiment; use LabelTag::o()");
    }
    return LabelTag(static_cast<std::uint8_t>(
        1 + (static_cast<int>(b) - 1) * 3 + static_cast<int>(p)));
  }

  static LabelTag from_index(int idx) {
    if (idx < 0 || idx >= kNumTags) {
      throw ValidationError("LabelTag: index out of range: " + std::to_string(idx));
    }
    return LabelTag(static_cast<std::uint8_t>(idx));
  }

  static LabelTag from_name(std::string_view name) {
    const auto& names = detail::tag_names();
    for (int i = 0; i < kNumTags; ++i) {
      if (names[i] == name) return LabelTag(static_cast<std::uint8_t>(i));
    }
    throw ValidationError("LabelTag: unknown tag name: " + std::string(name));
  }

  int index() const { return idx_; }

  Boundary boundary() const {
    if (idx_ == 0) return Boundary::O;
    return static_cast<Boundary>(1 + (idx_ - 1) / 3);
  }

  // nullopt exactly when the tag is O.
  std::optional<Polarity> polarity() const {
    if (idx_ == 0) return std::nullopt;
    return static_cast<Polarity>((idx_ - 1) % 3);
  }

  const std::string& name() const { return detail::tag_names()[idx_]; }

  bool is_o() const { return idx_ == 0; }

  friend bool operator==(LabelTag a, LabelTag b) { return a.idx_ == b.idx_; }
  friend bool operator!=(LabelTag a, LabelTag b) { return a.idx_ != b.idx_; }

 private:
  constexpr explicit LabelTag(std::uint8_t idx) : idx_(idx) {}
  std::uint8_t idx_ = 0;
};

inline SentimentClass sentiment_projection(LabelTag tag) {
  const auto p = tag.polarity();
  if (!p) return SentimentClass::O;
  switch (*p) {
    case Polarity::POS: return SentimentClass::POS;
    case Polarity::NEU: return SentimentClass::NEU;
    default: return SentimentClass::NEG;
  }
}

inline const std::string& sentiment_name(SentimentClass c) {
  static const std::array<std::string, 4> names = {"O", "POS", "NEU", "NEG"};
  return names[static_cast<int>(c)];
}

inline const std::string& polarity_name(Polarity p) {
  static const std::array<std::string, 3> names = {"POS", "NEU", "NEG"};
  return names[static_cast<int>(p)];
}

inline Polarity polarity_from_name(std::string_view name) {
  if (name == "POS") return Polarity::POS;
  if (name == "NEU") return Polarity::NEU;
  if (name == "NEG") return Polarity::NEG;
  throw ValidationError("unknown sentiment name: " + std::string(name));
}

// An aspect span: inclusive token range plus its sentiment.
struct SpanAnnotation {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  Polarity sentiment = Polarity::POS;

  friend bool operator==(const SpanAnnotation& a, const SpanAnnotation& b) {
    return a.start == b.start && a.end == b.end && a.sentiment == b.sentiment;
  }
  friend bool operator<(const SpanAnnotation& a, const SpanAnnotation& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end < b.end;
    return static_cast<int>(a.sentiment) < static_cast<int>(b.sentiment);
  }
};

inline std::string span_to_string(const SpanAnnotation& s) {
  return "(" + std::to_string(s.start) + "," + std::to_string(s.end) + "," +
         polarity_name(s.sentiment) + ")";
}

// Span list -> tag sequence. Single-token spans become S-x, longer spans
// B-x (I-x)* E-x, everything else O. Rejects overlapping or out-of-range
// spans, naming the offender.
inline std::vector<LabelTag> encode_spans(std::size_t length,
                                          std::vector<SpanAnnotation> spans) {
  std::sort(spans.begin(), spans.end());
  std::vector<LabelTag> tags(length, LabelTag::o());
  std::size_t prev_end = 0;
  bool first = true;
  for (const auto& span : spans) {
    if (span.start > span.end || span.end >= length) {
      throw ValidationError("encode_spans: span out of range: " +
                            span_to_string(span) + " for length " +
                            std::to_string(length));
    }
    if (!first && span.start <= prev_end) {
      throw ValidationError("encode_spans: overlapping span: " +
                            span_to_string(span));
    }
    first = false;
    prev_end = span.end;
    if (span.start == span.end) {
      tags[span.start] = LabelTag::make(Boundary::S, span.sentiment);
    } else {
      tags[span.start] = LabelTag::make(Boundary::B, span.sentiment);
      for (std::size_t i = span.start + 1; i < span.end; ++i) {
        tags[i] = LabelTag::make(Boundary::I, span.sentiment);
      }
      tags[span.end] = LabelTag::make(Boundary::E, span.sentiment);
    }
  }
  return tags;
}

// Tag sequence -> span list. Total: ill-formed fragments (dangling I/E,
// B without a matching E, sentiment switches mid-span) are dropped, never
// repaired. Exact inverse of encode_spans on well-formed input.
inline std::vector<SpanAnnotation> decode_tags(const std::vector<LabelTag>& tags) {
  std::vector<SpanAnnotation> spans;
  std::size_t i = 0;
  const std::size_t n = tags.size();
  while (i < n) {
    const LabelTag tag = tags[i];
    if (tag.boundary() == Boundary::S) {
      spans.push_back({i, i, *tag.polarity()});
      ++i;
      continue;
    }
    if (tag.boundary() == Boundary::B) {
      const Polarity pol = *tag.polarity();
      std::size_t j = i + 1;
      while (j < n && tags[j].boundary() == Boundary::I &&
             tags[j].polarity() == pol) {
        ++j;
      }
      if (j < n && tags[j].boundary() == Boundary::E && tags[j].polarity() == pol) {
        spans.push_back({i, j, pol});
        i = j + 1;
      } else {
        // Broken fragment: drop the B..I run, resume at the breaking tag.
        i = j;
      }
      continue;
    }
    // O, or a dangling I/E.
    ++i;
  }
  return spans;
}

}  // namespace clx
