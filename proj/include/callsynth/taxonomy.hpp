#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "callsynth/core.hpp"

namespace callsynth {

enum class Dimension {
  customer_emotion_arc,
  agent_emotion_arc,
  customer_sentiment_arc,
  agent_sentiment_arc,
  turn_sentiment,
  language_complexity,
  vocabulary_complexity,
  technical_density,
  sentence_complexity,
  discourse_flow,
  overall_readability,
  proactivity,
  emphasis,
  question_type,
  repetition,
  disfluency,
  asr_noise_type,
  solution,
};
inline constexpr std::size_t kDimensionCount = 18;

enum class Level { transcript, turn };
enum class Cardinality { single_label, multi_label };
enum class DimensionKind { emotion_arc, sentiment_arc, score, categorical };

const std::array<Dimension, kDimensionCount>& all_dimensions() noexcept;
std::string_view to_string(Dimension d) noexcept;
Dimension parse_dimension(std::string_view s);
Level level_of(Dimension d) noexcept;
Cardinality cardinality_of(Dimension d) noexcept;
DimensionKind kind_of(Dimension d) noexcept;
// Arc dimensions only: which speaker's trajectory is tracked.
Speaker arc_speaker(Dimension d) noexcept;

inline constexpr std::string_view kOther = "other";

struct LabelSet {
  Dimension dimension;
  std::vector<std::string> labels;
  bool contains(std::string_view l) const;
};

const std::vector<std::string>& emotion_labels();
const std::vector<std::string>& sentiment_labels();
LabelSet label_set(Dimension d);
// Labels an annotator may emit; for arcs this is the start/end base set.
const std::vector<std::string>& base_labels(Dimension d);

struct ArcLabel {
  std::string start;
  std::string end;
  std::string rendered;
};

ArcLabel make_arc(Dimension arc_dim, std::string_view start, std::string_view end);
std::string sentiment_of_emotion(std::string_view emotion);

// Lowercase, trimmed, spaces and hyphens folded to underscores, wrapping quotes
// and trailing punctuation dropped.
std::string normalize_label(std::string_view raw);

struct ReferenceDistribution {
  Language language = Language::en;
  Dimension dimension = Dimension::turn_sentiment;
  std::vector<std::pair<std::string, double>> proportions;  // ordered as published
  double proportion(std::string_view label) const;
};

struct FrequencyDistribution {
  Dimension dimension = Dimension::turn_sentiment;
  std::vector<std::string> labels;
  std::vector<long> counts;
  long total = 0;  // classified items; equals sum of counts for single-label dims

  long count(std::string_view label) const;
  long occurrences() const;  // sum of counts
};

// Zero-count distribution over the full label universe of a dimension.
FrequencyDistribution empty_distribution(Dimension d);

enum class MergeBasis { reference, observed_expected };

FrequencyDistribution merge_low_frequency(const FrequencyDistribution& dist,
                                          const ReferenceDistribution& ref,
                                          double threshold = 0.10);
ReferenceDistribution merge_reference(const ReferenceDistribution& ref, double threshold = 0.10);

struct MergedPair {
  FrequencyDistribution real;
  FrequencyDistribution synth;
};

// Merges both sides onto one shared label list. The observed_expected basis
// pools a label when its share is below threshold in either distribution.
MergedPair merge_pair(const FrequencyDistribution& real, const FrequencyDistribution& synth,
                      const ReferenceDistribution* ref, double threshold, MergeBasis basis);

}  // namespace callsynth
