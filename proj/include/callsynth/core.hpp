#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "callsynth/error.hpp"

namespace callsynth {

enum class Speaker { agent, customer };
enum class Language { en, es, fr, fr_ca };
// Declaration order is the total order very_short < short < medium < long.
enum class CallLengthCategory { very_short, short_, medium, long_ };

inline constexpr std::array<Language, 4> kLanguages{Language::en, Language::es, Language::fr,
                                                    Language::fr_ca};
inline constexpr std::array<CallLengthCategory, 4> kCallLengths{
    CallLengthCategory::very_short, CallLengthCategory::short_, CallLengthCategory::medium,
    CallLengthCategory::long_};

std::string_view to_string(Speaker s) noexcept;
std::string_view to_string(Language l) noexcept;
std::string_view to_string(CallLengthCategory c) noexcept;
Speaker parse_speaker(std::string_view s);
Language parse_language(std::string_view s);
CallLengthCategory parse_call_length(std::string_view s);

struct Turn {
  std::size_t index = 0;
  Speaker speaker = Speaker::agent;
  std::string text;
  bool operator==(const Turn&) const = default;
};

struct Transcript {
  std::vector<Turn> turns;
  Language language = Language::en;
  std::map<std::string, std::string> metadata;

  std::size_t size() const noexcept { return turns.size(); }
  bool empty() const noexcept { return turns.empty(); }
};

struct TopicSegment {
  std::string name;
  std::string description;
  long start_turn = 0;
  long end_turn = 0;  // inclusive
  bool operator==(const TopicSegment&) const = default;
};

struct QAPair {
  std::string question;
  std::vector<std::string> options;
  std::string answer;
};

// Fixed intent keys; the first is judged alone during reconstruction.
inline constexpr std::array<std::string_view, 7> kIntentKeys{
    "key_events",  "customer_complaints", "next_steps",       "reason_for_call",
    "key_entities", "hold_and_transfer",  "resolution"};

struct CallAttributes {
  Language language = Language::en;
  CallLengthCategory call_length_category = CallLengthCategory::short_;
  std::optional<double> call_duration_seconds;
  std::map<std::string, std::string> intent_summaries;
  std::vector<TopicSegment> topic_flow;
  std::vector<QAPair> qa_evaluation;
};

struct Violation {
  std::string field;
  std::string rule;
};

// Empty result means valid.
std::vector<Violation> validate_attributes(const CallAttributes& attrs);
std::vector<Violation> validate_topic_flow(const std::vector<TopicSegment>& flow);

struct CallLengthThresholds {
  double very_short_below = 180.0;
  double short_below = 600.0;
  double medium_below = 1200.0;
};

CallLengthCategory classify_call_length(double duration_seconds,
                                        const CallLengthThresholds& th = {});

// Transcript lines are JSON records {"idx","speaker","text"}.
Transcript parse_transcript(std::string_view raw, Language lang = Language::en);
std::string serialize_transcript(const Transcript& t);

std::string trim(std::string_view s);
bool is_blank(std::string_view s);

}  // namespace callsynth
