#include "callsynth/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <json.hpp>

namespace callsynth {

std::string_view to_string(Speaker s) noexcept {
  return s == Speaker::agent ? "agent" : "customer";
}

std::string_view to_string(Language l) noexcept {
  switch (l) {
    case Language::en: return "en";
    case Language::es: return "es";
    case Language::fr: return "fr";
    case Language::fr_ca: return "fr-ca";
  }
  return "en";
}

std::string_view to_string(CallLengthCategory c) noexcept {
  switch (c) {
    case CallLengthCategory::very_short: return "very_short";
    case CallLengthCategory::short_: return "short";
    case CallLengthCategory::medium: return "medium";
    case CallLengthCategory::long_: return "long";
  }
  return "short";
}

Speaker parse_speaker(std::string_view s) {
  if (s == "agent") return Speaker::agent;
  if (s == "customer") return Speaker::customer;
  fail(ErrorKind::UnknownSpeaker, "speaker '" + std::string(s) + "'");
}

Language parse_language(std::string_view s) {
  for (auto l : kLanguages)
    if (to_string(l) == s) return l;
  fail(ErrorKind::UnknownLanguage, "language '" + std::string(s) + "'");
}

CallLengthCategory parse_call_length(std::string_view s) {
  for (auto c : kCallLengths)
    if (to_string(c) == s) return c;
  fail(ErrorKind::InvalidAttributes, "call_length_category '" + std::string(s) + "'");
}

std::string trim(std::string_view s) {
  auto is_ws = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_ws(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_ws(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

std::vector<Violation> validate_topic_flow(const std::vector<TopicSegment>& flow) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const auto& s = flow[i];
    const std::string f = "topic_flow[" + std::to_string(i) + "]";
    if (is_blank(s.name)) out.push_back({f + ".name", "empty topic name"});
    if (s.start_turn < 0) out.push_back({f + ".start_turn", "negative turn index"});
    if (s.start_turn > s.end_turn) out.push_back({f, "start_turn after end_turn"});
    if (i == 0) {
      if (s.start_turn != 0) out.push_back({f + ".start_turn", "flow must start at turn 0"});
      continue;
    }
    const auto& prev = flow[i - 1];
    if (s.start_turn <= prev.end_turn)
      out.push_back({f, "overlapping segments"});
    else if (s.start_turn > prev.end_turn + 1)
      out.push_back({f, "gap between segments"});
  }
  return out;
}

std::vector<Violation> validate_attributes(const CallAttributes& a) {
  std::vector<Violation> out;
  if (a.call_duration_seconds && !(*a.call_duration_seconds > 0.0))
    out.push_back({"call_duration_seconds", "duration must be positive"});
  for (auto key : kIntentKeys)
    if (!a.intent_summaries.count(std::string(key)))
      out.push_back({"intent_summaries." + std::string(key), "missing intent key"});
  for (const auto& [k, v] : a.intent_summaries) {
    (void)v;
    if (std::find(kIntentKeys.begin(), kIntentKeys.end(), k) == kIntentKeys.end())
      out.push_back({"intent_summaries." + k, "unknown intent key"});
  }
  auto tf = validate_topic_flow(a.topic_flow);
  out.insert(out.end(), tf.begin(), tf.end());
  for (std::size_t i = 0; i < a.qa_evaluation.size(); ++i) {
    const auto& q = a.qa_evaluation[i];
    const std::string f = "qa_evaluation[" + std::to_string(i) + "]";
    if (is_blank(q.question)) out.push_back({f + ".question", "empty question"});
    if (is_blank(q.answer)) out.push_back({f + ".answer", "empty answer"});
    if (!q.options.empty() &&
        std::find(q.options.begin(), q.options.end(), q.answer) == q.options.end())
      out.push_back({f + ".answer", "answer not an option"});
  }
  return out;
}

CallLengthCategory classify_call_length(double d, const CallLengthThresholds& th) {
  if (!(d > 0.0) || !std::isfinite(d))
    fail(ErrorKind::NonPositiveDuration, "duration " + std::to_string(d));
  if (d < th.very_short_below) return CallLengthCategory::very_short;
  if (d < th.short_below) return CallLengthCategory::short_;
  if (d < th.medium_below) return CallLengthCategory::medium;
  return CallLengthCategory::long_;
}

Transcript parse_transcript(std::string_view raw, Language lang) {
  Transcript t;
  t.language = lang;
  std::size_t pos = 0, line_no = 0;
  while (pos <= raw.size()) {
    auto nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    std::string_view line = raw.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (is_blank(line)) {
      if (nl == raw.size()) break;
      continue;
    }
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string where = "line " + std::to_string(line_no);
    if (!rec.is_object()) fail(ErrorKind::MalformedRecord, where + ": not an object");
    if (!rec.contains("idx") || !rec["idx"].is_number_integer())
      fail(ErrorKind::MalformedRecord, where + ": idx missing or not an integer");
    if (!rec.contains("speaker") || !rec["speaker"].is_string())
      fail(ErrorKind::MalformedRecord, where + ": speaker missing");
    if (!rec.contains("text") || !rec["text"].is_string())
      fail(ErrorKind::MalformedRecord, where + ": text missing");
    const auto idx = rec["idx"].get<long long>();
    if (idx != static_cast<long long>(t.turns.size()))
      fail(ErrorKind::IndexGap, where + ": expected idx " + std::to_string(t.turns.size()) +
                                    ", got " + std::to_string(idx));
    auto text = rec["text"].get<std::string>();
    if (is_blank(text)) fail(ErrorKind::MalformedRecord, where + ": empty text");
    t.turns.push_back({t.turns.size(), parse_speaker(rec["speaker"].get<std::string>()),
                       std::move(text)});
    if (nl == raw.size()) break;
  }
  return t;
}

std::string serialize_transcript(const Transcript& t) {
  std::string out;
  for (const auto& turn : t.turns) {
    nlohmann::ordered_json rec;
    rec["idx"] = turn.index;
    rec["speaker"] = std::string(to_string(turn.speaker));
    rec["text"] = turn.text;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

}  // namespace callsynth
