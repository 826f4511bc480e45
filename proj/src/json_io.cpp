#include "callsynth/json_io.hpp"

#include <fstream>
#include <sstream>

namespace callsynth {

namespace {

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    fail(ErrorKind::InvalidAttributes, where + ": missing field '" + key + "'");
  return j.at(key);
}

std::string str_field(const json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_string()) fail(ErrorKind::InvalidAttributes, where + "." + key + ": not a string");
  return v.get<std::string>();
}

long int_field(const json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_number_integer())
    fail(ErrorKind::InvalidAttributes, where + "." + key + ": not an integer");
  return v.get<long>();
}

}  // namespace

json to_json(const TopicSegment& s) {
  json j;
  j["name"] = s.name;
  j["description"] = s.description;
  j["start_turn"] = s.start_turn;
  j["end_turn"] = s.end_turn;
  return j;
}

json to_json(const CallAttributes& a) {
  json j;
  j["language"] = std::string(to_string(a.language));
  j["call_length_category"] = std::string(to_string(a.call_length_category));
  if (a.call_duration_seconds) j["call_duration_seconds"] = *a.call_duration_seconds;
  json intents = json::object();
  for (auto key : kIntentKeys) {
    auto it = a.intent_summaries.find(std::string(key));
    intents[std::string(key)] = it == a.intent_summaries.end() ? "" : it->second;
  }
  j["intent_summaries"] = intents;
  j["topic_flow"] = json::array();
  for (const auto& s : a.topic_flow) j["topic_flow"].push_back(to_json(s));
  j["qa_evaluation"] = json::array();
  for (const auto& q : a.qa_evaluation)
    j["qa_evaluation"].push_back({{"question", q.question}, {"options", q.options}, {"answer", q.answer}});
  return j;
}

CallAttributes attributes_from_json(const json& j) {
  CallAttributes a;
  if (!j.is_object()) fail(ErrorKind::InvalidAttributes, "attributes document is not an object");
  a.language = parse_language(str_field(j, "language", "attributes"));
  a.call_length_category = parse_call_length(str_field(j, "call_length_category", "attributes"));
  if (j.contains("call_duration_seconds") && !j["call_duration_seconds"].is_null()) {
    if (!j["call_duration_seconds"].is_number())
      fail(ErrorKind::InvalidAttributes, "call_duration_seconds: not a number");
    a.call_duration_seconds = j["call_duration_seconds"].get<double>();
  }
  const auto& intents = field(j, "intent_summaries", "attributes");
  if (!intents.is_object()) fail(ErrorKind::InvalidAttributes, "intent_summaries: not an object");
  for (const auto& [k, v] : intents.items()) {
    if (!v.is_string()) fail(ErrorKind::InvalidAttributes, "intent_summaries." + k + ": not a string");
    a.intent_summaries[k] = v.get<std::string>();
  }
  const auto& flow = field(j, "topic_flow", "attributes");
  if (!flow.is_array()) fail(ErrorKind::InvalidAttributes, "topic_flow: not an array");
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const std::string w = "topic_flow[" + std::to_string(i) + "]";
    TopicSegment s;
    s.name = str_field(flow[i], "name", w);
    s.description = flow[i].contains("description") ? str_field(flow[i], "description", w) : "";
    s.start_turn = int_field(flow[i], "start_turn", w);
    s.end_turn = int_field(flow[i], "end_turn", w);
    a.topic_flow.push_back(std::move(s));
  }
  const auto& qa = field(j, "qa_evaluation", "attributes");
  if (!qa.is_array()) fail(ErrorKind::InvalidAttributes, "qa_evaluation: not an array");
  for (std::size_t i = 0; i < qa.size(); ++i) {
    const std::string w = "qa_evaluation[" + std::to_string(i) + "]";
    QAPair q;
    q.question = str_field(qa[i], "question", w);
    q.answer = str_field(qa[i], "answer", w);
    if (qa[i].contains("options")) {
      if (!qa[i]["options"].is_array()) fail(ErrorKind::InvalidAttributes, w + ".options: not an array");
      for (const auto& o : qa[i]["options"]) {
        if (!o.is_string()) fail(ErrorKind::InvalidAttributes, w + ".options: non-string option");
        q.options.push_back(o.get<std::string>());
      }
    }
    a.qa_evaluation.push_back(std::move(q));
  }
  return a;
}

json to_json(const Transcript& t) {
  json arr = json::array();
  for (const auto& turn : t.turns)
    arr.push_back({{"idx", turn.index}, {"speaker", std::string(to_string(turn.speaker))}, {"text", turn.text}});
  return arr;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& contents) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + p.string());
  out << contents;
}

CallAttributes load_attributes(const std::filesystem::path& p) {
  json j;
  try {
    j = json::parse(read_file(p));
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidAttributes, p.string() + ": " + e.what());
  }
  return attributes_from_json(j);
}

Transcript load_transcript(const std::filesystem::path& p, Language lang) {
  auto t = parse_transcript(read_file(p), lang);
  t.metadata["source_id"] = p.stem().string();
  return t;
}

}  // namespace callsynth
