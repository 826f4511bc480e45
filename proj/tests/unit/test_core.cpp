#include <doctest.h>

#include "callsynth/core.hpp"
#include "callsynth/json_io.hpp"

using namespace callsynth;

namespace {

CallAttributes sample_attrs() {
  CallAttributes a;
  a.language = Language::fr_ca;
  a.call_length_category = CallLengthCategory::medium;
  a.call_duration_seconds = 700.0;
  for (auto k : kIntentKeys) a.intent_summaries[std::string(k)] = "summary of " + std::string(k);
  a.topic_flow = {{"greeting", "hello", 0, 3}, {"issue", "the problem", 4, 10}};
  a.qa_evaluation = {{"Was the agent polite?", {"yes", "no"}, "yes"}};
  return a;
}

bool has_rule(const std::vector<Violation>& v, const std::string& rule) {
  for (const auto& x : v)
    if (x.rule.find(rule) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("call length thresholds are half-open at 180, 600 and 1200 seconds") {
  CHECK(classify_call_length(179.9) == CallLengthCategory::very_short);
  CHECK(classify_call_length(180.0) == CallLengthCategory::short_);
  CHECK(classify_call_length(599.0) == CallLengthCategory::short_);
  CHECK(classify_call_length(600.0) == CallLengthCategory::medium);
  CHECK(classify_call_length(1199.0) == CallLengthCategory::medium);
  CHECK(classify_call_length(1200.0) == CallLengthCategory::long_);
  CHECK_THROWS_AS(classify_call_length(0.0), Error);
  try {
    classify_call_length(-3.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveDuration);
  }
}

TEST_CASE("language and category names round-trip") {
  for (auto l : kLanguages) CHECK(parse_language(to_string(l)) == l);
  for (auto c : kCallLengths) CHECK(parse_call_length(to_string(c)) == c);
  CHECK(to_string(Language::fr_ca) == "fr-ca");
  try {
    parse_language("de");
    FAIL("expected UnknownLanguage");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownLanguage);
  }
}

TEST_CASE("transcript parsing enforces contiguous indices and known speakers") {
  const std::string ok =
      "{\"idx\":0,\"speaker\":\"agent\",\"text\":\"hello\"}\n"
      "{\"idx\":1,\"speaker\":\"customer\",\"text\":\"hi there\"}\n";
  const auto t = parse_transcript(ok, Language::es);
  REQUIRE(t.size() == 2);
  CHECK(t.language == Language::es);
  CHECK(t.turns[1].speaker == Speaker::customer);
  CHECK(t.turns[1].text == "hi there");
  CHECK(serialize_transcript(t) == ok);

  auto kind_of_failure = [](const std::string& raw) {
    try {
      parse_transcript(raw);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;  // sentinel: no failure
  };
  CHECK(kind_of_failure("{\"idx\":0,\"speaker\":\"agent\",\"text\":\"a\"}\n{\"idx\":2,\"speaker\":\"agent\",\"text\":\"b\"}\n") ==
        ErrorKind::IndexGap);
  CHECK(kind_of_failure("{\"idx\":0,\"speaker\":\"bot\",\"text\":\"a\"}\n") == ErrorKind::UnknownSpeaker);
  CHECK(kind_of_failure("{\"idx\":0,\"speaker\":\"agent\"}\n") == ErrorKind::MalformedRecord);
  CHECK(kind_of_failure("not json\n") == ErrorKind::MalformedRecord);
  CHECK(kind_of_failure("{\"idx\":0,\"speaker\":\"agent\",\"text\":\"  \"}\n") == ErrorKind::MalformedRecord);
}

TEST_CASE("valid attributes have no violations") {
  CHECK(validate_attributes(sample_attrs()).empty());
}

TEST_CASE("topic flow violations are reported") {
  auto a = sample_attrs();
  a.topic_flow = {{"a", "", 0, 3}, {"b", "", 5, 9}};
  CHECK(has_rule(validate_attributes(a), "gap"));
  a.topic_flow = {{"a", "", 0, 5}, {"b", "", 5, 9}};
  CHECK(has_rule(validate_attributes(a), "overlap"));
  a.topic_flow = {{"a", "", 1, 5}};
  CHECK_FALSE(validate_attributes(a).empty());
  a.topic_flow = {{"", "", 0, 5}};
  CHECK_FALSE(validate_attributes(a).empty());
  a.topic_flow = {{"a", "", 0, 5}, {"b", "", 7, 6}};
  CHECK_FALSE(validate_attributes(a).empty());
}

TEST_CASE("intent and QA violations are reported") {
  auto a = sample_attrs();
  a.intent_summaries.erase("resolution");
  CHECK_FALSE(validate_attributes(a).empty());
  a = sample_attrs();
  a.intent_summaries["mood"] = "x";
  CHECK_FALSE(validate_attributes(a).empty());
  a = sample_attrs();
  a.intent_summaries["resolution"] = "";  // empty summaries are legal
  CHECK(validate_attributes(a).empty());
  a = sample_attrs();
  a.qa_evaluation[0].answer = "maybe";
  CHECK(has_rule(validate_attributes(a), "answer not an option"));
  a = sample_attrs();
  a.call_duration_seconds = 0.0;
  CHECK_FALSE(validate_attributes(a).empty());
}

TEST_CASE("attributes survive a JSON round trip") {
  const auto a = sample_attrs();
  const auto b = attributes_from_json(to_json(a));
  CHECK(b.language == a.language);
  CHECK(b.call_length_category == a.call_length_category);
  CHECK(b.call_duration_seconds == a.call_duration_seconds);
  CHECK(b.intent_summaries == a.intent_summaries);
  CHECK(b.topic_flow == a.topic_flow);
  REQUIRE(b.qa_evaluation.size() == 1);
  CHECK(b.qa_evaluation[0].options == a.qa_evaluation[0].options);
  try {
    attributes_from_json(json::parse(R"({"language":"xx"})"));
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::UnknownLanguage || e.kind() == ErrorKind::InvalidAttributes));
  }
}
