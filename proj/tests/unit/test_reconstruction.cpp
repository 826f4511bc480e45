#include <doctest.h>

#include <filesystem>

#include "callsynth/reconstruction.hpp"

using namespace callsynth;
using namespace callsynth::llm;

namespace {

BackendConfig quiet_config() {
  BackendConfig c;
  c.backoff_base_seconds = 0.0;
  return c;
}

LlmClient scripted(std::vector<MockRule> rules) {
  MockScript s;
  s.rules = std::move(rules);
  return LlmClient(std::make_shared<MockBackend>(s, 0), quiet_config());
}

MockRule reply(std::string task, std::string response, std::vector<std::string> contains = {}) {
  return {std::move(task), std::move(contains), std::move(response), std::nullopt, -1};
}

Transcript small_transcript() {
  Transcript t;
  t.turns = {{0, Speaker::agent, "Hello, how can I help?"},
             {1, Speaker::customer, "My order is late."},
             {2, Speaker::agent, "It ships Friday."}};
  return t;
}

CallAttributes fixture_attrs(const std::string& name) {
  return load_attributes(std::filesystem::path(CALLSYNTH_SOURCE_DIR) / "tests/fixtures/e2e/attrs" / (name + ".json"));
}

ErrorKind kind_thrown(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("normalization maps 1..10 onto 0..1") {
  CHECK(normalize(1.0) == 0.0);
  CHECK(normalize(10.0) == 1.0);
  CHECK(normalize(5.5) == doctest::Approx(0.5));
  CHECK(kind_thrown([] { normalize(0.5); }) == ErrorKind::OutOfRange);
  CHECK(kind_thrown([] { normalize(10.5); }) == ErrorKind::OutOfRange);
}

TEST_CASE("weighted aggregate worked example") {
  SubScores s;
  s.topic_flow_raw = 8.2;       // 0.8
  s.qa_score = 0.6;
  s.key_events_raw = 7.3;       // 0.7
  s.summary_intent_avg_raw = 6.4;  // 0.6
  s.speech_char_avg_raw = 7.3;  // 0.7
  const auto r = aggregate(s);
  CHECK(r.overall == doctest::Approx(0.25 * 0.8 + 0.15 * 0.6 + 0.25 * 0.7 + 0.15 * 0.6 + 0.20 * 0.7));
  CHECK(r.overall == doctest::Approx(0.695));
  SubScores mid;
  mid.topic_flow_raw = mid.key_events_raw = mid.summary_intent_avg_raw = mid.speech_char_avg_raw = 7.3;
  mid.qa_score = 0.7;
  CHECK(aggregate(mid).overall == doctest::Approx(0.70));
}

TEST_CASE("weights must be non-negative and sum to one") {
  Weights w;
  w.w_ts = 0.5;
  CHECK(kind_thrown([&] { w.validate(); }) == ErrorKind::InvalidConfig);
  Weights n;
  n.w_qa = -0.1;
  n.w_ts = 0.5;
  CHECK(kind_thrown([&] { n.validate(); }) == ErrorKind::InvalidConfig);
  const auto back = weights_from_json(to_json(Weights{}));
  CHECK(back.w_speech == 0.20);
}

TEST_CASE("aggregate is bounded and monotone in every sub-score") {
  Rng rng(8);
  auto raw = [&] { return 1.0 + 9.0 * rng.uniform01(); };
  for (int trial = 0; trial < 1000; ++trial) {
    SubScores s;
    s.topic_flow_raw = raw();
    s.key_events_raw = raw();
    s.summary_intent_avg_raw = raw();
    s.speech_char_avg_raw = raw();
    s.qa_score = rng.uniform01();
    const double base = aggregate(s).overall;
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);
    auto up = s;
    switch (rng.below(5)) {
      case 0: up.topic_flow_raw = std::min(10.0, up.topic_flow_raw + 0.5); break;
      case 1: up.key_events_raw = std::min(10.0, up.key_events_raw + 0.5); break;
      case 2: up.summary_intent_avg_raw = std::min(10.0, up.summary_intent_avg_raw + 0.5); break;
      case 3: up.speech_char_avg_raw = std::min(10.0, up.speech_char_avg_raw + 0.5); break;
      default: up.qa_score = std::min(1.0, up.qa_score + 0.1); break;
    }
    CHECK(aggregate(up).overall >= base);
  }
}

TEST_CASE("empty intent summaries are scored zero and left out of the average") {
  std::map<std::string, std::string> summaries{{"key_events", "Order late"},
                                               {"reason_for_call", "late order"},
                                               {"resolution", "ships Friday"},
                                               {"customer_complaints", "  "}};
  auto client = scripted({reply("judge_intent", "Score: 8", {"<intent>reason_for_call</intent>"}),
                          reply("judge_intent", "6")});
  SubScores sub;
  const GenContext ctx{client};
  const auto [ke, avg] = score_intent_fulfillment(small_transcript(), summaries, ctx, &sub);
  CHECK(ke == 6.0);
  CHECK(avg == doctest::Approx(7.0));
  CHECK_FALSE(sub.key_events_empty);
  CHECK(sub.intent_scores.size() == 7);
  for (const auto& [k, v] : sub.intent_scores)
    if (k == "customer_complaints" || k == "next_steps") CHECK(v == 0.0);
}

TEST_CASE("judge replies are rounded to half points and clamped") {
  auto client = scripted({reply("judge_topic_flow", "I'd say 7.3"), reply("judge_realism", "15")});
  std::vector<std::string> warnings;
  const GenContext ctx{client, default_prompts(), nullptr, &warnings};
  CHECK(score_topic_flow(small_transcript(), {{"a", "", 0, 2}}, ctx) == 7.5);
  std::array<double, 3> parts{};
  CHECK(score_realism(small_transcript(), ctx, &parts) == 10.0);
  CHECK(warnings.size() == 3);
}

TEST_CASE("QA accuracy compares normalized answers") {
  std::vector<QAPair> qa;
  for (int i = 0; i < 5; ++i) qa.push_back({"Q" + std::to_string(i) + "?", {"yes", "no"}, i == 4 ? "no" : "yes"});
  auto client = scripted({reply("judge_qa", "The final answer is: Yes.")});
  std::vector<int> matches;
  const GenContext ctx{client};
  CHECK(score_qa(small_transcript(), qa, ctx, &matches) == doctest::Approx(0.8));
  CHECK(matches == std::vector<int>{1, 1, 1, 1, 0});
  CHECK(kind_thrown([&] { score_qa(small_transcript(), {}, ctx); }) == ErrorKind::PreconditionFailed);
}

TEST_CASE("full reconstruction with scripted judges") {
  const auto attrs = fixture_attrs("call_a");
  auto client = scripted({reply("judge_topic_flow", "9"), reply("judge_intent", "8"), reply("judge_qa", "yes"),
                          reply("judge_realism", "7")});
  const GenContext ctx{client};
  const auto r = reconstruct(small_transcript(), attrs, ctx);
  CHECK(r.normalized[0] == doctest::Approx(8.0 / 9.0));
  CHECK(r.normalized[1] == doctest::Approx(2.0 / 3.0));
  CHECK(r.normalized[2] == doctest::Approx(7.0 / 9.0));
  CHECK(r.normalized[3] == doctest::Approx(7.0 / 9.0));
  CHECK(r.normalized[4] == doctest::Approx(6.0 / 9.0));
  const double expect = 0.25 * 8 / 9 + 0.15 * 2.0 / 3 + 0.25 * 7 / 9 + 0.15 * 7 / 9 + 0.20 * 6 / 9;
  CHECK(r.overall == doctest::Approx(expect));
}

TEST_CASE("tuning ranks candidates and disqualifies mostly failing ones") {
  std::vector<TuningItem> data{{"a", fixture_attrs("call_a")}, {"b", fixture_attrs("call_b")}};
  PromptSet good = default_prompts();
  good.name = "good";
  PromptSet broken = default_prompts();
  broken.name = "broken";
  broken.templates["generate_base"].user = "BROKEN {language}";
  PromptSet also = default_prompts();
  also.name = "also_good";
  auto client = scripted({reply("generate_base", "nothing useful", {"BROKEN"}), reply("judge_topic_flow", "9"),
                          reply("judge_intent", "8"), reply("judge_qa", "yes"), reply("judge_realism", "7")});
  GenerationOptions opt;
  const auto ranking = tune_prompts({broken, good, also}, data, GenerationMethod::single_stage, client, opt);
  REQUIRE(ranking.size() == 3);
  CHECK(ranking[0].name == "also_good");  // equal means break by name
  CHECK(ranking[1].name == "good");
  CHECK(ranking[2].name == "broken");
  CHECK(ranking[2].disqualified);
  CHECK(ranking[2].failures.size() == 2);
  const auto j = to_json(ranking);
  CHECK(j[0]["rank"] == 1);
  CHECK(j[2]["rank"].is_null());
  CHECK(kind_thrown([&] { tune_prompts({good}, data, GenerationMethod::single_stage, client, opt); }) ==
        ErrorKind::PreconditionFailed);
  CHECK(kind_thrown([&] { tune_prompts({good, good}, data, GenerationMethod::single_stage, client, opt); }) ==
        ErrorKind::InvalidConfig);
}
