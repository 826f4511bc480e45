#include <doctest.h>

#include <set>

#include "callsynth/evaluation.hpp"

using namespace callsynth;
using namespace callsynth::llm;

namespace {

Transcript make_transcript(long n, const std::string& prefix = "line") {
  Transcript t;
  for (long i = 0; i < n; ++i)
    t.turns.push_back({static_cast<std::size_t>(i), i % 2 ? Speaker::customer : Speaker::agent,
                       prefix + " " + std::to_string(i)});
  return t;
}

BackendConfig quiet_config() {
  BackendConfig c;
  c.backoff_base_seconds = 0.0;
  return c;
}

LlmClient scripted(std::vector<MockRule> rules, bool strict = false) {
  MockScript s;
  s.rules = std::move(rules);
  s.strict = strict;
  return LlmClient(std::make_shared<MockBackend>(s, 0), quiet_config());
}

MockRule reply(std::string task, std::string response, std::vector<std::string> contains = {}) {
  return {std::move(task), std::move(contains), std::move(response), std::nullopt, -1};
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

TEST_CASE("context windows clip at the transcript edges") {
  const auto t = make_transcript(10);
  CHECK(context_window(t, 0).size() == 3);
  CHECK(context_window(t, 5).size() == 5);
  CHECK(context_window(t, 5).front().index == 3);
  CHECK(context_window(t, 9).size() == 3);
  CHECK(context_window(t, 4, 0).size() == 1);
  CHECK(kind_thrown([&] { context_window(t, 10); }) == ErrorKind::IndexOutOfRange);
}

TEST_CASE("sample size is min(|real|, |synth|, k_max) on both sides") {
  Rng rng(1);
  auto p = sample_turns(make_transcript(30), make_transcript(12), rng, 100);
  CHECK(p.real.size() == 12);
  CHECK(p.synth.size() == 12);
  p = sample_turns(make_transcript(300), make_transcript(400), rng, 100);
  CHECK(p.real.size() == 100);
  std::set<std::size_t> distinct;
  for (const auto& s : p.real) distinct.insert(s.turn.index);
  CHECK(distinct.size() == 100);
  CHECK(kind_thrown([&] { sample_turns(Transcript{}, make_transcript(3), rng); }) == ErrorKind::EmptyTranscript);
}

TEST_CASE("identical transcripts give identical samples") {
  Rng rng(77);
  const auto t = make_transcript(50);
  const auto p = sample_turns(t, t, rng, 20);
  for (std::size_t i = 0; i < p.real.size(); ++i) {
    CHECK(p.real[i].turn == p.synth[i].turn);
    CHECK(p.real[i].context == p.synth[i].context);
    CHECK(p.synth[i].source == Source::synthetic);
  }
}

TEST_CASE("turn classification honours cardinality") {
  Rng rng(2);
  const auto t = make_transcript(6);
  const auto s = sample_turns(t, t, rng, 1).real[0];
  auto client = scripted({reply("classify_turn", "Label: Neutral", {"Choose exactly one label."}),
                          reply("classify_turn", "fillers, hesitations, fillers")});
  CHECK(classify_turn(s, Dimension::turn_sentiment, client) == std::vector<std::string>{"neutral"});
  CHECK(classify_turn(s, Dimension::disfluency, client) == std::vector<std::string>{"fillers", "hesitations"});
  CHECK(kind_thrown([&] { classify_turn(s, Dimension::discourse_flow, client); }) == ErrorKind::PreconditionFailed);

  auto bad = scripted({reply("classify_turn", "ecstatic")});
  Trace trace;
  CHECK(kind_thrown([&] { classify_turn(s, Dimension::turn_sentiment, bad, &trace); }) == ErrorKind::UnknownLabel);
  CHECK(trace.size() == 2);
}

TEST_CASE("transcript classification returns arcs and scores") {
  const auto t = make_transcript(4);
  auto client = scripted({reply("classify_transcript", "frustration → gratitude", {"customer_emotion_arc"}),
                          reply("classify_transcript", "Score: 7", {"discourse_flow"}),
                          reply("classify_transcript", "12", {"overall_readability"})});
  CHECK(classify_transcript(t, Dimension::customer_emotion_arc, client) == "frustration_to_gratitude");
  CHECK(classify_transcript(t, Dimension::discourse_flow, client) == "7");
  CHECK(kind_thrown([&] { classify_transcript(t, Dimension::overall_readability, client); }) ==
        ErrorKind::ScoreOutOfRange);
  CHECK(kind_thrown([&] { classify_transcript(Transcript{}, Dimension::discourse_flow, client); }) ==
        ErrorKind::EmptyTranscript);
}

TEST_CASE("distributions count label occurrences and classified items") {
  const auto d = build_distribution({{"fillers"}, {"fillers", "hesitations"}, {"stuttering"}}, Dimension::disfluency);
  CHECK(d.total == 3);
  CHECK(d.occurrences() == 4);
  CHECK(d.count("fillers") == 2);
  CHECK(d.count("prolongations") == 0);
  const auto s = build_distribution({{"neutral"}, {"neutral"}}, Dimension::turn_sentiment);
  CHECK(s.total == 2);
  CHECK(s.count("neutral") == 2);
}

TEST_CASE("evaluating a corpus against itself shows no difference") {
  std::vector<CorpusPair> pairs;
  for (int i = 0; i < 3; ++i) {
    auto t = make_transcript(20 + 5 * i, "pair" + std::to_string(i));
    pairs.push_back({"p" + std::to_string(i), t, t});
  }
  LlmClient client(std::make_shared<MockBackend>(MockScript{}, 4), quiet_config());
  EvalOptions opt;
  opt.seed = 4;
  std::vector<Dimension> dims(all_dimensions().begin(), all_dimensions().end());
  const auto rep = evaluate_corpora(pairs, dims, shipped_references(Language::en), client, opt);
  REQUIRE(rep.dimensions.size() == 18);
  int ok = 0;
  for (const auto& d : rep.dimensions) {
    CHECK(d.n_real == d.n_synth);
    if (!d.ok) continue;
    ++ok;
    CHECK(d.stat.statistic == 0.0);
    CHECK(d.stat.p_value == 1.0);
    CHECK(d.stat.js_divergence == doctest::Approx(0.0));
  }
  CHECK(ok > 0);
  const auto j = to_json(rep);
  CHECK(j["samples"].size() == 3);
  CHECK(j["dimensions"].size() == 18);
  CHECK_FALSE(render_table(rep).empty());
}

TEST_CASE("classification failures skip only the affected dimension") {
  const auto t = make_transcript(8);
  std::vector<CorpusPair> pairs{{"a", t, t}};
  auto client = scripted({reply("classify_turn", "not a label", {"<dimension>emphasis</dimension>"})});
  EvalOptions opt;
  const auto rep = evaluate_corpora(pairs, {Dimension::emphasis, Dimension::turn_sentiment},
                                    shipped_references(Language::en), client, opt);
  REQUIRE(rep.dimensions.size() == 2);
  CHECK_FALSE(rep.dimensions[0].ok);
  CHECK(rep.dimensions[0].skip_reason.rfind("classification failed", 0) == 0);
  CHECK(rep.dimensions[1].n_real == 8);
}

TEST_CASE("a label the synthetic side never produced gives an infinite statistic") {
  const auto real = make_transcript(10, "real");
  const auto synth = make_transcript(10, "synth");
  auto client = scripted({reply("classify_turn", "negative", {": real "}), reply("classify_turn", "neutral")});
  EvalOptions opt;
  const auto rep = evaluate_corpora({{"a", real, synth}}, {Dimension::turn_sentiment},
                                    shipped_references(Language::en), client, opt);
  REQUIRE(rep.dimensions[0].ok);
  CHECK(std::isinf(rep.dimensions[0].stat.statistic));
  const auto j = to_json(rep);
  CHECK(j["dimensions"]["turn_sentiment"]["statistic"] == "inf");
  CHECK(j["dimensions"]["turn_sentiment"]["p_value"] == 0.0);
}
