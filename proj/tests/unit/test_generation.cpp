#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "callsynth/generation.hpp"

using namespace callsynth;
using namespace callsynth::llm;

namespace {

BackendConfig quiet_config(int pool = 1) {
  BackendConfig c;
  c.backoff_base_seconds = 0.0;
  c.pool_width = pool;
  return c;
}

LlmClient scripted(std::vector<MockRule> rules, std::uint64_t seed = 0, int pool = 1) {
  MockScript s;
  s.rules = std::move(rules);
  return LlmClient(std::make_shared<MockBackend>(s, seed), quiet_config(pool));
}

MockRule reply(std::string task, std::string response, std::vector<std::string> contains = {}) {
  return {std::move(task), std::move(contains), std::move(response), std::nullopt, -1};
}

Transcript make_transcript(long n) {
  Transcript t;
  for (long i = 0; i < n; ++i)
    t.turns.push_back({static_cast<std::size_t>(i), i % 2 ? Speaker::customer : Speaker::agent,
                       "line " + std::to_string(i)});
  return t;
}

Chunk make_chunk(long start, long n) {
  Chunk c{start, start + n - 1, {}, "c", ""};
  for (long i = 0; i < n; ++i)
    c.turns.push_back({static_cast<std::size_t>(start + i), i % 2 ? Speaker::customer : Speaker::agent,
                       "line " + std::to_string(start + i)});
  return c;
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

CallAttributes fixture_attrs(const std::string& name) {
  return load_attributes(std::filesystem::path(CALLSYNTH_SOURCE_DIR) / "tests/fixtures/e2e/attrs" / (name + ".json"));
}

}  // namespace

TEST_CASE("turn targets: dispersion 0 is the rounded mean, otherwise the mean is kept") {
  Rng rng(1);
  const auto& table = turn_target_table();
  CHECK(sample_turn_target(Language::en, CallLengthCategory::very_short, table, rng, 0.0) == 65);
  CHECK(sample_turn_target(Language::fr_ca, CallLengthCategory::long_, table, rng, 0.0) == 637);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const long x = sample_turn_target(Language::en, CallLengthCategory::very_short, table, rng);
    REQUIRE(x >= 2);
    sum += static_cast<double>(x);
  }
  CHECK(std::abs(sum / n - 65.07) / 65.07 < 0.02);
  CHECK(kind_thrown([&] { sample_turn_target(Language::en, CallLengthCategory::short_, TurnTargetTable{}, rng); }) ==
        ErrorKind::MissingCell);
}

TEST_CASE("disfluency subsets are uniform without replacement") {
  const auto& dict = disfluency_dictionary();
  Rng rng(7);
  std::map<std::string, int> hits;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto s = sample_disfluency_subset(dict, rng, 4);
    REQUIRE(s.size() == 4);
    for (const auto& d : s) ++hits[d.name];
  }
  CHECK(hits.size() == 26);
  for (const auto& [name, h] : hits) CHECK(std::abs(static_cast<double>(h) / draws - 4.0 / 26.0) < 0.01);
  CHECK(kind_thrown([&] { sample_disfluency_subset(dict, rng, 0); }) == ErrorKind::KOutOfRange);
  CHECK(kind_thrown([&] { sample_disfluency_subset(dict, rng, 27); }) == ErrorKind::KOutOfRange);
}

TEST_CASE("single stage keeps only speaker-tagged lines") {
  auto client = scripted({reply("generate_base", "Here you go:\nagent: Hello\ncustomer: Hi\n\nagent: Bye")});
  const GenContext ctx{client};
  const auto t = generate_single_stage(fixture_attrs("call_a"), ctx);
  REQUIRE(t.size() == 3);
  CHECK(t.turns[2].index == 2);
  CHECK(t.turns[1].speaker == Speaker::customer);

  auto empty = scripted({reply("generate_base", "I cannot do that.")});
  const GenContext ectx{empty};
  CHECK(kind_thrown([&] { generate_single_stage(fixture_attrs("call_a"), ectx); }) == ErrorKind::EmptyGeneration);
}

TEST_CASE("a valid 60-turn segmentation is taken as is") {
  const auto t = make_transcript(60);
  auto client = scripted({reply("segment",
                                R"([{"start_turn":0,"end_turn":19,"name":"open"},{"start_turn":20,"end_turn":39,"name":"work"},{"start_turn":40,"end_turn":59,"name":"close"}])")});
  std::vector<std::string> warnings;
  Trace trace;
  const GenContext ctx{client, default_prompts(), &trace, &warnings};
  const auto chunks = segment_transcript(t, ctx);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[1].start_turn == 20);
  CHECK(chunks[1].size() == 20);
  CHECK(chunks[2].turns.back().text == "line 59");
  CHECK(trace.size() == 1);
  CHECK(warnings.empty());
}

TEST_CASE("boundary repair") {
  SUBCASE("gap goes to the previous chunk") {
    const auto r = repair_boundaries({{0, 10, "a", ""}, {12, 20, "b", ""}}, 21);
    REQUIRE(r.size() == 2);
    CHECK(r[0].end_turn == 11);
    CHECK(r[1].start_turn == 12);
  }
  SUBCASE("oversized chunks split at 25") {
    const auto r = repair_boundaries({{0, 30, "x", ""}}, 31);
    REQUIRE(r.size() == 2);
    CHECK(r[0] == Boundary{0, 24, "x (part 1)", ""});
    CHECK(r[1] == Boundary{25, 30, "x (part 2)", ""});
  }
  SUBCASE("overlap stays with the earlier chunk, swallowed chunks vanish") {
    const auto r = repair_boundaries({{5, 12, "b", ""}, {0, 7, "a", ""}, {3, 6, "s", ""}}, 13);
    REQUIRE(r.size() == 2);
    CHECK(r[0] == Boundary{0, 7, "a", ""});
    CHECK(r[1] == Boundary{8, 12, "b", ""});
  }
  SUBCASE("leading gap and short tail are covered") {
    const auto r = repair_boundaries({{4, 9, "a", ""}}, 15);
    REQUIRE(r.size() == 1);
    CHECK(r[0].start_turn == 0);
    CHECK(r[0].end_turn == 14);
  }
  SUBCASE("nothing usable") {
    CHECK(kind_thrown([] { repair_boundaries({{20, 30, "", ""}}, 10); }) == ErrorKind::SegmentationInvalid);
    CHECK(kind_thrown([] { repair_boundaries({}, 10); }) == ErrorKind::SegmentationInvalid);
  }
}

TEST_CASE("random boundary proposals always repair into a partition") {
  Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const long n = 1 + static_cast<long>(rng.below(120));
    std::vector<Boundary> b;
    const auto m = 1 + rng.below(8);
    for (std::size_t i = 0; i < m; ++i) {
      const long s = static_cast<long>(rng.below(static_cast<std::size_t>(n + 10))) - 5;
      const long e = s + static_cast<long>(rng.below(40)) - 3;
      b.push_back({s, e, "t" + std::to_string(i), ""});
    }
    try {
      const auto r = repair_boundaries(b, n);
      CHECK(is_valid_partition(r, n));
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SegmentationInvalid);
    }
  }
}

TEST_CASE("segmentation re-asks once, then repairs the latest parsable reply") {
  const auto t = make_transcript(21);
  auto client = scripted({reply("segment", R"([{"start_turn":0,"end_turn":10},{"start_turn":12,"end_turn":20}])",
                                {"Return only valid structured output"}),
                          reply("segment", "no idea")});
  std::vector<std::string> warnings;
  Trace trace;
  const GenContext ctx{client, default_prompts(), &trace, &warnings};
  const auto chunks = segment_transcript(t, ctx);
  CHECK(trace.size() == 2);
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].end_turn == 11);
  CHECK_FALSE(warnings.empty());

  auto hopeless = scripted({reply("segment", "still no idea")});
  const GenContext hctx{hopeless};
  CHECK(kind_thrown([&] { segment_transcript(t, hctx); }) == ErrorKind::SegmentationInvalid);
}

TEST_CASE("budgets go to middle chunks by size, with largest remainders") {
  std::vector<Chunk> chunks{make_chunk(0, 5), make_chunk(5, 10), make_chunk(15, 20), make_chunk(35, 5)};
  const auto b = allocate_budgets(chunks, 61);
  CHECK(b == std::vector<long>{0, 20, 41, 0});
  const auto b2 = allocate_budgets(chunks, 1);
  CHECK(b2[0] + b2[1] + b2[2] + b2[3] == 1);
  CHECK(b2[2] == 1);
  // Two chunks: no middle, both eligible.
  const auto b3 = allocate_budgets({make_chunk(0, 3), make_chunk(3, 6)}, 9);
  CHECK(b3 == std::vector<long>{3, 6});
  // Singleton middle chunk gets nothing; fall back when nothing qualifies.
  const auto b4 = allocate_budgets({make_chunk(0, 4), make_chunk(4, 1), make_chunk(5, 4)}, 4);
  CHECK(b4 == std::vector<long>{2, 0, 2});
  CHECK(allocate_budgets(chunks, 0) == std::vector<long>(4, 0));
}

TEST_CASE("enhancement must keep the chunk's first and last turns") {
  const auto chunk = make_chunk(0, 4);
  auto good = scripted({reply("enhance", "agent: line 0\ncustomer: um, line 1\nagent: okay\ncustomer: line 1b\nagent: line 2\ncustomer: line 3")});
  const GenContext gctx{good};
  const auto out = enhance_chunk(chunk, {}, 2, CallLengthCategory::short_, Language::en, gctx);
  CHECK(out.size() == 6);

  auto bad = scripted({reply("enhance", "agent: HELLO\ncustomer: line 3")});
  Trace trace;
  const GenContext bctx{bad, default_prompts(), &trace};
  CHECK(kind_thrown([&] { enhance_chunk(chunk, {}, 2, CallLengthCategory::short_, Language::en, bctx); }) ==
        ErrorKind::EnhancementInvalid);
  CHECK(trace.size() == 2);
}

TEST_CASE("enhancement prompts carry either a turn count or the call-length category") {
  const auto chunk = make_chunk(0, 3);
  auto client = scripted({reply("enhance", "agent: line 0\ncustomer: line 1\nagent: line 2")});
  Trace trace;
  const GenContext ctx{client, default_prompts(), &trace};
  enhance_chunk(chunk, {}, 7, CallLengthCategory::long_, Language::en, ctx);
  enhance_chunk(chunk, {}, std::nullopt, CallLengthCategory::long_, Language::en, ctx);
  REQUIRE(trace.size() == 2);
  CHECK(trace[0].user_prompt.find("<extension_turns>7</extension_turns>") != std::string::npos);
  CHECK(trace[0].user_prompt.find("<call_length>") == std::string::npos);
  CHECK(trace[1].user_prompt.find("<call_length>long</call_length>") != std::string::npos);
  CHECK(trace[1].user_prompt.find("<extension_turns>") == std::string::npos);
}

TEST_CASE("candidates: first listed label wins, out-of-chunk indices are rejected") {
  const auto chunk = make_chunk(10, 4);
  auto client = scripted({reply("candidates", R"({"neutral":[11,12],"positive":[12,13]})")});
  std::vector<std::string> warnings;
  const GenContext ctx{client, default_prompts(), nullptr, &warnings};
  const auto c = identify_candidates(chunk, Dimension::turn_sentiment, ctx);
  REQUIRE(c.size() == 2);
  CHECK(c[0].second == std::vector<long>{11, 12});
  CHECK(c[1].second == std::vector<long>{13});
  CHECK(warnings.size() == 1);

  auto wild = scripted({reply("candidates", R"({"neutral":[2]})")});
  const GenContext wctx{wild};
  CHECK(kind_thrown([&] { identify_candidates(chunk, Dimension::turn_sentiment, wctx); }) ==
        ErrorKind::IndexOutOfChunk);
  CHECK(kind_thrown([&] { identify_candidates(chunk, Dimension::discourse_flow, wctx); }) ==
        ErrorKind::PreconditionFailed);
}

TEST_CASE("target sampling picks min(round(pN), candidates) per label") {
  const CandidateMap cands{{"neutral", {0, 1, 2, 3, 4, 5, 6, 7}}, {"positive", {8, 9}}};
  const std::map<std::string, double> targets{{"negative", 0.1}, {"neutral", 0.5}, {"positive", 0.4}};
  Rng rng(3);
  const auto sel = sample_turns_to_target(cands, targets, 10, rng);
  REQUIRE(sel.size() == 3);
  CHECK(sel[0].label == "negative");
  CHECK(sel[0].requested == 1);
  CHECK(sel[0].chosen.empty());
  CHECK(sel[0].shortfall == 1);
  CHECK(sel[1].requested == 5);
  CHECK(sel[1].chosen.size() == 5);
  CHECK(sel[2].requested == 4);
  CHECK(sel[2].chosen == std::vector<long>{8, 9});
  CHECK(sel[2].shortfall == 2);
}

TEST_CASE("target sampling property over random inputs") {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const long total = static_cast<long>(rng.below(200));
    CandidateMap cands;
    std::map<std::string, double> targets;
    long next = 0;
    for (const char* l : {"a", "b", "c"}) {
      std::vector<long> idx;
      const auto k = rng.below(30);
      for (std::size_t i = 0; i < k; ++i) idx.push_back(next++);
      cands.emplace_back(l, idx);
      targets[l] = rng.uniform01() / 3.0;
    }
    for (const auto& s : sample_turns_to_target(cands, targets, total, rng)) {
      CHECK(s.requested == std::lround(s.fraction * total));
      CHECK(static_cast<long>(s.chosen.size()) == std::min(s.requested, s.candidates));
      CHECK(s.shortfall == s.requested - static_cast<long>(s.chosen.size()));
    }
  }
}

TEST_CASE("applying characteristics may only touch target turns") {
  const auto chunk = make_chunk(4, 3);
  TurnAssignment assign{{5, {{Dimension::turn_sentiment, "positive"}}}};
  auto ok = scripted({reply("apply", "(4) agent: line 4\n(5) customer: great, line 5\n(6) agent: line 6")});
  const GenContext octx{ok};
  const auto out = apply_characteristics(chunk, assign, Language::en, octx);
  CHECK(out.turns[1].text == "great, line 5");
  CHECK(out.turns[1].index == 5);

  auto leak = scripted({reply("apply", "(4) agent: changed\n(5) customer: great\n(6) agent: line 6")});
  Trace trace;
  const GenContext lctx{leak, default_prompts(), &trace};
  CHECK(kind_thrown([&] { apply_characteristics(chunk, assign, Language::en, lctx); }) == ErrorKind::ModificationLeak);
  CHECK(trace.size() == 2);

  auto short_reply = scripted({reply("apply", "(4) agent: line 4\n(5) customer: great")});
  const GenContext sctx{short_reply};
  CHECK(kind_thrown([&] { apply_characteristics(chunk, assign, Language::en, sctx); }) == ErrorKind::ModificationLeak);

  TurnAssignment outside{{9, {{Dimension::turn_sentiment, "positive"}}}};
  CHECK(kind_thrown([&] { apply_characteristics(chunk, outside, Language::en, octx); }) == ErrorKind::IndexOutOfChunk);
}

TEST_CASE("recombination renumbers turns") {
  const auto t = recombine({make_chunk(0, 2), make_chunk(7, 3)});
  REQUIRE(t.size() == 5);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.turns[i].index == i);
  CHECK(kind_thrown([] { recombine({}); }) == ErrorKind::EmptyInput);
}

TEST_CASE("dual stage with a turn target reaches the sampled length") {
  LlmClient client(std::make_shared<MockBackend>(MockScript{}, 5), quiet_config(4));
  GenerationOptions opt;
  opt.seed = 5;
  opt.turn_dispersion = 0.0;
  const auto run = generate_dual_stage(fixture_attrs("call_a"), DualMode::turn_count, turn_target_table(), client, opt);
  CHECK(run.details["target_turns"] == 65);
  CHECK(run.output.size() == 65);
  long sum = 0;
  for (const auto& b : run.details["budgets"]) sum += b.get<long>();
  CHECK(sum == run.details["deficit"].get<long>());
}

TEST_CASE("pipelines are reproducible and independent of pool width") {
  const auto attrs = fixture_attrs("call_b");
  const auto targets = default_targets(Language::en);
  for (auto m : {GenerationMethod::single_stage, GenerationMethod::dual_turn_count, GenerationMethod::dual_call_length,
                 GenerationMethod::characteristic_aware}) {
    GenerationOptions opt;
    opt.seed = 11;
    LlmClient narrow(std::make_shared<MockBackend>(MockScript{}, 11), quiet_config(1));
    LlmClient wide(std::make_shared<MockBackend>(MockScript{}, 11), quiet_config(8));
    const auto a = run_generation(m, attrs, narrow, opt, &targets);
    const auto b = run_generation(m, attrs, wide, opt, &targets);
    CHECK(serialize_transcript(a.output) == serialize_transcript(b.output));
    CHECK(trace_to_jsonl(a.trace) == trace_to_jsonl(b.trace));
    CHECK(a.details.dump() == b.details.dump());
  }
}

TEST_CASE("characteristic-aware selections respect the sampling rule") {
  LlmClient client(std::make_shared<MockBackend>(MockScript{}, 3), quiet_config(4));
  GenerationOptions opt;
  opt.seed = 3;
  const auto targets = default_targets(Language::en);
  const auto run = generate_characteristic_aware(fixture_attrs("call_a"), targets, client, opt);
  const long total = run.details["extended_turns"].get<long>();
  CHECK(static_cast<long>(run.output.size()) == total);
  int checked = 0;
  for (const auto& [dim, sels] : run.details["selections"].items())
    for (const auto& s : sels) {
      const long req = s["requested"].get<long>();
      CHECK(req == std::lround(s["fraction"].get<double>() * total));
      CHECK(static_cast<long>(s["chosen"].size()) == std::min(req, s["candidates"].get<long>()));
      ++checked;
    }
  CHECK(checked > 0);
  CHECK(kind_thrown([&] { run_generation(GenerationMethod::characteristic_aware, fixture_attrs("call_a"), client, opt); }) ==
        ErrorKind::PreconditionFailed);
}

TEST_CASE("targets parse and validate") {
  const auto t = targets_from_json(json::parse(R"({"turn_sentiment":{"Neutral":0.7,"positive":0.3}})"));
  CHECK(t.at(Dimension::turn_sentiment).at("neutral") == doctest::Approx(0.7));
  CHECK(kind_thrown([] { targets_from_json(json::parse(R"({"turn_sentiment":{"neutral":0.7}})")); }) ==
        ErrorKind::InvalidConfig);
  CHECK(kind_thrown([] { targets_from_json(json::parse(R"({"turn_sentiment":{"joy":1.0}})")); }) ==
        ErrorKind::LabelOutOfSet);
  CHECK(kind_thrown([] { targets_from_json(json::parse(R"({"loudness":{}})")); }) == ErrorKind::UnknownDimension);
  CHECK(parse_method("char_aware") == GenerationMethod::characteristic_aware);
}
