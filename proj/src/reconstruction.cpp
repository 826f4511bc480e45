#include "callsynth/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gen_internal.hpp"

namespace callsynth {

void Weights::validate() const {
  const double ws[] = {w_ts, w_qa, w_ke, w_summ, w_speech};
  double sum = 0.0;
  for (double w : ws) {
    require(w >= 0.0, ErrorKind::InvalidConfig, "weights must be non-negative");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::InvalidConfig,
          "weights sum to " + std::to_string(sum) + ", not 1");
}

json to_json(const Weights& w) {
  return {{"topic_sequence", w.w_ts}, {"qa", w.w_qa}, {"key_events", w.w_ke},
          {"summary_intent", w.w_summ}, {"speech_characteristics", w.w_speech}};
}

Weights weights_from_json(const json& j, Weights base) {
  if (!j.is_object()) fail(ErrorKind::InvalidConfig, "weights must be an object");
  try {
    base.w_ts = j.value("topic_sequence", base.w_ts);
    base.w_qa = j.value("qa", base.w_qa);
    base.w_ke = j.value("key_events", base.w_ke);
    base.w_summ = j.value("summary_intent", base.w_summ);
    base.w_speech = j.value("speech_characteristics", base.w_speech);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidConfig, std::string("weights: ") + e.what());
  }
  base.validate();
  return base;
}

double normalize(double raw) {
  if (!(raw >= 1.0 && raw <= 10.0)) fail(ErrorKind::OutOfRange, "raw score " + std::to_string(raw) + " outside [1,10]");
  return (raw - 1.0) / 9.0;
}

ReconstructionResult aggregate(const SubScores& sub, const Weights& w) {
  w.validate();
  require(sub.qa_score >= 0.0 && sub.qa_score <= 1.0, ErrorKind::OutOfRange, "QA score outside [0,1]");
  auto n = [](double raw) { return raw == 0.0 ? 0.0 : normalize(raw); };  // 0 marks an empty summary
  ReconstructionResult r;
  r.sub = sub;
  r.weights = w;
  r.normalized = {normalize(sub.topic_flow_raw), sub.qa_score, n(sub.key_events_raw), n(sub.summary_intent_avg_raw),
                  normalize(sub.speech_char_avg_raw)};
  r.overall = w.w_ts * r.normalized[0] + w.w_qa * r.normalized[1] + w.w_ke * r.normalized[2] +
              w.w_summ * r.normalized[3] + w.w_speech * r.normalized[4];
  r.overall = std::clamp(r.overall, 0.0, 1.0);
  return r;
}

namespace {

// Final number in the reply, snapped to half points and clamped to [1,10].
double judge(const GenContext& ctx, const std::string& task, const std::map<std::string, std::string>& vars) {
  auto req = detail::build_request(ctx, llm::Role::evaluation, task, vars);
  const double v = ctx.client.complete_structured(
      req, [](const std::string& text) { return parse_last_number(text); }, ctx.trace);
  double s = std::round(v * 2.0) / 2.0;
  if (s < 1.0 || s > 10.0) {
    ctx.warn(task + ": judge score " + std::to_string(v) + " clamped to [1,10]");
    s = std::clamp(s, 1.0, 10.0);
  }
  return s;
}

std::string transcript_text(const Transcript& t) { return render_turns(t.turns, false); }

}  // namespace

double score_topic_flow(const Transcript& synth, const std::vector<TopicSegment>& flow, const GenContext& ctx) {
  require(!flow.empty(), ErrorKind::PreconditionFailed, "topic flow is empty");
  json fj = json::array();
  for (const auto& s : flow) fj.push_back(to_json(s));
  return judge(ctx, "judge_topic_flow", {{"topic_flow_json", fj.dump()}, {"transcript", transcript_text(synth)}});
}

std::pair<double, double> score_intent_fulfillment(const Transcript& synth,
                                                   const std::map<std::string, std::string>& summaries,
                                                   const GenContext& ctx, SubScores* sub) {
  const std::string text = transcript_text(synth);
  auto summary_of = [&](std::string_view key) {
    auto it = summaries.find(std::string(key));
    return it == summaries.end() ? std::string() : it->second;
  };
  std::vector<std::pair<std::string, double>> scores;
  double ke = 0.0;
  double sum = 0.0;
  int judged = 0;
  for (auto key : kIntentKeys) {
    const std::string summary = summary_of(key);
    double s = 0.0;
    if (!is_blank(summary))
      s = judge(ctx, "judge_intent", {{"intent", std::string(key)}, {"summary", summary}, {"transcript", text}});
    scores.emplace_back(std::string(key), s);
    if (key == kIntentKeys[0]) {
      ke = s;
    } else if (!is_blank(summary)) {
      sum += s;
      ++judged;
    }
  }
  const double avg = judged ? sum / judged : 0.0;
  if (sub) {
    sub->intent_scores = scores;
    sub->key_events_empty = is_blank(summary_of(kIntentKeys[0]));
    sub->summaries_all_empty = judged == 0;
  }
  return {ke, avg};
}

double score_qa(const Transcript& synth, const std::vector<QAPair>& qa, const GenContext& ctx,
                std::vector<int>* matches) {
  require(!qa.empty(), ErrorKind::PreconditionFailed, "QA evaluation list is empty");
  const std::string text = transcript_text(synth);
  int hits = 0;
  for (const auto& q : qa) {
    json opts = q.options;
    auto req = detail::build_request(ctx, llm::Role::evaluation, "judge_qa",
                                     {{"question", q.question}, {"options", opts.dump()}, {"transcript", text}});
    const auto answer = ctx.client.complete_structured(
        req,
        [](const std::string& t) {
          auto a = parse_final_answer(t);
          if (is_blank(a)) fail(ErrorKind::UnparsableOutput, "no final answer");
          return a;
        },
        ctx.trace);
    const int m = normalize_label(answer) == normalize_label(q.answer) ? 1 : 0;
    hits += m;
    if (matches) matches->push_back(m);
  }
  return static_cast<double>(hits) / static_cast<double>(qa.size());
}

double score_realism(const Transcript& synth, const GenContext& ctx, std::array<double, 3>* parts) {
  require(!synth.empty(), ErrorKind::EmptyTranscript, "cannot judge an empty transcript");
  const std::string text = transcript_text(synth);
  static const std::array<const char*, 3> aspects{"interruptions", "disfluencies", "asr_noise"};
  std::array<double, 3> s{};
  for (std::size_t i = 0; i < 3; ++i) s[i] = judge(ctx, "judge_realism", {{"aspect", aspects[i]}, {"transcript", text}});
  if (parts) *parts = s;
  return (s[0] + s[1] + s[2]) / 3.0;
}

ReconstructionResult reconstruct(const Transcript& synth, const CallAttributes& attrs, const GenContext& ctx,
                                 const Weights& w) {
  w.validate();
  require(!attrs.topic_flow.empty(), ErrorKind::PreconditionFailed, "attributes carry no topic flow");
  require(!attrs.qa_evaluation.empty(), ErrorKind::PreconditionFailed, "attributes carry no QA evaluation");
  SubScores sub;
  std::vector<std::string> warnings;
  const GenContext local{ctx.client, ctx.prompts, ctx.trace, &warnings, ctx.pool_width};
  sub.topic_flow_raw = score_topic_flow(synth, attrs.topic_flow, local);
  std::tie(sub.key_events_raw, sub.summary_intent_avg_raw) =
      score_intent_fulfillment(synth, attrs.intent_summaries, local, &sub);
  sub.qa_score = score_qa(synth, attrs.qa_evaluation, local, &sub.qa_matches);
  sub.speech_char_avg_raw = score_realism(synth, local, &sub.speech_scores);
  if (sub.key_events_empty) warnings.push_back("key_events summary is empty; scored 0");
  if (sub.summaries_all_empty) warnings.push_back("every non-key-events summary is empty; average reported as 0");
  sub.warnings = warnings;
  if (ctx.warnings) ctx.warnings->insert(ctx.warnings->end(), warnings.begin(), warnings.end());
  return aggregate(sub, w);
}

json to_json(const ReconstructionResult& r) {
  json intents = json::object();
  for (const auto& [k, v] : r.sub.intent_scores) intents[k] = v;
  json sub{{"topic_flow_raw", r.sub.topic_flow_raw},
           {"key_events_raw", r.sub.key_events_raw},
           {"summary_intent_avg_raw", r.sub.summary_intent_avg_raw},
           {"qa_score", r.sub.qa_score},
           {"speech_char_avg_raw", r.sub.speech_char_avg_raw},
           {"intent_scores", intents},
           {"speech_scores",
            {{"interruptions", r.sub.speech_scores[0]},
             {"disfluencies", r.sub.speech_scores[1]},
             {"asr_noise", r.sub.speech_scores[2]}}},
           {"qa_matches", r.sub.qa_matches},
           {"key_events_empty", r.sub.key_events_empty},
           {"summaries_all_empty", r.sub.summaries_all_empty}};
  json norm{{"topic_sequence", r.normalized[0]},
            {"qa", r.normalized[1]},
            {"key_events", r.normalized[2]},
            {"summary_intent", r.normalized[3]},
            {"speech_characteristics", r.normalized[4]}};
  return {{"sub_scores", sub}, {"normalized", norm}, {"weights", to_json(r.weights)}, {"overall", r.overall},
          {"warnings", r.sub.warnings}};
}

std::vector<CandidateScore> tune_prompts(const std::vector<PromptSet>& candidates,
                                         const std::vector<TuningItem>& dataset, GenerationMethod method,
                                         const llm::LlmClient& client, const GenerationOptions& opt,
                                         const CharacteristicTargets* targets, const Weights& w) {
  require(candidates.size() >= 2, ErrorKind::PreconditionFailed, "tuning needs at least two candidates");
  require(!dataset.empty(), ErrorKind::PreconditionFailed, "tuning dataset is empty");
  std::set<std::string> names;
  for (const auto& c : candidates)
    require(names.insert(c.name).second, ErrorKind::InvalidConfig, "duplicate candidate name '" + c.name + "'");

  std::vector<CandidateScore> scored;
  for (const auto& cand : candidates) {
    CandidateScore cs;
    cs.name = cand.name;
    double sum = 0.0;
    int ok = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      GenerationOptions o = opt;
      o.seed = derive_seed(opt.seed, "tune", i);  // same draws for every candidate
      try {
        const auto run = run_generation(method, dataset[i].attrs, client, o, targets, cand);
        // The objective is judged with the shipped prompts so candidates cannot grade themselves.
        const GenContext judge_ctx{client, default_prompts(), nullptr, nullptr, 1};
        const double v = reconstruct(run.output, dataset[i].attrs, judge_ctx, w).overall;
        cs.per_item.emplace_back(v);
        sum += v;
        ++ok;
      } catch (const Error& e) {
        cs.per_item.emplace_back(std::nullopt);
        cs.failures.push_back(dataset[i].id + ": " + e.what());
      }
    }
    cs.disqualified = 2 * cs.failures.size() > dataset.size();
    cs.mean_overall = ok ? sum / ok : 0.0;
    scored.push_back(std::move(cs));
  }
  std::stable_sort(scored.begin(), scored.end(), [](const CandidateScore& a, const CandidateScore& b) {
    if (a.disqualified != b.disqualified) return !a.disqualified;
    if (!a.disqualified && a.mean_overall != b.mean_overall) return a.mean_overall > b.mean_overall;
    return a.name < b.name;
  });
  return scored;
}

json to_json(const std::vector<CandidateScore>& ranking) {
  json a = json::array();
  int rank = 0;
  for (const auto& c : ranking) {
    json items = json::array();
    for (const auto& v : c.per_item) items.push_back(v ? json(*v) : json(nullptr));
    a.push_back({{"rank", c.disqualified ? json(nullptr) : json(++rank)},
                 {"name", c.name},
                 {"mean_overall", c.mean_overall},
                 {"disqualified", c.disqualified},
                 {"per_item", items},
                 {"failures", c.failures}});
  }
  return a;
}

}  // namespace callsynth
