#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "callsynth/core.hpp"
#include "callsynth/generation.hpp"
#include "callsynth/json_io.hpp"
#include "callsynth/llm.hpp"
#include "callsynth/prompts.hpp"

namespace callsynth {

struct SubScores {
  double topic_flow_raw = 1.0;          // 1..10
  double key_events_raw = 1.0;          // 1..10, or 0 when the key-events summary is empty
  double summary_intent_avg_raw = 1.0;  // 1..10, or 0 when every other summary is empty
  double qa_score = 0.0;                // 0..1
  double speech_char_avg_raw = 1.0;     // 1..10
  bool key_events_empty = false;
  bool summaries_all_empty = false;
  std::vector<std::pair<std::string, double>> intent_scores;  // per judged intent, 0 for empties
  std::array<double, 3> speech_scores{1.0, 1.0, 1.0};          // interruptions, disfluencies, asr_noise
  std::vector<int> qa_matches;
  std::vector<std::string> warnings;
};

struct Weights {
  double w_ts = 0.25;
  double w_qa = 0.15;
  double w_ke = 0.25;
  double w_summ = 0.15;
  double w_speech = 0.20;

  void validate() const;  // InvalidConfig
};

json to_json(const Weights& w);
Weights weights_from_json(const json& j, Weights base = {});

struct ReconstructionResult {
  SubScores sub;
  std::array<double, 5> normalized{};  // ts, qa, ke, summ, speech
  double overall = 0.0;
  Weights weights;
};

// (raw - 1) / 9 for raw in [1, 10]; OutOfRange otherwise.
double normalize(double raw);
// Empty-summary sentinels (raw 0) contribute 0.
ReconstructionResult aggregate(const SubScores& sub, const Weights& w = {});

double score_topic_flow(const Transcript& synth, const std::vector<TopicSegment>& flow, const GenContext& ctx);
// Returns {key_events_raw, summary_intent_avg_raw}; fills the bookkeeping fields of `sub`.
std::pair<double, double> score_intent_fulfillment(const Transcript& synth,
                                                   const std::map<std::string, std::string>& summaries,
                                                   const GenContext& ctx, SubScores* sub = nullptr);
double score_qa(const Transcript& synth, const std::vector<QAPair>& qa, const GenContext& ctx,
                std::vector<int>* matches = nullptr);
double score_realism(const Transcript& synth, const GenContext& ctx, std::array<double, 3>* parts = nullptr);

ReconstructionResult reconstruct(const Transcript& synth, const CallAttributes& attrs, const GenContext& ctx,
                                 const Weights& w = {});

json to_json(const ReconstructionResult& r);

// ---- prompt tuning ----

struct TuningItem {
  std::string id;
  CallAttributes attrs;
};

struct CandidateScore {
  std::string name;
  double mean_overall = 0.0;
  std::vector<std::optional<double>> per_item;  // empty optional marks a failed run
  std::vector<std::string> failures;
  bool disqualified = false;
};

// Generates with every candidate prompt set over the dataset and ranks by mean
// overall score; ties break by name. A candidate with more than half of its
// runs failing is disqualified and listed after the ranked ones.
std::vector<CandidateScore> tune_prompts(const std::vector<PromptSet>& candidates,
                                         const std::vector<TuningItem>& dataset, GenerationMethod method,
                                         const llm::LlmClient& client, const GenerationOptions& opt,
                                         const CharacteristicTargets* targets = nullptr, const Weights& w = {});

json to_json(const std::vector<CandidateScore>& ranking);

}  // namespace callsynth
