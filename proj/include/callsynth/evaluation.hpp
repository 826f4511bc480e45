#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "callsynth/core.hpp"
#include "callsynth/fixtures.hpp"
#include "callsynth/json_io.hpp"
#include "callsynth/llm.hpp"
#include "callsynth/prompts.hpp"
#include "callsynth/random.hpp"
#include "callsynth/stats.hpp"
#include "callsynth/structured.hpp"
#include "callsynth/taxonomy.hpp"

namespace callsynth {

enum class Source { real, synthetic };

struct SampledTurn {
  Source source = Source::real;
  std::string transcript_id;
  Turn turn;
  std::vector<Turn> context;  // up to w turns either side, in order, target included
};

std::vector<Turn> context_window(const Transcript& t, std::size_t idx, std::size_t w = 2);

struct SampledPair {
  std::vector<SampledTurn> real;
  std::vector<SampledTurn> synth;
};

// k = min(|real|, |synth|, k_max) per side. Both sides draw from the same
// generator state, so identical transcripts give identical samples.
SampledPair sample_turns(const Transcript& real, const Transcript& synth, Rng& rng, std::size_t k_max = 100,
                         std::size_t w = 2);

std::string_view dimension_description(Dimension d) noexcept;

// One label for single-label dimensions, a non-empty set for multi-label ones.
std::vector<std::string> classify_turn(const SampledTurn& s, Dimension dim, const llm::LlmClient& client,
                                       llm::Trace* trace = nullptr, const PromptSet& prompts = default_prompts());
// Rendered arc label ("factual_to_gratitude") or a score "1".."10".
std::string classify_transcript(const Transcript& t, Dimension dim, const llm::LlmClient& client,
                                llm::Trace* trace = nullptr, const PromptSet& prompts = default_prompts());

FrequencyDistribution build_distribution(const std::vector<std::vector<std::string>>& labels, Dimension dim);

struct CorpusPair {
  std::string id;
  Transcript real;
  Transcript synth;
};

struct EvalOptions {
  std::uint64_t seed = 0;
  std::size_t k_max = 100;
  std::size_t context_w = 2;
  double merge_threshold = 0.10;
  double min_expected = stats::kMinExpectedForChiSquare;
  MergeBasis merge_basis = MergeBasis::reference;
  int pool_width = 4;
};

struct PairSample {
  std::string id;
  std::size_t k = 0;
  std::vector<std::size_t> real_indices;
  std::vector<std::size_t> synth_indices;
};

struct DimensionReport {
  Dimension dimension = Dimension::turn_sentiment;
  bool ok = false;
  std::string skip_reason;
  long n_real = 0;  // classified items per side
  long n_synth = 0;
  FrequencyDistribution real_raw;
  FrequencyDistribution synth_raw;
  FrequencyDistribution real_merged;
  FrequencyDistribution synth_merged;
  stats::StatResult stat;
};

struct EvalReport {
  EvalOptions options;
  Language language = Language::en;
  std::vector<PairSample> samples;
  std::vector<DimensionReport> dimensions;
  llm::Trace trace;
};

EvalReport evaluate_corpora(const std::vector<CorpusPair>& pairs, const std::vector<Dimension>& dims,
                            const ReferenceSet& refs, const llm::LlmClient& client, const EvalOptions& opt,
                            const PromptSet& prompts = default_prompts());

// Infinite statistics are written as the string "inf".
json to_json(const EvalReport& r);
std::string render_table(const EvalReport& r);

}  // namespace callsynth
