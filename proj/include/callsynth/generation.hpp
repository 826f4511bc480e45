#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "callsynth/core.hpp"
#include "callsynth/fixtures.hpp"
#include "callsynth/json_io.hpp"
#include "callsynth/llm.hpp"
#include "callsynth/prompts.hpp"
#include "callsynth/random.hpp"
#include "callsynth/structured.hpp"
#include "callsynth/taxonomy.hpp"

namespace callsynth {

inline constexpr long kMaxChunkTurns = 25;

struct Chunk {
  long start_turn = 0;
  long end_turn = 0;  // inclusive
  std::vector<Turn> turns;
  std::string name;
  std::string description;

  std::size_t size() const noexcept { return turns.size(); }
};

// Per-dimension target proportions, e.g. {turn_sentiment: {neutral: 0.6, ...}}.
using CharacteristicTargets = std::map<Dimension, std::map<std::string, double>>;

CharacteristicTargets targets_from_json(const json& j);
json to_json(const CharacteristicTargets& t);
// Tuning-set proportions for every dimension of a language.
CharacteristicTargets default_targets(Language l);

enum class GenerationMethod { single_stage, dual_turn_count, dual_call_length, characteristic_aware };
enum class DualMode { turn_count, call_length };

std::string_view to_string(GenerationMethod m) noexcept;
GenerationMethod parse_method(std::string_view s);

// Everything a pipeline needs to talk to the backend. Traces are appended in
// a deterministic order regardless of pool scheduling.
struct GenContext {
  const llm::LlmClient& client;
  const PromptSet& prompts = default_prompts();
  llm::Trace* trace = nullptr;
  std::vector<std::string>* warnings = nullptr;
  int pool_width = 1;

  void warn(std::string msg) const;
};

struct GenerationOptions {
  std::uint64_t seed = 0;
  double turn_dispersion = 0.15;  // sd as a fraction of the mean; 0 is deterministic
  int disfluency_k = 4;
};

// ---- sampling ----

long sample_turn_target(Language lang, CallLengthCategory bin, const TurnTargetTable& table, Rng& rng,
                        double dispersion = 0.15);
std::vector<DisfluencyType> sample_disfluency_subset(const std::vector<DisfluencyType>& dict, Rng& rng,
                                                     int k);

// ---- single stage ----

std::vector<Turn> parse_generated_turns(std::string_view text);
// `characteristics` is appended to the prompt verbatim (empty for plain runs).
Transcript generate_single_stage(const CallAttributes& attrs, const GenContext& ctx,
                                 const std::string& characteristics = "");

// ---- segmentation ----

// Repairs proposed boundaries into a partition of 0..n-1 with chunks of at
// most kMaxChunkTurns. Throws SegmentationInvalid when nothing is usable.
std::vector<Boundary> repair_boundaries(std::vector<Boundary> proposed, long n);
bool is_valid_partition(const std::vector<Boundary>& b, long n);
std::vector<Chunk> chunks_from_boundaries(const Transcript& t, const std::vector<Boundary>& b);
std::vector<Chunk> segment_transcript(const Transcript& t, const GenContext& ctx);

// ---- enhancement ----

// Splits `deficit` over the middle chunks in proportion to their size
// (largest remainder). Single-turn chunks get nothing.
std::vector<long> allocate_budgets(const std::vector<Chunk>& chunks, long deficit);

// With `extension` set the prompt asks for that many added turns; otherwise it
// carries only the call-length category.
Chunk enhance_chunk(const Chunk& chunk, const std::vector<DisfluencyType>& disfluencies,
                    std::optional<long> extension, CallLengthCategory category, Language lang,
                    const GenContext& ctx);
// Extension only, no speech noise (characteristic-aware stage 2).
Chunk extend_chunk(const Chunk& chunk, CallLengthCategory category, Language lang, const GenContext& ctx);

Transcript recombine(const std::vector<Chunk>& chunks, Language lang = Language::en);

// ---- characteristic-aware ----

using CandidateMap = std::vector<std::pair<std::string, std::vector<long>>>;  // label -> turn numbers

CandidateMap identify_candidates(const Chunk& chunk, Dimension dim, const GenContext& ctx);

struct LabelSelection {
  std::string label;
  double fraction = 0.0;
  long requested = 0;   // round(fraction * total_turns)
  long candidates = 0;
  std::vector<long> chosen;
  long shortfall = 0;   // requested - chosen
};

std::vector<LabelSelection> sample_turns_to_target(const CandidateMap& candidates,
                                                   const std::map<std::string, double>& targets,
                                                   long total_turns, Rng& rng);

// turn number -> characteristics to apply to it
using TurnAssignment = std::map<long, std::vector<std::pair<Dimension, std::string>>>;

Chunk apply_characteristics(const Chunk& chunk, const TurnAssignment& assignment, Language lang,
                            const GenContext& ctx);

// ---- pipelines ----

struct GenerationRun {
  GenerationMethod method = GenerationMethod::single_stage;
  std::uint64_t seed = 0;
  CallAttributes attrs;
  Transcript output;
  llm::Trace trace;
  std::vector<std::string> warnings;
  json details = json::object();  // method-specific bookkeeping (budgets, selections, ...)
};

GenerationRun generate_dual_stage(const CallAttributes& attrs, DualMode mode, const TurnTargetTable& table,
                                  const llm::LlmClient& client, const GenerationOptions& opt,
                                  const PromptSet& prompts = default_prompts());

GenerationRun generate_characteristic_aware(const CallAttributes& attrs, const CharacteristicTargets& targets,
                                            const llm::LlmClient& client, const GenerationOptions& opt,
                                            const PromptSet& prompts = default_prompts());

GenerationRun run_generation(GenerationMethod method, const CallAttributes& attrs,
                             const llm::LlmClient& client, const GenerationOptions& opt,
                             const CharacteristicTargets* targets = nullptr,
                             const PromptSet& prompts = default_prompts());

// attrs.json, transcript.jsonl, trace.jsonl, run.json
std::vector<std::filesystem::path> write_run_dir(const GenerationRun& run, const std::filesystem::path& dir,
                                                 const json& config_snapshot);

}  // namespace callsynth
