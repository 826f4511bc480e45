#include <algorithm>
#include <cmath>
#include <set>

#include "callsynth/generation.hpp"
#include "gen_internal.hpp"

namespace callsynth {

namespace {

bool in_chunk(const Chunk& c, long idx) {
  return !c.turns.empty() && idx >= static_cast<long>(c.turns.front().index) &&
         idx <= static_cast<long>(c.turns.back().index);
}

std::string labels_csv(Dimension d) { return detail::join(label_set(d).labels, ", "); }

// Chunks again, but over the recombined transcript so turn numbers are global.
std::vector<Chunk> rechunk(const Transcript& t, const std::vector<Chunk>& sized) {
  std::vector<Chunk> out;
  std::size_t pos = 0;
  for (const auto& c : sized) {
    Chunk n{static_cast<long>(pos), static_cast<long>(pos + c.size()) - 1, {}, c.name, c.description};
    n.turns.assign(t.turns.begin() + static_cast<long>(pos), t.turns.begin() + static_cast<long>(pos + c.size()));
    pos += c.size();
    out.push_back(std::move(n));
  }
  return out;
}

std::string characteristics_brief(const CharacteristicTargets& targets, std::uint64_t seed, json& picked) {
  std::string out;
  for (const auto& [d, labels] : targets) {
    if (labels.empty()) continue;
    if (level_of(d) == Level::transcript) {
      // One label per call, drawn from the target distribution.
      Rng rng(derive_seed(seed, "transcript_target", static_cast<std::uint64_t>(d)));
      double total = 0.0;
      for (const auto& [l, f] : labels) total += f;
      if (total <= 0.0) continue;
      double u = rng.uniform01() * total;
      std::string choice = labels.rbegin()->first;
      for (const auto& [l, f] : labels) {
        if (u < f) {
          choice = l;
          break;
        }
        u -= f;
      }
      picked[std::string(to_string(d))] = choice;
      if (choice != kOther) out += "- " + std::string(to_string(d)) + ": " + choice + "\n";
    } else {
      std::vector<std::string> parts;
      for (const auto& [l, f] : labels)
        if (l != kOther && f > 0.0) parts.push_back(l + " " + std::to_string(std::lround(f * 100)) + "%");
      if (!parts.empty()) out += "- " + std::string(to_string(d)) + " across turns: " + detail::join(parts, ", ") + "\n";
    }
  }
  if (out.empty()) return out;
  return "Target characteristics for this call:\n" + out;
}

}  // namespace

CandidateMap identify_candidates(const Chunk& chunk, Dimension dim, const GenContext& ctx) {
  require(level_of(dim) == Level::turn, ErrorKind::PreconditionFailed,
          std::string(to_string(dim)) + " is not a turn-level dimension");
  const auto allowed = label_set(dim).labels;
  auto req = detail::build_request(ctx, llm::Role::generation, "candidates",
                                   {{"dimension", std::string(to_string(dim))},
                                    {"labels", labels_csv(dim)},
                                    {"chunk", render_turns(chunk.turns, true)}});
  const auto raw = ctx.client.complete_structured(
      req, [&](const std::string& text) { return parse_turn_index_map(text, allowed); }, ctx.trace);

  CandidateMap out;
  std::set<long> taken;
  for (const auto& [label, idxs] : raw) {
    std::vector<long> keep;
    for (long i : idxs) {
      if (!in_chunk(chunk, i))
        fail(ErrorKind::IndexOutOfChunk, "turn " + std::to_string(i) + " is outside chunk " +
                                             std::to_string(chunk.start_turn) + ".." +
                                             std::to_string(chunk.end_turn));
      if (std::find(keep.begin(), keep.end(), i) != keep.end()) continue;
      if (taken.count(i)) {
        ctx.warn("candidates: turn " + std::to_string(i) + " already listed for another " +
                 std::string(to_string(dim)) + " label; dropped from " + label);
        continue;
      }
      taken.insert(i);
      keep.push_back(i);
    }
    out.emplace_back(label, std::move(keep));
  }
  return out;
}

std::vector<LabelSelection> sample_turns_to_target(const CandidateMap& candidates,
                                                   const std::map<std::string, double>& targets,
                                                   long total_turns, Rng& rng) {
  require(total_turns >= 0, ErrorKind::PreconditionFailed, "negative turn total");
  std::vector<LabelSelection> out;
  for (const auto& [label, fraction] : targets) {
    require(fraction >= 0.0 && fraction <= 1.0, ErrorKind::PreconditionFailed,
            "target fraction for " + label + " outside [0,1]");
    LabelSelection s;
    s.label = label;
    s.fraction = fraction;
    s.requested = std::lround(fraction * static_cast<double>(total_turns));
    std::vector<long> pool;
    for (const auto& [l, idxs] : candidates)
      if (l == label) pool.insert(pool.end(), idxs.begin(), idxs.end());
    s.candidates = static_cast<long>(pool.size());
    const auto k = static_cast<std::size_t>(std::min(s.requested, s.candidates));
    for (auto i : sample_without_replacement(pool.size(), k, rng)) s.chosen.push_back(pool[i]);
    std::sort(s.chosen.begin(), s.chosen.end());
    s.shortfall = s.requested - static_cast<long>(s.chosen.size());
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

Chunk parse_applied(const Chunk& chunk, const TurnAssignment& assignment, std::string_view text) {
  const auto parsed = parse_turn_lines(text);
  if (parsed.size() != chunk.size())
    fail(ErrorKind::ModificationLeak, "reply has " + std::to_string(parsed.size()) + " turns, chunk has " +
                                          std::to_string(chunk.size()));
  Chunk out = chunk;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    const auto& orig = chunk.turns[i];
    const auto& p = parsed[i];
    const long idx = static_cast<long>(orig.index);
    if (p.index && *p.index != idx)
      fail(ErrorKind::ModificationLeak, "turn numbering changed at " + std::to_string(idx));
    if (p.speaker != orig.speaker) fail(ErrorKind::ModificationLeak, "speaker changed at turn " + std::to_string(idx));
    if (!assignment.count(idx) && p.text != orig.text)
      fail(ErrorKind::ModificationLeak, "non-target turn " + std::to_string(idx) + " was modified");
    out.turns[i].text = p.text;
  }
  return out;
}

}  // namespace

Chunk apply_characteristics(const Chunk& chunk, const TurnAssignment& assignment, Language lang,
                            const GenContext& ctx) {
  if (assignment.empty()) return chunk;
  std::string instructions;
  for (const auto& [idx, items] : assignment) {
    require(in_chunk(chunk, idx), ErrorKind::IndexOutOfChunk,
            "assigned turn " + std::to_string(idx) + " is outside the chunk");
    std::vector<std::string> parts;
    for (const auto& [d, label] : items) parts.push_back(std::string(to_string(d)) + " = " + label);
    instructions += "(" + std::to_string(idx) + ") " + detail::join(parts, "; ") + "\n";
  }
  instructions.pop_back();
  auto req = detail::build_request(ctx, llm::Role::generation, "apply",
                                   {{"language", std::string(to_string(lang))},
                                    {"instructions", instructions},
                                    {"chunk", render_turns(chunk.turns, true)}});
  return detail::ask_with_reask(
      ctx, req, [&](const std::string& text) { return parse_applied(chunk, assignment, text); },
      ErrorKind::ModificationLeak);
}

GenerationRun generate_characteristic_aware(const CallAttributes& attrs, const CharacteristicTargets& targets,
                                            const llm::LlmClient& client, const GenerationOptions& opt,
                                            const PromptSet& prompts) {
  std::vector<Dimension> turn_dims;
  for (const auto& [d, labels] : targets)
    if (level_of(d) == Level::turn && !labels.empty()) turn_dims.push_back(d);
  require(!turn_dims.empty(), ErrorKind::PreconditionFailed,
          "characteristic targets must cover at least one turn-level dimension");

  GenerationRun run;
  run.method = GenerationMethod::characteristic_aware;
  run.seed = opt.seed;
  run.attrs = attrs;
  const GenContext ctx{client, prompts, &run.trace, &run.warnings, client.config().pool_width};

  // Stage 1: base generation conditioned on the targets.
  json picked = json::object();
  const Transcript base = generate_single_stage(attrs, ctx, characteristics_brief(targets, opt.seed, picked));
  const auto chunks = segment_transcript(base, ctx);

  // Stage 2: extension.
  std::vector<Chunk> extended(chunks.size());
  detail::for_each_chunk(ctx, chunks.size(), [&](std::size_t i, const GenContext& sub) {
    extended[i] = chunks[i].size() < 2 ? chunks[i]
                                       : extend_chunk(chunks[i], attrs.call_length_category, attrs.language, sub);
  });
  const Transcript mid = recombine(extended, attrs.language);
  const auto global = rechunk(mid, extended);
  const long total = static_cast<long>(mid.size());

  // Stage 3: candidates per chunk, then global sampling per dimension.
  TurnAssignment assignment;
  json selections = json::object();
  for (Dimension d : turn_dims) {
    std::vector<CandidateMap> per(global.size());
    detail::for_each_chunk(ctx, global.size(),
                           [&](std::size_t i, const GenContext& sub) { per[i] = identify_candidates(global[i], d, sub); });
    CandidateMap merged;
    for (const auto& cm : per)
      for (const auto& [label, idxs] : cm) {
        auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& e) { return e.first == label; });
        if (it == merged.end()) it = merged.insert(merged.end(), {label, {}});
        it->second.insert(it->second.end(), idxs.begin(), idxs.end());
      }
    Rng rng(derive_seed(opt.seed, "select", static_cast<std::uint64_t>(d)));
    const auto sel = sample_turns_to_target(merged, targets.at(d), total, rng);
    json dj = json::array();
    for (const auto& s : sel) {
      for (long idx : s.chosen) assignment[idx].push_back({d, s.label});
      dj.push_back({{"label", s.label},
                    {"fraction", s.fraction},
                    {"requested", s.requested},
                    {"candidates", s.candidates},
                    {"chosen", s.chosen},
                    {"shortfall", s.shortfall}});
      if (s.shortfall > 0)
        run.warnings.push_back("shortfall: " + std::string(to_string(d)) + "/" + s.label + " short by " +
                               std::to_string(s.shortfall));
    }
    selections[std::string(to_string(d))] = dj;
  }

  // Stage 4: targeted application, then recombination.
  std::vector<Chunk> applied(global.size());
  detail::for_each_chunk(ctx, global.size(), [&](std::size_t i, const GenContext& sub) {
    TurnAssignment local;
    for (const auto& [idx, items] : assignment)
      if (in_chunk(global[i], idx)) local[idx] = items;
    applied[i] = apply_characteristics(global[i], local, attrs.language, sub);
  });
  run.output = recombine(applied, attrs.language);

  run.details["base_turns"] = base.size();
  run.details["chunks"] = json::array();
  for (const auto& c : global)
    run.details["chunks"].push_back({{"start_turn", c.start_turn}, {"end_turn", c.end_turn}, {"name", c.name}});
  run.details["extended_turns"] = total;
  run.details["transcript_targets"] = picked;
  run.details["selections"] = selections;
  run.details["final_turns"] = run.output.size();
  return run;
}

}  // namespace callsynth
