#include "callsynth/generation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gen_internal.hpp"

namespace callsynth {

namespace detail {

llm::CompletionRequest build_request(const GenContext& ctx, llm::Role role, const std::string& task,
                                     const std::map<std::string, std::string>& vars) {
  const auto& tmpl = ctx.prompts.get(task);
  return ctx.client.make_request(role, task, llm::render_prompt(tmpl.system, vars),
                                 llm::render_prompt(tmpl.user, vars));
}

void for_each_chunk(const GenContext& ctx, std::size_t n,
                    const std::function<void(std::size_t, const GenContext&)>& fn) {
  std::vector<llm::Trace> traces(n);
  std::vector<std::vector<std::string>> warns(n);
  std::exception_ptr err;
  try {
    llm::parallel_for(n, ctx.pool_width, [&](std::size_t i) {
      GenContext sub{ctx.client, ctx.prompts, &traces[i], &warns[i], 1};
      fn(i, sub);
    });
  } catch (...) {
    err = std::current_exception();
  }
  // Keep whatever was traced, even on failure, so a failed run can be inspected.
  for (std::size_t i = 0; i < n; ++i) {
    if (ctx.trace) ctx.trace->insert(ctx.trace->end(), traces[i].begin(), traces[i].end());
    if (ctx.warnings) ctx.warnings->insert(ctx.warnings->end(), warns[i].begin(), warns[i].end());
  }
  if (err) std::rethrow_exception(err);
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace detail

using detail::build_request;

void GenContext::warn(std::string msg) const {
  if (warnings) warnings->push_back(std::move(msg));
}

// ---- targets ----

CharacteristicTargets targets_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::InvalidConfig, "targets must be an object keyed by dimension");
  CharacteristicTargets out;
  for (const auto& [dname, labels] : j.items()) {
    const Dimension d = parse_dimension(dname);
    if (!labels.is_object()) fail(ErrorKind::InvalidConfig, "targets for " + dname + " must be an object");
    const auto set = label_set(d);
    double sum = 0.0;
    auto& dst = out[d];
    for (const auto& [raw, v] : labels.items()) {
      const auto label = normalize_label(raw);
      if (label != kOther && !set.contains(label))
        fail(ErrorKind::LabelOutOfSet, "'" + raw + "' is not a label of " + dname);
      if (!v.is_number()) fail(ErrorKind::InvalidConfig, "target for " + dname + "/" + raw + " is not a number");
      const double f = v.get<double>();
      if (!(f >= 0.0 && f <= 1.0)) fail(ErrorKind::InvalidConfig, "target for " + dname + "/" + raw + " outside [0,1]");
      dst[label] = f;
      sum += f;
    }
    if (cardinality_of(d) == Cardinality::single_label && !dst.empty() && std::abs(sum - 1.0) > 1e-6)
      fail(ErrorKind::InvalidConfig, "targets for " + dname + " sum to " + std::to_string(sum) + ", not 1");
  }
  return out;
}

json to_json(const CharacteristicTargets& t) {
  json j = json::object();
  for (const auto& [d, labels] : t) {
    json m = json::object();
    for (const auto& [l, f] : labels) m[l] = f;
    j[std::string(to_string(d))] = m;
  }
  return j;
}

CharacteristicTargets default_targets(Language l) {
  CharacteristicTargets out;
  for (const auto& [d, ref] : shipped_references(l).by_dimension)
    for (const auto& [label, p] : ref.proportions) out[d][label] = p;
  return out;
}

std::string_view to_string(GenerationMethod m) noexcept {
  switch (m) {
    case GenerationMethod::single_stage: return "single_stage";
    case GenerationMethod::dual_turn_count: return "dual_turn_count";
    case GenerationMethod::dual_call_length: return "dual_call_length";
    case GenerationMethod::characteristic_aware: return "characteristic_aware";
  }
  return "single_stage";
}

GenerationMethod parse_method(std::string_view s) {
  if (s == "single_stage" || s == "single") return GenerationMethod::single_stage;
  if (s == "dual_turn_count" || s == "turn_count") return GenerationMethod::dual_turn_count;
  if (s == "dual_call_length" || s == "call_length") return GenerationMethod::dual_call_length;
  if (s == "characteristic_aware" || s == "char_aware") return GenerationMethod::characteristic_aware;
  fail(ErrorKind::InvalidConfig, "unknown generation method '" + std::string(s) + "'");
}

// ---- sampling ----

long sample_turn_target(Language lang, CallLengthCategory bin, const TurnTargetTable& table, Rng& rng,
                        double dispersion) {
  const double mu = table.mean(lang, bin);
  require(dispersion >= 0.0, ErrorKind::InvalidConfig, "turn dispersion must be >= 0");
  if (dispersion == 0.0) return std::max(2L, std::lround(mu));
  // Truncation at 2 by rejection; the cap only guards absurd configurations.
  for (int tries = 0; tries < 10000; ++tries) {
    const double x = rng.normal(mu, dispersion * mu);
    if (x >= 2.0) return std::max(2L, std::lround(x));
  }
  return std::max(2L, std::lround(mu));
}

std::vector<DisfluencyType> sample_disfluency_subset(const std::vector<DisfluencyType>& dict, Rng& rng, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > dict.size())
    fail(ErrorKind::KOutOfRange, "disfluency subset size " + std::to_string(k) + " outside 1.." +
                                     std::to_string(dict.size()));
  std::vector<DisfluencyType> out;
  for (auto i : sample_without_replacement(dict.size(), static_cast<std::size_t>(k), rng)) out.push_back(dict[i]);
  return out;
}

// ---- single stage ----

std::vector<Turn> parse_generated_turns(std::string_view text) {
  std::vector<Turn> out;
  for (auto& p : parse_turn_lines(text)) out.push_back({out.size(), p.speaker, std::move(p.text)});
  return out;
}

namespace {

std::string duration_text(const CallAttributes& a) {
  std::string cat(to_string(a.call_length_category));
  std::replace(cat.begin(), cat.end(), '_', ' ');
  if (!a.call_duration_seconds) return cat + " call";
  return std::to_string(std::lround(*a.call_duration_seconds)) + " seconds (" + cat + " call)";
}

}  // namespace

Transcript generate_single_stage(const CallAttributes& attrs, const GenContext& ctx,
                                 const std::string& characteristics) {
  const json aj = to_json(attrs);
  std::map<std::string, std::string> vars{{"language", std::string(to_string(attrs.language))},
                                          {"call_duration", duration_text(attrs)},
                                          {"topic_flow_json", aj["topic_flow"].dump()},
                                          {"qa_json", aj["qa_evaluation"].dump()},
                                          {"characteristics", characteristics}};
  for (auto key : kIntentKeys) {
    auto it = attrs.intent_summaries.find(std::string(key));
    const std::string v = it == attrs.intent_summaries.end() ? "" : it->second;
    vars[std::string(key)] = is_blank(v) ? "(none)" : v;
  }
  auto req = build_request(ctx, llm::Role::generation, "generate_base", vars);
  const auto resp = ctx.client.complete(req, ctx.trace);
  Transcript t;
  t.language = attrs.language;
  t.turns = parse_generated_turns(resp.text);
  if (t.turns.size() < 2)
    fail(ErrorKind::EmptyGeneration,
         "base generation produced " + std::to_string(t.turns.size()) + " speaker-tagged turns");
  return t;
}

// ---- enhancement ----

std::vector<long> allocate_budgets(const std::vector<Chunk>& chunks, long deficit) {
  std::vector<long> out(chunks.size(), 0);
  if (deficit <= 0 || chunks.empty()) return out;
  std::vector<std::size_t> eligible;
  const bool has_middle = chunks.size() >= 3;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (chunks[i].size() < 2) continue;
    if (has_middle && (i == 0 || i + 1 == chunks.size())) continue;
    eligible.push_back(i);
  }
  if (eligible.empty())
    for (std::size_t i = 0; i < chunks.size(); ++i)
      if (chunks[i].size() >= 2) eligible.push_back(i);
  if (eligible.empty()) return out;

  long total = 0;
  for (auto i : eligible) total += static_cast<long>(chunks[i].size());
  long assigned = 0;
  std::vector<std::pair<long, std::size_t>> rema;  // remainder, chunk
  for (auto i : eligible) {
    const long q = deficit * static_cast<long>(chunks[i].size());
    out[i] = q / total;
    assigned += out[i];
    rema.push_back({q % total, i});
  }
  std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < deficit; ++r, ++assigned) ++out[rema[r % rema.size()].second];
  return out;
}

namespace {

std::string category_guidance(CallLengthCategory c) {
  std::string s = "<call_length>" + std::string(to_string(c)) + "</call_length>\n";
  switch (c) {
    case CallLengthCategory::very_short:
      return s + "This is a very short call (under three minutes). Add only a few brief exchanges.";
    case CallLengthCategory::short_:
      return s + "This is a short call (three to ten minutes). Add a modest number of exchanges.";
    case CallLengthCategory::medium:
      return s + "This is a medium call (ten to twenty minutes). Add a fair number of exchanges.";
    case CallLengthCategory::long_:
      return s + "This is a long call (over twenty minutes). Add many exchanges, including holds and checks.";
  }
  return s;
}

std::string extension_guidance(long n) {
  return "<extension_turns>" + std::to_string(n) + "</extension_turns>\nAdd exactly " + std::to_string(n) +
         " new turns to this chunk.";
}

std::string disfluency_block(const std::vector<DisfluencyType>& ds) {
  std::string out;
  for (const auto& d : ds) out += "- " + d.name + ": " + d.description + " (e.g. " + d.example + ")\n";
  if (!out.empty()) out.pop_back();
  return out;
}

// The reply must keep the chunk's first and last turns verbatim.
Chunk parse_rewritten_chunk(const Chunk& chunk, std::string_view text) {
  auto turns = parse_generated_turns(text);
  const auto& first = chunk.turns.front();
  const auto& last = chunk.turns.back();
  if (turns.size() < std::min<std::size_t>(2, chunk.size()))
    fail(ErrorKind::EnhancementInvalid, "rewritten chunk has " + std::to_string(turns.size()) + " turns");
  if (turns.front().speaker != first.speaker || turns.front().text != first.text)
    fail(ErrorKind::EnhancementInvalid, "first turn of the chunk was altered");
  if (turns.back().speaker != last.speaker || turns.back().text != last.text)
    fail(ErrorKind::EnhancementInvalid, "last turn of the chunk was altered");
  Chunk out = chunk;
  out.turns = std::move(turns);
  return out;
}

}  // namespace

Chunk enhance_chunk(const Chunk& chunk, const std::vector<DisfluencyType>& disfluencies,
                    std::optional<long> extension, CallLengthCategory category, Language lang,
                    const GenContext& ctx) {
  require(!chunk.turns.empty(), ErrorKind::EmptyInput, "cannot enhance an empty chunk");
  require(!extension || *extension >= 0, ErrorKind::PreconditionFailed, "negative extension budget");
  std::map<std::string, std::string> vars{
      {"language", std::string(to_string(lang))},
      {"disfluency_block", disfluency_block(disfluencies)},
      {"length_guidance", extension ? extension_guidance(*extension) : category_guidance(category)},
      {"chunk", render_turns(chunk.turns, false)}};
  auto req = build_request(ctx, llm::Role::generation, "enhance", vars);
  return detail::ask_with_reask(
      ctx, req, [&](const std::string& text) { return parse_rewritten_chunk(chunk, text); },
      ErrorKind::EnhancementInvalid);
}

Chunk extend_chunk(const Chunk& chunk, CallLengthCategory category, Language lang, const GenContext& ctx) {
  require(!chunk.turns.empty(), ErrorKind::EmptyInput, "cannot extend an empty chunk");
  std::map<std::string, std::string> vars{{"language", std::string(to_string(lang))},
                                          {"length_guidance", category_guidance(category)},
                                          {"chunk", render_turns(chunk.turns, false)}};
  auto req = build_request(ctx, llm::Role::generation, "extend", vars);
  return detail::ask_with_reask(
      ctx, req, [&](const std::string& text) { return parse_rewritten_chunk(chunk, text); },
      ErrorKind::EnhancementInvalid);
}

Transcript recombine(const std::vector<Chunk>& chunks, Language lang) {
  require(!chunks.empty(), ErrorKind::EmptyInput, "nothing to recombine");
  Transcript t;
  t.language = lang;
  for (const auto& c : chunks)
    for (const auto& turn : c.turns) t.turns.push_back({t.turns.size(), turn.speaker, turn.text});
  require(!t.turns.empty(), ErrorKind::EmptyInput, "all chunks are empty");
  return t;
}

// ---- pipelines ----

namespace {

json chunk_summary(const std::vector<Chunk>& chunks) {
  json a = json::array();
  for (const auto& c : chunks)
    a.push_back({{"name", c.name}, {"start_turn", c.start_turn}, {"end_turn", c.end_turn}, {"turns", c.size()}});
  return a;
}

}  // namespace

GenerationRun generate_dual_stage(const CallAttributes& attrs, DualMode mode, const TurnTargetTable& table,
                                  const llm::LlmClient& client, const GenerationOptions& opt,
                                  const PromptSet& prompts) {
  GenerationRun run;
  run.method = mode == DualMode::turn_count ? GenerationMethod::dual_turn_count
                                            : GenerationMethod::dual_call_length;
  run.seed = opt.seed;
  run.attrs = attrs;
  const GenContext ctx{client, prompts, &run.trace, &run.warnings, client.config().pool_width};

  const Transcript base = generate_single_stage(attrs, ctx);
  const auto chunks = segment_transcript(base, ctx);
  const long base_len = static_cast<long>(base.size());

  std::vector<long> budgets(chunks.size(), 0);
  if (mode == DualMode::turn_count) {
    Rng rng(derive_seed(opt.seed, "turn_target"));
    const long target = sample_turn_target(attrs.language, attrs.call_length_category, table, rng,
                                           opt.turn_dispersion);
    budgets = allocate_budgets(chunks, target - base_len);
    run.details["target_turns"] = target;
    run.details["deficit"] = std::max(0L, target - base_len);
  }

  std::vector<Chunk> enhanced(chunks.size());
  std::vector<json> used(chunks.size(), json::array());
  detail::for_each_chunk(ctx, chunks.size(), [&](std::size_t i, const GenContext& sub) {
    if (chunks[i].size() < 2) {  // nothing between first and last to rewrite
      enhanced[i] = chunks[i];
      return;
    }
    Rng rng(derive_seed(opt.seed, "disfluency", i));
    const auto subset = sample_disfluency_subset(disfluency_dictionary(), rng, opt.disfluency_k);
    for (const auto& d : subset) used[i].push_back(d.name);
    const std::optional<long> ext =
        mode == DualMode::turn_count ? std::optional<long>(budgets[i]) : std::nullopt;
    enhanced[i] = enhance_chunk(chunks[i], subset, ext, attrs.call_length_category, attrs.language, sub);
  });

  run.output = recombine(enhanced, attrs.language);
  run.details["base_turns"] = base_len;
  run.details["chunks"] = chunk_summary(chunks);
  if (mode == DualMode::turn_count) run.details["budgets"] = budgets;
  json per = json::array();
  for (std::size_t i = 0; i < chunks.size(); ++i)
    per.push_back({{"enhanced_turns", enhanced[i].size()}, {"disfluencies", used[i]}});
  run.details["enhancement"] = per;
  run.details["final_turns"] = run.output.size();
  return run;
}

GenerationRun run_generation(GenerationMethod method, const CallAttributes& attrs, const llm::LlmClient& client,
                             const GenerationOptions& opt, const CharacteristicTargets* targets,
                             const PromptSet& prompts) {
  switch (method) {
    case GenerationMethod::single_stage: {
      GenerationRun run;
      run.method = method;
      run.seed = opt.seed;
      run.attrs = attrs;
      const GenContext ctx{client, prompts, &run.trace, &run.warnings, client.config().pool_width};
      run.output = generate_single_stage(attrs, ctx);
      run.details["final_turns"] = run.output.size();
      return run;
    }
    case GenerationMethod::dual_turn_count:
      return generate_dual_stage(attrs, DualMode::turn_count, turn_target_table(), client, opt, prompts);
    case GenerationMethod::dual_call_length:
      return generate_dual_stage(attrs, DualMode::call_length, turn_target_table(), client, opt, prompts);
    case GenerationMethod::characteristic_aware:
      require(targets != nullptr, ErrorKind::PreconditionFailed,
              "characteristic-aware generation needs a targets document");
      return generate_characteristic_aware(attrs, *targets, client, opt, prompts);
  }
  fail(ErrorKind::InvalidConfig, "unknown generation method");
}

std::vector<std::filesystem::path> write_run_dir(const GenerationRun& run, const std::filesystem::path& dir,
                                                 const json& config_snapshot) {
  std::vector<std::filesystem::path> out{dir / "attrs.json", dir / "transcript.jsonl", dir / "trace.jsonl",
                                         dir / "run.json"};
  write_file(out[0], to_json(run.attrs).dump(2) + "\n");
  write_file(out[1], serialize_transcript(run.output));
  write_file(out[2], llm::trace_to_jsonl(run.trace));
  json r{{"method", to_string(run.method)},
         {"seed", run.seed},
         {"language", to_string(run.output.language)},
         {"turns", run.output.size()},
         {"backend_calls", run.trace.size()},
         {"warnings", run.warnings},
         {"details", run.details},
         {"config", config_snapshot}};
  write_file(out[3], r.dump(2) + "\n");
  return out;
}

}  // namespace callsynth
