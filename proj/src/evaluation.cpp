#include "callsynth/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace callsynth {

std::vector<Turn> context_window(const Transcript& t, std::size_t idx, std::size_t w) {
  if (idx >= t.size())
    fail(ErrorKind::IndexOutOfRange, "turn " + std::to_string(idx) + " of a " + std::to_string(t.size()) +
                                         "-turn transcript");
  const std::size_t lo = idx >= w ? idx - w : 0;
  const std::size_t hi = std::min(t.size() - 1, idx + w);
  return {t.turns.begin() + static_cast<long>(lo), t.turns.begin() + static_cast<long>(hi) + 1};
}

namespace {

std::vector<SampledTurn> draw(const Transcript& t, Source src, std::size_t k, Rng& rng, std::size_t w) {
  std::vector<SampledTurn> out;
  const std::string id = t.metadata.count("source_id") ? t.metadata.at("source_id") : "";
  for (auto i : sample_without_replacement(t.size(), k, rng))
    out.push_back({src, id, t.turns[i], context_window(t, i, w)});
  return out;
}

}  // namespace

SampledPair sample_turns(const Transcript& real, const Transcript& synth, Rng& rng, std::size_t k_max,
                         std::size_t w) {
  if (real.empty() || synth.empty()) fail(ErrorKind::EmptyTranscript, "cannot sample from an empty transcript");
  const std::size_t k = std::min({real.size(), synth.size(), k_max});
  Rng twin = rng;
  SampledPair out;
  out.real = draw(real, Source::real, k, rng, w);
  out.synth = draw(synth, Source::synthetic, k, twin, w);
  return out;
}

std::string_view dimension_description(Dimension d) noexcept {
  switch (d) {
    case Dimension::customer_emotion_arc:
      return "The customer's emotion at the beginning of the call and at the end of the call.";
    case Dimension::agent_emotion_arc:
      return "The agent's emotion at the beginning of the call and at the end of the call.";
    case Dimension::customer_sentiment_arc:
      return "The customer's overall sentiment at the beginning and at the end of the call.";
    case Dimension::agent_sentiment_arc:
      return "The agent's overall sentiment at the beginning and at the end of the call.";
    case Dimension::turn_sentiment: return "The sentiment expressed in the turn.";
    case Dimension::language_complexity: return "Register and linguistic style features present in the turn.";
    case Dimension::vocabulary_complexity: return "How varied and advanced the vocabulary of the call is.";
    case Dimension::technical_density: return "How much technical or domain-specific content the call carries.";
    case Dimension::sentence_complexity: return "How long and structurally complex the sentences of the call are.";
    case Dimension::discourse_flow: return "How smoothly and coherently the conversation progresses.";
    case Dimension::overall_readability: return "How easy the call transcript is to read and follow.";
    case Dimension::proactivity: return "Whether the agent anticipates needs beyond what the customer asked.";
    case Dimension::emphasis: return "Whether the turn stresses facts or emotions.";
    case Dimension::question_type: return "The kind of question asked in the turn, if any.";
    case Dimension::repetition: return "Who repeats what in the turn, if anyone.";
    case Dimension::disfluency: return "Speech irregularities present in the turn.";
    case Dimension::asr_noise_type: return "Speech-recognition errors visible in the turn.";
    case Dimension::solution: return "The kind of solution the agent offers in the turn.";
  }
  return "";
}

std::vector<std::string> classify_turn(const SampledTurn& s, Dimension dim, const llm::LlmClient& client,
                                       llm::Trace* trace, const PromptSet& prompts) {
  require(level_of(dim) == Level::turn, ErrorKind::PreconditionFailed,
          std::string(to_string(dim)) + " is not a turn-level dimension");
  const auto allowed = label_set(dim).labels;
  const bool multi = cardinality_of(dim) == Cardinality::multi_label;
  std::string labels;
  for (std::size_t i = 0; i < allowed.size(); ++i) labels += (i ? ", " : "") + allowed[i];
  const std::map<std::string, std::string> vars{
      {"cardinality_rule", multi ? "List every label that applies, separated by commas, at least one."
                                 : "Choose exactly one label."},
      {"dimension", std::string(to_string(dim))},
      {"description", std::string(dimension_description(dim))},
      {"labels", labels},
      {"context", render_turns(s.context, true)},
      {"target", render_turn_line(s.turn, true)}};
  const auto& tmpl = prompts.get("classify_turn");
  auto req = client.make_request(llm::Role::evaluation, "classify_turn", llm::render_prompt(tmpl.system, vars),
                                 llm::render_prompt(tmpl.user, vars));
  return client.complete_structured(
      req,
      [&](const std::string& text) {
        return multi ? parse_label_list(text, allowed) : std::vector<std::string>{parse_label(text, allowed)};
      },
      trace);
}

std::string classify_transcript(const Transcript& t, Dimension dim, const llm::LlmClient& client,
                                llm::Trace* trace, const PromptSet& prompts) {
  require(level_of(dim) == Level::transcript, ErrorKind::PreconditionFailed,
          std::string(to_string(dim)) + " is not a transcript-level dimension");
  require(!t.empty(), ErrorKind::EmptyTranscript, "cannot classify an empty transcript");
  const bool score = kind_of(dim) == DimensionKind::score;
  const auto& base = base_labels(dim);
  std::string labels;
  for (std::size_t i = 0; i < base.size(); ++i) labels += (i ? ", " : "") + base[i];
  std::string rule;
  if (score) {
    rule = "Rate the call for the characteristic on a scale from 1 to 10 and reply with one integer.";
  } else {
    rule = "Identify the " + std::string(to_string(arc_speaker(dim))) +
           "'s state at the beginning and at the end of the call, using only the allowed labels, "
           "and reply as '<start> \xE2\x86\x92 <end>'.";
  }
  const std::map<std::string, std::string> vars{{"task_rule", rule},
                                                {"dimension", std::string(to_string(dim))},
                                                {"description", std::string(dimension_description(dim))},
                                                {"labels", labels},
                                                {"transcript", render_turns(t.turns, false)}};
  const auto& tmpl = prompts.get("classify_transcript");
  auto req = client.make_request(llm::Role::evaluation, "classify_transcript",
                                 llm::render_prompt(tmpl.system, vars), llm::render_prompt(tmpl.user, vars));
  return client.complete_structured(
      req,
      [&](const std::string& text) {
        return score ? std::to_string(parse_score(text)) : parse_arc(text, dim).rendered;
      },
      trace);
}

FrequencyDistribution build_distribution(const std::vector<std::vector<std::string>>& labels, Dimension dim) {
  auto dist = empty_distribution(dim);
  for (const auto& item : labels) {
    for (const auto& l : item) {
      auto it = std::find(dist.labels.begin(), dist.labels.end(), l);
      if (it == dist.labels.end()) {
        dist.labels.push_back(l);
        dist.counts.push_back(0);
        it = dist.labels.end() - 1;
      }
      ++dist.counts[static_cast<std::size_t>(it - dist.labels.begin())];
    }
    ++dist.total;
  }
  return dist;
}

namespace {

struct Job {
  std::size_t dim = 0;
  std::size_t pair = 0;
  Source side = Source::real;
  long sample = -1;  // -1 means the whole transcript
};

}  // namespace

EvalReport evaluate_corpora(const std::vector<CorpusPair>& pairs, const std::vector<Dimension>& dims,
                            const ReferenceSet& refs, const llm::LlmClient& client, const EvalOptions& opt,
                            const PromptSet& prompts) {
  require(!pairs.empty(), ErrorKind::EmptyInput, "no transcript pairs to evaluate");
  EvalReport rep;
  rep.options = opt;
  rep.language = pairs.front().real.language;

  std::vector<SampledPair> sampled;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    Rng rng(derive_seed(opt.seed, "sample", i));
    sampled.push_back(sample_turns(pairs[i].real, pairs[i].synth, rng, opt.k_max, opt.context_w));
    PairSample ps{pairs[i].id, sampled.back().real.size(), {}, {}};
    for (const auto& s : sampled.back().real) ps.real_indices.push_back(s.turn.index);
    for (const auto& s : sampled.back().synth) ps.synth_indices.push_back(s.turn.index);
    rep.samples.push_back(std::move(ps));
  }

  std::vector<Job> jobs;
  for (std::size_t d = 0; d < dims.size(); ++d)
    for (std::size_t p = 0; p < pairs.size(); ++p)
      for (Source side : {Source::real, Source::synthetic}) {
        if (level_of(dims[d]) == Level::transcript) {
          jobs.push_back({d, p, side, -1});
        } else {
          const auto& v = side == Source::real ? sampled[p].real : sampled[p].synth;
          for (std::size_t j = 0; j < v.size(); ++j) jobs.push_back({d, p, side, static_cast<long>(j)});
        }
      }

  std::vector<std::vector<std::string>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::vector<llm::Trace> traces(jobs.size());
  llm::parallel_for(jobs.size(), opt.pool_width, [&](std::size_t i) {
    const auto& job = jobs[i];
    const Dimension dim = dims[job.dim];
    try {
      if (job.sample < 0) {
        const auto& t = job.side == Source::real ? pairs[job.pair].real : pairs[job.pair].synth;
        results[i] = {classify_transcript(t, dim, client, &traces[i], prompts)};
      } else {
        const auto& v = job.side == Source::real ? sampled[job.pair].real : sampled[job.pair].synth;
        results[i] = classify_turn(v[static_cast<std::size_t>(job.sample)], dim, client, &traces[i], prompts);
      }
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  for (auto& t : traces) rep.trace.insert(rep.trace.end(), t.begin(), t.end());

  for (std::size_t d = 0; d < dims.size(); ++d) {
    DimensionReport dr;
    dr.dimension = dims[d];
    std::vector<std::vector<std::string>> real_labels, synth_labels;
    std::string first_error;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].dim != d) continue;
      if (!errors[i].empty()) {
        if (first_error.empty()) first_error = errors[i];
        continue;
      }
      (jobs[i].side == Source::real ? real_labels : synth_labels).push_back(results[i]);
    }
    dr.real_raw = build_distribution(real_labels, dims[d]);
    dr.synth_raw = build_distribution(synth_labels, dims[d]);
    dr.n_real = dr.real_raw.total;
    dr.n_synth = dr.synth_raw.total;
    if (!first_error.empty()) {
      dr.skip_reason = "classification failed: " + first_error;
      rep.dimensions.push_back(std::move(dr));
      continue;
    }
    try {
      const auto merged = merge_pair(dr.real_raw, dr.synth_raw, refs.find(dims[d]), opt.merge_threshold,
                                     opt.merge_basis);
      dr.real_merged = merged.real;
      dr.synth_merged = merged.synth;
      dr.stat = stats::compare(merged.real, merged.synth, opt.min_expected);
      dr.ok = true;
    } catch (const Error& e) {
      dr.skip_reason = e.what();
    }
    rep.dimensions.push_back(std::move(dr));
  }
  return rep;
}

namespace {

json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

json counts_json(const FrequencyDistribution& f) {
  json j = json::object();
  for (std::size_t i = 0; i < f.labels.size(); ++i) j[f.labels[i]] = f.counts[i];
  return j;
}

json nonzero_counts(const FrequencyDistribution& f) {
  json j = json::object();
  for (std::size_t i = 0; i < f.labels.size(); ++i)
    if (f.counts[i] != 0) j[f.labels[i]] = f.counts[i];
  return j;
}

}  // namespace

json to_json(const EvalReport& r) {
  json j;
  j["language"] = to_string(r.language);
  j["seed"] = r.options.seed;
  j["k_max"] = r.options.k_max;
  j["context_w"] = r.options.context_w;
  j["merge_threshold"] = r.options.merge_threshold;
  j["min_expected"] = r.options.min_expected;
  j["merge_basis"] = r.options.merge_basis == MergeBasis::reference ? "reference" : "observed_expected";
  json samples = json::array();
  for (const auto& s : r.samples)
    samples.push_back({{"pair", s.id}, {"k", s.k}, {"real_indices", s.real_indices}, {"synth_indices", s.synth_indices}});
  j["samples"] = samples;
  json dims = json::object();
  for (const auto& d : r.dimensions) {
    json e;
    e["status"] = d.ok ? "ok" : "skipped";
    if (!d.ok) e["reason"] = d.skip_reason;
    e["n_real"] = d.n_real;
    e["n_synth"] = d.n_synth;
    e["real_label_counts"] = nonzero_counts(d.real_raw);
    e["synth_label_counts"] = nonzero_counts(d.synth_raw);
    if (d.ok) {
      e["test"] = stats::to_string(d.stat.test);
      e["statistic"] = num(d.stat.statistic);
      e["df"] = d.stat.df;
      e["p_value"] = num(d.stat.p_value);
      e["js_divergence"] = num(d.stat.js_divergence);
      e["merged_labels"] = d.stat.merged_labels;
      e["real_counts"] = counts_json(d.real_merged);
      e["synth_counts"] = counts_json(d.synth_merged);
      e["tested_labels"] = d.stat.tested_labels;
      json ex = json::array();
      for (double v : d.stat.expected_scaled) ex.push_back(num(v));
      e["expected_scaled"] = ex;
      if (!d.stat.note.empty()) e["note"] = d.stat.note;
    }
    dims[std::string(to_string(d.dimension))] = e;
  }
  j["dimensions"] = dims;
  return j;
}

std::string render_table(const EvalReport& r) {
  std::string out = "language " + std::string(to_string(r.language)) + ", seed " + std::to_string(r.options.seed) +
                    ", k_max " + std::to_string(r.options.k_max) + ", pairs " + std::to_string(r.samples.size()) +
                    "\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %-10s %12s %4s %12s %8s %s\n", "dimension", "test", "statistic", "df",
                "p-value", "JS", "merged labels");
  out += line;
  out += std::string(96, '-') + "\n";
  for (const auto& d : r.dimensions) {
    const std::string name(to_string(d.dimension));
    if (!d.ok) {
      out += name + std::string(name.size() < 25 ? 25 - name.size() : 1, ' ') + "skipped: " + d.skip_reason + "\n";
      continue;
    }
    std::string merged;
    for (std::size_t i = 0; i < d.stat.merged_labels.size(); ++i) merged += (i ? "," : "") + d.stat.merged_labels[i];
    std::snprintf(line, sizeof line, "%-24s %-10s %12.4f %4d %12.4g %8.4f ", name.c_str(),
                  std::string(stats::to_string(d.stat.test)).c_str(), d.stat.statistic, d.stat.df, d.stat.p_value,
                  d.stat.js_divergence);
    out += line + merged + "\n";
  }
  return out;
}

}  // namespace callsynth
