#include "callsynth/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace callsynth {

namespace {

using D = Dimension;

constexpr std::array<Dimension, kDimensionCount> kAll{
    D::customer_emotion_arc, D::agent_emotion_arc, D::customer_sentiment_arc,
    D::agent_sentiment_arc,  D::turn_sentiment,    D::language_complexity,
    D::vocabulary_complexity, D::technical_density, D::sentence_complexity,
    D::discourse_flow,       D::overall_readability, D::proactivity,
    D::emphasis,             D::question_type,     D::repetition,
    D::disfluency,           D::asr_noise_type,    D::solution};

constexpr std::array<std::string_view, kDimensionCount> kNames{
    "customer_emotion_arc", "agent_emotion_arc",   "customer_sentiment_arc",
    "agent_sentiment_arc",  "turn_sentiment",      "language_complexity",
    "vocabulary_complexity", "technical_density",  "sentence_complexity",
    "discourse_flow",       "overall_readability", "proactivity",
    "emphasis",             "question_type",       "repetition",
    "disfluency",           "asr_noise_type",      "solution"};

const std::vector<std::string> kEmotions{"gratitude", "relief",      "factual", "curiosity",
                                         "confusion", "frustration", "anger",   "anxiety"};
const std::vector<std::string> kSentiments{"negative", "neutral", "positive"};
const std::vector<std::string> kScores{"1", "2", "3", "4", "5", "6", "7", "8", "9", "10"};

const std::vector<std::string> kTurnSentiment{"negative", "neutral", "positive", "very_negative",
                                              "very_positive"};
const std::vector<std::string> kLanguageComplexity{
    "acronym_abbreviation_heavy",      "complex_compound_sentences",
    "empathetic_softened_tone",        "formal_professional_register",
    "high_lexical_density",            "idiomatic_colloquial_expressions",
    "informal_conversational_register", "jargon_heavy_language",
    "low_lexical_density",             "passive_voice_dominant",
    "simple_plain_language",           "technical_domain_specific_language"};
const std::vector<std::string> kProactivity{"neutral", "overstated_proactivity",
                                            "understated_proactivity"};
const std::vector<std::string> kEmphasis{"emotion_focused", "fact_focused", "other"};
const std::vector<std::string> kQuestionType{
    "boolean",          "choice_based", "clarification_descriptive", "connect_behavioral",
    "entity_objective", "no_question",  "repeat",                    "request_suggestion"};
const std::vector<std::string> kRepetition{"agent_repeats_customer", "agent_self_repetition",
                                           "customer_repeats_agent", "customer_self_repetition",
                                           "no_repetition"};
const std::vector<std::string> kDisfluency{
    "ambiguity",        "corrections",           "could_you_repeat_that",
    "disagreements",    "false_starts",          "failure_to_understand_vocabulary",
    "fillers",          "hesitations",           "ignoring",
    "incomplete_sentences", "interruptions",     "misunderstandings",
    "not_hearing_each_other", "overlapping_speech", "pardon_me",
    "phonological_errors", "prolongations",      "repeated_words_or_phrases",
    "revision",         "self_repair",           "silence_awkward_pauses",
    "stuttering",       "talking_over_each_other", "talking_too_fast",
    "talking_too_slow", "tangents",              "understanding_failure",
    "word_substitution"};
const std::vector<std::string> kAsrNoise{"substitution", "insertion", "deletion", "no_noise"};
const std::vector<std::string> kSolution{
    "advisory_recommendation",   "advisory_self_help_guidance", "diagnostic_explanation",
    "escalation_instruction",    "expectation_setting",         "follow_up_commitment",
    "no_solution_provided",      "partial_solution_provided",   "preventive_guidance",
    "reassurance_or_soft_closure", "root_cause_analysis",       "solution_offered_but_declined",
    "transactional_directive"};

std::vector<std::string> arcs_over(const std::vector<std::string>& base) {
  std::vector<std::string> out;
  out.reserve(base.size() * base.size());
  for (const auto& a : base)
    for (const auto& b : base) out.push_back(a + "_to_" + b);
  return out;
}

}  // namespace

const std::array<Dimension, kDimensionCount>& all_dimensions() noexcept { return kAll; }

std::string_view to_string(Dimension d) noexcept { return kNames[static_cast<std::size_t>(d)]; }

Dimension parse_dimension(std::string_view s) {
  for (std::size_t i = 0; i < kDimensionCount; ++i)
    if (kNames[i] == s) return kAll[i];
  fail(ErrorKind::UnknownDimension, "dimension '" + std::string(s) + "'");
}

DimensionKind kind_of(Dimension d) noexcept {
  switch (d) {
    case D::customer_emotion_arc:
    case D::agent_emotion_arc: return DimensionKind::emotion_arc;
    case D::customer_sentiment_arc:
    case D::agent_sentiment_arc: return DimensionKind::sentiment_arc;
    case D::vocabulary_complexity:
    case D::technical_density:
    case D::sentence_complexity:
    case D::discourse_flow:
    case D::overall_readability: return DimensionKind::score;
    default: return DimensionKind::categorical;
  }
}

Level level_of(Dimension d) noexcept {
  return kind_of(d) == DimensionKind::categorical ? Level::turn : Level::transcript;
}

Cardinality cardinality_of(Dimension d) noexcept {
  return (d == D::language_complexity || d == D::disfluency) ? Cardinality::multi_label
                                                             : Cardinality::single_label;
}

Speaker arc_speaker(Dimension d) noexcept {
  return (d == D::agent_emotion_arc || d == D::agent_sentiment_arc) ? Speaker::agent
                                                                    : Speaker::customer;
}

bool LabelSet::contains(std::string_view l) const {
  return std::find(labels.begin(), labels.end(), l) != labels.end();
}

const std::vector<std::string>& emotion_labels() { return kEmotions; }
const std::vector<std::string>& sentiment_labels() { return kSentiments; }

const std::vector<std::string>& base_labels(Dimension d) {
  switch (d) {
    case D::customer_emotion_arc:
    case D::agent_emotion_arc: return kEmotions;
    case D::customer_sentiment_arc:
    case D::agent_sentiment_arc: return kSentiments;
    case D::vocabulary_complexity:
    case D::technical_density:
    case D::sentence_complexity:
    case D::discourse_flow:
    case D::overall_readability: return kScores;
    case D::turn_sentiment: return kTurnSentiment;
    case D::language_complexity: return kLanguageComplexity;
    case D::proactivity: return kProactivity;
    case D::emphasis: return kEmphasis;
    case D::question_type: return kQuestionType;
    case D::repetition: return kRepetition;
    case D::disfluency: return kDisfluency;
    case D::asr_noise_type: return kAsrNoise;
    case D::solution: return kSolution;
  }
  return kScores;
}

LabelSet label_set(Dimension d) {
  const auto k = kind_of(d);
  if (k == DimensionKind::emotion_arc || k == DimensionKind::sentiment_arc)
    return {d, arcs_over(base_labels(d))};
  return {d, base_labels(d)};
}

ArcLabel make_arc(Dimension arc_dim, std::string_view start, std::string_view end) {
  const auto k = kind_of(arc_dim);
  if (k != DimensionKind::emotion_arc && k != DimensionKind::sentiment_arc)
    fail(ErrorKind::DimensionMismatch, std::string(to_string(arc_dim)) + " is not an arc dimension");
  const auto& base = base_labels(arc_dim);
  for (auto l : {start, end})
    if (std::find(base.begin(), base.end(), l) == base.end())
      fail(ErrorKind::LabelOutOfSet,
           "'" + std::string(l) + "' not in base set of " + std::string(to_string(arc_dim)));
  ArcLabel a{std::string(start), std::string(end), ""};
  a.rendered = a.start + "_to_" + a.end;
  return a;
}

std::string sentiment_of_emotion(std::string_view e) {
  if (e == "gratitude" || e == "relief") return "positive";
  if (e == "factual" || e == "curiosity") return "neutral";
  if (e == "confusion" || e == "frustration" || e == "anger" || e == "anxiety") return "negative";
  fail(ErrorKind::LabelOutOfSet, "'" + std::string(e) + "' is not an emotion label");
}

std::string normalize_label(std::string_view raw) {
  std::string s = trim(raw);
  auto strip = [&](char c) {
    while (!s.empty() && (s.front() == c)) s.erase(s.begin());
    while (!s.empty() && (s.back() == c)) s.pop_back();
  };
  for (int pass = 0; pass < 2; ++pass)
    for (char c : {'"', '\'', '`', '.', '*', ' ', '[', ']'}) strip(c);
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (c == ' ' || c == '-' || c == '\t')
      out += '_';
    else
      out += static_cast<char>(std::tolower(c));
  }
  // Collapse runs of underscores left by "very  negative" or "very - negative".
  std::string collapsed;
  for (char c : out)
    if (!(c == '_' && !collapsed.empty() && collapsed.back() == '_')) collapsed += c;
  return collapsed;
}

double ReferenceDistribution::proportion(std::string_view label) const {
  for (const auto& [l, p] : proportions)
    if (l == label) return p;
  return 0.0;
}

long FrequencyDistribution::count(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return counts[i];
  return 0;
}

long FrequencyDistribution::occurrences() const {
  return std::accumulate(counts.begin(), counts.end(), 0L);
}

FrequencyDistribution empty_distribution(Dimension d) {
  FrequencyDistribution f;
  f.dimension = d;
  f.labels = label_set(d).labels;
  f.counts.assign(f.labels.size(), 0);
  return f;
}

namespace {

template <class Pooled>
FrequencyDistribution pool(const FrequencyDistribution& dist, Pooled pooled) {
  FrequencyDistribution out;
  out.dimension = dist.dimension;
  out.total = dist.total;
  long other = 0;
  bool any_pooled = false;
  for (std::size_t i = 0; i < dist.labels.size(); ++i) {
    if (pooled(dist.labels[i])) {
      other += dist.counts[i];
      any_pooled = true;
    } else {
      out.labels.push_back(dist.labels[i]);
      out.counts.push_back(dist.counts[i]);
    }
  }
  if (any_pooled || out.labels.empty()) {
    out.labels.emplace_back(kOther);
    out.counts.push_back(other);
  }
  return out;
}

}  // namespace

FrequencyDistribution merge_low_frequency(const FrequencyDistribution& dist,
                                          const ReferenceDistribution& ref, double threshold) {
  if (dist.dimension != ref.dimension)
    fail(ErrorKind::DimensionMismatch, std::string(to_string(dist.dimension)) + " vs " +
                                           std::string(to_string(ref.dimension)));
  return pool(dist, [&](const std::string& l) {
    return l == kOther || ref.proportion(l) < threshold;
  });
}

ReferenceDistribution merge_reference(const ReferenceDistribution& ref, double threshold) {
  ReferenceDistribution out{ref.language, ref.dimension, {}};
  double other = 0.0;
  bool any = false;
  for (const auto& [l, p] : ref.proportions) {
    if (l == kOther || p < threshold) {
      other += p;
      any = true;
    } else {
      out.proportions.emplace_back(l, p);
    }
  }
  // Labels the reference never saw have share 0 and pool as well.
  for (const auto& l : label_set(ref.dimension).labels)
    if (l != kOther && std::none_of(ref.proportions.begin(), ref.proportions.end(),
                                    [&](const auto& e) { return e.first == l; }))
      any = true;
  if (any || out.proportions.empty()) out.proportions.emplace_back(std::string(kOther), other);
  return out;
}

MergedPair merge_pair(const FrequencyDistribution& real, const FrequencyDistribution& synth,
                      const ReferenceDistribution* ref, double threshold, MergeBasis basis) {
  if (real.dimension != synth.dimension || real.labels != synth.labels)
    fail(ErrorKind::DimensionMismatch, "real and synthetic distributions disagree on labels");
  if (basis == MergeBasis::reference) {
    if (!ref) fail(ErrorKind::PreconditionFailed, "reference basis requires a reference distribution");
    return {merge_low_frequency(real, *ref, threshold), merge_low_frequency(synth, *ref, threshold)};
  }
  const double occ_r = static_cast<double>(real.occurrences());
  const double occ_s = static_cast<double>(synth.occurrences());
  auto pooled = [&](const std::string& l) {
    if (l == kOther) return true;
    const double pr = occ_r > 0 ? real.count(l) / occ_r : 0.0;
    const double ps = occ_s > 0 ? synth.count(l) / occ_s : 0.0;
    return pr < threshold || ps < threshold;
  };
  return {pool(real, pooled), pool(synth, pooled)};
}

}  // namespace callsynth
