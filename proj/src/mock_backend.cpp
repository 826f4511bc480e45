#include <algorithm>
#include <array>
#include <sstream>

#include "callsynth/llm.hpp"
#include "callsynth/random.hpp"
#include "callsynth/structured.hpp"
#include "callsynth/taxonomy.hpp"

namespace callsynth::llm {

namespace {

std::string tag(std::string_view text, std::string_view name) {
  const std::string open = "<" + std::string(name) + ">";
  const std::string close = "</" + std::string(name) + ">";
  const auto a = text.find(open);
  if (a == std::string_view::npos) return {};
  const auto b = text.find(close, a + open.size());
  if (b == std::string_view::npos) return {};
  return trim(text.substr(a + open.size(), b - a - open.size()));
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in = false;
  for (unsigned char c : s) {
    const bool ws = std::isspace(c) != 0;
    if (!ws && !in) ++n;
    in = !ws;
  }
  return n;
}

std::vector<std::string> split_labels(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

struct Phrases {
  std::array<const char*, 8> agent;
  std::array<const char*, 8> customer;
};

const Phrases& phrases_for(std::string_view lang) {
  static const Phrases en{
      {"thank you for calling, how can I help you today", "let me pull up your account",
       "I can see the charge on your statement", "one moment while I check that for you",
       "I have applied the credit to your account", "is there anything else I can help with",
       "I understand, let me look into it", "your reference number is four two seven"},
      {"hi, I'm calling about my last bill", "yes that's right", "um, I was charged twice",
       "okay, how long will that take", "I already called about this last week",
       "great, thank you so much", "sorry, could you repeat that", "no, that's everything"}};
  static const Phrases es{
      {"gracias por llamar, en que le puedo ayudar", "permitame revisar su cuenta",
       "veo el cargo en su estado de cuenta", "un momento por favor mientras verifico",
       "ya aplique el credito a su cuenta", "hay algo mas en que le pueda ayudar",
       "entiendo, dejeme revisarlo", "su numero de referencia es cuatro dos siete"},
      {"hola, llamo por mi ultima factura", "si, eso es correcto", "eh, me cobraron dos veces",
       "y cuanto tiempo va a tardar", "ya llame la semana pasada por esto",
       "perfecto, muchas gracias", "perdon, me lo puede repetir", "no, eso es todo"}};
  static const Phrases fr{
      {"merci d'avoir appele, comment puis-je vous aider", "je vais consulter votre dossier",
       "je vois le montant sur votre releve", "un instant, je verifie pour vous",
       "j'ai applique le credit a votre compte", "est-ce que je peux vous aider avec autre chose",
       "je comprends, je regarde ca", "votre numero de reference est quatre deux sept"},
      {"bonjour, j'appelle pour ma derniere facture", "oui c'est bien ca", "euh, on m'a facture deux fois",
       "d'accord, ca va prendre combien de temps", "j'ai deja appele la semaine derniere",
       "parfait, merci beaucoup", "pardon, vous pouvez repeter", "non, c'est tout"}};
  if (lang == "es") return es;
  if (lang == "fr" || lang == "fr-ca") return fr;
  return en;
}

std::string reply_generate(const CompletionRequest& req, std::uint64_t mix) {
  const auto& ph = phrases_for(tag(req.user_prompt, "language"));
  const std::size_t n = 8 + mix % 9;
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t r = splitmix64(mix + i);
    const bool agent = i % 2 == 0;
    const char* text = agent ? ph.agent[r % 8] : ph.customer[r % 8];
    out += agent ? "agent: " : "customer: ";
    out += text;
    out += '\n';
  }
  return out;
}

std::string reply_segment(const CompletionRequest& req, std::uint64_t mix) {
  const auto& u = req.user_prompt;
  const auto a = u.find("`[");
  const auto b = u.rfind("]`");
  if (a == std::string::npos || b == std::string::npos || b < a) return "no transcript found";
  const auto turns = json::parse(u.substr(a + 1, b - a));
  const long n = static_cast<long>(turns.size());
  json topics = json::array();
  long start = 0;
  for (int k = 0; start < n; ++k) {
    const long size = 5 + static_cast<long>(splitmix64(mix + k) % 4);
    const long end = std::min(n - 1, start + size - 1);
    topics.push_back({{"name", "topic_" + std::to_string(k + 1)},
                      {"description", "turns " + std::to_string(start) + " to " + std::to_string(end)},
                      {"start_turn", start},
                      {"end_turn", end}});
    start = end + 1;
  }
  return json({{"topics", topics}}).dump();
}

std::string reply_enhance(const CompletionRequest& req, bool add_disfluency) {
  const auto chunk = parse_turn_lines(tag(req.user_prompt, "chunk"));
  if (chunk.empty()) return "";
  long extra = 0;
  const auto ext = tag(req.user_prompt, "extension_turns");
  if (!ext.empty()) {
    extra = std::stol(ext);
  } else {
    const auto cat = tag(req.user_prompt, "call_length");
    extra = cat == "very_short" ? 1 : cat == "short" ? 2 : cat == "medium" ? 3 : cat == "long" ? 4 : 0;
  }
  static const std::array<const char*, 4> acks{"mm-hmm", "okay", "uh, yes", "right"};
  auto line = [](Speaker s, const std::string& t) {
    return std::string(to_string(s)) + ": " + t + "\n";
  };
  std::string out = line(chunk.front().speaker, chunk.front().text);
  if (chunk.size() == 1) return out;
  Speaker next = chunk.front().speaker == Speaker::agent ? Speaker::customer : Speaker::agent;
  for (long i = 0; i < extra; ++i) {
    out += line(next, acks[static_cast<std::size_t>(i) % acks.size()]);
    next = next == Speaker::agent ? Speaker::customer : Speaker::agent;
  }
  for (std::size_t i = 1; i + 1 < chunk.size(); ++i) {
    const auto& t = chunk[i];
    const bool prefix = add_disfluency && t.text.rfind("um, ", 0) != 0;
    out += line(t.speaker, prefix ? "um, " + t.text : t.text);
  }
  out += line(chunk.back().speaker, chunk.back().text);
  return out;
}

std::string reply_candidates(const CompletionRequest& req) {
  const auto labels = split_labels(tag(req.user_prompt, "labels"));
  const auto chunk = parse_turn_lines(tag(req.user_prompt, "chunk"));
  json out = json::object();
  for (const auto& l : labels) out[l] = json::array();
  if (labels.empty()) return out.dump();
  for (const auto& t : chunk) {
    if (!t.index) continue;
    const auto slot = (static_cast<std::size_t>(*t.index) + word_count(t.text)) % (labels.size() + 1);
    if (slot < labels.size()) out[labels[slot]].push_back(*t.index);
  }
  return out.dump();
}

std::string reply_apply(const CompletionRequest& req) {
  std::vector<long> targets;
  std::stringstream ss(tag(req.user_prompt, "instructions"));
  std::string line;
  while (std::getline(ss, line)) {
    const auto a = line.find('(');
    const auto b = line.find(')');
    if (a != std::string::npos && b != std::string::npos && b > a)
      targets.push_back(std::stol(line.substr(a + 1, b - a - 1)));
  }
  std::string out;
  for (const auto& t : parse_turn_lines(tag(req.user_prompt, "chunk"))) {
    const bool hit = t.index && std::find(targets.begin(), targets.end(), *t.index) != targets.end();
    out += "(" + std::to_string(t.index.value_or(0)) + ") " + std::string(to_string(t.speaker)) + ": " +
           (hit ? "well, " + t.text : t.text) + "\n";
  }
  return out;
}

std::string reply_classify_turn(const CompletionRequest& req) {
  const auto labels = split_labels(tag(req.user_prompt, "labels"));
  const auto target = parse_turn_lines(tag(req.user_prompt, "target_turn"));
  if (labels.empty() || target.empty()) return "";
  const auto wc = word_count(target.front().text);
  const Dimension d = parse_dimension(tag(req.user_prompt, "dimension"));
  if (cardinality_of(d) == Cardinality::multi_label) {
    const auto& a = labels[wc % labels.size()];
    const auto& b = labels[(wc + 1) % labels.size()];
    return a == b ? a : a + ", " + b;
  }
  return labels[wc % labels.size()];
}

std::string reply_classify_transcript(const CompletionRequest& req) {
  const Dimension d = parse_dimension(tag(req.user_prompt, "dimension"));
  const auto turns = parse_turn_lines(tag(req.user_prompt, "transcript"));
  if (turns.empty()) return "";
  const auto k = kind_of(d);
  if (k == DimensionKind::score) {
    std::size_t words = 0;
    for (const auto& t : turns) words += word_count(t.text);
    return std::to_string(1 + words % 10);
  }
  const Speaker who = arc_speaker(d);
  const ParsedTurn* first = nullptr;
  const ParsedTurn* last = nullptr;
  for (const auto& t : turns)
    if (t.speaker == who) {
      if (!first) first = &t;
      last = &t;
    }
  if (!first) first = last = &turns.front();
  const auto& emo = emotion_labels();
  std::string a = emo[word_count(first->text) % emo.size()];
  std::string b = emo[word_count(last->text) % emo.size()];
  if (k == DimensionKind::sentiment_arc) {
    a = sentiment_of_emotion(a);
    b = sentiment_of_emotion(b);
  }
  return a + " \xE2\x86\x92 " + b;
}

std::string reply_judge_qa(const CompletionRequest& req) {
  const auto opts = tag(req.user_prompt, "options");
  std::string answer = "yes";
  if (!opts.empty()) {
    try {
      const auto j = json::parse(opts);
      if (j.is_array() && !j.empty() && j[0].is_string()) answer = j[0].get<std::string>();
    } catch (const json::exception&) {
    }
  }
  return "The transcript addresses the question.\nHence, the final answer is: " + answer;
}

std::string reply_judge_realism(const CompletionRequest& req) {
  const auto aspect = tag(req.user_prompt, "aspect");
  const int score = aspect == "interruptions" ? 7 : aspect == "disfluencies" ? 6 : 5;
  return "Rationale: the " + aspect + " read as plausible.\nFinal Score: " + std::to_string(score);
}

}  // namespace

MockScript mock_script_from_json(const json& j) {
  MockScript s;
  try {
    s.strict = j.value("strict", false);
    if (j.contains("responses"))
      for (const auto& [h, v] : j["responses"].items()) s.by_hash[h] = v.get<std::string>();
    if (j.contains("rules"))
      for (const auto& r : j["rules"]) {
        MockRule rule;
        rule.task = r.value("task", "");
        if (r.contains("contains")) {
          if (r["contains"].is_string()) rule.contains.push_back(r["contains"].get<std::string>());
          else
            for (const auto& c : r["contains"]) rule.contains.push_back(c.get<std::string>());
        }
        rule.response = r.value("response", "");
        rule.times = r.value("times", -1);
        if (r.contains("error")) {
          const auto name = r["error"].get<std::string>();
          if (name == "Timeout") rule.error = ErrorKind::Timeout;
          else if (name == "RateLimited") rule.error = ErrorKind::RateLimited;
          else if (name == "AuthFailure") rule.error = ErrorKind::AuthFailure;
          else if (name == "MalformedUpstream") rule.error = ErrorKind::MalformedUpstream;
          else fail(ErrorKind::InvalidConfig, "unknown scripted error '" + name + "'");
        }
        s.rules.push_back(std::move(rule));
      }
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidConfig, std::string("mock script: ") + e.what());
  }
  return s;
}

MockBackend::MockBackend(MockScript script, std::uint64_t seed)
    : script_(std::move(script)), seed_(seed), fired_(script_.rules.size(), 0) {}

CompletionResponse MockBackend::attempt(const CompletionRequest& req) {
  CompletionResponse resp;
  resp.backend_id = id();
  const auto h = req.hash();
  if (auto it = script_.by_hash.find(h); it != script_.by_hash.end()) {
    resp.text = it->second;
    return resp;
  }
  const std::string haystack = req.system_prompt + "\n" + req.user_prompt;
  for (std::size_t i = 0; i < script_.rules.size(); ++i) {
    const auto& rule = script_.rules[i];
    if (!rule.task.empty() && rule.task != req.task) continue;
    const bool all = std::all_of(rule.contains.begin(), rule.contains.end(),
                                 [&](const std::string& c) { return haystack.find(c) != std::string::npos; });
    if (!all) continue;
    if (rule.error) {
      bool raise = true;
      {
        std::lock_guard<std::mutex> lock(mu_);
        if (rule.times >= 0 && fired_[i] >= rule.times) raise = false;
        else ++fired_[i];
      }
      if (raise) {
        const std::string msg = "scripted failure for task " + req.task;
        if (*rule.error == ErrorKind::AuthFailure) fail(*rule.error, msg);
        throw TransientFailure(*rule.error, msg);
      }
      continue;  // exhausted: fall through to later rules or the auto reply
    }
    resp.text = rule.response;
    return resp;
  }
  if (script_.strict) fail(ErrorKind::ScriptMiss, "no scripted reply for " + req.task + " request " + h);
  resp.text = auto_reply(req, seed_);
  return resp;
}

std::string MockBackend::auto_reply(const CompletionRequest& req, std::uint64_t seed) {
  const std::uint64_t mix = splitmix64(fnv1a64(req.hash()) ^ splitmix64(seed));
  const auto& t = req.task;
  try {
    if (t == "generate_base") return reply_generate(req, mix);
    if (t == "segment") return reply_segment(req, mix);
    if (t == "enhance") return reply_enhance(req, true);
    if (t == "extend") return reply_enhance(req, false);
    if (t == "candidates") return reply_candidates(req);
    if (t == "apply") return reply_apply(req);
    if (t == "classify_turn") return reply_classify_turn(req);
    if (t == "classify_transcript") return reply_classify_transcript(req);
    if (t == "judge_topic_flow") return "Rationale: all expected topics appear in order.\nFinal Score: 9";
    if (t == "judge_intent") return "Rationale: the summary is mostly reflected.\nFinal Score: 8";
    if (t == "judge_qa") return reply_judge_qa(req);
    if (t == "judge_realism") return reply_judge_realism(req);
  } catch (const std::exception&) {
    return "";
  }
  return "";
}

}  // namespace callsynth::llm
