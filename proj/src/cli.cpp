#include "callsynth/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "callsynth/embedded.hpp"
#include "callsynth/fixtures.hpp"
#include "callsynth/json_io.hpp"

namespace callsynth::cli {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::MalformedRecord:
    case ErrorKind::IndexGap:
    case ErrorKind::UnknownSpeaker:
    case ErrorKind::UnknownLanguage:
    case ErrorKind::InvalidAttributes:
    case ErrorKind::NonPositiveDuration:
    case ErrorKind::LabelOutOfSet:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::UnknownDimension:
    case ErrorKind::InvalidRequest:
    case ErrorKind::InvalidConfig:
    case ErrorKind::KOutOfRange:
    case ErrorKind::EmptyInput:
    case ErrorKind::EmptyTranscript:
    case ErrorKind::MissingCell:
    case ErrorKind::PreconditionFailed:
    case ErrorKind::PairingMismatch:
    case ErrorKind::Io: return kExitInvalidInput;
    case ErrorKind::Timeout:
    case ErrorKind::RateLimited:
    case ErrorKind::MalformedUpstream:
    case ErrorKind::AuthFailure:
    case ErrorKind::ScriptMiss: return kExitBackend;
    default: return kExitContract;
  }
}

// ---- config ----

json to_json(const ToolConfig& c) {
  return {{"backend", llm::to_json(c.backend)},
          {"seed", c.seed},
          {"k_max", c.k_max},
          {"context_w", c.context_w},
          {"merge_threshold", c.merge_threshold},
          {"weights", to_json(c.weights)},
          {"turn_dispersion", c.turn_dispersion},
          {"disfluency_k", c.disfluency_k},
          {"trace", c.trace_http}};
}

ToolConfig tool_config_from_json(const json& j, ToolConfig c) {
  if (!j.is_object()) fail(ErrorKind::InvalidConfig, "config must be an object");
  try {
    if (j.contains("backend")) c.backend = llm::backend_config_from_json(j["backend"], c.backend);
    c.seed = j.value("seed", c.seed);
    c.k_max = j.value("k_max", c.k_max);
    c.context_w = j.value("context_w", c.context_w);
    c.merge_threshold = j.value("merge_threshold", c.merge_threshold);
    if (j.contains("weights")) c.weights = weights_from_json(j["weights"], c.weights);
    c.turn_dispersion = j.value("turn_dispersion", c.turn_dispersion);
    c.disfluency_k = j.value("disfluency_k", c.disfluency_k);
    c.trace_http = j.value("trace", c.trace_http);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidConfig, std::string("config: ") + e.what());
  }
  return c;
}

ToolConfig resolve_config(const CommonFlags& f) {
  ToolConfig c;
  if (f.config_path) {
    json j;
    try {
      j = json::parse(read_file(*f.config_path));
    } catch (const json::exception& e) {
      fail(ErrorKind::InvalidConfig, *f.config_path + ": " + e.what());
    }
    c = tool_config_from_json(j);
  }
  if (f.backend) {
    if (*f.backend == "mock") c.backend.kind = llm::BackendKind::mock;
    else if (*f.backend == "http") c.backend.kind = llm::BackendKind::http;
    else fail(ErrorKind::InvalidConfig, "unknown backend '" + *f.backend + "'");
  }
  if (f.seed) c.seed = *f.seed;
  if (f.k_max) c.k_max = *f.k_max;
  if (f.context_w) c.context_w = *f.context_w;
  if (f.merge_threshold) c.merge_threshold = *f.merge_threshold;
  if (f.mock_script) c.backend.mock_script = *f.mock_script;
  if (f.pool_width) c.backend.pool_width = *f.pool_width;
  if (f.trace) c.trace_http = true;
  c.backend.trace_bodies = c.trace_http;
  c.backend.mock_seed = c.seed;  // mock replies follow the run seed
  require(c.k_max >= 1, ErrorKind::InvalidConfig, "k_max must be >= 1");
  require(c.merge_threshold >= 0.0 && c.merge_threshold < 1.0, ErrorKind::InvalidConfig,
          "merge threshold must be in [0,1)");
  require(c.backend.pool_width >= 1, ErrorKind::InvalidConfig, "pool width must be >= 1");
  c.weights.validate();
  return c;
}

// ---- hashing and manifests ----

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::Io, "sha256 failed");
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return ss.str();
}

std::string sha256_file(const fs::path& p) { return sha256_hex(read_file(p)); }

json to_json(const RunManifest& m) {
  json in = json::array();
  for (const auto& [p, h] : m.inputs) in.push_back({{"path", p}, {"sha256", h}});
  json out = json::array();
  for (const auto& [p, h] : m.outputs) out.push_back({{"path", p}, {"sha256", h}});
  json j{{"tool", "callsynth"},
         {"version", CALLSYNTH_VERSION},
         {"command", m.command},
         {"arguments", m.arguments},
         {"config", m.config},
         {"inputs", in},
         {"outputs", out},
         {"started_at", m.started_at},
         {"finished_at", m.finished_at},
         {"status", m.status},
         {"exit_code", m.exit_code}};
  if (!m.error.empty()) j["error"] = m.error;
  return j;
}

namespace {

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// The mock backend is fully deterministic, so its manifests carry a fixed
// clock to stay byte-reproducible.
std::string stamp(const ToolConfig& cfg) {
  return cfg.backend.kind == llm::BackendKind::mock ? "1970-01-01T00:00:00Z" : now_utc();
}

class Session {
 public:
  Session(const ToolConfig& cfg, std::string command, fs::path out_dir, json arguments)
      : cfg_(cfg), out_dir_(std::move(out_dir)) {
    m_.command = std::move(command);
    m_.arguments = std::move(arguments);
    m_.config = to_json(cfg);
    m_.started_at = stamp(cfg);
  }

  void input(const fs::path& p) { m_.inputs.emplace_back(p.generic_string(), sha256_file(p)); }

  void emit(const std::string& rel, const std::string& contents) {
    write_file(out_dir_ / rel, contents);
    m_.outputs.emplace_back(rel, sha256_hex(contents));
  }

  std::ostream* http_log() {
    if (!cfg_.trace_http || cfg_.backend.kind != llm::BackendKind::http) return nullptr;
    if (!log_) {
      fs::create_directories(out_dir_);
      log_ = std::make_unique<std::ofstream>(out_dir_ / "http_trace.log");
    }
    return log_.get();
  }

  template <class Body>
  int run(Body&& body, std::ostream& err) {
    try {
      require(!out_dir_.empty(), ErrorKind::InvalidConfig, "--out is required");
      body(*this);
    } catch (const Error& e) {
      m_.status = "failed";
      m_.error = e.what();
      m_.exit_code = exit_code_for(e.kind());
      err << "error: " << e.what() << "\n";
    } catch (const fs::filesystem_error& e) {
      m_.status = "failed";
      m_.error = e.what();
      m_.exit_code = kExitInvalidInput;
      err << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
      m_.status = "failed";
      m_.error = e.what();
      m_.exit_code = kExitContract;
      err << "error: " << e.what() << "\n";
    }
    if (log_) {
      log_->close();
      m_.outputs.emplace_back("http_trace.log", sha256_file(out_dir_ / "http_trace.log"));
    }
    m_.finished_at = stamp(cfg_);
    if (!out_dir_.empty()) {
      try {
        write_file(out_dir_ / "manifest.json", to_json(m_).dump(2) + "\n");
      } catch (const std::exception& e) {
        err << "error: cannot write manifest: " << e.what() << "\n";
        if (m_.exit_code == 0) m_.exit_code = kExitInvalidInput;
      }
    }
    return m_.exit_code;
  }

  RunManifest& manifest() { return m_; }

 private:
  const ToolConfig& cfg_;
  fs::path out_dir_;
  RunManifest m_;
  std::unique_ptr<std::ofstream> log_;
};

json parse_json_file(const fs::path& p, ErrorKind kind) {
  const auto text = read_file(p);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(kind, p.string() + ": " + e.what());
  }
}

CallAttributes load_valid_attributes(const fs::path& p, std::ostream& err) {
  const auto attrs = load_attributes(p);
  const auto violations = validate_attributes(attrs);
  if (!violations.empty()) {
    std::string list;
    for (const auto& v : violations) {
      err << "violation: " << v.field << ": " << v.rule << "\n";
      list += (list.empty() ? "" : "; ") + v.field + ": " + v.rule;
    }
    fail(ErrorKind::InvalidAttributes, std::to_string(violations.size()) + " violation(s): " + list);
  }
  return attrs;
}

llm::LlmClient make_client(const ToolConfig& cfg, Session& s) {
  return llm::LlmClient(llm::make_backend(cfg.backend, s.http_log()), cfg.backend);
}

void record_mock_script(const ToolConfig& cfg, Session& s) {
  if (cfg.backend.kind == llm::BackendKind::mock && cfg.backend.mock_script) s.input(*cfg.backend.mock_script);
}

GenerationOptions gen_options(const ToolConfig& cfg) {
  return {cfg.seed, cfg.turn_dispersion, cfg.disfluency_k};
}

std::vector<Dimension> parse_dims(const std::vector<std::string>& names) {
  std::vector<Dimension> out;
  std::vector<std::string> flat;
  for (const auto& n : names) {
    std::stringstream ss(n);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) flat.push_back(item);
    }
  }
  if (flat.empty() || (flat.size() == 1 && flat[0] == "all")) {
    const auto& all = all_dimensions();
    return {all.begin(), all.end()};
  }
  for (const auto& n : flat) {
    const Dimension d = parse_dimension(n);
    if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
  }
  return out;
}

std::optional<CharacteristicTargets> load_targets(const std::optional<std::string>& path, Language lang,
                                                  Session& s) {
  if (!path) return std::nullopt;
  if (*path == "shipped") return default_targets(lang);
  s.input(*path);
  return targets_from_json(parse_json_file(*path, ErrorKind::InvalidConfig));
}

}  // namespace

// ---- corpora ----

std::vector<CorpusPair> load_paired_corpora(const fs::path& real_dir, const fs::path& synth_dir, Language lang) {
  auto list = [](const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::Io, dir.string() + " is not a directory");
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".jsonl") names.insert(e.path().filename().string());
    return names;
  };
  const auto real = list(real_dir);
  const auto synth = list(synth_dir);
  for (const auto& n : real)
    if (!synth.count(n)) fail(ErrorKind::PairingMismatch, "orphan " + (real_dir / n).string() + " has no synthetic pair");
  for (const auto& n : synth)
    if (!real.count(n)) fail(ErrorKind::PairingMismatch, "orphan " + (synth_dir / n).string() + " has no real pair");
  if (real.empty()) fail(ErrorKind::EmptyInput, "no .jsonl transcripts in " + real_dir.string());
  std::vector<CorpusPair> out;
  for (const auto& n : real) {
    CorpusPair p;
    p.id = fs::path(n).stem().string();
    p.real = load_transcript(real_dir / n, lang);
    p.synth = load_transcript(synth_dir / n, lang);
    out.push_back(std::move(p));
  }
  return out;
}

// ---- commands ----

int cmd_generate(const ToolConfig& cfg, const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  json args{{"attrs", a.attrs_path}, {"method", a.method}};
  if (a.targets_path) args["targets"] = *a.targets_path;
  if (a.prompts_path) args["prompts"] = *a.prompts_path;
  Session s(cfg, "generate", a.out_dir, args);
  return s.run(
      [&](Session& s) {
        const auto method = parse_method(a.method);
        s.input(a.attrs_path);
        const auto attrs = load_valid_attributes(a.attrs_path, err);
        record_mock_script(cfg, s);
        auto targets = load_targets(a.targets_path, attrs.language, s);
        if (method == GenerationMethod::characteristic_aware && !targets)
          fail(ErrorKind::InvalidConfig, "method characteristic_aware needs --targets <file|shipped>");
        PromptSet prompts = default_prompts();
        if (a.prompts_path) {
          s.input(*a.prompts_path);
          prompts = prompt_set_from_json(parse_json_file(*a.prompts_path, ErrorKind::InvalidConfig));
        }
        const auto client = make_client(cfg, s);
        const auto run = run_generation(method, attrs, client, gen_options(cfg), targets ? &*targets : nullptr, prompts);
        s.emit("transcript.jsonl", serialize_transcript(run.output));
        s.emit("trace.jsonl", llm::trace_to_jsonl(run.trace));
        json r{{"method", to_string(run.method)},
               {"seed", run.seed},
               {"language", to_string(run.output.language)},
               {"turns", run.output.size()},
               {"backend_calls", run.trace.size()},
               {"warnings", run.warnings},
               {"details", run.details}};
        s.emit("run.json", r.dump(2) + "\n");
        s.emit("attrs.json", to_json(attrs).dump(2) + "\n");
        if (targets) s.emit("targets.json", to_json(*targets).dump(2) + "\n");
        out << "generated " << run.output.size() << " turns (" << to_string(run.method) << ") into " << a.out_dir
            << "\n";
      },
      err);
}

int cmd_evaluate(const ToolConfig& cfg, const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  json args{{"real", a.real_dir}, {"synth", a.synth_dir}, {"dims", a.dims}, {"language", a.language}};
  Session s(cfg, "evaluate", a.out_dir, args);
  return s.run(
      [&](Session& s) {
        const Language lang = parse_language(a.language);
        const auto dims = parse_dims(a.dims);
        const auto pairs = load_paired_corpora(a.real_dir, a.synth_dir, lang);
        for (const auto& p : pairs) {
          s.input(fs::path(a.real_dir) / (p.id + ".jsonl"));
          s.input(fs::path(a.synth_dir) / (p.id + ".jsonl"));
        }
        record_mock_script(cfg, s);
        const auto client = make_client(cfg, s);
        EvalOptions opt;
        opt.seed = cfg.seed;
        opt.k_max = cfg.k_max;
        opt.context_w = cfg.context_w;
        opt.merge_threshold = cfg.merge_threshold;
        opt.pool_width = cfg.backend.pool_width;
        const auto report = evaluate_corpora(pairs, dims, shipped_references(lang), client, opt);
        s.emit("report.json", to_json(report).dump(2) + "\n");
        const auto table = render_table(report);
        s.emit("report.txt", table);
        s.emit("trace.jsonl", llm::trace_to_jsonl(report.trace));
        out << table;
      },
      err);
}

int cmd_reconstruct(const ToolConfig& cfg, const ReconstructArgs& a, std::ostream& out, std::ostream& err) {
  Session s(cfg, "reconstruct", a.out_dir, json{{"synth", a.synth_path}, {"attrs", a.attrs_path}});
  return s.run(
      [&](Session& s) {
        s.input(a.attrs_path);
        s.input(a.synth_path);
        const auto attrs = load_valid_attributes(a.attrs_path, err);
        require(!attrs.qa_evaluation.empty(), ErrorKind::PreconditionFailed, "attributes carry no QA evaluation");
        require(!attrs.topic_flow.empty(), ErrorKind::PreconditionFailed, "attributes carry no topic flow");
        const auto synth = load_transcript(a.synth_path, attrs.language);
        record_mock_script(cfg, s);
        const auto client = make_client(cfg, s);
        llm::Trace trace;
        const GenContext ctx{client, default_prompts(), &trace, nullptr, cfg.backend.pool_width};
        const auto result = reconstruct(synth, attrs, ctx, cfg.weights);
        s.emit("result.json", to_json(result).dump(2) + "\n");
        s.emit("trace.jsonl", llm::trace_to_jsonl(trace));
        char line[64];
        std::snprintf(line, sizeof line, "%.4f", result.overall);
        out << "reconstruction score " << line << "\n";
      },
      err);
}

namespace {

json turn_targets_json() {
  json m = json::object();
  for (Language l : kLanguages) {
    json row = json::object();
    for (CallLengthCategory c : kCallLengths) row[std::string(to_string(c))] = turn_target_table().mean(l, c);
    m[std::string(to_string(l))] = row;
  }
  return {{"mean_turns", m}};
}

json disfluencies_json() {
  json a = json::array();
  for (const auto& d : disfluency_dictionary())
    a.push_back({{"name", d.name}, {"description", d.description}, {"example", d.example}});
  return a;
}

json refs_json(const FixturesArgs& a) {
  std::vector<Language> langs(kLanguages.begin(), kLanguages.end());
  if (a.language) langs = {parse_language(*a.language)};
  std::vector<Dimension> dims(all_dimensions().begin(), all_dimensions().end());
  if (a.dimension) dims = {parse_dimension(*a.dimension)};
  if (langs.size() == 1 && dims.size() == 1) return to_json(reference(langs[0], dims[0]));
  json out = json::object();
  for (Language l : langs) {
    json per = json::object();
    for (Dimension d : dims) per[std::string(to_string(d))] = to_json(reference(l, d));
    out[std::string(to_string(l))] = per;
  }
  return out;
}

}  // namespace

int cmd_fixtures(const FixturesArgs& a, std::ostream& out, std::ostream& err) {
  try {
    if (a.action == "list") {
      const auto& dict = disfluency_dictionary();
      out << "disfluency types: " << dict.size() << "\n";
      for (const auto& d : dict) out << "  " << d.name << "\n";
      out << "turn-target cells: " << turn_target_table().mean_turns.size() << "\n";
      for (const auto& [key, v] : turn_target_table().mean_turns) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        out << "  " << to_string(key.first) << "/" << to_string(key.second) << " " << buf << "\n";
      }
      std::size_t refs = 0;
      for (Language l : kLanguages) refs += shipped_references(l).by_dimension.size();
      out << "reference distributions: " << refs << "\n";
      return kExitOk;
    }
    if (a.action != "export") fail(ErrorKind::InvalidConfig, "unknown fixtures action '" + a.action + "'");
    if (a.what == "all") {
      if (!a.out_dir) fail(ErrorKind::InvalidConfig, "export all needs --out");
      for (const auto& f : embedded_files()) write_file(fs::path(*a.out_dir) / std::string(f.path), std::string(f.contents));
      out << "exported " << embedded_files().size() << " files into " << *a.out_dir << "\n";
      return kExitOk;
    }
    json doc;
    if (a.what == "disfluencies") doc = disfluencies_json();
    else if (a.what == "turn-targets") doc = turn_targets_json();
    else if (a.what == "refs") doc = refs_json(a);
    else fail(ErrorKind::InvalidConfig, "unknown fixture set '" + a.what + "'");
    if (a.out_dir) write_file(fs::path(*a.out_dir) / (a.what + ".json"), doc.dump(2) + "\n");
    else out << doc.dump(2) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  }
}

int cmd_tune(const ToolConfig& cfg, const TuneArgs& a, std::ostream& out, std::ostream& err) {
  json args{{"candidates", a.candidate_paths}, {"dataset", a.dataset_paths}, {"method", a.method}};
  if (a.targets_path) args["targets"] = *a.targets_path;
  Session s(cfg, "tune", a.out_dir, args);
  return s.run(
      [&](Session& s) {
        const auto method = parse_method(a.method);
        std::vector<PromptSet> candidates;
        for (const auto& p : a.candidate_paths) {
          s.input(p);
          candidates.push_back(prompt_set_from_json(parse_json_file(p, ErrorKind::InvalidConfig)));
        }
        std::vector<TuningItem> items;
        for (const auto& p : a.dataset_paths) {
          s.input(p);
          items.push_back({fs::path(p).stem().string(), load_valid_attributes(p, err)});
        }
        require(!items.empty(), ErrorKind::PreconditionFailed, "tuning dataset is empty");
        record_mock_script(cfg, s);
        auto targets = load_targets(a.targets_path, items.front().attrs.language, s);
        if (method == GenerationMethod::characteristic_aware && !targets)
          fail(ErrorKind::InvalidConfig, "method characteristic_aware needs --targets <file|shipped>");
        const auto client = make_client(cfg, s);
        const auto ranking =
            tune_prompts(candidates, items, method, client, gen_options(cfg), targets ? &*targets : nullptr, cfg.weights);
        s.emit("ranking.json", to_json(ranking).dump(2) + "\n");
        std::string table = "rank  candidate                      mean overall  failed\n";
        int rank = 0;
        for (const auto& c : ranking) {
          char line[160];
          std::snprintf(line, sizeof line, "%-5s %-30s %12.4f  %zu/%zu\n",
                        c.disqualified ? "dq" : std::to_string(++rank).c_str(), c.name.c_str(), c.mean_overall,
                        c.failures.size(), c.per_item.size());
          table += line;
        }
        s.emit("ranking.txt", table);
        out << table;
      },
      err);
}

}  // namespace callsynth::cli
