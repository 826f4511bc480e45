#include "callsynth/llm.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "callsynth/random.hpp"

namespace callsynth::llm {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json params_json(const SamplingParams& p) {
  return {{"temperature", p.temperature}, {"top_p", p.top_p}, {"max_tokens", p.max_tokens}};
}

SamplingParams params_from_json(const json& j, SamplingParams base) {
  if (j.contains("temperature")) base.temperature = j["temperature"].get<double>();
  if (j.contains("top_p")) base.top_p = j["top_p"].get<double>();
  if (j.contains("max_tokens")) base.max_tokens = j["max_tokens"].get<int>();
  return base;
}

void check_params(const SamplingParams& p, const std::string& what) {
  if (!(p.temperature >= 0.0 && p.temperature <= 2.0))
    fail(ErrorKind::InvalidConfig, what + ".temperature outside [0,2]");
  if (!(p.top_p > 0.0 && p.top_p <= 1.0))
    fail(ErrorKind::InvalidConfig, what + ".top_p outside (0,1]");
  if (p.max_tokens <= 0) fail(ErrorKind::InvalidConfig, what + ".max_tokens must be positive");
}

}  // namespace

void CompletionRequest::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0))
    fail(ErrorKind::InvalidRequest, "temperature " + fmt_double(temperature) + " outside [0,2]");
  if (!(top_p > 0.0 && top_p <= 1.0))
    fail(ErrorKind::InvalidRequest, "top_p " + fmt_double(top_p) + " outside (0,1]");
  if (max_tokens <= 0) fail(ErrorKind::InvalidRequest, "max_tokens must be positive");
}

std::string CompletionRequest::hash() const {
  std::string canon;
  for (const std::string* s : {&task, &system_prompt, &user_prompt, &model}) {
    canon += *s;
    canon += '\x1f';
  }
  canon += fmt_double(temperature) + '\x1f' + fmt_double(top_p) + '\x1f' + std::to_string(max_tokens);
  return hex64(fnv1a64(canon));
}

void BackendConfig::validate() const {
  check_params(generation_defaults, "generation_defaults");
  check_params(evaluation_defaults, "evaluation_defaults");
  if (max_retries < 0) fail(ErrorKind::InvalidConfig, "max_retries must be >= 0");
  if (!(timeout_seconds > 0.0)) fail(ErrorKind::InvalidConfig, "timeout_seconds must be positive");
  if (pool_width < 1) fail(ErrorKind::InvalidConfig, "pool_width must be >= 1");
  if (kind == BackendKind::http) {
    if (!endpoint || endpoint->empty())
      fail(ErrorKind::InvalidConfig, "http backend requires an endpoint");
    const char* key = std::getenv(api_key_env.c_str());
    if (!key || !*key)
      fail(ErrorKind::InvalidConfig, "http backend requires credential in $" + api_key_env);
  }
}

json to_json(const BackendConfig& c) {
  json j;
  j["kind"] = c.kind == BackendKind::mock ? "mock" : "http";
  j["endpoint"] = c.endpoint ? json(*c.endpoint) : json(nullptr);
  j["api_key_env"] = c.api_key_env;
  j["generation_model"] = c.generation_model;
  j["evaluation_model"] = c.evaluation_model;
  j["generation_defaults"] = params_json(c.generation_defaults);
  j["evaluation_defaults"] = params_json(c.evaluation_defaults);
  j["max_retries"] = c.max_retries;
  j["timeout_seconds"] = c.timeout_seconds;
  j["backoff_base_seconds"] = c.backoff_base_seconds;
  j["backoff_jitter"] = c.backoff_jitter;
  j["pool_width"] = c.pool_width;
  j["mock_script"] = c.mock_script ? json(*c.mock_script) : json(nullptr);
  j["mock_seed"] = c.mock_seed;
  j["mock_strict"] = c.mock_strict;
  return j;
}

BackendConfig backend_config_from_json(const json& j, BackendConfig c) {
  try {
    if (j.contains("kind")) {
      const auto k = j["kind"].get<std::string>();
      if (k == "mock") c.kind = BackendKind::mock;
      else if (k == "http") c.kind = BackendKind::http;
      else fail(ErrorKind::InvalidConfig, "backend kind '" + k + "'");
    }
    if (j.contains("endpoint") && !j["endpoint"].is_null()) c.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("api_key_env")) c.api_key_env = j["api_key_env"].get<std::string>();
    if (j.contains("generation_model")) c.generation_model = j["generation_model"].get<std::string>();
    if (j.contains("evaluation_model")) c.evaluation_model = j["evaluation_model"].get<std::string>();
    if (j.contains("generation_defaults"))
      c.generation_defaults = params_from_json(j["generation_defaults"], c.generation_defaults);
    if (j.contains("evaluation_defaults"))
      c.evaluation_defaults = params_from_json(j["evaluation_defaults"], c.evaluation_defaults);
    if (j.contains("max_retries")) c.max_retries = j["max_retries"].get<int>();
    if (j.contains("timeout_seconds")) c.timeout_seconds = j["timeout_seconds"].get<double>();
    if (j.contains("backoff_base_seconds")) c.backoff_base_seconds = j["backoff_base_seconds"].get<double>();
    if (j.contains("backoff_jitter")) c.backoff_jitter = j["backoff_jitter"].get<double>();
    if (j.contains("pool_width")) c.pool_width = j["pool_width"].get<int>();
    if (j.contains("mock_script") && !j["mock_script"].is_null())
      c.mock_script = j["mock_script"].get<std::string>();
    if (j.contains("mock_seed")) c.mock_seed = j["mock_seed"].get<std::uint64_t>();
    if (j.contains("mock_strict")) c.mock_strict = j["mock_strict"].get<bool>();
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidConfig, std::string("backend config: ") + e.what());
  }
  return c;
}

json to_json(const TraceEntry& e) {
  json j;
  j["task"] = e.task;
  j["request_hash"] = e.request_hash;
  j["model"] = e.model;
  j["temperature"] = e.temperature;
  j["top_p"] = e.top_p;
  j["max_tokens"] = e.max_tokens;
  j["system_prompt"] = e.system_prompt;
  j["user_prompt"] = e.user_prompt;
  j["response"] = e.response;
  j["retry_count"] = e.retry_count;
  if (!e.error.empty()) j["error"] = e.error;
  return j;
}

std::string trace_to_jsonl(const Trace& t) {
  std::string out;
  for (const auto& e : t) out += to_json(e).dump() + "\n";
  return out;
}

Trace trace_from_jsonl(std::string_view text) {
  Trace t;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    const auto j = json::parse(line);
    TraceEntry e;
    e.task = j.value("task", "");
    e.request_hash = j.value("request_hash", "");
    e.model = j.value("model", "");
    e.temperature = j.value("temperature", 0.0);
    e.top_p = j.value("top_p", 0.0);
    e.max_tokens = j.value("max_tokens", 0);
    e.system_prompt = j.value("system_prompt", "");
    e.user_prompt = j.value("user_prompt", "");
    e.response = j.value("response", "");
    e.retry_count = j.value("retry_count", 0);
    e.error = j.value("error", "");
    t.push_back(std::move(e));
  }
  return t;
}

json trace_to_script(const Trace& t) {
  json by_hash = json::object();
  for (const auto& e : t)
    if (e.error.empty()) by_hash[e.request_hash] = e.response;
  return {{"strict", true}, {"responses", by_hash}};
}

bool is_parse_error(ErrorKind k) noexcept {
  return k == ErrorKind::UnparsableOutput || k == ErrorKind::SchemaViolation ||
         k == ErrorKind::UnknownLabel || k == ErrorKind::ScoreOutOfRange;
}

LlmClient::LlmClient(std::shared_ptr<Backend> backend, BackendConfig cfg, Sleeper sleeper)
    : backend_(std::move(backend)), cfg_(std::move(cfg)), sleeper_(std::move(sleeper)) {
  if (!sleeper_)
    sleeper_ = [](double s) {
      std::this_thread::sleep_for(std::chrono::duration<double>(s));
    };
}

CompletionRequest LlmClient::make_request(Role role, std::string task, std::string system,
                                          std::string user) const {
  const auto& p = role == Role::generation ? cfg_.generation_defaults : cfg_.evaluation_defaults;
  CompletionRequest r;
  r.task = std::move(task);
  r.system_prompt = std::move(system);
  r.user_prompt = std::move(user);
  r.temperature = p.temperature;
  r.top_p = p.top_p;
  r.max_tokens = p.max_tokens;
  r.model = role == Role::generation ? cfg_.generation_model : cfg_.evaluation_model;
  return r;
}

CompletionResponse LlmClient::complete(const CompletionRequest& req, Trace* trace) const {
  req.validate();
  TraceEntry entry{req.task, req.hash(), req.model, req.temperature, req.top_p, req.max_tokens,
                   req.system_prompt, req.user_prompt, "", 0, ""};
  // Jitter is drawn from a stream keyed by the request so waits are reproducible.
  Rng jitter(derive_seed(fnv1a64(entry.request_hash), "backoff"));
  for (int attempt = 0;; ++attempt) {
    try {
      auto resp = backend_->attempt(req);
      resp.retry_count = attempt;
      if (resp.backend_id.empty()) resp.backend_id = backend_->id();
      entry.response = resp.text;
      entry.retry_count = attempt;
      if (trace) trace->push_back(entry);
      return resp;
    } catch (const TransientFailure& e) {
      if (attempt >= cfg_.max_retries) {
        entry.retry_count = attempt;
        entry.error = e.what();
        if (trace) trace->push_back(entry);
        throw Error(e.kind(), e.detail() + " (after " + std::to_string(attempt) + " retries)");
      }
      const double u = 2.0 * jitter.uniform01() - 1.0;
      sleeper_(cfg_.backoff_base_seconds * std::ldexp(1.0, attempt) * (1.0 + cfg_.backoff_jitter * u));
    } catch (const Error& e) {
      entry.retry_count = attempt;
      entry.error = e.what();
      if (trace) trace->push_back(entry);
      throw;
    }
  }
}

void parallel_for(std::size_t n, int width, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, width)));
  std::vector<std::exception_ptr> errors(n);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string render_prompt(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  auto ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size();) {
    const char c = tmpl[i];
    if ((c == '{' || c == '}') && i + 1 < tmpl.size() && tmpl[i + 1] == c) {
      out += c;
      i += 2;
      continue;
    }
    if (c == '{' && i + 1 < tmpl.size() && ident_start(tmpl[i + 1])) {
      std::size_t j = i + 1;
      while (j < tmpl.size() && ident_char(tmpl[j])) ++j;
      if (j < tmpl.size() && tmpl[j] == '}') {
        const std::string name(tmpl.substr(i + 1, j - i - 1));
        auto it = vars.find(name);
        if (it == vars.end()) fail(ErrorKind::MissingVariable, "{" + name + "} is unbound");
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out += c;
    ++i;
  }
  return out;
}

std::shared_ptr<Backend> make_backend(const BackendConfig& cfg, std::ostream* trace_log) {
  cfg.validate();
  if (cfg.kind == BackendKind::mock) {
    MockScript script;
    if (cfg.mock_script) {
      json j;
      try {
        j = json::parse(read_file(*cfg.mock_script));
      } catch (const json::exception& e) {
        fail(ErrorKind::InvalidConfig, "mock script " + *cfg.mock_script + ": " + e.what());
      }
      script = mock_script_from_json(j);
    }
    script.strict = script.strict || cfg.mock_strict;
    return std::make_shared<MockBackend>(std::move(script), cfg.mock_seed);
  }
  const char* key = std::getenv(cfg.api_key_env.c_str());
  return std::make_shared<HttpBackend>(cfg, key ? key : "", make_httplib_transport(),
                                       cfg.trace_bodies ? trace_log : nullptr);
}

}  // namespace callsynth::llm
