#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "callsynth/error.hpp"
#include "callsynth/json_io.hpp"

namespace callsynth::llm {

struct SamplingParams {
  double temperature = 0.7;
  double top_p = 1.0;
  int max_tokens = 32768;
};

enum class Role { generation, evaluation };

struct CompletionRequest {
  std::string task;  // stage tag, e.g. "segment"; part of the request identity
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.7;
  double top_p = 1.0;
  int max_tokens = 32768;
  std::string model;

  void validate() const;  // InvalidRequest
  std::string hash() const;  // stable hex digest of every field above
};

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct CompletionResponse {
  std::string text;
  std::optional<Usage> usage;
  std::string backend_id;
  int retry_count = 0;
};

enum class BackendKind { mock, http };

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::optional<std::string> endpoint;
  std::string api_key_env = "LLM_API_KEY";
  std::string generation_model = "generation-model";
  std::string evaluation_model = "evaluation-model";
  SamplingParams generation_defaults{0.7, 1.0, 32768};
  SamplingParams evaluation_defaults{1.0, 1.0, 8192};
  int max_retries = 3;
  double timeout_seconds = 120.0;
  double backoff_base_seconds = 1.0;  // waits base, 2*base, 4*base, ...
  double backoff_jitter = 0.2;
  int pool_width = 4;
  std::optional<std::string> mock_script;  // path
  std::uint64_t mock_seed = 0;
  bool mock_strict = false;
  bool trace_bodies = false;

  void validate() const;  // InvalidConfig
};

json to_json(const BackendConfig& c);
BackendConfig backend_config_from_json(const json& j, BackendConfig base = {});

// Raised by backends for failures worth retrying; the client converts the
// last one into its final kind once retries run out.
struct TransientFailure : Error {
  using Error::Error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // One attempt. Throws TransientFailure for retryable conditions.
  virtual CompletionResponse attempt(const CompletionRequest& req) = 0;
  virtual std::string id() const = 0;
};

struct TraceEntry {
  std::string task;
  std::string request_hash;
  std::string model;
  double temperature = 0.0;
  double top_p = 0.0;
  int max_tokens = 0;
  std::string system_prompt;
  std::string user_prompt;
  std::string response;
  int retry_count = 0;
  std::string error;
};

using Trace = std::vector<TraceEntry>;

json to_json(const TraceEntry& e);
std::string trace_to_jsonl(const Trace& t);
Trace trace_from_jsonl(std::string_view text);
// Mock script that answers every traced request with its recorded response.
json trace_to_script(const Trace& t);

using Sleeper = std::function<void(double seconds)>;

inline constexpr std::string_view kReaskSuffix =
    "\n\nYour previous reply could not be used. Return only valid structured output.";

bool is_parse_error(ErrorKind k) noexcept;

class LlmClient {
 public:
  LlmClient(std::shared_ptr<Backend> backend, BackendConfig cfg, Sleeper sleeper = {});

  CompletionRequest make_request(Role role, std::string task, std::string system,
                                 std::string user) const;

  // Retries transient failures with exponential backoff and jitter.
  CompletionResponse complete(const CompletionRequest& req, Trace* trace = nullptr) const;

  // Parses the reply; on a parse failure asks once more with kReaskSuffix.
  template <class Parse>
  auto complete_structured(CompletionRequest req, Parse&& parse, Trace* trace = nullptr) const
      -> decltype(parse(std::string{})) {
    auto resp = complete(req, trace);
    try {
      return parse(resp.text);
    } catch (const Error& e) {
      if (!is_parse_error(e.kind())) throw;
    }
    req.user_prompt += kReaskSuffix;
    resp = complete(req, trace);
    return parse(resp.text);
  }

  const BackendConfig& config() const noexcept { return cfg_; }
  std::string backend_id() const { return backend_->id(); }

 private:
  std::shared_ptr<Backend> backend_;
  BackendConfig cfg_;
  Sleeper sleeper_;
};

// Runs fn(0..n-1) on at most `width` threads. All jobs finish before the
// first exception (by index) is rethrown.
void parallel_for(std::size_t n, int width, const std::function<void(std::size_t)>& fn);

// Placeholders are {identifier}; "{{" and "}}" yield literal braces. Any other
// brace is copied verbatim, so JSON examples survive untouched.
std::string render_prompt(std::string_view tmpl, const std::map<std::string, std::string>& vars);

// ---- backends ----

struct MockRule {
  std::string task;                   // empty matches any task
  std::vector<std::string> contains;  // all must occur in system + user
  std::string response;
  std::optional<ErrorKind> error;     // simulate a failure instead of replying
  int times = -1;                     // error only on the first `times` matches; -1 always
};

struct MockScript {
  std::map<std::string, std::string> by_hash;
  std::vector<MockRule> rules;
  bool strict = false;
};

MockScript mock_script_from_json(const json& j);

class MockBackend : public Backend {
 public:
  MockBackend(MockScript script, std::uint64_t seed);
  CompletionResponse attempt(const CompletionRequest& req) override;
  std::string id() const override { return "mock"; }

  // Scripted-free deterministic reply used when no script entry matches.
  static std::string auto_reply(const CompletionRequest& req, std::uint64_t seed);

 private:
  MockScript script_;
  std::uint64_t seed_;
  std::mutex mu_;
  std::vector<int> fired_;  // per rule: how often its error has been raised
};

struct HttpReply {
  int status = 0;  // 0 means the connection failed
  std::string body;
  std::string error;
  bool timed_out = false;
};

// Transport seam so the HTTP backend can be driven without a network.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpReply post(const std::string& url, const std::string& bearer,
                         const std::string& body, double timeout_seconds) = 0;
};

std::unique_ptr<HttpTransport> make_httplib_transport();

class HttpBackend : public Backend {
 public:
  HttpBackend(BackendConfig cfg, std::string api_key, std::unique_ptr<HttpTransport> transport,
              std::ostream* trace_log = nullptr);
  CompletionResponse attempt(const CompletionRequest& req) override;
  std::string id() const override { return "http:" + cfg_.endpoint.value_or(""); }

  static std::string redact(std::string text, const std::string& secret);

 private:
  BackendConfig cfg_;
  std::string api_key_;
  std::unique_ptr<HttpTransport> transport_;
  std::ostream* trace_log_;
};

// Builds the configured backend; http reads the key from cfg.api_key_env.
std::shared_ptr<Backend> make_backend(const BackendConfig& cfg, std::ostream* trace_log = nullptr);

}  // namespace callsynth::llm
