#include <httplib.h>

#include <regex>

#include "callsynth/llm.hpp"

namespace callsynth::llm {

namespace {

class HttplibTransport : public HttpTransport {
 public:
  HttpReply post(const std::string& url, const std::string& bearer, const std::string& body,
                 double timeout_seconds) override {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) fail(ErrorKind::InvalidConfig, "endpoint URL '" + url + "'");
    httplib::Client cli(m[1].str());
    const auto secs = static_cast<time_t>(timeout_seconds);
    const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers{{"Authorization", "Bearer " + bearer}};
    const std::string path = m[2].matched ? m[2].str() : "/";
    auto res = cli.Post(path, headers, body, "application/json");
    HttpReply r;
    if (!res) {
      r.error = httplib::to_string(res.error());
      r.timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                    res.error() == httplib::Error::Read;
      return r;
    }
    r.status = res->status;
    r.body = res->body;
    return r;
  }
};

}  // namespace

std::unique_ptr<HttpTransport> make_httplib_transport() {
  return std::make_unique<HttplibTransport>();
}

HttpBackend::HttpBackend(BackendConfig cfg, std::string api_key,
                         std::unique_ptr<HttpTransport> transport, std::ostream* trace_log)
    : cfg_(std::move(cfg)), api_key_(std::move(api_key)), transport_(std::move(transport)),
      trace_log_(trace_log) {}

std::string HttpBackend::redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos))
    text.replace(pos, secret.size(), "[REDACTED]");
  return text;
}

CompletionResponse HttpBackend::attempt(const CompletionRequest& req) {
  json body;
  body["model"] = req.model;
  body["messages"] = json::array({{{"role", "system"}, {"content", req.system_prompt}},
                                  {{"role", "user"}, {"content", req.user_prompt}}});
  body["temperature"] = req.temperature;
  body["top_p"] = req.top_p;
  body["max_tokens"] = req.max_tokens;
  const std::string payload = body.dump();
  if (trace_log_)
    *trace_log_ << "[http] POST " << cfg_.endpoint.value_or("") << " task=" << req.task << " body="
                << redact(payload, api_key_) << "\n";

  const auto reply = transport_->post(cfg_.endpoint.value_or(""), api_key_, payload, cfg_.timeout_seconds);
  if (trace_log_)
    *trace_log_ << "[http] status=" << reply.status << " body=" << redact(reply.body, api_key_) << "\n";

  if (reply.status == 0) {
    throw TransientFailure(ErrorKind::Timeout,
                           (reply.timed_out ? "request timed out: " : "connection failed: ") + reply.error);
  }
  if (reply.status == 401 || reply.status == 403)
    fail(ErrorKind::AuthFailure, "upstream rejected credential (HTTP " + std::to_string(reply.status) + ")");
  if (reply.status == 429) throw TransientFailure(ErrorKind::RateLimited, "HTTP 429");
  if (reply.status == 408) throw TransientFailure(ErrorKind::Timeout, "HTTP 408");
  if (reply.status >= 500)
    throw TransientFailure(ErrorKind::MalformedUpstream, "HTTP " + std::to_string(reply.status));
  if (reply.status < 200 || reply.status >= 300)
    fail(ErrorKind::MalformedUpstream, "HTTP " + std::to_string(reply.status) + ": " +
                                           redact(reply.body.substr(0, 200), api_key_));

  CompletionResponse out;
  out.backend_id = id();
  try {
    const auto j = json::parse(reply.body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) fail(ErrorKind::MalformedUpstream, "message content is not text");
    out.text = content.get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      Usage u;
      u.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
      u.completion_tokens = j["usage"].value("completion_tokens", 0L);
      out.usage = u;
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::MalformedUpstream, std::string("unexpected response body: ") + e.what());
  }
  return out;
}

}  // namespace callsynth::llm
