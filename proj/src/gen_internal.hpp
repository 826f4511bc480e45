#pragma once

// Helpers shared by the generation translation units.

#include <string>

#include "callsynth/generation.hpp"

namespace callsynth::detail {

// One call, one re-ask. The re-ask fires on a parse error or on `contract`.
template <class Parse>
auto ask_with_reask(const GenContext& ctx, llm::CompletionRequest req, Parse&& parse, ErrorKind contract)
    -> decltype(parse(std::string{})) {
  auto resp = ctx.client.complete(req, ctx.trace);
  try {
    return parse(resp.text);
  } catch (const Error& e) {
    if (e.kind() != contract && !llm::is_parse_error(e.kind())) throw;
    ctx.warn(req.task + ": re-asking after " + e.what());
  }
  req.user_prompt += llm::kReaskSuffix;
  resp = ctx.client.complete(req, ctx.trace);
  return parse(resp.text);
}

llm::CompletionRequest build_request(const GenContext& ctx, llm::Role role, const std::string& task,
                                     const std::map<std::string, std::string>& vars);

// Runs fn(i, sub_ctx) for every i on the pool and appends each sub-trace and
// warning list to ctx in index order.
void for_each_chunk(const GenContext& ctx, std::size_t n,
                    const std::function<void(std::size_t, const GenContext&)>& fn);

std::string join(const std::vector<std::string>& parts, const std::string& sep);

}  // namespace callsynth::detail
